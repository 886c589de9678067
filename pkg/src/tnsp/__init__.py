"""Tensor-network state preparation toolkit.

Isometric tensor networks (MPS, MERA, tree states) viewed through the
Riemannian geometry of their unitary parameters: exact second-moment
channels, closed-form gradient variance predictions, Monte Carlo checks,
and manifold optimizers.
"""

__version__ = "0.1.0"
