"""Top-layer gradient variance vs network depth.

Build ternary MERA networks of increasing depth, each evaluated against
the extensive sum of a nearest-neighbor ZZ term, and measure the
layer-averaged gradient variance of the top-layer isometries.  Each
extra layer multiplies the variance by roughly

    branches * eta = 3 * eta_ternary,

the product of the channel decay per layer and the growth in the number
of lattice sites feeding the top.  For chi=2 this is about 0.391, so
the top-layer signal shrinks but much more slowly than a barren
plateau's 4^-L.

Depths beyond 2 take a few minutes; pass --deep to include depth 3.

Run with:  python3 demos/layer_scaling.py [--samples N] [--deep]
"""

import argparse

from tnsp import channel_spectra, hamiltonians, mera
from tnsp.tensor_core import RngSeed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--deep", action="store_true",
                    help="also run depth 3 (slower)")
    args = ap.parse_args()

    chi = 2
    term = hamiltonians.pauli_term("ZZ")
    ratio = channel_spectra.layer_variance_ratio("ternary1d", chi)
    depths = (1, 2, 3) if args.deep else (1, 2)

    print("ternary MERA, chi=%d, extensive ZZ, isometry gradients" % chi)
    print("predicted variance ratio per layer: %.6f" % ratio)
    print()

    results = {}
    for depth in depths:
        exponent = max(depth + 1, 3)
        rep = mera.mc_gradient_variance(
            "ternary1d", chi, depth, exponent, term, depth,
            which="isometry", samples=args.samples,
            seed=RngSeed(args.seed + depth))
        results[depth] = rep.estimate
        print("depth %d (lattice 3^%d): variance %.6e  stderr %.1e"
              % (depth, exponent, rep.estimate, rep.stderr))

    print()
    for depth in depths[1:]:
        measured = results[depth] / results[depth - 1]
        print("depth %d / depth %d: measured ratio %.4f  predicted %.4f"
              % (depth, depth - 1, measured, ratio))


if __name__ == "__main__":
    main()
