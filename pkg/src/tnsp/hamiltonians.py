"""Local Hamiltonian terms with the symmetry constraints the variance
formulas assume.

A LocalTerm is a Hermitian, traceless operator on 1, 2, or 3 sites of
equal dimension.  Two-site terms must have equal partial traces over
either site; three-site terms must be reflection symmetric.  The moments
Tr h^2 and Tr((Tr_1 h)^2) are the only inputs the closed-form variance
predictions need.
"""

import numpy as np

from .tensor_core import partial_trace, kron, op_permute

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
Z = np.array([[1.0, 0.0], [0.0, -1.0]])

_PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def _reflect(mat, support, d):
    if support == 1:
        return mat
    perm = tuple(reversed(range(support)))
    return op_permute(mat, [d] * support, perm)


class LocalTerm:
    """Validated local Hamiltonian term on `support` sites of dimension d."""

    def __init__(self, matrix, support, site_dim):
        support = int(support)
        site_dim = int(site_dim)
        if support not in (1, 2, 3):
            raise ValueError("support must be 1, 2, or 3")
        if site_dim < 2:
            raise ValueError("site dimension must be at least 2")
        dim = site_dim ** support
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (dim, dim):
            raise ValueError("matrix shape %r does not match support" % (matrix.shape,))
        if np.max(np.abs(matrix - matrix.conj().T)) > HERMITIAN_TOL:
            raise ValueError("term is not Hermitian to within 1e-12")
        if abs(np.trace(matrix)) > TRACE_TOL * dim:
            raise ValueError("term is not traceless")
        if support == 2:
            t1 = partial_trace(matrix, [site_dim, site_dim], {1})
            t2 = partial_trace(matrix, [site_dim, site_dim], {2})
            if np.max(np.abs(t1 - t2)) > 1e-10:
                raise ValueError("two-site term needs equal partial traces")
        if support == 3:
            if np.max(np.abs(matrix - _reflect(matrix, 3, site_dim))) > 1e-10:
                raise ValueError("three-site term must be reflection symmetric")
        self.matrix = matrix
        self.support = support
        self.site_dim = site_dim

    @property
    def dim(self):
        return self.site_dim ** self.support

    def __repr__(self):
        return "LocalTerm(support=%d, site_dim=%d)" % (self.support, self.site_dim)


def make_traceless(h, support=1, site_dim=None):
    """Subtract the trace part and validate all LocalTerm constraints.

    Does not symmetrize: a two-site input whose partial traces disagree
    after the trace subtraction is rejected, matching the contract that
    construction never silently changes the physics.
    """
    h = np.asarray(h, dtype=complex)
    dim = h.shape[0]
    if site_dim is None:
        site_dim = round(dim ** (1.0 / support))
    if site_dim ** support != dim:
        raise ValueError("matrix dimension %d is not site_dim^support" % dim)
    if np.max(np.abs(h - h.conj().T)) > HERMITIAN_TOL:
        raise ValueError("input is not Hermitian to within 1e-12")
    out = h - np.trace(h) / dim * np.eye(dim)
    return LocalTerm(out, support, site_dim)


def random_traceless(support, site_dim, seed):
    """Gaussian Hermitian term, reflection symmetrized, then made traceless."""
    from .tensor_core import as_rng

    rng = as_rng(seed)
    dim = site_dim ** support
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (a + a.conj().T) / 2.0
    if support >= 2:
        h = (h + _reflect(h, support, site_dim)) / 2.0
    h = h - np.trace(h) / dim * np.eye(dim)
    return LocalTerm(h, support, site_dim)


def pauli_term(label):
    """LocalTerm from a Pauli string such as "Z", "ZZ", or "ZZZ"."""
    label = label.upper()
    if not label or any(c not in _PAULI for c in label):
        raise ValueError("unknown Pauli string %r" % (label,))
    mats = [_PAULI[c] for c in label]
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return make_traceless(out, support=len(label), site_dim=2)


def term_moments(h):
    """Moments entering the variance formulas.

    Always includes tr_h2 = Tr h^2; for two-site terms also tr_tr1sq =
    Tr((Tr_1 h)^2), which is absent (not zero) for other supports.
    """
    if not isinstance(h, LocalTerm):
        raise TypeError("term_moments expects a LocalTerm")
    out = {"tr_h2": float(np.real(np.trace(h.matrix @ h.matrix)))}
    if h.support == 2:
        t1 = partial_trace(h.matrix, [h.site_dim, h.site_dim], {1})
        out["tr_tr1sq"] = float(np.real(np.trace(t1 @ t1)))
    return out


def embed_term(h, length, start, pbc=False):
    """Dense d^length matrix with h acting on sites start..start+support-1.

    Sites are 0-based.  With pbc the window may wrap; otherwise it must
    fit inside the chain.
    """
    if not isinstance(h, LocalTerm):
        raise TypeError("embed_term expects a LocalTerm")
    d = h.site_dim
    w = h.support
    if pbc:
        sites = [(start + t) % length for t in range(w)]
        if len(set(sites)) != w:
            raise ValueError("window wraps onto itself")
    else:
        if start < 0 or start + w > length:
            raise ValueError("window falls off the chain")
        sites = list(range(start, start + w))
    full = kron(h.matrix, np.eye(d ** (length - w))) if length > w else h.matrix
    order = sites + [i for i in range(length) if i not in sites]
    perm = [0] * length
    for pos, site in enumerate(order):
        perm[site] = pos
    return op_permute(full, [d] * length, perm)


def tfi_bond_term(coupling=1.0, field=1.0):
    """Transverse-field Ising bond term with the field split across the bond.

    h = -coupling Z(x)Z - (field/2)(X(x)1 + 1(x)X); traceless and with
    equal partial traces, so it satisfies the two-site constraints.
    """
    m = -coupling * kron(Z, Z) - 0.5 * field * (kron(X, I2) + kron(I2, X))
    return LocalTerm(m, 2, 2)
