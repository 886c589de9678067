"""Second-moment label channels of random isometric tree networks.

Haar-averaging the doubled layer map of a random MERA or TTNS closes on a
small vector space: each retained lattice slot carries a two-dimensional
label indexing the symmetric/antisymmetric projector pair of its doubled
copy, and one layer acts as a small transfer matrix on those labels.
This module builds the transfer matrices exactly, exposes their spectra
and leading spectral vectors, and provides dense brute-force oracles that
recover the same matrices by integrating the doubled network slot by
slot.

Coordinates: an operator R on a doubled slot of total dimension n is
stored as w = (Tr(P+ R), Tr(P- R)) where P+- project onto the symmetric
and antisymmetric subspaces under copy exchange; the basis operators are
P+-/nu+- with nu+- = n(n +- 1)/2.  Multi-slot label vectors follow kron
order with the first slot leftmost, + before -.  Trace preservation of a
channel shows up as the all-ones row being a left fixed point.

Slot cast for one six-site layer window: c-slots receive coarse content
through an isometry, a-slots (and b-slots in the three-to-one family)
receive the reference state.  The two-dimensional nine-to-one family
tracks a 2x2 site window instead; its three inequivalent window
positions sit inside a block, across one block edge, and across a block
corner, and the remaining six follow by mirror symmetry.
"""

from fractions import Fraction
from itertools import product as _iter_product

import numpy as np
from scipy.linalg import eig

from .hamiltonians import LocalTerm
from .moment_channels import doubled_mps_matrix
from .tensor_core import kron, op_permute, partial_trace, permutation_operator, swap_operator

TREE_FAMILIES = ("binary1d", "ternary1d", "nonary2d")
FLAVORS = ("mera", "ttns")

A_COL = np.array([[1.0], [0.0]])
T_COL = np.array([[1.0], [1.0]])
S_COL = np.array([[1.0], [-1.0]])
T_ROW = T_COL.T
S_ROW = S_COL.T

EIG_IMAG_TOL = 1e-8


def _nu_int(n, sign):
    return n * (n + sign) // 2


def nu_pair(n):
    """(nu+, nu-) of a doubled slot of total dimension n."""
    return _nu_int(n, 1), _nu_int(n, -1)


def omega(chi):
    return np.diag([float(v) for v in nu_pair(chi)])


def g1_matrix(chi):
    """Label map of an averaged unitary seen by only one of its slots."""
    return omega(chi) @ np.ones((2, 2)) / chi ** 2


def sign_patterns(count):
    """All label sign tuples, first slot most significant, + before -."""
    return list(_iter_product((1, -1), repeat=count))


def j_matrix(dims):
    """Lift a combined label to per-slot labels with exact nu weights."""
    dims = [int(d) for d in dims]
    total = 1
    for d in dims:
        total *= d
    out = np.zeros((2 ** len(dims), 2))
    for row, signs in enumerate(sign_patterns(len(dims))):
        prod = 1
        num = 1
        for s, d in zip(signs, dims):
            prod *= s
            num *= _nu_int(d, s)
        col = 0 if prod == 1 else 1
        out[row, col] = float(Fraction(num, _nu_int(total, prod)))
    return out


def s_matrix(count):
    """Collapse per-slot labels to the combined label (the sign product)."""
    out = np.zeros((2, 2 ** count))
    for col, signs in enumerate(sign_patterns(count)):
        prod = 1
        for s in signs:
            prod *= s
        out[0 if prod == 1 else 1, col] = 1.0
    return out


def g_matrix(dims):
    """Label channel of one Haar unitary covering the listed slots."""
    return j_matrix(dims) @ s_matrix(len(dims))


def g2_matrix(chi1, chi2):
    return g_matrix((chi1, chi2))


def g3_matrix(chi1, chi2, chi3):
    return g_matrix((chi1, chi2, chi3))


def _keep_row(keeps):
    """Row operator tracing every slot whose keep flag is False."""
    out = np.array([[1.0]])
    for keep in keeps:
        out = np.kron(out, np.eye(2) if keep else T_ROW)
    return out


def _binary_base(chi, tilde=False):
    append = kron(np.eye(2), A_COL, np.eye(2), A_COL, np.eye(2), A_COL)
    iso = kron(g2_matrix(chi, chi), g2_matrix(chi, chi), g2_matrix(chi, chi))
    if tilde:
        dis = kron(np.eye(2), g2_matrix(chi, chi), np.eye(2), np.eye(2),
                   np.eye(2))
    else:
        dis = kron(np.eye(2), g2_matrix(chi, chi), g2_matrix(chi, chi),
                   np.eye(2))
    return dis @ iso @ append


def binary_channels(chi):
    """Window channels of the two-to-one layer: slots (c1,a1,c2,a2,c3,a3)."""
    base = _binary_base(chi)
    left = _keep_row([False, True, True, True, False, False]) @ base
    right = _keep_row([False, False, True, True, True, False]) @ base
    return {"left": left, "right": right, "average": (left + right) / 2.0}


def binary_tilde_channels(chi):
    """Same window with only the left interior disentangler averaged.

    The right variant keeps three slots (8x8), the left keeps four
    (16x8); both feed the leading-order covariance amplitude.
    """
    base = _binary_base(chi, tilde=True)
    right = _keep_row([False, False, True, True, True, False]) @ base
    left = _keep_row([False, True, True, True, True, False]) @ base
    return {"left": left, "right": right}


def q_matrix(chi):
    """Rank-one splice weight joining two label slots across a cut."""
    col = np.kron(S_COL, S_COL) - np.kron(T_COL, T_COL) / chi ** 2
    row = np.kron(S_ROW, S_ROW) - np.kron(T_ROW, T_ROW) / chi ** 2
    return kron(omega(chi), omega(chi)) @ col @ row


def binary_offdiag_channel(chi):
    """Joint channel of two separated windows after their cones merge.

    Slots (c-2, a-2, c-1, a-1, c0, a0, c1, a1); the kept window is
    (c-1, a-1, c0, a0).  Slots seen by only one factor of an averaged
    unitary carry the one-sided map g1.
    """
    g1 = g1_matrix(chi)
    gg = g2_matrix(chi, chi)
    append = kron(np.eye(2), A_COL, np.eye(2), A_COL, np.eye(2), A_COL,
                  np.eye(2), A_COL)
    iso = kron(g1, g1, gg, gg, g1, g1)
    dis = kron(np.eye(2), g1, g1, gg, g1, g1, np.eye(2))
    keep = _keep_row([False, False, True, True, True, True, False, False])
    return keep @ dis @ iso @ append


def ternary_channels(chi):
    """Window channels of the three-to-one layer: slots (c1,a1,b1,c2,a2,b2)."""
    append = kron(np.eye(2), A_COL, A_COL, np.eye(2), A_COL, A_COL)
    iso = kron(g3_matrix(chi, chi, chi), g3_matrix(chi, chi, chi))
    dis = kron(np.eye(2), np.eye(2), g2_matrix(chi, chi), np.eye(2),
               np.eye(2))
    base = dis @ iso @ append
    left = _keep_row([False, True, True, False, False, False]) @ base
    center = _keep_row([False, False, True, True, False, False]) @ base
    right = _keep_row([False, False, False, True, True, False]) @ base
    return {
        "left": left, "center": center, "right": right,
        "average": (left + center + right) / 3.0,
    }


def ttns_channels(family, chi):
    """Window channels of the disentangler-free trees."""
    if family == "binary1d":
        append = kron(np.eye(2), A_COL, np.eye(2), A_COL, np.eye(2), A_COL)
        iso = kron(g2_matrix(chi, chi), g2_matrix(chi, chi),
                   g2_matrix(chi, chi))
        base = iso @ append
        left = _keep_row([False, True, True, True, False, False]) @ base
        right = _keep_row([False, False, True, True, True, False]) @ base
        return {"left": left, "right": right, "average": (left + right) / 2.0}
    if family == "ternary1d":
        append = kron(np.eye(2), A_COL, A_COL, np.eye(2), A_COL, A_COL)
        iso = kron(g3_matrix(chi, chi, chi), g3_matrix(chi, chi, chi))
        base = iso @ append
        left = _keep_row([False, True, True, False, False, False]) @ base
        center = _keep_row([False, False, True, True, False, False]) @ base
        right = _keep_row([False, False, False, True, True, False]) @ base
        return {
            "left": left, "center": center, "right": right,
            "average": (left + center + right) / 3.0,
        }
    if family == "nonary2d":
        return nonary_channels(chi, flavor="ttns")
    raise ValueError("unknown family %r" % (family,))


def _nonary_block_map(chi, kept):
    """Exact label map of one 3x3 block onto `kept` of its nine sites."""
    rows = []
    for kept_signs in sign_patterns(kept):
        row = []
        for col_sign in (1, -1):
            acc = Fraction(0)
            for rest in sign_patterns(9 - kept):
                signs = kept_signs + rest
                prod = 1
                num = 1
                for s in signs:
                    prod *= s
                    num *= _nu_int(chi, s)
                if prod == col_sign:
                    acc += Fraction(num, _nu_int(chi ** 9, col_sign))
            row.append(float(acc))
        rows.append(row)
    return np.array(rows)


def _on_label_slots(op, slots, total):
    """Lift an operator on the listed label slots to all `total` slots."""
    rest = [q for q in range(total) if q not in slots]
    perm = list(slots) + rest
    p = permutation_operator(2, perm)
    full = np.kron(op, np.eye(2 ** len(rest))) if rest else op
    return p.T @ full @ p


def nonary_channels(chi, flavor="mera"):
    """2x2-window channels of the nine-to-one (3x3 block) family.

    Inputs are the labels of the 2x2 block window (row-major), outputs
    the labels of the 2x2 site window (row-major).  `interior` sits
    inside one block, `edge` straddles one block boundary, `corner`
    straddles a block corner; `average` sums all nine positions with the
    six mirror copies generated by the square symmetry.
    """
    if flavor not in FLAVORS:
        raise ValueError("unknown flavor %r" % (flavor,))
    mera = flavor == "mera"
    b0 = _nonary_block_map(chi, 0)
    b1 = _nonary_block_map(chi, 1)
    b2 = _nonary_block_map(chi, 2)
    b4 = _nonary_block_map(chi, 4)
    edge_g = g2_matrix(chi, chi)
    corner_g = g_matrix((chi,) * 4)
    swap_mid = permutation_operator(2, [0, 2, 1, 3])

    if mera:
        # interior: block1 keeps (center, right edge, bottom edge, corner);
        # partners ride along: block2 (right-edge partner, corner),
        # block3 (bottom-edge partner, corner), block4 (corner)
        m = kron(b4, b2, b2, b1)
        m = _on_label_slots(edge_g, [1, 4], 9) @ m
        m = _on_label_slots(edge_g, [2, 6], 9) @ m
        m = _on_label_slots(corner_g, [3, 5, 7, 8], 9) @ m
        interior = kron(np.eye(16), np.ones((1, 32))) @ m
    else:
        interior = kron(b4, b0, b0, b0)

    if mera:
        # edge: kron order (block1 edge+corner, block2 edge+corner,
        # block3 corner partner, block4 corner partner)
        m = kron(b2, b2, b1, b1)
        m = _on_label_slots(edge_g, [0, 2], 6) @ m
        m = _on_label_slots(corner_g, [1, 3, 4, 5], 6) @ m
        edge = swap_mid @ (kron(np.eye(16), np.ones((1, 4))) @ m)
    else:
        edge = swap_mid @ kron(b2, b2, b0, b0)

    corner = kron(b1, b1, b1, b1)
    if mera:
        corner = corner_g @ corner

    rh = permutation_operator(2, [1, 0, 3, 2])
    rv = permutation_operator(2, [2, 3, 0, 1])
    rd = permutation_operator(2, [0, 2, 1, 3])
    total = (
        interior + rh @ interior @ rh + rv @ interior @ rv
        + rh @ rv @ interior @ rv @ rh
        + edge + rv @ edge @ rv + rd @ edge @ rd + rd @ rv @ edge @ rv @ rd
        + corner
    )
    return {
        "interior": interior, "edge": edge, "corner": corner,
        "average": total / 9.0,
    }


def sorted_real_eigenvalues(mat, tol=EIG_IMAG_TOL):
    """Eigenvalues sorted descending; rejects a genuinely complex spectrum."""
    w = np.linalg.eigvals(mat)
    if np.abs(w.imag).max() > tol:
        raise ValueError("channel spectrum has imaginary parts up to %g"
                         % np.abs(w.imag).max())
    return np.sort(w.real)[::-1]


def spectrum(family, flavor, chi):
    """Sorted spectrum of the position-averaged layer channel."""
    if flavor not in FLAVORS:
        raise ValueError("unknown flavor %r" % (flavor,))
    if family == "binary1d":
        mat = (binary_channels(chi) if flavor == "mera"
               else ttns_channels(family, chi))["average"]
    elif family == "ternary1d":
        mat = (ternary_channels(chi) if flavor == "mera"
               else ttns_channels(family, chi))["average"]
    elif family == "nonary2d":
        mat = nonary_channels(chi, flavor=flavor)["average"]
    else:
        raise ValueError("unknown family %r" % (family,))
    return sorted_real_eigenvalues(mat)


def branch_count(family):
    return {"binary1d": 2, "ternary1d": 3, "nonary2d": 9}[family]


def layer_variance_ratio(family, chi, flavor="mera"):
    """Predicted ratio of gradient variances at adjacent layers.

    The variance picks up one branching factor and one subleading channel
    eigenvalue per layer, so the ratio is b * eta.
    """
    return branch_count(family) * float(spectrum(family, flavor, chi)[1])


# analytic spectra, used as goldens against the constructed matrices

def binary_eta(chi):
    return chi ** 2 * (1 + chi) ** 4 / (2.0 * (1 + chi ** 2) ** 4)


def binary_avg_spectrum_formula(chi):
    return [
        1.0,
        binary_eta(chi),
        chi ** 2 * (1 + chi) ** 2 / (2.0 * (1 + chi ** 2) ** 3),
        chi ** 3 / (1.0 + chi ** 2) ** 3,
        0.0, 0.0, 0.0, 0.0,
    ]


def binary_mover_spectrum_formula(chi):
    return [
        1.0,
        chi ** 2 * (1 + chi) ** 2 / (1.0 + chi ** 2) ** 3,
        chi ** 3 * (1 + chi) ** 2 / (1.0 + chi ** 2) ** 4,
        chi ** 3 / (1.0 + chi ** 2) ** 3,
        0.0, 0.0, 0.0, 0.0,
    ]


def binary_offdiag_eta(chi):
    return chi ** 2 * (1 + chi) ** 2 / (1.0 + chi ** 2) ** 3


def ternary_eta(chi, sign=1.0):
    c2 = chi ** 2
    root = np.sqrt(1 + 4 * c2 + 54 * c2 ** 2 + 4 * c2 ** 3 + c2 ** 4)
    return chi ** 2 * (1 + 8 * c2 + c2 ** 2 + sign * root) \
        / (6.0 * (1 + c2 + c2 ** 2) ** 2)


def ternary_avg_spectrum_formula(chi):
    return [
        1.0,
        ternary_eta(chi),
        chi ** 2 / (3.0 * (1 + chi ** 2 + chi ** 4)),
        ternary_eta(chi, sign=-1.0),
    ]


def ternary_mover_spectrum_formula(chi):
    c = chi
    return [
        1.0,
        c ** 2 / (1.0 + c ** 2 + c ** 4),
        c ** 4 / ((1 - c + c ** 2) ** 2 * (1 + c ** 2) * (1 + c + c ** 2)),
        c ** 4 / ((1 - c + c ** 2) * (1 + c ** 2) * (1 + c + c ** 2) ** 2),
    ]


def ternary_center_spectrum_formula(chi):
    return [1.0, 3.0 * chi ** 4 / (1 + chi ** 2 + chi ** 4) ** 2, 0.0, 0.0]


def ttns_eta(family, chi):
    """Subleading eigenvalue of the tree channels: one bond against the
    product of the other legs, matching the open-chain formula."""
    d = chi ** (branch_count(family) - 1)
    return (1.0 - 1.0 / chi ** 2) / (d - 1.0 / (chi ** 2 * d))


def ttns_binary_spectrum_formula(chi):
    e = chi / (1.0 + chi ** 2)
    return [1.0, e, e / 2, e / 2,
            chi ** 2 / (2.0 * (1 + chi ** 2) ** 2),
            chi ** 2 / (2.0 * (1 + chi ** 2) ** 2), 0.0, 0.0]


def nonary_eta_series(chi):
    return 1 / (9.0 * chi ** 8) + 7 / (9.0 * chi ** 10) \
        - 16 / (9.0 * chi ** 12)


def nonary_lambda34_series(chi):
    return 1 / (9.0 * chi ** 8) + 1 / (3.0 * chi ** 10) \
        - 8 / (9.0 * chi ** 12)


# leading spectral vectors of the averaged two-to-one channel

def _real_vector(v, tol=EIG_IMAG_TOL):
    i = int(np.argmax(np.abs(v)))
    v = v / (v[i] / abs(v[i]))
    if np.abs(v.imag).max() > tol:
        raise ValueError("eigenvector is not real up to phase")
    return v.real


def binary_avg_spectral(chi):
    """Leading eigen-pairs of the averaged two-to-one window channel.

    l1 is the exact all-ones trace row.  Gauge: <l1, r1> = <l2, r2> = 1,
    l2 has unit Euclidean norm and positive leading entry.
    """
    mat = binary_channels(chi)["average"]
    w, vl, vr = eig(mat, left=True, right=True)
    order = np.argsort(-w.real)
    lead, second = order[0], order[1]
    l1 = np.ones(8)
    r1 = _real_vector(vr[:, lead])
    r1 = r1 / (l1 @ r1)
    l2 = _real_vector(vl[:, second])
    l2 = l2 / np.linalg.norm(l2)
    if l2[0] < 0:
        l2 = -l2
    r2 = _real_vector(vr[:, second])
    r2 = r2 / (l2 @ r2)
    return {
        "eigenvalues": np.sort(w.real)[::-1],
        "eta": float(w[second].real),
        "l1": l1, "r1": r1, "l2": l2, "r2": r2,
    }


def binary_avg_eigvector_expansions(chi):
    """Large-bond expansions of the leading spectral vectors."""
    lin = np.array([3.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0, -3.0])
    r1 = (1.0 + lin / chi) / 8.0
    l2 = np.array([3 - 8.0 / chi, 1 - 4.0 / chi, -1.0, -1.0,
                   1 - 4.0 / chi, -1.0, -1.0, -1.0]) / 4.0
    r2 = np.array([1 + 4.0 / chi, -2.0 / chi, -1.0, 2.0 / chi,
                   -2.0 / chi, -1 + 4.0 / chi, 2.0 / chi, 1 - 8.0 / chi])
    return {"r1": r1, "l2": l2, "r2": r2}


def binary_eigvec_expansion_check(chi):
    """Max deviation of each computed vector from its expansion.

    r1 carries a fixed trace gauge and is compared directly; l2 and r2
    are compared after a least-squares scale fit, since only their
    relative scale is physical.
    """
    spectral = binary_avg_spectral(chi)
    exps = binary_avg_eigvector_expansions(chi)
    out = {"r1": float(np.abs(spectral["r1"] - exps["r1"]).max())}
    for name in ("l2", "r2"):
        v = spectral[name]
        e = exps[name]
        alpha = float(v @ e) / float(v @ v)
        out[name] = float(np.abs(alpha * v - e).max())
    return out


def doubled_pair_weight(matrix, chi, vector):
    """Pairing of (matrix x matrix) with a three-slot label vector."""
    hh = np.kron(matrix, matrix)
    total = 0.0
    for idx, signs in enumerate(sign_patterns(3)):
        proj = kron(*[(np.eye(chi * chi) + s * swap_operator(chi)) / 2.0
                      for s in signs])
        proj = op_permute(proj, [chi] * 6, [0, 2, 4, 1, 3, 5])
        nuprod = 1
        for s in signs:
            nuprod *= _nu_int(chi, s)
        total += vector[idx] * np.trace(hh @ proj).real / nuprod
    return float(total)


def binary_diag_avg_leading_term(term, tau):
    """Leading same-placement variance of the layer-averaged gradient.

    Gives the dominant term of the summed single-placement Tr(g^dag g)/N,
    averaged over the positions of one layer tau, for the extensive sum
    of `term` on a deep two-to-one network.  Exact at leading order in
    the subleading channel eigenvalue; scale gauge of the spectral pair
    cancels against the pairing weight.
    """
    if not isinstance(term, LocalTerm):
        raise TypeError("expected a LocalTerm")
    if term.support != 3:
        raise ValueError("the two-to-one family takes support-3 terms")
    tau = int(tau)
    if tau < 1:
        raise ValueError("layer index must be positive")
    chi = term.site_dim
    spectral = binary_avg_spectral(chi)
    tilde = binary_tilde_channels(chi)
    q = q_matrix(chi)
    pair = doubled_pair_weight(term.matrix, chi, spectral["r2"])
    l2 = spectral["l2"][None, :]
    r1 = spectral["r1"][:, None]
    term_left = (
        kron(l2, T_ROW) @ kron(np.eye(4), q) @ tilde["left"] @ r1
    ).item()
    term_right = (l2 @ kron(np.eye(2), q) @ tilde["right"] @ r1).item()
    amp = 4.0 * pair / (chi ** 4 - 1.0)
    return amp * (2.0 * spectral["eta"]) ** (tau - 1) * (term_left + term_right)


# dense brute-force oracle: integrate the doubled network slot by slot

class _DoubledRegister:
    """Dense operator on named doubled slots, each of dimension chi^2.

    The matrix indices run over the tensor product of (ket, bra) pairs,
    one pair per slot, first-listed slot leftmost.
    """

    def __init__(self, chi, names, op):
        self.chi = chi
        self.names = list(names)
        self.op = op

    def _move_front(self, names):
        idx = [self.names.index(n) for n in names]
        perm = idx + [i for i in range(len(self.names)) if i not in idx]
        self.op = op_permute(self.op, [self.chi ** 2] * len(self.names), perm)
        self.names = [self.names[i] for i in perm]

    def append(self, name):
        ref = np.zeros((self.chi ** 2, self.chi ** 2))
        ref[0, 0] = 1.0
        self.op = np.kron(self.op, ref)
        self.names.append(name)

    def trace(self, name):
        i = self.names.index(name)
        self.op = partial_trace(self.op, [self.chi ** 2] * len(self.names),
                                {i + 1})
        self.names.pop(i)

    def first_moment(self, name):
        self._move_front([name])
        n2 = self.chi ** 2
        rest = n2 ** (len(self.names) - 1)
        r = self.op.reshape(n2, rest, n2, rest)
        t = np.einsum("ArAs->rs", r)
        self.op = np.kron(np.eye(n2) / n2, t)

    def second_moment(self, names):
        self._move_front(names)
        m = len(names)
        chi = self.chi
        k = len(self.names)
        rest = (chi ** 2) ** (k - m)
        dims = [chi] * (2 * m) + [rest]
        fperm = list(range(0, 2 * m, 2)) + list(range(1, 2 * m, 2)) + [2 * m]
        grouped = op_permute(self.op, dims, fperm)
        n = chi ** m
        r4 = grouped.reshape(n * n, rest, n * n, rest)
        sw = swap_operator(n)
        out = np.zeros_like(grouped)
        for sign in (1, -1):
            proj = (np.eye(n * n) + sign * sw) / 2.0
            t = np.einsum("AB,BrAs->rs", proj, r4)
            out += np.kron(proj / _nu_int(n, sign), t)
        gdims = [dims[p] for p in fperm]
        inv = [0] * len(fperm)
        for i, p in enumerate(fperm):
            inv[p] = i
        self.op = op_permute(out, gdims, inv)

    def extract(self, names):
        self._move_front(names)
        chi = self.chi
        out = np.empty(2 ** len(names))
        for idx, signs in enumerate(sign_patterns(len(names))):
            proj = kron(*[(np.eye(chi * chi) + s * swap_operator(chi)) / 2.0
                          for s in signs]) if len(names) > 1 else \
                (np.eye(chi * chi) + signs[0] * swap_operator(chi)) / 2.0
            val = np.trace(proj @ self.op)
            out[idx] = val.real
        return out


def _run_dense(chi, inputs, program, outputs):
    cols = []
    for signs in sign_patterns(len(inputs)):
        parts = [(np.eye(chi * chi) + s * swap_operator(chi))
                 / (2.0 * _nu_int(chi, s)) for s in signs]
        reg = _DoubledRegister(chi, inputs, kron(*parts)
                               if len(parts) > 1 else parts[0])
        for step in program:
            if step[0] == "append":
                reg.append(step[1])
            elif step[0] == "trace":
                reg.trace(step[1])
            elif step[0] == "g1":
                reg.first_moment(step[1])
            else:
                reg.second_moment(list(step[1]))
        cols.append(reg.extract(outputs))
    return np.column_stack(cols)


def dense_binary_channels(chi):
    """Brute-force doubled-network integration of the two-to-one window."""
    common = [
        ("append", "a1"), ("avg", ("c1", "a1")), ("trace", "c1"),
        ("append", "a2"), ("avg", ("c2", "a2")), ("avg", ("a1", "c2")),
    ]
    right = common + [
        ("trace", "a1"),
        ("append", "a3"), ("avg", ("c3", "a3")), ("trace", "a3"),
        ("avg", ("a2", "c3")),
    ]
    left = common + [
        ("append", "a3"), ("avg", ("c3", "a3")), ("trace", "a3"),
        ("avg", ("a2", "c3")), ("trace", "c3"),
    ]
    ins = ["c1", "c2", "c3"]
    return {
        "left": _run_dense(chi, ins, left, ["a1", "c2", "a2"]),
        "right": _run_dense(chi, ins, right, ["c2", "a2", "c3"]),
    }


def dense_binary_tilde_channels(chi):
    common = [
        ("append", "a1"), ("avg", ("c1", "a1")), ("trace", "c1"),
        ("append", "a2"), ("avg", ("c2", "a2")), ("avg", ("a1", "c2")),
    ]
    tail = [("append", "a3"), ("avg", ("c3", "a3")), ("trace", "a3")]
    ins = ["c1", "c2", "c3"]
    return {
        "left": _run_dense(chi, ins, common + tail,
                           ["a1", "c2", "a2", "c3"]),
        "right": _run_dense(chi, ins, common + [("trace", "a1")] + tail,
                            ["c2", "a2", "c3"]),
    }


def dense_binary_offdiag_channel(chi):
    ins = ["cm2", "cm1", "c0", "c1"]
    program = [
        ("g1", "cm2"), ("trace", "cm2"),
        ("append", "am2"), ("g1", "am2"), ("g1", "am2"), ("trace", "am2"),
        ("append", "am1"), ("avg", ("cm1", "am1")), ("g1", "cm1"),
        ("append", "a0"), ("avg", ("c0", "a0")), ("avg", ("am1", "c0")),
        ("g1", "a0"),
        ("g1", "c1"), ("g1", "c1"), ("trace", "c1"),
        ("append", "a1"), ("g1", "a1"), ("trace", "a1"),
    ]
    return _run_dense(chi, ins, program, ["cm1", "am1", "c0", "a0"])


def dense_ternary_channels(chi):
    ins = ["c1", "c2"]
    first = [
        ("append", "a1"), ("append", "b1"), ("avg", ("c1", "a1", "b1")),
        ("trace", "c1"),
    ]
    second = [
        ("append", "a2"), ("append", "b2"), ("avg", ("c2", "a2", "b2")),
    ]
    right = first + [("trace", "a1")] + second + [
        ("trace", "b2"), ("avg", ("b1", "c2")), ("trace", "b1"),
    ]
    center = first + [("trace", "a1")] + second + [
        ("trace", "a2"), ("trace", "b2"), ("avg", ("b1", "c2")),
    ]
    left = first + second + [
        ("trace", "a2"), ("trace", "b2"), ("avg", ("b1", "c2")),
        ("trace", "c2"),
    ]
    return {
        "left": _run_dense(chi, ins, left, ["a1", "b1"]),
        "center": _run_dense(chi, ins, center, ["b1", "c2"]),
        "right": _run_dense(chi, ins, right, ["c2", "a2"]),
    }


def dense_ttns_channels(family, chi):
    if family == "binary1d":
        ins = ["c1", "c2", "c3"]
        common = [
            ("append", "a1"), ("avg", ("c1", "a1")), ("trace", "c1"),
            ("append", "a2"), ("avg", ("c2", "a2")),
            ("append", "a3"), ("avg", ("c3", "a3")), ("trace", "a3"),
        ]
        return {
            "left": _run_dense(chi, ins, common + [("trace", "c3")],
                               ["a1", "c2", "a2"]),
            "right": _run_dense(chi, ins, common + [("trace", "a1")],
                                ["c2", "a2", "c3"]),
        }
    if family == "ternary1d":
        ins = ["c1", "c2"]
        first = [
            ("append", "a1"), ("append", "b1"),
            ("avg", ("c1", "a1", "b1")), ("trace", "c1"),
        ]
        second = [
            ("append", "a2"), ("append", "b2"),
            ("avg", ("c2", "a2", "b2")),
        ]
        return {
            "left": _run_dense(chi, ins, first + second + [
                ("trace", "c2"), ("trace", "a2"), ("trace", "b2")],
                ["a1", "b1"]),
            "center": _run_dense(chi, ins, first + [("trace", "a1")]
                                 + second + [("trace", "a2"),
                                             ("trace", "b2")],
                                 ["b1", "c2"]),
            "right": _run_dense(chi, ins, first + [("trace", "a1"),
                                                   ("trace", "b1")]
                                + second + [("trace", "b2")],
                                ["c2", "a2"]),
        }
    raise ValueError("no dense oracle for family %r" % (family,))
