"""Binary and ternary 1D MERA/TTNS on a periodic chain.

A network of T layers sits on a lattice of L = b^Tprime sites (branching
b = 2 or 3), coarse-graining by b per layer, and closes on the all-|0>
product state at the top.  Layer tau maps lattice tau-1 (fine) to lattice
tau (coarse): isometries embed each coarse site into b fine sites with
reference states appended, and disentanglers act across block boundaries
(absent in the ttns flavor).  Every local term stays inside a causal cone
whose window is 3 sites for the binary family and 2 for the ternary one,
so expectation values only touch the tensors inside the cone.

Conventions.  Binary: isometry V_{tau,k} in U(chi^2) builds W|c> =
V(|c> x |0>) on fine sites (2k-1, 2k); disentangler U_{tau,k} acts on
fine sites (2k, 2k+1).  Ternary: V_{tau,k} in U(chi^3) builds
W|c> = V(|c> x |00>) on fine sites (3k-1, 3k, 3k+1); U_{tau,k} acts on
(3k+1, 3k+2).  All site indices wrap modulo the layer size.  A window at
position q on lattice tau-1 ascends into the window at q // b, through a
six-site block whose tensors are shared by the b sibling positions.

Gradients follow the same convention as the MPS engine: the Euclidean
derivative d of a real expectation satisfies dE(W) = Re Tr(d^dag W), the
Riemannian gradient is g = (d - U d^dag U)/2, and variances are
Tr(g^dag g)/N with N the tensor's unitary dimension.
"""

import numpy as np

from .hamiltonians import LocalTerm
from .stats import pick_batches, report_from_values, run_chunked
from .tensor_core import RngSeed, as_rng, dagger, haar_unitary, is_unitary, kron

FAMILIES = ("binary1d", "ternary1d")
FLAVORS = ("mera", "ttns")

EXPECTATION_IMAG_TOL = 1e-10


def branching_factor(family):
    if family == "binary1d":
        return 2
    if family == "ternary1d":
        return 3
    raise ValueError("unknown family %r" % (family,))


def window_width(family):
    """Causal-cone window size: 3 sites binary, 2 sites ternary."""
    return 3 if family == "binary1d" else 2


class MeraNetwork:
    """Tensors of one MERA or TTNS, keyed by (layer, position)."""

    def __init__(self, family, flavor, chi, layers, lattice_exponent,
                 disentanglers, isometry_unitaries):
        if family not in FAMILIES:
            raise ValueError("unknown family %r" % (family,))
        if flavor not in FLAVORS:
            raise ValueError("unknown flavor %r" % (flavor,))
        b = branching_factor(family)
        chi = int(chi)
        layers = int(layers)
        lattice_exponent = int(lattice_exponent)
        if chi < 2:
            raise ValueError("bond dimension must be at least 2")
        if layers < 1:
            raise ValueError("need at least one layer")
        margin = 2 if family == "binary1d" else 1
        if lattice_exponent < layers + margin:
            raise ValueError(
                "lattice exponent %d too small for %d layers (needs >= %d)"
                % (lattice_exponent, layers, layers + margin)
            )
        if flavor == "mera" and disentanglers is None:
            raise ValueError("mera networks need disentanglers")
        self.family = family
        self.flavor = flavor
        self.chi = chi
        self.layers = layers
        self.lattice_exponent = lattice_exponent
        self.branching = b
        self.lattice_size = b ** lattice_exponent
        iso_dim = chi ** b
        dis_dim = chi * chi
        self.isometry_unitaries = {}
        self.disentanglers = {} if flavor == "mera" else None
        for tau in range(1, layers + 1):
            for k in range(self.layer_sites(tau)):
                v = np.asarray(isometry_unitaries[(tau, k)], dtype=complex)
                if v.shape != (iso_dim, iso_dim) or not is_unitary(v):
                    raise ValueError(
                        "isometry unitary (%d, %d) is not in U(%d)"
                        % (tau, k, iso_dim)
                    )
                self.isometry_unitaries[(tau, k)] = v
                if flavor == "mera":
                    u = np.asarray(disentanglers[(tau, k)], dtype=complex)
                    if u.shape != (dis_dim, dis_dim) or not is_unitary(u):
                        raise ValueError(
                            "disentangler (%d, %d) is not in U(%d)"
                            % (tau, k, dis_dim)
                        )
                    self.disentanglers[(tau, k)] = u

    def layer_sites(self, tau):
        """Lattice size at layer tau (tau = 0 is the physical lattice)."""
        return self.branching ** (self.lattice_exponent - tau)

    def isometry(self, tau, k):
        """Embedding W: coarse site -> b fine sites, reference appended."""
        chi = self.chi
        v = self.isometry_unitaries[(tau, k)]
        cols = [c * chi ** (self.branching - 1) for c in range(chi)]
        return v[:, cols]

    def replace_tensor(self, which, tau, k, u):
        """New network with one tensor exchanged."""
        isos = dict(self.isometry_unitaries)
        diss = None if self.disentanglers is None else dict(self.disentanglers)
        if which == "isometry":
            isos[(tau, k)] = u
        elif which == "disentangler":
            if diss is None:
                raise ValueError("ttns networks have no disentanglers")
            diss[(tau, k)] = u
        else:
            raise ValueError("unknown tensor kind %r" % (which,))
        return MeraNetwork(self.family, self.flavor, self.chi, self.layers,
                           self.lattice_exponent, diss, isos)


def random_mera(family, chi, layers, lattice_exponent, seed, flavor="mera"):
    """Haar-random network; one generator draws every tensor in layer order."""
    b = branching_factor(family)
    rng = as_rng(seed)
    size = b ** lattice_exponent
    isos = {}
    diss = {} if flavor == "mera" else None
    for tau in range(1, int(layers) + 1):
        n_sites = size // b ** tau
        for k in range(n_sites):
            isos[(tau, k)] = haar_unitary(chi ** b, rng)
        if flavor == "mera":
            for k in range(n_sites):
                diss[(tau, k)] = haar_unitary(chi * chi, rng)
    return MeraNetwork(family, flavor, chi, layers, lattice_exponent, diss, isos)


class CausalCone:
    """Window positions of one physical site's cone, with mover tags."""

    def __init__(self, start, positions, movers):
        self.start = start
        self.positions = tuple(positions)
        self.movers = tuple(movers)


_BINARY_MOVERS = {0: "left", 1: "right"}
_TERNARY_MOVERS = {0: "left", 1: "center", 2: "right"}


def causal_cone(network, i):
    """Window position i_tau at every layer, starting from i_0 = i."""
    i = int(i)
    if i < 0 or i >= network.lattice_size:
        raise ValueError("site %d out of range" % i)
    b = network.branching
    tags = _BINARY_MOVERS if b == 2 else _TERNARY_MOVERS
    positions = [i]
    movers = []
    pos = i
    for _ in range(network.layers):
        movers.append(tags[pos % b])
        pos = pos // b
        positions.append(pos)
    return CausalCone(i, positions, movers)


def _support_blocks(network, tau, k, which):
    b = network.branching
    fine_sites = network.layer_sites(tau - 1)
    if which == "disentangler":
        span = (2 * k - 2, 2 * k + 2) if b == 2 else (3 * k, 3 * k + 3)
    elif which == "isometry":
        span = (2 * k - 4, 2 * k + 2) if b == 2 else (3 * k - 3, 3 * k + 3)
    else:
        raise ValueError("unknown tensor kind %r" % (which,))
    return [q % fine_sites for q in range(*span)]


def causal_support(network, tau, k, which="disentangler"):
    """Physical sites whose causal cone reaches the tensor (tau, k)."""
    tau = int(tau)
    k = int(k)
    if tau < 1 or tau > network.layers:
        raise ValueError("layer %d out of range" % tau)
    if k < 0 or k >= network.layer_sites(tau):
        raise ValueError("position %d out of range in layer %d" % (k, tau))
    block = network.branching ** (tau - 1)
    sites = set()
    for q in _support_blocks(network, tau, k, which):
        sites.update(range(q * block, (q + 1) * block))
    return sites


def _check_term(network, term, i):
    if not isinstance(term, LocalTerm):
        raise TypeError("placement needs a LocalTerm")
    if term.site_dim != network.chi:
        raise ValueError(
            "term site dimension %d does not match chi = %d"
            % (term.site_dim, network.chi)
        )
    if term.support != window_width(network.family):
        raise ValueError(
            "%s networks take terms of support %d, got %d"
            % (network.family, window_width(network.family), term.support)
        )
    i = int(i)
    if i < 0 or i >= network.lattice_size:
        raise ValueError("site %d out of range" % i)
    return i


def _window_iso(network, tau, m):
    """Embedding of the coarse window into the six-site fine block."""
    n_sites = network.layer_sites(tau)
    ws = [
        network.isometry(tau, (m + j) % n_sites)
        for j in range(6 // network.branching)
    ]
    return kron(*ws) if len(ws) > 1 else ws[0]


def _window_dis(network, tau, m):
    """Disentangler layer on the six-site fine block (None for ttns)."""
    if network.flavor == "ttns":
        return None
    chi = network.chi
    n_sites = network.layer_sites(tau)
    if network.branching == 2:
        u0 = network.disentanglers[(tau, m % n_sites)]
        u1 = network.disentanglers[(tau, (m + 1) % n_sites)]
        return kron(np.eye(chi), u0, u1, np.eye(chi))
    u = network.disentanglers[(tau, m % n_sites)]
    return kron(np.eye(chi * chi), u, np.eye(chi * chi))


def _embed_window_op(chi, width, r, op):
    """Place a window operator at fine-block positions r+1 .. r+width."""
    left = chi ** (r + 1)
    right = chi ** (5 - r - width)
    return kron(np.eye(left), op, np.eye(right))


def _window_input(network, parts):
    """Sum the sibling window operators into one six-site block operator."""
    chi = network.chi
    w = window_width(network.family)
    total = None
    for r, op in enumerate(parts):
        if op is None:
            continue
        emb = _embed_window_op(chi, w, r, op)
        total = emb if total is None else total + emb
    return total


def _ascend_window(network, tau, m, parts):
    """One layer transition: sibling fine windows -> coarse window at m."""
    ytil = _window_input(network, parts)
    if ytil is None:
        return None
    dis = _window_dis(network, tau, m)
    if dis is not None:
        ytil = dagger(dis) @ ytil @ dis
    iso = _window_iso(network, tau, m)
    return dagger(iso) @ ytil @ iso


def descend_window(network, tau, m, rho):
    """Adjoint transition: coarse window density at m -> b fine windows.

    Returns the list of fine-window operators at positions b*m + r for
    r = 0..b-1 on lattice tau-1.  Trace-preserving and completely positive
    (the block map is an isometry conjugation followed by partial traces).
    """
    chi = network.chi
    b = network.branching
    w = window_width(network.family)
    phi = _window_iso(network, tau, m)
    dis = _window_dis(network, tau, m)
    if dis is not None:
        phi = dis @ phi
    rho6 = phi @ rho @ dagger(phi)
    out = []
    for r in range(b):
        left = chi ** (r + 1)
        mid = chi ** w
        right = chi ** (5 - r - w)
        resh = rho6.reshape(left, mid, right, left, mid, right)
        out.append(np.einsum("akbamb->km", resh))
    return out


def _ascent_pyramid(network, placements, top):
    """levels[ell][q]: summed window operators at lattice ell, ell <= top."""
    levels = [{}]
    for term, i in placements:
        i = _check_term(network, term, i)
        if i in levels[0]:
            levels[0][i] = levels[0][i] + term.matrix
        else:
            levels[0][i] = term.matrix
    b = network.branching
    for ell in range(1, top + 1):
        prev = levels[-1]
        cur = {}
        for m in sorted({q // b for q in prev}):
            parts = [prev.get(b * m + r) for r in range(b)]
            cur[m] = _ascend_window(network, ell, m, parts)
        levels.append(cur)
    return levels


def _descended_windows(network, tau):
    """Top-state window densities rho[m] at every position of lattice tau."""
    chi = network.chi
    w = window_width(network.family)
    dim = chi ** w
    rho_top = np.zeros((dim, dim), dtype=complex)
    rho_top[0, 0] = 1.0
    level = {m: rho_top for m in range(network.layer_sites(network.layers))}
    b = network.branching
    for ell in range(network.layers, tau, -1):
        nxt = {}
        for m, rho in level.items():
            children = descend_window(network, ell, m, rho)
            for r in range(b):
                nxt[b * m + r] = children[r]
        level = nxt
    return level


def expectation_local(network, term, i):
    """<Psi| term at sites i.. |Psi> by ascending through the causal cone."""
    i = _check_term(network, term, i)
    b = network.branching
    y = term.matrix
    pos = i
    for tau in range(1, network.layers + 1):
        parts = [None] * b
        parts[pos % b] = y
        y = _ascend_window(network, tau, pos // b, parts)
        pos = pos // b
    val = y[0, 0]
    if abs(val.imag) > EXPECTATION_IMAG_TOL:
        raise ValueError("expectation value has imaginary part %g" % val.imag)
    return float(val.real)


def expectation_sum(network, placements):
    return sum(expectation_local(network, term, i) for term, i in placements)


def norm_value(network):
    """<Psi|Psi> by ascending the identity window (equals 1 exactly)."""
    w = window_width(network.family)
    y = np.eye(network.chi ** w, dtype=complex)
    pos = 0
    for tau in range(1, network.layers + 1):
        parts = [None] * network.branching
        parts[pos % network.branching] = y
        y = _ascend_window(network, tau, pos // network.branching, parts)
        pos = pos // network.branching
    return float(y[0, 0].real)


def extensive_placements(term, length):
    """One placement per site of the periodic chain."""
    return [(term, i) for i in range(length)]


def _binary_dis_wirtinger(a6, y6, ul, ur, role):
    """Wirtinger derivative of Tr[A Dis^dag Y Dis] for one disentangler.

    A and Y are chi^6 operators on the fine block, Dis = 1 x ul x ur x 1;
    role selects which factor is differentiated.
    """
    pair = ul.shape[0]
    chi = int(round(pair ** 0.5))
    shape = (chi, pair, pair, chi) * 2
    a8 = a6.reshape(shape)
    y8 = y6.reshape(shape)
    if role == "left":
        return np.einsum(
            "abcdefgh,epPhaqQd,qb,Qc,Pg->pf",
            a8, y8, ul, ur, ur.conj(), optimize=True,
        )
    return np.einsum(
        "abcdefgh,epPhaqQd,qb,Qc,pf->Pg",
        a8, y8, ul, ur, ul.conj(), optimize=True,
    )


def _ternary_dis_wirtinger(a6, y6, u):
    chi2 = u.shape[0]
    shape = (chi2, chi2, chi2) * 2
    a6g = a6.reshape(shape)
    y6g = y6.reshape(shape)
    return np.einsum("abcdef,dpfaqc,qb->pe", a6g, y6g, u, optimize=True)


def _binary_iso_wirtinger(rho, m6, ws, role):
    """Wirtinger derivative of Tr[rho B^dag M B] for one binary isometry.

    B = W1 x W2 x W3 built from the per-pair embeddings ws; the result is
    the (chi^2 x chi) block that sits in the reference columns.
    """
    chi = ws[0].shape[1]
    r6 = rho.reshape((chi,) * 6)
    chi2 = ws[0].shape[0]
    m6g = m6.reshape((chi2,) * 6)
    w1, w2, w3 = ws
    if role == 0:
        return np.einsum(
            "abcdef,ABCDEF,Da,Eb,Fc,Be,Cf->Ad",
            r6, m6g, w1, w2, w3, w2.conj(), w3.conj(), optimize=True,
        )
    if role == 1:
        return np.einsum(
            "abcdef,ABCDEF,Da,Eb,Fc,Ad,Cf->Be",
            r6, m6g, w1, w2, w3, w1.conj(), w3.conj(), optimize=True,
        )
    return np.einsum(
        "abcdef,ABCDEF,Da,Eb,Fc,Ad,Be->Cf",
        r6, m6g, w1, w2, w3, w1.conj(), w2.conj(), optimize=True,
    )


def _ternary_iso_wirtinger(rho, m4, ws, role):
    chi = ws[0].shape[1]
    r4 = rho.reshape((chi,) * 4)
    chi3 = ws[0].shape[0]
    m4g = m4.reshape((chi3,) * 4)
    w1, w2 = ws
    if role == 0:
        return np.einsum(
            "abcd,ABCD,Ca,Db,Bd->Ac", r4, m4g, w1, w2, w2.conj(), optimize=True
        )
    return np.einsum(
        "abcd,ABCD,Ca,Db,Ac->Bd", r4, m4g, w1, w2, w1.conj(), optimize=True
    )


def _window_pairs(network, tau, m):
    n_sites = network.layer_sites(tau)
    return [
        network.isometry(tau, (m + j) % n_sites)
        for j in range(6 // network.branching)
    ]


def _embed_iso_derivative(small, chi, b):
    n = chi ** b
    full = np.zeros((n, n), dtype=complex)
    cols = [c * chi ** (b - 1) for c in range(chi)]
    full[:, cols] = small
    return full


def _project(u, dmat):
    return (dmat - u @ dagger(dmat) @ u) / 2.0


def _layer_wirtingers(network, gfine, rhos, tau, which, targets):
    """Wirtinger derivatives for the chosen tensors of one layer.

    gfine maps fine-window positions to summed ascended operators (lattice
    tau-1), rhos maps coarse-window positions to descended densities
    (lattice tau).  Returns {k: D}.
    """
    chi = network.chi
    b = network.branching
    n_sites = network.layer_sites(tau)
    if which == "disentangler" and network.flavor == "ttns":
        raise ValueError("ttns networks have no disentanglers")

    windows = {}

    def window(m):
        m = m % n_sites
        if m not in windows:
            parts = [gfine.get((b * m + r) % network.layer_sites(tau - 1))
                     for r in range(b)]
            ytil = _window_input(network, parts)
            entry = None
            if ytil is not None:
                iso = _window_iso(network, tau, m)
                if which == "disentangler":
                    a6 = iso @ rhos[m] @ dagger(iso)
                    entry = (a6, ytil)
                else:
                    dis = _window_dis(network, tau, m)
                    m6 = ytil if dis is None else dagger(dis) @ ytil @ dis
                    entry = (rhos[m], m6)
            windows[m] = entry
        return windows[m]

    out = {}
    for k in targets:
        if which == "disentangler":
            dmat = np.zeros((chi * chi,) * 2, dtype=complex)
            if b == 2:
                first = window(k)
                if first is not None:
                    a6, ytil = first
                    ul = network.disentanglers[(tau, k)]
                    ur = network.disentanglers[(tau, (k + 1) % n_sites)]
                    dmat += _binary_dis_wirtinger(a6, ytil, ul, ur, "left")
                second = window(k - 1)
                if second is not None:
                    a6, ytil = second
                    ul = network.disentanglers[(tau, (k - 1) % n_sites)]
                    ur = network.disentanglers[(tau, k)]
                    dmat += _binary_dis_wirtinger(a6, ytil, ul, ur, "right")
            else:
                entry = window(k)
                if entry is not None:
                    a6, ytil = entry
                    dmat += _ternary_dis_wirtinger(
                        a6, ytil, network.disentanglers[(tau, k)]
                    )
        else:
            n_roles = 6 // b
            small = np.zeros((chi ** b, chi), dtype=complex)
            for role in range(n_roles):
                entry = window(k - role)
                if entry is None:
                    continue
                rho, m6 = entry
                ws = _window_pairs(network, tau, (k - role) % n_sites)
                if b == 2:
                    small += _binary_iso_wirtinger(rho, m6, ws, role)
                else:
                    small += _ternary_iso_wirtinger(rho, m6, ws, role)
            dmat = _embed_iso_derivative(small, chi, b)
        out[k] = 2.0 * dmat
    return out


def riemannian_gradient(network, placements, tau, k, which="disentangler"):
    """Riemannian gradient of the summed placements at one network tensor."""
    tau = int(tau)
    k = int(k)
    if tau < 1 or tau > network.layers:
        raise ValueError("layer %d out of range" % tau)
    if k < 0 or k >= network.layer_sites(tau):
        raise ValueError("position %d out of range in layer %d" % (k, tau))
    levels = _ascent_pyramid(network, placements, tau - 1)
    rhos = _descended_windows(network, tau)
    dmats = _layer_wirtingers(network, levels[tau - 1], rhos, tau, which, [k])
    if which == "disentangler":
        u = network.disentanglers[(tau, k)]
    else:
        u = network.isometry_unitaries[(tau, k)]
    return _project(u, dmats[k])


def _mera_chunk(args):
    (family, flavor, chi, layers, exponent, term, tau, which,
     layer_average, seed, bcount, samples, start, count) = args
    b = branching_factor(family)
    n_sites = b ** (exponent - tau)
    n = chi * chi if which == "disentangler" else chi ** b
    ks = list(range(n_sites))
    n_cols = 1 if layer_average else n_sites
    vals = np.empty((count, n_cols))
    gsums = [np.zeros((bcount, n, n), dtype=complex) for _ in range(n_cols)]
    for kk in range(count):
        sample = start + kk
        network = random_mera(family, chi, layers, exponent,
                             seed.rng(sample), flavor=flavor)
        placements = extensive_placements(term, network.lattice_size)
        levels = _ascent_pyramid(network, placements, tau - 1)
        rhos = _descended_windows(network, tau)
        dmats = _layer_wirtingers(network, levels[tau - 1], rhos, tau, which, ks)
        batch = sample * bcount // samples
        per_k = np.empty(n_sites)
        for k in ks:
            if which == "disentangler":
                u = network.disentanglers[(tau, k)]
            else:
                u = network.isometry_unitaries[(tau, k)]
            g = _project(u, dmats[k])
            per_k[k] = np.vdot(g, g).real / n
            gsums[0 if layer_average else k][batch] += g
        if layer_average:
            vals[kk, 0] = per_k.mean()
        else:
            vals[kk, :] = per_k
    return vals, gsums


def _mean_gradient_extras(gsum, bcount, samples, draws_per_sample):
    draws = samples * draws_per_sample
    per_batch = samples // bcount
    mean = gsum.sum(axis=0) / draws
    extras = {"mean_gradient": mean,
              "mean_gradient_max_abs": float(np.abs(mean).max())}
    if bcount >= 2 and per_batch > 0:
        bm = gsum / (per_batch * draws_per_sample)
        err = np.sqrt(
            bm.real.std(axis=0, ddof=1) ** 2 + bm.imag.std(axis=0, ddof=1) ** 2
        ) / np.sqrt(bcount)
        sigma = np.zeros_like(err)
        ok = err > 0
        sigma[ok] = np.abs(mean[ok]) / err[ok]
        bad = (~ok) & (np.abs(mean) > 1e-12)
        if np.any(bad):
            sigma[bad] = np.inf
        extras["mean_gradient_stderr"] = err
        extras["mean_gradient_max_sigma"] = float(sigma.max())
    return extras


def mc_gradient_variance(family, chi, layers, lattice_exponent, term, tau,
                         which="disentangler", flavor="mera",
                         layer_average=True, samples=1000, seed=0,
                         predictions=None, workers=None):
    """Haar statistics of Riemannian gradients in one layer.

    The Hamiltonian is the extensive periodic sum of `term` over all
    physical sites; every network tensor is redrawn each sample (sample j
    always uses seed.rng(j), so results do not depend on the worker
    count).  With layer_average=True the per-sample value is the spatial
    mean over all positions k of Tr(g^dag g)/N and a single report is
    returned; otherwise one report per position.
    """
    samples = int(samples)
    if samples < 100:
        raise ValueError("need at least 100 samples")
    tau = int(tau)
    if tau < 1 or tau > int(layers):
        raise ValueError("layer %d out of range" % tau)
    if which not in ("disentangler", "isometry"):
        raise ValueError("unknown tensor kind %r" % (which,))
    if which == "disentangler" and flavor == "ttns":
        raise ValueError("ttns networks have no disentanglers")
    seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    bcount = pick_batches(samples)
    b = branching_factor(family)
    n_sites = b ** (int(lattice_exponent) - tau)
    common = (family, flavor, int(chi), int(layers), int(lattice_exponent),
              term, tau, which, bool(layer_average), seed, bcount, samples)
    parts = run_chunked(_mera_chunk, common, samples, workers,
                        align=samples // bcount)
    vals = np.concatenate([p[0] for p in parts], axis=0)
    n_cols = vals.shape[1]
    gsums = [sum(p[1][c] for p in parts) for c in range(n_cols)]
    base_params = {
        "family": family, "flavor": flavor, "chi": int(chi),
        "T": int(layers), "Tprime": int(lattice_exponent), "tau": tau,
        "which": which, "samples": samples,
        "seed": seed.master, "stream": seed.stream,
    }
    if layer_average:
        if predictions is None:
            pred = float("nan")
        else:
            pred = float(predictions)
        extras = _mean_gradient_extras(gsums[0], bcount, samples, n_sites)
        return report_from_values(vals[:, 0], pred,
                                 params=base_params, extras=extras)
    reports = {}
    for k in range(n_cols):
        if predictions is None:
            pred = float("nan")
        elif np.isscalar(predictions):
            pred = float(predictions)
        else:
            pred = float(predictions.get(k, float("nan")))
        extras = _mean_gradient_extras(gsums[k], bcount, samples, 1)
        reports[k] = report_from_values(
            vals[:, k], pred, params=dict(base_params, k=k), extras=extras
        )
    return reports


def placement_diagonal_sum(network, term, tau, which="disentangler"):
    """Layer average over k of sum_i Tr(g_i^dag g_i)/N for one network.

    g_i is the Riemannian gradient at (tau, k) of placement i alone, so
    this is the same-placement (diagonal) part of the quantity sampled by
    mc_gradient_variance; the cross terms between different placements
    are left out.  Each placement only visits the positions its cone can
    reach, keeping the cost per placement flat in the lattice size.
    """
    tau = int(tau)
    if tau < 1 or tau > network.layers:
        raise ValueError("layer %d out of range" % tau)
    if which not in ("disentangler", "isometry"):
        raise ValueError("unknown tensor kind %r" % (which,))
    if which == "disentangler" and network.flavor == "ttns":
        raise ValueError("ttns networks have no disentanglers")
    b = network.branching
    n_sites = network.layer_sites(tau)
    n = network.chi ** 2 if which == "disentangler" else network.chi ** b
    rhos = _descended_windows(network, tau)
    total = 0.0
    for i in range(network.lattice_size):
        gfine = _ascent_pyramid(network, [(term, i)], tau - 1)[tau - 1]
        ms = {q // b for q in gfine}
        if which == "disentangler":
            ks = {m % n_sites for m in ms}
            if b == 2:
                ks |= {(m + 1) % n_sites for m in ms}
        else:
            ks = {(m + r) % n_sites for m in ms for r in range(6 // b)}
        dmats = _layer_wirtingers(network, gfine, rhos, tau, which, sorted(ks))
        for k, dmat in dmats.items():
            if which == "disentangler":
                u = network.disentanglers[(tau, k)]
            else:
                u = network.isometry_unitaries[(tau, k)]
            g = _project(u, dmat)
            total += np.vdot(g, g).real / n
    return total / n_sites


def _diag_chunk(args):
    (family, flavor, chi, layers, exponent, term, tau, which,
     seed, start, count) = args
    vals = np.empty(count)
    for kk in range(count):
        network = random_mera(family, chi, layers, exponent,
                             seed.rng(start + kk), flavor=flavor)
        vals[kk] = placement_diagonal_sum(network, term, tau, which)
    return vals


def mc_placement_diagonal_variance(family, chi, layers, lattice_exponent,
                                   term, tau, which="disentangler",
                                   flavor="mera", samples=1000, seed=0,
                                   prediction=None, workers=None):
    """Haar average of the summed single-placement gradient norms.

    Estimates E[placement_diagonal_sum] over networks redrawn each sample
    (sample j always uses seed.rng(j), so results do not depend on the
    worker count).  This isolates the diagonal contribution that dominates
    the full gradient variance once the cross terms average out.
    """
    samples = int(samples)
    if samples < 100:
        raise ValueError("need at least 100 samples")
    tau = int(tau)
    if tau < 1 or tau > int(layers):
        raise ValueError("layer %d out of range" % tau)
    if which not in ("disentangler", "isometry"):
        raise ValueError("unknown tensor kind %r" % (which,))
    if which == "disentangler" and flavor == "ttns":
        raise ValueError("ttns networks have no disentanglers")
    seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    bcount = pick_batches(samples)
    common = (family, flavor, int(chi), int(layers), int(lattice_exponent),
              term, tau, which, seed)
    parts = run_chunked(_diag_chunk, common, samples, workers,
                        align=samples // bcount)
    vals = np.concatenate(parts)
    params = {
        "family": family, "flavor": flavor, "chi": int(chi),
        "T": int(layers), "Tprime": int(lattice_exponent), "tau": tau,
        "which": which, "samples": samples,
        "seed": seed.master, "stream": seed.stream,
    }
    pred = float("nan") if prediction is None else float(prediction)
    return report_from_values(vals, pred, params=params)
