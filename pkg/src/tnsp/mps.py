"""Left-orthonormal MPS parametrized by site unitaries.

An open-boundary matrix product state is stored as one unitary per site.
Sites and bonds are 0-based, bond j sits to the left of site j, and the
bond profile is m_j = min(d^j, d^(L-j), m) with m_0 = m_L = 1.  The site
tensor A[alpha, s, beta] holds selected columns of the site unitary (rows
indexed bond-major as alpha*d + s) and is always an isometry, so the state
has norm one and expectation values of local terms only involve the sites
at and to the right of the term.

Gradient conventions: the Euclidean derivative d of a real expectation is
normalized so the directional derivative along W is Re Tr(d^dag W); the
Riemannian gradient is the tangent projection g = (d - U d^dag U)/2 and
variances are measured as Tr(g^dag g)/N with N the site-unitary dimension.
Transfer-style maps track a ket index first and a bra index second.
"""

import numpy as np

from .hamiltonians import LocalTerm
from .stats import pick_batches, report_from_values, run_chunked
from .tensor_core import RngSeed, as_rng, dagger, haar_unitary, is_unitary

EXPECTATION_IMAG_TOL = 1e-10


def bond_profile(length, site_dim, max_bond):
    """Bond dimensions (m_0, ..., m_L) for an open chain."""
    length = int(length)
    site_dim = int(site_dim)
    max_bond = int(max_bond)
    if length < 1:
        raise ValueError("chain length must be positive")
    if site_dim < 2:
        raise ValueError("site dimension must be at least 2")
    if max_bond < 1:
        raise ValueError("bond dimension must be positive")
    return tuple(
        min(site_dim ** j, site_dim ** (length - j), max_bond)
        for j in range(length + 1)
    )


def boundary_index(site_dim, max_bond):
    """Number of boundary sites at each chain end: smallest b with d^b >= m."""
    b = 0
    while site_dim ** b < max_bond:
        b += 1
    return b


def _site_columns(profile, site_dim, index, boundary):
    """Dimension of the site unitary and the columns holding the MPS tensor.

    Left-end sites keep every column (the tensor is the full unitary up to
    truncation at the profile cap), bulk sites pair each bond state with
    the physical reference state, and right-end sites project two auxiliary
    factors onto the reference state whenever the bond profile supports the
    required factorization.
    """
    d = site_dim
    length = len(profile) - 1
    m_prev = profile[index]
    m_cur = profile[index + 1]
    n = m_prev * d
    if index < boundary:
        cols = list(range(m_cur))
    elif index >= length - boundary:
        if m_prev == m_cur * d:
            cols = [beta * d * d for beta in range(m_cur)]
        else:
            cols = list(range(m_cur))
    else:
        cols = [beta * d for beta in range(m_cur)]
    return n, cols


class IsometricMps:
    """Open-boundary MPS in left-orthonormal form, one unitary per site."""

    def __init__(self, site_dim, max_bond, unitaries):
        site_dim = int(site_dim)
        max_bond = int(max_bond)
        length = len(unitaries)
        profile = bond_profile(length, site_dim, max_bond)
        b = boundary_index(site_dim, max_bond)
        if length < 2 * b + 2:
            raise ValueError(
                "chain length %d too short for bond dimension %d (needs >= %d)"
                % (length, max_bond, 2 * b + 2)
            )
        self.length = length
        self.site_dim = site_dim
        self.max_bond = max_bond
        self.profile = profile
        self.boundary = b
        self.unitaries = []
        self.tensors = []
        for t, u in enumerate(unitaries):
            u = np.asarray(u, dtype=complex)
            n, cols = _site_columns(profile, site_dim, t, b)
            if u.shape != (n, n):
                raise ValueError(
                    "site %d unitary has shape %r, expected %dx%d"
                    % (t, u.shape, n, n)
                )
            if not is_unitary(u):
                raise ValueError("site %d matrix is not unitary" % t)
            self.unitaries.append(u)
            self.tensors.append(
                u[:, cols].reshape(profile[t], site_dim, profile[t + 1])
            )

    def replace_unitary(self, index, u):
        """New MPS with the unitary at one site exchanged."""
        us = list(self.unitaries)
        us[int(index)] = u
        return IsometricMps(self.site_dim, self.max_bond, us)


def random_mps(length, site_dim, max_bond, seed):
    """Haar-random isometric MPS; one generator draws every site unitary."""
    profile = bond_profile(length, site_dim, max_bond)
    rng = as_rng(seed)
    us = [haar_unitary(profile[t] * site_dim, rng) for t in range(length)]
    return IsometricMps(site_dim, max_bond, us)


def to_state_vector(mps):
    """Dense amplitudes, first site most significant."""
    dim = mps.site_dim ** mps.length
    if dim > 2 ** 20:
        raise ValueError("state vector of dimension %d exceeds the 2^20 limit" % dim)
    vec = np.ones((1, 1), dtype=complex)
    for a in mps.tensors:
        vec = np.einsum("xa,asb->xsb", vec, a).reshape(-1, a.shape[2])
    return vec.ravel()


def transfer_apply(a, w):
    """Pull a right bond operator through one site: ket index first."""
    return np.einsum("asb,bc,dsc->ad", a, w, a.conj())


def transfer_adjoint_apply(a, w):
    """Push a left bond operator through one site (adjoint direction)."""
    return np.einsum("asb,ad,dsc->bc", a, w, a.conj())


def right_environments(mps):
    """Environments R_k for every bond k = 0..L, with R_L = [[1]]."""
    envs = [None] * (mps.length + 1)
    r = np.ones((1, 1), dtype=complex)
    envs[mps.length] = r
    for t in range(mps.length - 1, -1, -1):
        r = transfer_apply(mps.tensors[t], r)
        envs[t] = r
    return envs


def norm_squared(mps):
    return float(right_environments(mps)[0][0, 0].real)


def _check_placement(length, site_dim, term, start):
    if not isinstance(term, LocalTerm):
        raise TypeError("placement needs a LocalTerm")
    if term.site_dim != site_dim:
        raise ValueError(
            "term site dimension %d does not match the chain's %d"
            % (term.site_dim, site_dim)
        )
    start = int(start)
    if start < 0 or start + term.support > length:
        raise ValueError(
            "term on sites %d..%d does not fit a chain of length %d"
            % (start, start + term.support - 1, length)
        )
    return start


def _window_block(mps, start, width):
    """Contraction of the sites start..start+width-1 into one three-leg block."""
    block = mps.tensors[start]
    for t in range(start + 1, start + width):
        a = mps.tensors[t]
        block = np.einsum("axb,bsc->axsc", block, a).reshape(
            block.shape[0], -1, a.shape[2]
        )
    return block


def expectation_local(mps, term, start):
    """<Psi| term at sites start.. |Psi> using the left-orthonormal shortcut."""
    start = _check_placement(mps.length, mps.site_dim, term, start)
    w = term.support
    block = _window_block(mps, start, w)
    r = np.ones((1, 1), dtype=complex)
    for t in range(mps.length - 1, start + w - 1, -1):
        r = transfer_apply(mps.tensors[t], r)
    val = np.einsum("ayc,yx,axb,bc->", block.conj(), term.matrix, block, r)
    if abs(val.imag) > EXPECTATION_IMAG_TOL:
        raise ValueError("expectation value has imaginary part %g" % val.imag)
    return float(val.real)


def expectation_sum(mps, placements):
    """Sum of expectation values over (term, start) placements."""
    return sum(expectation_local(mps, h, i) for h, i in placements)


def _window_insertion(mps, term, start):
    """Left bond operator at bond start+support after absorbing the term."""
    block = _window_block(mps, start, term.support)
    return np.einsum("axb,yx,ayc->bc", block, term.matrix, block.conj())


def _embed_site_matrix(small, n, cols):
    du = np.zeros((n, n), dtype=complex)
    du[:, cols] = small.reshape(small.shape[0] * small.shape[1], small.shape[2])
    return du


def _site_gradient_with_envs(mps, envs, term, start, target):
    """Euclidean derivative of one placed term with respect to site `target`.

    Returns the n x n matrix d with directional derivative Re Tr(d^dag W).
    Terms starting to the right of the target contribute exactly zero: the
    expectation does not depend on those unitaries at all.
    """
    d = mps.site_dim
    w = term.support
    n, cols = _site_columns(mps.profile, d, target, mps.boundary)
    if target < start:
        return np.zeros((n, n), dtype=complex)
    if target >= start + w:
        lh = _window_insertion(mps, term, start)
        for s in range(start + w, target):
            lh = transfer_adjoint_apply(mps.tensors[s], lh)
        small = np.einsum(
            "ad,asb,bc->dsc", lh, mps.tensors[target], envs[target + 1]
        )
        return 2.0 * _embed_site_matrix(small, n, cols)
    # target inside the window: open the bra tensor of that slot
    # integer einsum labels must stay below 52: ket bonds 0..w, ket
    # physical 10+j, bra physical 20+j, bra bonds 30+j (left one shared)
    r = target - start
    kb = list(range(w + 1))
    bb = [0] + [30 + j for j in range(1, w + 1)]
    ops = []
    for j in range(w):
        ops += [mps.tensors[start + j], [kb[j], 10 + j, kb[j + 1]]]
    ops += [
        term.matrix.reshape((d,) * (2 * w)),
        [20 + j for j in range(w)] + [10 + j for j in range(w)],
    ]
    for j in range(w):
        if j == r:
            continue
        ops += [mps.tensors[start + j].conj(), [bb[j], 20 + j, bb[j + 1]]]
    ops += [envs[start + w], [kb[w], bb[w]]]
    small = np.einsum(*ops, [bb[r], 20 + r, bb[r + 1]])
    return 2.0 * _embed_site_matrix(small, n, cols)


def riemannian_gradient(mps, placements, target):
    """Riemannian gradient of the summed placements at one site unitary."""
    target = int(target)
    if target < 0 or target >= mps.length:
        raise ValueError("site %d out of range" % target)
    for h, i in placements:
        _check_placement(mps.length, mps.site_dim, h, i)
    envs = right_environments(mps)
    n, _ = _site_columns(mps.profile, mps.site_dim, target, mps.boundary)
    dmat = np.zeros((n, n), dtype=complex)
    for h, i in placements:
        dmat += _site_gradient_with_envs(mps, envs, h, i, target)
    u = mps.unitaries[target]
    return (dmat - u @ dagger(dmat) @ u) / 2.0


def extensive_placements(term, length):
    """Every placement of a term on an open chain of the given length."""
    return [(term, i) for i in range(length - term.support + 1)]


def _variance_chunk(args):
    (length, d, m, placements, tlist, seed, bcount, samples, start, count) = args
    profile = bond_profile(length, d, m)
    b = boundary_index(d, m)
    dims = [_site_columns(profile, d, t, b)[0] for t in tlist]
    vals = np.empty((count, len(tlist)))
    gsums = [np.zeros((bcount, n, n), dtype=complex) for n in dims]
    for kk in range(count):
        k = start + kk
        mps = random_mps(length, d, m, seed.rng(k))
        envs = right_environments(mps)
        batch = k * bcount // samples
        for idx, t in enumerate(tlist):
            n = dims[idx]
            dmat = np.zeros((n, n), dtype=complex)
            for h, i in placements:
                dmat += _site_gradient_with_envs(mps, envs, h, i, t)
            u = mps.unitaries[t]
            g = (dmat - u @ dagger(dmat) @ u) / 2.0
            vals[kk, idx] = np.vdot(g, g).real / n
            gsums[idx][batch] += g
    return vals, gsums


def _mean_gradient_extras(gsum, bcount, samples):
    per_batch = samples // bcount
    mean = gsum.sum(axis=0) / samples
    extras = {"mean_gradient": mean, "mean_gradient_max_abs": float(np.abs(mean).max())}
    if bcount >= 2 and per_batch > 0:
        bm = gsum / per_batch
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


def mc_gradient_variance(
    length,
    site_dim,
    max_bond,
    placements,
    targets,
    samples,
    seed,
    predictions=None,
    workers=None,
):
    """Haar statistics of the Riemannian gradient at the given site unitaries.

    Draws `samples` independent random MPS (sample k always uses seed.rng(k),
    so the result is the same for any worker count) and records, per target
    site, the value Tr(g^dag g)/N.  Returns one VarianceReport per target,
    keyed by site, or a single report when `targets` is an integer.  The
    `predictions` argument may be a scalar or a site-keyed mapping; report
    extras carry the entrywise mean gradient and its batch standard errors.
    """
    samples = int(samples)
    if samples < 100:
        raise ValueError("need at least 100 samples")
    single = np.isscalar(targets)
    tlist = [int(targets)] if single else [int(t) for t in targets]
    length = int(length)
    site_dim = int(site_dim)
    max_bond = int(max_bond)
    for t in tlist:
        if t < 0 or t >= length:
            raise ValueError("target site %d out of range" % t)
    placements = [
        (h, _check_placement(length, site_dim, h, i)) for h, i in placements
    ]
    seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    bcount = pick_batches(samples)
    common = (length, site_dim, max_bond, placements, tlist, seed, bcount, samples)
    parts = run_chunked(
        _variance_chunk, common, samples, workers, align=samples // bcount
    )
    vals = np.concatenate([p[0] for p in parts], axis=0)
    gsums = [sum(p[1][idx] for p in parts) for idx in range(len(tlist))]
    reports = {}
    for idx, t in enumerate(tlist):
        if predictions is None:
            pred = float("nan")
        elif np.isscalar(predictions):
            pred = float(predictions)
        else:
            pred = float(predictions.get(t, float("nan")))
        params = {
            "L": length,
            "d": site_dim,
            "m": max_bond,
            "j": t,
            "samples": samples,
            "seed": seed.master,
            "stream": seed.stream,
        }
        extras = _mean_gradient_extras(gsums[idx], bcount, samples)
        reports[t] = report_from_values(vals[:, idx], pred, params=params, extras=extras)
    return reports[tlist[0]] if single else reports


def _norm_chunk(args):
    (length, d, m, seed, start, count) = args
    vals = np.empty(count)
    cols = [beta * d for beta in range(m)]
    for kk in range(count):
        rng = seed.rng(start + kk)
        left = np.zeros((m, m), dtype=complex)
        left[0, 0] = 1.0
        for _ in range(length):
            a = haar_unitary(m * d, rng)[:, cols].reshape(m, d, m)
            left = transfer_adjoint_apply(a, left)
        vals[kk] = m * left[0, 0].real
    return vals


def unnormalized_norm_stats(length, site_dim, max_bond, samples, seed, workers=None):
    """Monte Carlo squared-norm statistics of the constant-bond chain.

    Here every bond, the chain ends included, has dimension `max_bond`; the
    chain is closed with the first bond basis state on both ends and scaled
    by sqrt(max_bond), which gives the squared norm unit average.  The
    report's estimate is the variance of the squared norm (batch-averaged
    sample variances with a batch standard error); extras carry the mean
    and its standard error.
    """
    samples = int(samples)
    if samples < 100:
        raise ValueError("need at least 100 samples")
    length = int(length)
    site_dim = int(site_dim)
    max_bond = int(max_bond)
    seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    common = (length, site_dim, max_bond, seed)
    parts = run_chunked(_norm_chunk, common, samples, workers)
    vals = np.concatenate(parts)
    bcount = pick_batches(samples)
    prediction = predict_variance("norm", {"m": max_bond, "d": site_dim})
    params = {
        "L": length,
        "d": site_dim,
        "m": max_bond,
        "samples": samples,
        "seed": seed.master,
        "stream": seed.stream,
    }
    mean = float(vals.mean())
    if bcount >= 2:
        blocks = vals.reshape(bcount, samples // bcount)
        bvars = blocks.var(axis=1, ddof=1)
        estimate = float(bvars.mean())
        stderr = float(bvars.std(ddof=1) / np.sqrt(bcount))
        mean_stderr = float(blocks.mean(axis=1).std(ddof=1) / np.sqrt(bcount))
    else:
        estimate = float(vals.var(ddof=1))
        stderr = 0.0
        mean_stderr = 0.0
    report = report_from_values(vals, prediction, params=params)
    report.estimate = estimate
    report.stderr = stderr
    report.extras = {
        "mean": mean,
        "mean_stderr": mean_stderr,
        "mean_prediction": 1.0,
    }
    return report


def _eta(m, d):
    return (1.0 - 1.0 / m ** 2) / (d - 1.0 / (m ** 2 * d))


def predict_variance(kind, params):
    """Closed-form gradient-variance predictions.

    Kinds and their required parameters:

    - "eta": m, d.  Decay factor per site of separation between a local
      term and the differentiated unitary.
    - "global": dim, tr_h2.  A single Haar unitary on the full space.
    - "mps_single": m, d, i, j, tr_h2.  One single-site term at i,
      gradient at site j (zero for j < i).
    - "mps_single_extensive": m, d, tr_h2.  Sum of one single-site term
      per site, gradient at a bulk site.
    - "mps_nn": m, d, i, j, tr_h2, tr_tr1sq.  One nearest-neighbor term
      at (i, i+1), gradient at site j.
    - "mps_nn_extensive": m, d, tr_h2, tr_tr1sq.  Sum of one
      nearest-neighbor term per bond, gradient at a bulk site.
    - "norm": m, d.  Squared-norm variance of the constant-bond chain.

    All bulk formulas ignore boundary corrections of relative size
    eta^(distance to the chain ends).
    """
    p = dict(params)
    if kind == "eta":
        return _eta(p["m"], p["d"])
    if kind == "global":
        dim = p["dim"]
        return 2.0 * p["tr_h2"] / (dim * (dim + 1.0))
    if kind == "mps_single":
        m, d = p["m"], p["d"]
        delta = p["j"] - p["i"]
        if delta < 0:
            return 0.0
        return 2.0 * p["tr_h2"] * _eta(m, d) ** delta / (d * (m ** 2 * d + 1.0))
    if kind == "mps_single_extensive":
        m, d = p["m"], p["d"]
        return (
            2.0
            * p["tr_h2"]
            * (m ** 2 * d ** 2 - 1.0)
            / (d * (d - 1.0) * (m ** 2 * d + 1.0) ** 2)
        )
    if kind == "mps_nn":
        m, d = p["m"], p["d"]
        delta = p["j"] - p["i"]
        if delta < 0:
            return 0.0
        c0 = (m ** 2 * d - 1.0) / (
            d ** 2 * (m ** 2 * d + 1.0) * (m ** 2 * d ** 2 - 1.0)
        )
        if delta == 0:
            inner = p["tr_h2"] + (
                (d - 1.0) / d - (m ** 2 - 1.0) / (m ** 2 * d - 1.0)
            ) * p["tr_tr1sq"]
            return 2.0 * inner * c0
        inner = p["tr_h2"] + ((d - 1.0) / d) * p["tr_tr1sq"]
        return 2.0 * inner * c0 * _eta(m, d) ** (delta - 1)
    if kind == "mps_nn_extensive":
        m, d = p["m"], p["d"]
        c0 = (m ** 2 * d - 1.0) / (
            d ** 2 * (m ** 2 * d + 1.0) * (m ** 2 * d ** 2 - 1.0)
        )
        inner = p["tr_h2"] + ((d - 1.0) / d) * p["tr_tr1sq"]
        diag = 2.0 * c0 * (
            ((m ** 2 * d ** 2 - 1.0) / ((d - 1.0) * (m ** 2 * d + 1.0)) + 1.0) * inner
            - (m ** 2 - 1.0) / (m ** 2 * d - 1.0) * p["tr_tr1sq"]
        )
        offdiag = (
            4.0
            * (m ** 2 * d ** 2 - 1.0)
            / (d ** 3 * (d - 1.0) * (m ** 2 * d + 1.0) ** 2)
            * p["tr_tr1sq"]
        )
        return diag + offdiag
    if kind == "norm":
        m, d = p["m"], p["d"]
        return (m - 1.0) / (m ** 2 * d + 1.0)
    raise ValueError("unknown prediction kind %r" % (kind,))
