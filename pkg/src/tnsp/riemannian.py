"""Tangent-space tools for unitary tensors and Riemannian optimizers.

Every unitary U inside one of the network ansatzes sees the energy
through the same sandwich E(U) = Tr[x (U x 1_M)^dag y (U x 1_M)], where
x and y collect the surrounding tensors and the Hamiltonian.  This
module provides the tangent-space projection and QR retraction for such
unitaries, closed forms and MC estimates for the Haar variance of the
sandwich gradient (including the single global unitary, the textbook
barren-plateau setting), and gradient-descent / L-BFGS drivers that
optimize every unitary of an isometric MPS or MERA/TTNS at once.

Conventions match the network engines: the Euclidean derivative d of a
real energy satisfies dE(W) = Re Tr(d^dag W), the Riemannian gradient
is g = (d - U d^dag U)/2, and gradient variances are Tr(g^dag g)/N with
N the unitary dimension.
"""

import numpy as np
from dataclasses import dataclass, field

from .mera import MeraNetwork
from .mera import expectation_sum as mera_energy
from .mera import riemannian_gradient as mera_gradient
from .mps import IsometricMps
from .mps import expectation_sum as mps_energy
from .mps import riemannian_gradient as mps_gradient
from .stats import pick_batches, report_from_values, run_chunked
from .tensor_core import RngSeed, dagger, haar_unitary, kron, partial_trace

TANGENT_TOL = 1e-10

METHODS = ("gd", "lbfgs")

_CONFIG_DEFAULTS = {
    "max_iters": 200,
    "gtol": 1e-8,
    "step0": 1.0,
    "memory": 10,
    "armijo": 1e-4,
    "shrink": 0.5,
    "max_backtracks": 40,
}


@dataclass
class TangentVector:
    """Direction at a point of the unitary manifold.

    Stores the base unitary U and a direction W with U^dag W
    skew-Hermitian; construction rejects directions that leave the
    tangent space by more than TANGENT_TOL entrywise.
    """

    base: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.base, dtype=complex)
        w = np.asarray(self.direction, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape != w.shape:
            raise ValueError(
                "base and direction must be equal square matrices, got %r and %r"
                % (u.shape, w.shape)
            )
        k = dagger(u) @ w
        if np.abs(k + dagger(k)).max() > TANGENT_TOL:
            raise ValueError("direction is not tangent at the base point")
        self.base = u
        self.direction = w


def tangent_project(u, d):
    """Project a Euclidean derivative onto the tangent space at u.

    Returns the TangentVector with direction g = (d - u d^dag u)/2.  The
    map is idempotent and preserves the real inner product Re Tr(.^dag w)
    against every tangent direction w, so Riemannian gradients are the
    projections of Euclidean ones.
    """
    u = np.asarray(u, dtype=complex)
    d = np.asarray(d, dtype=complex)
    if u.shape != d.shape:
        raise ValueError("shape mismatch: %r vs %r" % (u.shape, d.shape))
    return TangentVector(u, (d - u @ dagger(d) @ u) / 2.0)


def retract(u, w, step):
    """QR retraction of u + step*w back onto the unitary manifold.

    w may be a TangentVector or a plain matrix.  The R-factor's diagonal
    phases are absorbed into Q, which makes the map continuous in the
    input, exactly unitary, equal to u at step 0, and first-order
    accurate along tangent directions.
    """
    u = np.asarray(u, dtype=complex)
    d = w.direction if isinstance(w, TangentVector) else np.asarray(w, dtype=complex)
    q, r = np.linalg.qr(u + float(step) * d)
    diag = np.diagonal(r)
    phase = np.ones_like(diag)
    nz = np.abs(diag) > 0
    phase[nz] = diag[nz] / np.abs(diag[nz])
    return q * phase[None, :]


# sandwich energies: one unitary against fixed environment operators

def _check_sandwich(x, y, n):
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    n = int(n)
    if x.ndim != 2 or x.shape[0] != x.shape[1] or x.shape != y.shape:
        raise ValueError("x and y must be square matrices of equal shape")
    if n < 1 or x.shape[0] % n:
        raise ValueError(
            "operator size %d does not factor over unitary dimension %d"
            % (x.shape[0], n)
        )
    return x, y, n, x.shape[0] // n


def sandwich_energy(x, y, u):
    """E(U) = Tr[x (U x 1_M)^dag y (U x 1_M)], real for Hermitian x, y."""
    u = np.asarray(u, dtype=complex)
    x, y, n, m = _check_sandwich(x, y, u.shape[0])
    ut = kron(u, np.eye(m))
    return float(np.trace(x @ dagger(ut) @ y @ ut).real)


def sandwich_gradient(x, y, u):
    """Riemannian gradient of the sandwich energy at u.

    The Euclidean derivative is d = 2 Tr_M(y (U x 1_M) x), traced over
    the auxiliary factor; the returned TangentVector is its projection.
    """
    u = np.asarray(u, dtype=complex)
    x, y, n, m = _check_sandwich(x, y, u.shape[0])
    ut = kron(u, np.eye(m))
    d = 2.0 * partial_trace(y @ ut @ x, [n, m], {2})
    return tangent_project(u, d)


def sandwich_variance_product(x, y):
    """Closed-form Haar variance of the sandwich gradient for M = 1.

    (1/N) Avg Tr(g^dag g) = 2/(N^2-1) Tr(x0^2) Tr(y0^2) with x0, y0 the
    traceless parts of x and y; identity components never contribute.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    n = x.shape[0]
    x0 = x - np.trace(x) / n * np.eye(n)
    y0 = y - np.trace(y) / n * np.eye(n)
    return 2.0 / (n * n - 1.0) * np.trace(x0 @ x0).real * np.trace(y0 @ y0).real


def sandwich_variance(x, y, n):
    """Closed-form Haar variance of the sandwich gradient over U(n).

    Works for any auxiliary dimension M by contracting the auxiliary
    legs of x and y into the two-copy operator
    z[(i1,i2),(j1,j2)] = sum_{a,b} x[(i1,a),(j1,b)] y[(i2,b),(j2,a)]
    and evaluating
    2/(n^2-1) (Tr z^2 - [Tr (Tr_1 z)^2 + Tr (Tr_2 z)^2]/n + (Tr z)^2/n^2).
    Reduces to sandwich_variance_product when M = 1.
    """
    x, y, n, m = _check_sandwich(x, y, n)
    xr = x.reshape(n, m, n, m)
    yr = y.reshape(n, m, n, m)
    z = np.einsum("iajb,kbla->ikjl", xr, yr, optimize=True)
    zmat = z.reshape(n * n, n * n)
    tr_z = np.trace(zmat)
    tr_z2 = np.trace(zmat @ zmat)
    t1 = np.einsum("aiaj->ij", z)
    t2 = np.einsum("iaja->ij", z)
    val = (
        tr_z2
        - (np.trace(t1 @ t1) + np.trace(t2 @ t2)) / n
        + tr_z * tr_z / (n * n)
    )
    return 2.0 / (n * n - 1.0) * float(val.real)


def _mean_gradient_extras(gsum, bcount, samples):
    mean = gsum.sum(axis=0) / samples
    extras = {"mean_gradient": mean,
              "mean_gradient_max_abs": float(np.abs(mean).max())}
    per_batch = samples // bcount
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


def _sandwich_chunk(args):
    (x, y, n, m, seed, bcount, samples, start, count) = args
    eye_m = np.eye(m)
    vals = np.empty(count)
    gsum = np.zeros((bcount, n, n), dtype=complex)
    for kk in range(count):
        sample = start + kk
        u = haar_unitary(n, seed.rng(sample))
        ut = kron(u, eye_m)
        d = 2.0 * partial_trace(y @ ut @ x, [n, m], {2})
        g = (d - u @ dagger(d) @ u) / 2.0
        vals[kk] = np.vdot(g, g).real / n
        gsum[sample * bcount // samples] += g
    return vals, gsum


def mc_sandwich_variance(x, y, n, samples=1000, seed=0, prediction=None,
                         workers=None):
    """MC Haar variance of the sandwich gradient over U(n).

    Draws u fresh each sample (sample j always uses seed.rng(j)) and
    reports (1/n) Tr(g^dag g) with batch-means errors plus mean-gradient
    diagnostics; prediction defaults to the closed form.
    """
    x, y, n, m = _check_sandwich(x, y, n)
    samples = int(samples)
    if samples < 100:
        raise ValueError("need at least 100 samples")
    seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    bcount = pick_batches(samples)
    if prediction is None:
        prediction = sandwich_variance(x, y, n)
    common = (x, y, n, m, seed, bcount, samples)
    parts = run_chunked(_sandwich_chunk, common, samples, workers,
                       align=samples // bcount)
    vals = np.concatenate([p[0] for p in parts])
    gsum = sum(p[1] for p in parts)
    params = {"N": n, "M": m, "samples": samples,
              "seed": seed.master, "stream": seed.stream}
    extras = _mean_gradient_extras(gsum, bcount, samples)
    return report_from_values(vals, float(prediction), params=params,
                             extras=extras)


def global_unitary_variance(length, site_dim, hamiltonian, samples=1000,
                            seed=0, workers=None):
    """Gradient variance for the single-global-unitary state U|0...0>.

    The energy is <0|U^dag H U|0> with one Haar unitary on the whole
    chain; the exact average is 2 Tr(H^2)/(N(N+1)) with N = d^L, an
    exponential decay in L.  H must be a traceless Hermitian N x N
    matrix and N may not exceed 2^10.
    """
    length = int(length)
    site_dim = int(site_dim)
    n = site_dim ** length
    if n > 2 ** 10:
        raise ValueError("Hilbert dimension %d exceeds the 2^10 limit" % n)
    h = np.asarray(hamiltonian, dtype=complex)
    if h.shape != (n, n):
        raise ValueError("hamiltonian shape %r does not match %d sites" % (h.shape, length))
    scale = max(np.abs(h).max(), 1.0)
    if np.abs(h - dagger(h)).max() > 1e-12 * scale:
        raise ValueError("hamiltonian is not Hermitian")
    if abs(np.trace(h)) > 1e-10 * scale:
        raise ValueError("hamiltonian must be traceless")
    x = np.zeros((n, n), dtype=complex)
    x[0, 0] = 1.0
    prediction = 2.0 * np.trace(h @ h).real / (n * (n + 1.0))
    rep = mc_sandwich_variance(x, h, n, samples=samples, seed=seed,
                               prediction=prediction, workers=workers)
    rep.params.update({"L": length, "d": site_dim})
    return rep


# optimizers: gradient descent and L-BFGS over all tensors of an ansatz

@dataclass
class OptimizerTrace:
    """Per-iteration record of one optimization run.

    iterations[0] describes the starting point (step 0.0); each later
    row is an accepted line-search step.  Energies are non-increasing
    across accepted rows by the Armijo condition.
    """

    iterations: list = field(default_factory=list)
    converged: bool = False
    message: str = ""

    @property
    def final_energy(self):
        return self.iterations[-1]["energy"] if self.iterations else float("nan")

    @property
    def energies(self):
        return [row["energy"] for row in self.iterations]


class _MpsProblem:
    def __init__(self, ansatz, placements):
        self.placements = list(placements)
        self.sites = list(range(ansatz.length))

    def unitaries(self, ansatz):
        return [ansatz.unitaries[t] for t in self.sites]

    def rebuild(self, ansatz, us):
        return IsometricMps(ansatz.site_dim, ansatz.max_bond, us)

    def energy(self, ansatz):
        return float(mps_energy(ansatz, self.placements))

    def gradients(self, ansatz):
        return [mps_gradient(ansatz, self.placements, t) for t in self.sites]


class _MeraProblem:
    def __init__(self, ansatz, placements):
        self.placements = list(placements)
        self.keys = []
        for tau in range(1, ansatz.layers + 1):
            for k in range(ansatz.layer_sites(tau)):
                self.keys.append(("isometry", tau, k))
                if ansatz.flavor == "mera":
                    self.keys.append(("disentangler", tau, k))

    def unitaries(self, ansatz):
        out = []
        for which, tau, k in self.keys:
            pool = (ansatz.isometry_unitaries if which == "isometry"
                    else ansatz.disentanglers)
            out.append(pool[(tau, k)])
        return out

    def rebuild(self, ansatz, us):
        isos = {}
        diss = {} if ansatz.flavor == "mera" else None
        for (which, tau, k), u in zip(self.keys, us):
            if which == "isometry":
                isos[(tau, k)] = u
            else:
                diss[(tau, k)] = u
        return MeraNetwork(ansatz.family, ansatz.flavor, ansatz.chi,
                           ansatz.layers, ansatz.lattice_exponent, diss, isos)

    def energy(self, ansatz):
        return float(mera_energy(ansatz, self.placements))

    def gradients(self, ansatz):
        return [mera_gradient(ansatz, self.placements, tau, k, which=which)
                for which, tau, k in self.keys]


def _inner(a, b):
    return float(sum(np.vdot(p, q).real for p, q in zip(a, b)))


def _project_all(us, vecs):
    return [tangent_project(u, v).direction for u, v in zip(us, vecs)]


def _lbfgs_direction(grad, memory):
    q = [g.copy() for g in grad]
    alphas = []
    for s, y, rho in reversed(memory):
        a = rho * _inner(s, q)
        alphas.append(a)
        q = [qj - a * yj for qj, yj in zip(q, y)]
    if memory:
        s, y, _ = memory[-1]
        gamma = _inner(s, y) / _inner(y, y)
        q = [gamma * qj for qj in q]
    for (s, y, rho), a in zip(memory, reversed(alphas)):
        b = rho * _inner(y, q)
        q = [qj + (a - b) * sj for qj, sj in zip(q, s)]
    return [-qj for qj in q]


def minimize(ansatz, hamiltonian, method="lbfgs", config=None):
    """Minimize the summed expectation value over all ansatz unitaries.

    ansatz is an IsometricMps or MeraNetwork; hamiltonian is a list of
    (LocalTerm, site) placements as used by the engines' expectation
    sums.  method "gd" takes steepest-descent steps with backtracking;
    "lbfgs" runs the two-loop recursion with history vectors carried to
    each new point by tangent projection.  Both retract with the QR map
    and accept steps under the Armijo condition, so recorded energies
    never increase.  A failed line search ends the run with a message
    rather than raising.  Returns an OptimizerTrace.
    """
    if method not in METHODS:
        raise ValueError("unknown method %r" % (method,))
    cfg = dict(_CONFIG_DEFAULTS)
    for key, value in (config or {}).items():
        if key not in _CONFIG_DEFAULTS:
            raise ValueError("unknown config key %r" % (key,))
        cfg[key] = value
    if isinstance(ansatz, IsometricMps):
        problem = _MpsProblem(ansatz, hamiltonian)
    elif isinstance(ansatz, MeraNetwork):
        problem = _MeraProblem(ansatz, hamiltonian)
    else:
        raise TypeError("ansatz must be an IsometricMps or MeraNetwork")

    energy = problem.energy(ansatz)
    grad = problem.gradients(ansatz)
    gnorm = np.sqrt(_inner(grad, grad))
    trace = OptimizerTrace()
    trace.iterations.append(
        {"energy": energy, "gradient_norm": gnorm, "step": 0.0}
    )
    memory = []
    last_step = None
    for _ in range(int(cfg["max_iters"])):
        if gnorm <= cfg["gtol"]:
            trace.converged = True
            trace.message = "gradient norm below tolerance"
            return trace
        if method == "lbfgs":
            direction = _lbfgs_direction(grad, memory)
            slope = _inner(grad, direction)
            if slope >= 0.0:
                memory = []
                direction = [-g for g in grad]
                slope = -gnorm * gnorm
            step = cfg["step0"] if memory else cfg["step0"] / max(1.0, gnorm)
        else:
            direction = [-g for g in grad]
            slope = -gnorm * gnorm
            if last_step is None:
                step = cfg["step0"] / max(1.0, gnorm)
            else:
                step = 2.0 * last_step
        us = problem.unitaries(ansatz)
        accepted = None
        for _bt in range(int(cfg["max_backtracks"]) + 1):
            new_us = [retract(u, step * d, 1.0)
                      for u, d in zip(us, direction)]
            candidate = problem.rebuild(ansatz, new_us)
            new_energy = problem.energy(candidate)
            if new_energy <= energy + cfg["armijo"] * step * slope:
                accepted = (candidate, new_us, new_energy)
                break
            step *= cfg["shrink"]
        if accepted is None:
            trace.message = "line search failed after %d backtracks" % (
                cfg["max_backtracks"],
            )
            return trace
        candidate, new_us, new_energy = accepted
        new_grad = problem.gradients(candidate)
        if method == "lbfgs":
            s_new = _project_all(new_us, [step * d for d in direction])
            y_new = [gn - gp for gn, gp in zip(new_grad,
                                               _project_all(new_us, grad))]
            carried = []
            for s, y, _rho in memory:
                s = _project_all(new_us, s)
                y = _project_all(new_us, y)
                sy = _inner(s, y)
                if sy > 1e-12 * np.sqrt(_inner(s, s) * _inner(y, y)):
                    carried.append((s, y, 1.0 / sy))
            memory = carried
            sy = _inner(s_new, y_new)
            if sy > 1e-12 * np.sqrt(_inner(s_new, s_new) * _inner(y_new, y_new)):
                memory.append((s_new, y_new, 1.0 / sy))
            if len(memory) > int(cfg["memory"]):
                memory = memory[-int(cfg["memory"]):]
        ansatz = candidate
        energy = new_energy
        grad = new_grad
        gnorm = np.sqrt(_inner(grad, grad))
        last_step = step
        trace.iterations.append(
            {"energy": energy, "gradient_norm": gnorm, "step": step}
        )
    trace.message = "maximum iterations reached"
    return trace
