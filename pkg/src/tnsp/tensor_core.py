"""Dense complex linear algebra, leg bookkeeping, and Haar-random sampling.

Everything operates on plain numpy arrays.  Matrices are dense, row-major
and complex valued; tensor-product structure is tracked explicitly through
lists of leg dimensions rather than guessed from shapes.  Random sampling
is driven by a two-part seed (master, stream) from which every Monte Carlo
sample derives its own independent generator, so results never depend on
batching or worker count.
"""

import numpy as np
from dataclasses import dataclass

UNITARY_TOL = 1e-12


@dataclass(frozen=True)
class RngSeed:
    """Reproducible seed: a master integer plus a stream index.

    ``rng(k)`` returns the generator for sample k.  The derivation uses
    numpy's SeedSequence with (stream, k) as the spawn key, so the stream
    for a given (master, stream, k) is fixed regardless of how samples are
    chunked across workers.
    """

    master: int
    stream: int = 0

    def rng(self, sample=None):
        if sample is None:
            key = (self.stream,)
        else:
            key = (self.stream, int(sample))
        ss = np.random.SeedSequence(entropy=self.master, spawn_key=key)
        return np.random.default_rng(ss)

    def child(self, stream):
        return RngSeed(self.master, int(stream))


def as_rng(seed, sample=None):
    """Accept an RngSeed, an int master seed, or a ready Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, RngSeed):
        return seed.rng(sample)
    if isinstance(seed, (int, np.integer)):
        return RngSeed(int(seed)).rng(sample)
    raise TypeError("seed must be RngSeed, int, or numpy Generator")


def dagger(a):
    return np.conj(np.asarray(a)).T


def is_unitary(u, tol=UNITARY_TOL):
    u = np.asarray(u)
    n = u.shape[0]
    return u.shape == (n, n) and np.max(np.abs(u @ dagger(u) - np.eye(n))) <= tol


class UnitaryTensor:
    """A unitary matrix together with the dimensions of its tensor legs.

    legs is a tuple of ints whose product equals the matrix dimension; it
    records how rows factor into subsystem legs (columns factor the same
    way).  Construction validates unitarity to 1e-12.
    """

    def __init__(self, matrix, legs=None):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("unitary tensor needs a square matrix")
        n = matrix.shape[0]
        if legs is None:
            legs = (n,)
        legs = tuple(int(l) for l in legs)
        if any(l < 1 for l in legs):
            raise ValueError("leg dimensions must be positive")
        if int(np.prod(legs)) != n:
            raise ValueError("leg dimensions do not factor the matrix dimension")
        if not is_unitary(matrix):
            raise ValueError("matrix is not unitary to within 1e-12")
        self.matrix = matrix
        self.legs = legs

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __repr__(self):
        return "UnitaryTensor(dim=%d, legs=%r)" % (self.dim, self.legs)


def kron(a, b, *rest):
    """Tensor product of matrices; the first argument's legs are leftmost."""
    out = np.kron(np.asarray(a), np.asarray(b))
    for c in rest:
        out = np.kron(out, np.asarray(c))
    return out


def partial_trace(a, legs, traced):
    """Trace out a subset of legs of a square operator.

    legs lists the dimension of every leg (row and column structure match);
    traced is a set of 1-based leg indices.  Tracing every leg returns a
    1x1 matrix holding the full trace.
    """
    a = np.asarray(a)
    legs = [int(l) for l in legs]
    dim = int(np.prod(legs))
    if a.shape != (dim, dim):
        raise ValueError("operator shape %r does not match legs %r" % (a.shape, legs))
    n = len(legs)
    traced = set(int(t) for t in traced)
    if not traced.issubset(set(range(1, n + 1))):
        raise ValueError("traced legs must be 1-based indices into legs")
    arr = a.reshape(legs + legs)
    row = list(range(n))
    col = [i if (i + 1) in traced else n + i for i in range(n)]
    keep = [i for i in range(n) if (i + 1) not in traced]
    out = np.einsum(arr, row + col, keep + [n + i for i in keep])
    kept_dim = int(np.prod([legs[i] for i in keep])) if keep else 1
    return out.reshape(kept_dim, kept_dim)


def swap_operator(n):
    """The operator exchanging the two factors of C^n (x) C^n."""
    if n < 1:
        raise ValueError("dimension must be positive")
    return np.eye(n * n).reshape(n, n, n, n).swapaxes(0, 1).reshape(n * n, n * n)


def permutation_operator(n, perm):
    """Unitary permuting k n-dimensional factors: slot i receives old slot perm[i]."""
    k = len(perm)
    if sorted(perm) != list(range(k)):
        raise ValueError("perm must be a permutation of 0..k-1")
    eye = np.eye(n ** k)
    arr = eye.reshape((n,) * k + (n ** k,))
    arr = arr.transpose(tuple(perm) + (k,))
    return arr.reshape(n ** k, n ** k)


def op_permute(a, dims, perm):
    """Conjugate an operator on a tensor product so slot i becomes old slot perm[i]."""
    dims = list(dims)
    k = len(dims)
    a = np.asarray(a).reshape(dims + dims)
    axes = list(perm) + [k + p for p in perm]
    out_dims = int(np.prod([dims[p] for p in perm]))
    return a.transpose(axes).reshape(out_dims, out_dims)


def haar_unitary(n, seed):
    """Draw a Haar-distributed unitary by QR of a complex Ginibre matrix.

    The R diagonal phases are pushed into Q so the distribution is exactly
    the Haar measure rather than QR-convention dependent.  n = 1 returns a
    uniform phase.
    """
    n = int(n)
    if n < 1:
        raise ValueError("invalid dimension for haar_unitary: %d" % n)
    rng = as_rng(seed)
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r).copy()
    ph /= np.abs(ph)
    return q * ph


def haar_stack(n, count, rng):
    """count Haar unitaries of dimension n drawn from one generator."""
    z = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r, axis1=-2, axis2=-1).copy()
    ph /= np.abs(ph)
    return q * ph[:, None, :]


def haar_unitaries(n, count, seed, start=0):
    """count Haar unitaries with one independent sample stream each.

    Sample k (global index start + k) is drawn from seed.rng(start + k), so
    a run split into chunks reproduces the unchunked sequence exactly.
    """
    seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    z = np.empty((count, n, n), dtype=complex)
    for k in range(count):
        rng = seed.rng(start + k)
        z[k] = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r, axis1=-2, axis2=-1).copy()
    ph /= np.abs(ph)
    return q * ph[:, None, :]
