"""Two-copy channel checks: projectors, closed forms, spectra, MC oracle."""

import numpy as np
import pytest

from tnsp.tensor_core import RngSeed, haar_unitaries, kron, op_permute, swap_operator
from tnsp.moment_channels import (
    depolarize,
    doubled_depolarize,
    doubled_mps_channel,
    doubled_mps_matrix,
    doubled_mps_spectral,
    projector_pair,
    subleading_eigenvalue,
)


def random_op(n, seed, psd=False):
    rng = RngSeed(seed).rng()
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    if psd:
        return a @ a.conj().T
    return a


@pytest.mark.parametrize("n", [2, 3, 5])
def test_projector_pair_identities(n):
    pp = projector_pair(n)
    s = swap_operator(n)
    assert np.allclose(pp.p_plus @ pp.p_plus, pp.p_plus, atol=1e-13)
    assert np.allclose(pp.p_minus @ pp.p_minus, pp.p_minus, atol=1e-13)
    assert np.allclose(pp.p_plus + pp.p_minus, np.eye(n * n), atol=1e-14)
    assert np.allclose(pp.p_plus - pp.p_minus, s, atol=1e-14)
    assert abs(np.trace(pp.p_plus) - n * (n + 1) / 2) < 1e-10
    assert abs(np.trace(pp.p_minus) - n * (n - 1) / 2) < 1e-10
    assert pp.nu_plus == n * (n + 1) // 2
    assert pp.nu_minus == n * (n - 1) // 2


def test_depolarize_fixed_point_and_trace():
    r = random_op(4, 31)
    out = depolarize(r)
    assert np.allclose(out, np.trace(r) / 4 * np.eye(4), atol=1e-14)
    assert abs(np.trace(out) - np.trace(r)) < 1e-12


def test_doubled_depolarize_projector_fixed_points():
    n = 3
    pp = projector_pair(n)
    for p in (pp.p_plus, pp.p_minus):
        out = doubled_depolarize(p, n)
        assert np.allclose(out, p, atol=1e-12)
    s = swap_operator(n)
    assert np.allclose(doubled_depolarize(s, n), s, atol=1e-12)


def test_doubled_depolarize_matches_sampling():
    n = 2
    samples = 20000
    r = random_op(n * n, 55)
    us = haar_unitaries(n, samples, RngSeed(77))
    uu = np.einsum("kab,kcd->kacbd", us, us).reshape(samples, n * n, n * n)
    vals = np.einsum("kab,bc,kdc->kad", uu, r, uu.conj())
    batches = vals.reshape(20, samples // 20, n * n, n * n).mean(axis=1)
    mean = batches.mean(axis=0)
    stderr = batches.std(axis=0, ddof=1) / np.sqrt(20)
    target = doubled_depolarize(r, n)
    dev = np.abs(mean - target)
    assert np.all(dev <= 4.0 * np.abs(stderr) + 1e-12)


def test_doubled_depolarize_preserves_psd():
    n = 3
    r = random_op(n * n, 91, psd=True)
    out = doubled_depolarize(r, n)
    evals = np.linalg.eigvalsh((out + out.conj().T) / 2)
    assert evals.min() >= -1e-10


def test_doubled_mps_channel_reduces_to_depolarize_at_d1():
    n = 4
    r = random_op(n * n, 12)
    assert np.allclose(doubled_mps_channel(r, n, 1), doubled_depolarize(r, n), atol=1e-12)


def test_doubled_mps_channel_trace_preserving_and_cp():
    n, d = 3, 2
    r = random_op(n * n, 13, psd=True)
    out = doubled_mps_channel(r, n, d)
    assert abs(np.trace(out) - np.trace(r)) < 1e-10
    evals = np.linalg.eigvalsh((out + out.conj().T) / 2)
    assert evals.min() >= -1e-10


def test_doubled_mps_channel_fixed_point():
    n, d = 2, 2
    spectral = doubled_mps_spectral(n, d)
    r1 = spectral.right_vectors[0]
    out = doubled_mps_channel(r1, n, d)
    assert np.max(np.abs(out - r1)) < 1e-12


def test_doubled_mps_channel_matches_sampling():
    # oracle: sample the isometric site tensor and apply its Kraus pairs
    n, d = 2, 2
    samples = 20000
    r = random_op(n * n, 14)
    r4 = r.reshape(n, n, n, n)
    us = haar_unitaries(n * d, samples, RngSeed(140))
    cols = [b * d for b in range(n)]
    vals = np.empty((samples, n * n, n * n), dtype=complex)
    for k, u in enumerate(us):
        a = u[:, cols].reshape(n, d, n)
        out = np.einsum(
            "asb,ctd,bdfh,esf,gth->aceg", a, a, r4, a.conj(), a.conj()
        )
        vals[k] = out.reshape(n * n, n * n)
    batches = vals.reshape(20, samples // 20, n * n, n * n).mean(axis=1)
    mean = batches.mean(axis=0)
    stderr = batches.std(axis=0, ddof=1) / np.sqrt(20)
    target = doubled_mps_channel(r, n, d)
    dev = np.abs(mean - target)
    assert np.all(dev <= 4.0 * np.abs(stderr) + 1e-12)


def test_doubled_mps_matrix_entries():
    m = doubled_mps_matrix(2, 2)
    assert np.allclose(m, np.array([[0.9, 0.5], [0.1, 0.5]]), atol=1e-12)


def test_doubled_mps_matrix_consistent_with_channel():
    # project the dense channel onto the projector basis and compare
    for n, d in ((2, 2), (3, 2), (2, 3)):
        pp = projector_pair(n)
        cols = [pp.p_plus / pp.nu_plus, pp.p_minus / pp.nu_minus]
        m = np.zeros((2, 2))
        for j, col in enumerate(cols):
            out = doubled_mps_channel(col, n, d)
            m[0, j] = np.real(np.trace(pp.p_plus @ out))
            m[1, j] = np.real(np.trace(pp.p_minus @ out))
        assert np.allclose(m, doubled_mps_matrix(n, d), atol=1e-12)


def test_subleading_eigenvalue_values_and_monotonicity():
    assert abs(subleading_eigenvalue(2, 2) - 0.4) < 1e-14
    assert abs(subleading_eigenvalue(4, 2) - (1 - 1 / 16) / (2 - 1 / 32)) < 1e-14
    grid = range(2, 9)
    for n in grid:
        etas = [subleading_eigenvalue(n, d) for d in grid]
        assert all(a > b for a, b in zip(etas, etas[1:]))
    for d in grid:
        etas = [subleading_eigenvalue(n, d) for n in grid]
        assert all(b > a for a, b in zip(etas, etas[1:]))
        assert etas[-1] < 1.0 / d


def test_doubled_mps_matrix_eigenvalues():
    for n, d in ((2, 2), (3, 4), (5, 2)):
        evals = np.linalg.eigvals(doubled_mps_matrix(n, d))
        evals = sorted(np.real(evals), reverse=True)
        assert abs(evals[0] - 1.0) < 1e-12
        assert abs(evals[1] - subleading_eigenvalue(n, d)) < 1e-12


def test_doubled_mps_spectral_reconstruction():
    for n, d in ((2, 2), (3, 2), (4, 3)):
        spectral = doubled_mps_spectral(n, d)
        assert spectral.eigenvalues[0] == 1.0
        # biorthonormality under the trace pairing
        for i, li in enumerate(spectral.left_vectors):
            for j, rj in enumerate(spectral.right_vectors):
                val = np.trace(li.conj().T @ rj)
                assert abs(val - (1.0 if i == j else 0.0)) < 1e-10
        # the channel acts as sum of eigenvalue * |r><l| on the projector span
        pp = projector_pair(n)
        for probe in (pp.p_plus, pp.p_minus, pp.p_plus - 0.3 * pp.p_minus):
            out = doubled_mps_channel(probe, n, d)
            rebuilt = sum(
                lam * r * np.trace(l.conj().T @ probe)
                for lam, l, r in zip(
                    spectral.eigenvalues, spectral.left_vectors, spectral.right_vectors
                )
            )
            assert np.max(np.abs(out - rebuilt)) < 1e-12


def test_doubled_mps_spectral_rejects_trivial_bond():
    with pytest.raises(ValueError):
        doubled_mps_spectral(1, 2)


def test_haar_moment_check_passes_and_is_deterministic():
    from tnsp.moment_channels import haar_moment_check

    out = haar_moment_check(2, samples=20000, seed=31)
    assert out["first_ok"] and out["second_ok"]
    assert out["first_max_sigma"] < 8.0
    # 4x4 operator, real+imag parts, minus the 4 identically real diagonals
    assert out["first_comparisons"] == 28
    again = haar_moment_check(2, samples=20000, seed=31)
    assert again == out
    with pytest.raises(ValueError):
        haar_moment_check(2, samples=101, seed=0, batches=20)
