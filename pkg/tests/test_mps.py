"""Isometric MPS: dense oracle, gradients, MC variances, predictions."""

import numpy as np
import pytest
from scipy.linalg import expm

from tnsp.hamiltonians import embed_term, pauli_term, random_traceless
from tnsp.mps import (
    IsometricMps,
    bond_profile,
    boundary_index,
    expectation_local,
    expectation_sum,
    extensive_placements,
    mc_gradient_variance,
    norm_squared,
    predict_variance,
    random_mps,
    riemannian_gradient,
    to_state_vector,
    transfer_adjoint_apply,
    unnormalized_norm_stats,
)
from tnsp.tensor_core import RngSeed, dagger, haar_unitary


def dense_expectation(mps, term, start):
    vec = to_state_vector(mps)
    h = embed_term(term, mps.length, start)
    return float(np.real(vec.conj() @ (h @ vec)))


def test_bond_profile_examples():
    assert bond_profile(8, 2, 2) == (1, 2, 2, 2, 2, 2, 2, 2, 1)
    assert bond_profile(10, 2, 4)[:4] == (1, 2, 4, 4)
    assert bond_profile(10, 2, 4)[8:] == (4, 2, 1)
    assert bond_profile(6, 2, 3) == (1, 2, 3, 3, 3, 2, 1)
    assert boundary_index(2, 1) == 0
    assert boundary_index(2, 2) == 1
    assert boundary_index(2, 3) == 2
    assert boundary_index(2, 4) == 2
    assert boundary_index(3, 9) == 2


def test_short_chain_rejected():
    with pytest.raises(ValueError):
        random_mps(4, 2, 4, 0)
    with pytest.raises(ValueError):
        random_mps(1, 2, 1, 0)


@pytest.mark.parametrize("length,max_bond", [(6, 2), (9, 4), (6, 3)])
def test_random_mps_isometries_and_norm(length, max_bond):
    mps = random_mps(length, 2, max_bond, RngSeed(11))
    for t, a in enumerate(mps.tensors):
        mat = a.reshape(-1, a.shape[2])
        assert np.allclose(dagger(mat) @ mat, np.eye(a.shape[2]), atol=1e-12)
        assert np.allclose(
            transfer_adjoint_apply(a, np.eye(a.shape[0])),
            np.eye(a.shape[2]),
            atol=1e-12,
        )
    assert abs(norm_squared(mps) - 1.0) < 1e-12
    assert abs(np.linalg.norm(to_state_vector(mps)) - 1.0) < 1e-12


def test_product_chain_is_reference_vector():
    mps = IsometricMps(2, 1, [np.eye(2)] * 5)
    vec = to_state_vector(mps)
    expect = np.zeros(32)
    expect[0] = 1.0
    assert np.allclose(vec, expect, atol=1e-15)


@pytest.mark.parametrize("length,max_bond", [(4, 2), (6, 2), (6, 3), (8, 4), (10, 2)])
def test_expectation_matches_dense(length, max_bond):
    mps = random_mps(length, 2, max_bond, RngSeed(23 + length + max_bond))
    for support in (1, 2, 3):
        term = random_traceless(support, 2, 100 * support + length)
        for start in range(length - support + 1):
            val = expectation_local(mps, term, start)
            ref = dense_expectation(mps, term, start)
            assert abs(val - ref) < 1e-10


def test_left_unitaries_do_not_affect_expectation():
    mps = random_mps(8, 2, 4, RngSeed(5))
    term = random_traceless(2, 2, 7)
    base = expectation_local(mps, term, 4)
    rng = RngSeed(6).rng()
    for j in range(4):
        other = mps.replace_unitary(j, haar_unitary(mps.profile[j] * 2, rng))
        assert abs(expectation_local(other, term, 4) - base) < 1e-12


def test_placement_validation():
    mps = random_mps(6, 2, 2, RngSeed(1))
    term = random_traceless(2, 2, 2)
    with pytest.raises(ValueError):
        expectation_local(mps, term, 5)
    with pytest.raises(ValueError):
        expectation_local(mps, term, -1)
    with pytest.raises(TypeError):
        expectation_local(mps, np.eye(4), 0)
    wrong = random_traceless(1, 3, 3)
    with pytest.raises(ValueError):
        expectation_local(mps, wrong, 0)


def test_gradient_tangency_and_linearity():
    mps = random_mps(8, 2, 2, RngSeed(9))
    p1 = [(random_traceless(1, 2, 4), 2)]
    p2 = [(random_traceless(2, 2, 8), 4)]
    for t in (0, 2, 5, 7):
        g1 = riemannian_gradient(mps, p1, t)
        g2 = riemannian_gradient(mps, p2, t)
        g12 = riemannian_gradient(mps, p1 + p2, t)
        assert np.allclose(g12, g1 + g2, atol=1e-12)
        u = mps.unitaries[t]
        k = dagger(u) @ g12
        assert np.linalg.norm(k + dagger(k)) < 1e-10


def test_gradient_zero_left_of_term():
    mps = random_mps(8, 2, 2, RngSeed(10))
    term = random_traceless(2, 2, 12)
    g = riemannian_gradient(mps, [(term, 4)], 2)
    assert np.all(g == 0)


@pytest.mark.parametrize("target", [0, 1, 4, 5, 8, 9])
def test_gradient_finite_difference(target):
    mps = random_mps(10, 2, 4, RngSeed(13))
    placements = [
        (random_traceless(1, 2, 21), 2),
        (random_traceless(2, 2, 22), 4),
        (random_traceless(3, 2, 23), 4),
    ]
    g = riemannian_gradient(mps, placements, target)
    n = g.shape[0]
    rng = RngSeed(14).rng(target)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    skew = (a - dagger(a)) / 2
    u = mps.unitaries[target]
    w = u @ skew
    ip = float(np.real(np.trace(dagger(g) @ w)))
    eps = 1e-5
    e_plus = expectation_sum(
        mps.replace_unitary(target, u @ expm(eps * skew)), placements
    )
    e_minus = expectation_sum(
        mps.replace_unitary(target, u @ expm(-eps * skew)), placements
    )
    fd = (e_plus - e_minus) / (2 * eps)
    assert abs(fd - ip) < 1e-6 * max(1.0, abs(ip))


def test_mc_variance_single_site_term():
    z = pauli_term("Z")
    preds = {
        t: predict_variance(
            "mps_single", {"m": 2, "d": 2, "i": 4, "j": t, "tr_h2": 2.0}
        )
        for t in (2, 4, 6)
    }
    reports = mc_gradient_variance(
        12, 2, 2, [(z, 4)], (2, 4, 6), 2000, RngSeed(301), predictions=preds
    )
    assert reports[2].estimate == 0.0
    assert abs(preds[4] - 2.0 / 9.0) < 1e-15
    assert reports[4].within_stderr(4.0)
    assert reports[6].within_stderr(4.0)
    assert reports[4].extras["mean_gradient_max_sigma"] < 6.0


def test_mc_variance_nn_term():
    zz = pauli_term("ZZ")
    pred = predict_variance(
        "mps_nn", {"m": 2, "d": 2, "i": 4, "j": 4, "tr_h2": 4.0, "tr_tr1sq": 0.0}
    )
    assert abs(pred - 56.0 / 540.0) < 1e-15
    report = mc_gradient_variance(
        12, 2, 2, [(zz, 4)], 4, 1500, RngSeed(302), predictions=pred
    )
    assert report.within_stderr(4.0)


def test_mc_worker_invariance():
    z = pauli_term("Z")
    kwargs = dict(
        length=10,
        site_dim=2,
        max_bond=2,
        placements=[(z, 3)],
        targets=(3, 5),
        samples=200,
        seed=RngSeed(77),
    )
    serial = mc_gradient_variance(**kwargs)
    parallel = mc_gradient_variance(workers=2, **kwargs)
    for t in (3, 5):
        assert serial[t].estimate == parallel[t].estimate
        assert serial[t].stderr == parallel[t].stderr
        assert np.array_equal(
            serial[t].extras["mean_gradient"], parallel[t].extras["mean_gradient"]
        )


def test_norm_stats_product_chain_has_no_spread():
    report = unnormalized_norm_stats(8, 2, 1, 200, RngSeed(40))
    assert report.estimate < 1e-28
    assert abs(report.extras["mean"] - 1.0) < 1e-12


def test_norm_stats_matches_prediction():
    report = unnormalized_norm_stats(10, 2, 2, 3000, RngSeed(41))
    assert abs(report.prediction - 1.0 / 9.0) < 1e-15
    assert report.within_stderr(4.0)
    mean_err = abs(report.extras["mean"] - 1.0)
    assert mean_err < 4.0 * report.extras["mean_stderr"] + 1e-12


def test_extensive_placements_layout():
    zz = pauli_term("ZZ")
    placements = extensive_placements(zz, 6)
    assert [i for _, i in placements] == [0, 1, 2, 3, 4]


def test_predict_variance_values():
    assert abs(predict_variance("eta", {"m": 2, "d": 2}) - 0.4) < 1e-15
    assert abs(predict_variance("eta", {"m": 3, "d": 2}) - 16.0 / 35.0) < 1e-15
    assert abs(predict_variance("global", {"dim": 4, "tr_h2": 4.0}) - 0.4) < 1e-15
    assert abs(predict_variance("global", {"dim": 8, "tr_h2": 8.0}) - 2.0 / 9.0) < 1e-15
    single = {"m": 2, "d": 2, "tr_h2": 2.0}
    assert predict_variance("mps_single", dict(single, i=5, j=3)) == 0.0
    assert (
        abs(predict_variance("mps_single", dict(single, i=5, j=5)) - 2.0 / 9.0) < 1e-15
    )
    assert (
        abs(
            predict_variance("mps_single", dict(single, i=5, j=8))
            - (2.0 / 9.0) * 0.4 ** 3
        )
        < 1e-15
    )
    assert (
        abs(predict_variance("mps_single_extensive", single) - 10.0 / 27.0) < 1e-15
    )
    nn = {"m": 2, "d": 2, "tr_h2": 4.0, "tr_tr1sq": 0.0}
    assert predict_variance("mps_nn", dict(nn, i=4, j=3)) == 0.0
    assert abs(predict_variance("mps_nn", dict(nn, i=4, j=4)) - 56.0 / 540.0) < 1e-15
    assert abs(predict_variance("mps_nn", dict(nn, i=4, j=5)) - 56.0 / 540.0) < 1e-15
    assert (
        abs(predict_variance("mps_nn", dict(nn, i=4, j=6)) - 0.4 * 56.0 / 540.0)
        < 1e-15
    )
    assert (
        abs(predict_variance("mps_nn_extensive", nn) - 448.0 / 1620.0) < 1e-15
    )
    assert abs(predict_variance("norm", {"m": 2, "d": 2}) - 1.0 / 9.0) < 1e-15
    assert predict_variance("norm", {"m": 1, "d": 2}) == 0.0
    with pytest.raises(ValueError):
        predict_variance("theorem", {})
