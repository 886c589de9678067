import numpy as np
import pytest

from tnsp.hamiltonians import LocalTerm, pauli_term, random_traceless
from tnsp.mera import (
    MeraNetwork,
    causal_cone,
    causal_support,
    descend_window,
    expectation_local,
    expectation_sum,
    extensive_placements,
    mc_gradient_variance,
    mc_placement_diagonal_variance,
    norm_value,
    placement_diagonal_sum,
    random_mera,
    riemannian_gradient,
)
from tnsp.tensor_core import RngSeed, dagger, haar_unitary


def dense_state_raw(family, chi, layers, exponent, isos, diss):
    """Fold the network into a full state vector, top down.

    Works on plain tensor dicts so perturbed (non-unitary) tensors can be
    fed through the same contraction.
    """
    b = 2 if family == "binary1d" else 3
    cols = [c * chi ** (b - 1) for c in range(chi)]
    v = np.zeros(chi ** (b ** (exponent - layers)), dtype=complex)
    v[0] = 1.0
    for tau in range(layers, 0, -1):
        n_coarse = b ** (exponent - tau)
        n_fine = n_coarse * b
        for k in range(n_coarse):
            w = np.asarray(isos[(tau, k)])[:, cols]
            done = (chi ** b) ** k
            rest = chi ** (n_coarse - k - 1)
            v = v.reshape(done, chi, rest)
            v = np.einsum("Pc,dcr->dPr", w, v).reshape(-1)
        # block k holds sites (b*k-1 .. b*k+b-2), so site s sits at
        # slot (s+1) mod n_fine; reorder to plain site order
        v = v.reshape((chi,) * n_fine)
        v = v.transpose([(s + 1) % n_fine for s in range(n_fine)]).reshape(-1)
        if diss is not None:
            for k in range(n_coarse):
                lo = 2 * k if b == 2 else 3 * k + 1
                left = chi ** lo
                right = chi ** (n_fine - lo - 2)
                u = np.asarray(diss[(tau, k)])
                v = v.reshape(left, chi * chi, right)
                v = np.einsum("PQ,dQr->dPr", u, v).reshape(-1)
    return v


def dense_state(network):
    return dense_state_raw(
        network.family, network.chi, network.layers, network.lattice_exponent,
        network.isometry_unitaries, network.disentanglers,
    )


def dense_expect(psi, term, start, length, chi):
    w = term.support
    sites = [(start + t) % length for t in range(w)]
    rest = [s for s in range(length) if s not in sites]
    a = psi.reshape((chi,) * length).transpose(sites + rest)
    a = a.reshape(chi ** w, -1)
    return np.vdot(a, term.matrix @ a).real


def test_network_construction_and_validation():
    net = random_mera("binary1d", 2, 2, 4, 7)
    assert net.lattice_size == 16
    assert net.layer_sites(1) == 8 and net.layer_sites(2) == 4
    assert sorted(net.isometry_unitaries) == (
        [(1, k) for k in range(8)] + [(2, k) for k in range(4)]
    )
    assert sorted(net.disentanglers) == sorted(net.isometry_unitaries)
    w = net.isometry(1, 3)
    assert w.shape == (4, 2)
    assert np.allclose(dagger(w) @ w, np.eye(2), atol=1e-12)

    with pytest.raises(ValueError):
        random_mera("binary1d", 2, 2, 3, 0)
    with pytest.raises(ValueError):
        random_mera("ternary1d", 2, 2, 2, 0)
    with pytest.raises(ValueError):
        random_mera("quaternary", 2, 1, 3, 0)

    bad = dict(net.isometry_unitaries)
    bad[(1, 0)] = 2.0 * bad[(1, 0)]
    with pytest.raises(ValueError):
        MeraNetwork("binary1d", "mera", 2, 2, 4, net.disentanglers, bad)
    with pytest.raises(ValueError):
        MeraNetwork("binary1d", "mera", 2, 2, 4, None, net.isometry_unitaries)


def test_ttns_has_no_disentanglers():
    net = random_mera("ternary1d", 2, 1, 2, 3, flavor="ttns")
    assert net.disentanglers is None
    with pytest.raises(ValueError):
        net.replace_tensor("disentangler", 1, 0, np.eye(4))
    with pytest.raises(ValueError):
        net.replace_tensor("gate", 1, 0, np.eye(4))


def test_replace_tensor_swaps_one_entry():
    net = random_mera("binary1d", 2, 1, 3, 11)
    u = haar_unitary(4, np.random.default_rng(5))
    out = net.replace_tensor("disentangler", 1, 2, u)
    assert np.allclose(out.disentanglers[(1, 2)], u)
    assert np.allclose(out.disentanglers[(1, 1)], net.disentanglers[(1, 1)])
    assert np.allclose(out.isometry_unitaries[(1, 2)],
                       net.isometry_unitaries[(1, 2)])


def test_causal_cone_paths():
    net = random_mera("binary1d", 2, 3, 5, 2)
    cone = causal_cone(net, 5)
    assert cone.positions == (5, 2, 1, 0)
    assert cone.movers == ("right", "left", "right")
    cone = causal_cone(net, 0)
    assert cone.positions == (0, 0, 0, 0)
    assert cone.movers == ("left", "left", "left")

    tnet = random_mera("ternary1d", 2, 2, 3, 2)
    cone = causal_cone(tnet, 10)
    assert cone.positions == (10, 3, 1)
    assert cone.movers == ("center", "left")
    with pytest.raises(ValueError):
        causal_cone(tnet, 27)


def test_causal_support_sizes_and_duality():
    net = random_mera("binary1d", 2, 3, 5, 13)
    L = net.lattice_size
    for k in range(net.layer_sites(1)):
        assert len(causal_support(net, 1, k)) == 4
    assert causal_support(net, 3, 1) == set(range(16))
    for tau in range(1, 4):
        n_sites = net.layer_sites(tau)
        for k in range(n_sites):
            sup = causal_support(net, tau, k, "disentangler")
            for i in range(L):
                m = (i // 2 ** (tau - 1)) // 2
                hit = k in (m % n_sites, (m + 1) % n_sites)
                assert (i in sup) == hit
    with pytest.raises(ValueError):
        causal_support(net, 4, 0)
    with pytest.raises(ValueError):
        causal_support(net, 1, 16)
    with pytest.raises(ValueError):
        causal_support(net, 1, 0, "gate")


def test_cone_convergence_is_exhaustive():
    net = random_mera("binary1d", 2, 2, 6, 17)
    L = net.lattice_size
    pos = [causal_cone(net, i).positions for i in range(L)]
    L2 = net.layer_sites(2)
    for i in range(L):
        for j in range(L):
            dist0 = min(abs(i - j), L - abs(i - j))
            if 1 <= dist0 <= 3:
                d2 = abs(pos[i][2] - pos[j][2])
                assert min(d2, L2 - d2) <= 1


def test_identity_network_is_product_state():
    for family, exponent in (("binary1d", 4), ("ternary1d", 2)):
        b = 2 if family == "binary1d" else 3
        w = 3 if family == "binary1d" else 2
        layers = 2 if family == "binary1d" else 1
        n = {}
        d = {}
        for tau in range(1, layers + 1):
            for k in range(b ** (exponent - tau)):
                n[(tau, k)] = np.eye(2 ** b)
                d[(tau, k)] = np.eye(4)
        net = MeraNetwork(family, "mera", 2, layers, exponent, d, n)
        term = random_traceless(w, 2, 3)
        for i in (0, 1, net.lattice_size - 1):
            val = expectation_local(net, term, i)
            assert abs(val - term.matrix[0, 0].real) < 1e-12


@pytest.mark.parametrize("family,chi,layers,exponent", [
    ("binary1d", 2, 1, 3),
    ("binary1d", 3, 1, 3),
    ("binary1d", 2, 2, 4),
    ("ternary1d", 2, 1, 2),
    ("ternary1d", 3, 1, 2),
])
def test_expectation_matches_dense_state(family, chi, layers, exponent):
    net = random_mera(family, chi, layers, exponent, 29)
    psi = dense_state(net)
    assert abs(np.vdot(psi, psi) - 1.0) < 1e-10
    w = 3 if family == "binary1d" else 2
    term = random_traceless(w, chi, 31)
    for i in range(net.lattice_size):
        want = dense_expect(psi, term, i, net.lattice_size, chi)
        got = expectation_local(net, term, i)
        assert abs(got - want) < 1e-10, "site %d" % i


def test_ttns_matches_dense_state():
    net = random_mera("binary1d", 2, 2, 4, 37, flavor="ttns")
    psi = dense_state(net)
    term = pauli_term("ZXZ")
    for i in range(net.lattice_size):
        want = dense_expect(psi, term, i, net.lattice_size, 2)
        got = expectation_local(net, term, i)
        assert abs(got - want) < 1e-10


def test_ttns_equals_identity_disentangler_mera():
    for family, layers, exponent in (("binary1d", 2, 4), ("ternary1d", 2, 3)):
        ttns = random_mera(family, 2, layers, exponent, 41, flavor="ttns")
        b = ttns.branching
        diss = {key: np.eye(4) for key in ttns.isometry_unitaries}
        mera = MeraNetwork(family, "mera", 2, layers, exponent, diss,
                           ttns.isometry_unitaries)
        w = 3 if family == "binary1d" else 2
        term = random_traceless(w, 2, 43)
        for i in range(0, ttns.lattice_size, 3):
            a = expectation_local(ttns, term, i)
            c = expectation_local(mera, term, i)
            assert abs(a - c) < 1e-12


def test_norm_value_is_one():
    for flavor in ("mera", "ttns"):
        net = random_mera("binary1d", 2, 2, 4, 47, flavor=flavor)
        assert abs(norm_value(net) - 1.0) < 1e-12
        net = random_mera("ternary1d", 2, 2, 3, 47, flavor=flavor)
        assert abs(norm_value(net) - 1.0) < 1e-12


def test_placement_validation():
    net = random_mera("binary1d", 2, 1, 3, 53)
    with pytest.raises(TypeError):
        expectation_local(net, np.eye(8), 0)
    with pytest.raises(ValueError):
        expectation_local(net, random_traceless(2, 2, 1), 0)
    with pytest.raises(ValueError):
        expectation_local(net, random_traceless(3, 3, 1), 0)
    with pytest.raises(ValueError):
        expectation_local(net, random_traceless(3, 2, 1), 8)


def test_descend_window_is_trace_preserving_and_positive():
    rng = np.random.default_rng(59)
    for family, exponent in (("binary1d", 4), ("ternary1d", 3)):
        net = random_mera(family, 2, 2, exponent, 61)
        w = 3 if family == "binary1d" else 2
        dim = 2 ** w
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = a @ dagger(a)
        rho = rho / np.trace(rho)
        children = descend_window(net, 2, 1, rho)
        assert len(children) == net.branching
        for child in children:
            assert abs(np.trace(child) - 1.0) < 1e-12
            assert np.linalg.eigvalsh(child).min() > -1e-12


def test_expectation_invariant_outside_causal_support():
    net = random_mera("binary1d", 2, 2, 4, 67)
    term = random_traceless(3, 2, 71)
    rng = np.random.default_rng(73)
    for which, tau, k in (("disentangler", 1, 2), ("isometry", 2, 1)):
        n = net.disentanglers[(1, 0)].shape[0] if which == "disentangler" \
            else net.isometry_unitaries[(1, 0)].shape[0]
        other = net.replace_tensor(which, tau, k, haar_unitary(n, rng))
        sup = causal_support(net, tau, k, which)
        changed = 0.0
        for i in range(net.lattice_size):
            a = expectation_local(net, term, i)
            c = expectation_local(other, term, i)
            if i in sup:
                changed += abs(a - c)
            else:
                assert abs(a - c) < 1e-12, "site %d" % i
        assert changed > 1e-6


def test_gradient_is_tangent_and_zero_outside_support():
    net = random_mera("binary1d", 2, 2, 4, 79)
    term = random_traceless(3, 2, 83)
    for which, tau, k in (("disentangler", 1, 3), ("isometry", 2, 2)):
        sup = causal_support(net, tau, k, which)
        inside = next(iter(sup))
        outside = next(i for i in range(net.lattice_size) if i not in sup)
        g = riemannian_gradient(net, [(term, outside)], tau, k, which)
        assert np.all(g == 0)
        g = riemannian_gradient(net, [(term, inside)], tau, k, which)
        u = net.disentanglers[(tau, k)] if which == "disentangler" \
            else net.isometry_unitaries[(tau, k)]
        assert np.linalg.norm(g) > 1e-8
        skew = dagger(u) @ g
        assert np.allclose(skew + dagger(skew), 0.0, atol=1e-12)


@pytest.mark.parametrize("family,layers,exponent,targets", [
    ("binary1d", 2, 4, [("disentangler", 1, 3), ("isometry", 1, 5),
                        ("disentangler", 2, 1), ("isometry", 2, 2)]),
    ("ternary1d", 2, 3, [("disentangler", 1, 1), ("isometry", 1, 0),
                         ("disentangler", 2, 0), ("isometry", 2, 2)]),
])
def test_gradient_matches_directional_finite_difference(
        family, layers, exponent, targets):
    from scipy.linalg import expm

    net = random_mera(family, 2, layers, exponent, 89)
    w = 3 if family == "binary1d" else 2
    term = random_traceless(w, 2, 97)
    placements = extensive_placements(term, net.lattice_size)
    rng = np.random.default_rng(101)
    h = 1e-5
    for which, tau, k in targets:
        g = riemannian_gradient(net, placements, tau, k, which)
        u = net.disentanglers[(tau, k)] if which == "disentangler" \
            else net.isometry_unitaries[(tau, k)]
        n = u.shape[0]
        for _ in range(2):
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            skew = (a - dagger(a)) / 2
            wdir = u @ skew
            ip = np.vdot(g, wdir).real
            ep = expectation_sum(
                net.replace_tensor(which, tau, k, u @ expm(h * skew)),
                placements)
            em = expectation_sum(
                net.replace_tensor(which, tau, k, u @ expm(-h * skew)),
                placements)
            fd = (ep - em) / (2 * h)
            assert abs(fd - ip) < 1e-6 * max(1.0, abs(ip)), (which, tau, k)


@pytest.mark.parametrize("family,exponent,targets", [
    ("binary1d", 3, [("disentangler", 2), ("isometry", 1)]),
    ("ternary1d", 2, [("disentangler", 0), ("isometry", 2)]),
])
def test_gradient_matches_dense_wirtinger_derivative(family, exponent, targets):
    net = random_mera(family, 2, 1, exponent, 103)
    w = 3 if family == "binary1d" else 2
    term = random_traceless(w, 2, 107)
    L = net.lattice_size

    def raw_energy(isos, diss):
        psi = dense_state_raw(family, 2, 1, exponent, isos, diss)
        return sum(dense_expect(psi, term, i, L, 2) for i in range(L))

    placements = extensive_placements(term, L)
    h = 1e-6
    for which, k in targets:
        g = riemannian_gradient(net, placements, 1, k, which)
        u = net.disentanglers[(1, k)] if which == "disentangler" \
            else net.isometry_unitaries[(1, k)]
        n = u.shape[0]
        d = np.zeros((n, n), dtype=complex)
        for a in range(n):
            for b in range(n):
                for step, weight in ((h, 1.0), (1j * h, 1j)):
                    up = u.copy()
                    up[a, b] += step
                    um = u.copy()
                    um[a, b] -= step
                    isos_p = dict(net.isometry_unitaries)
                    isos_m = dict(net.isometry_unitaries)
                    diss_p = dict(net.disentanglers)
                    diss_m = dict(net.disentanglers)
                    if which == "disentangler":
                        diss_p[(1, k)] = up
                        diss_m[(1, k)] = um
                    else:
                        isos_p[(1, k)] = up
                        isos_m[(1, k)] = um
                    slope = (raw_energy(isos_p, diss_p)
                             - raw_energy(isos_m, diss_m)) / (2 * h)
                    d[a, b] += weight * slope
        projected = (d - u @ dagger(d) @ u) / 2
        assert np.abs(projected - g).max() < 1e-6, (which, k)


def test_mc_gradient_variance_smoke():
    term = pauli_term("ZZZ")
    rep = mc_gradient_variance(
        "binary1d", 2, 1, 3, term, 1, which="disentangler",
        samples=300, seed=113)
    assert rep.estimate > 0
    assert rep.stderr > 0
    assert rep.params["family"] == "binary1d"
    assert rep.params["tau"] == 1
    assert rep.extras["mean_gradient_max_sigma"] < 6.0

    reps = mc_gradient_variance(
        "binary1d", 2, 1, 3, term, 1, which="isometry",
        layer_average=False, samples=200, seed=127)
    assert sorted(reps) == [0, 1, 2, 3]
    for k, rep in reps.items():
        assert rep.params["k"] == k
        assert rep.estimate > 0


def test_mc_gradient_variance_worker_invariance():
    term = pauli_term("ZZ")
    kwargs = dict(which="isometry", flavor="ttns", samples=200, seed=131)
    a = mc_gradient_variance("ternary1d", 2, 1, 2, term, 1,
                             workers=None, **kwargs)
    c = mc_gradient_variance("ternary1d", 2, 1, 2, term, 1,
                             workers=2, **kwargs)
    assert a.estimate == c.estimate
    assert a.stderr == c.stderr
    assert np.array_equal(a.extras["mean_gradient"], c.extras["mean_gradient"])


def test_mc_gradient_variance_validation():
    term = pauli_term("ZZZ")
    with pytest.raises(ValueError):
        mc_gradient_variance("binary1d", 2, 1, 3, term, 1, samples=50, seed=1)
    with pytest.raises(ValueError):
        mc_gradient_variance("binary1d", 2, 1, 3, term, 2, samples=100, seed=1)
    with pytest.raises(ValueError):
        mc_gradient_variance("binary1d", 2, 1, 3, term, 1, which="gate",
                             samples=100, seed=1)
    with pytest.raises(ValueError):
        mc_gradient_variance("binary1d", 2, 1, 3, term, 1, flavor="ttns",
                             samples=100, seed=1)


def brute_diagonal(network, term, tau, which, n):
    n_sites = network.layer_sites(tau)
    total = 0.0
    for i in range(network.lattice_size):
        for k in range(n_sites):
            g = riemannian_gradient(network, [(term, i)], tau, k, which=which)
            total += np.vdot(g, g).real / n
    return total / n_sites


def test_placement_diagonal_sum_matches_per_placement_gradients():
    term = pauli_term("ZZZ")
    network = random_mera("binary1d", 2, 2, 4, RngSeed(311).rng(0))
    for tau in (1, 2):
        brute = brute_diagonal(network, term, tau, "disentangler", 4)
        assert abs(placement_diagonal_sum(network, term, tau) - brute) < 1e-12
    brute = brute_diagonal(network, term, 1, "isometry", 4)
    fast = placement_diagonal_sum(network, term, 1, which="isometry")
    assert abs(fast - brute) < 1e-12

    term2 = pauli_term("ZZ")
    net3 = random_mera("ternary1d", 2, 1, 2, RngSeed(313).rng(0))
    brute = brute_diagonal(net3, term2, 1, "disentangler", 4)
    assert abs(placement_diagonal_sum(net3, term2, 1) - brute) < 1e-12

    nett = random_mera("ternary1d", 2, 1, 2, RngSeed(317).rng(0),
                       flavor="ttns")
    brute = brute_diagonal(nett, term2, 1, "isometry", 8)
    fast = placement_diagonal_sum(nett, term2, 1, which="isometry")
    assert abs(fast - brute) < 1e-12


def test_top_layer_variance_depth_ratio():
    # variance at the top layer of a depth-tau network falls by b*eta per
    # added layer; ternary chi=2 target 3*eta = 0.39149
    term = pauli_term("ZZ")
    shallow = mc_gradient_variance("ternary1d", 2, 1, 3, term, 1,
                                   which="isometry", samples=500, seed=941)
    deep = mc_gradient_variance("ternary1d", 2, 2, 3, term, 2,
                                which="isometry", samples=500, seed=943)
    ratio = deep.estimate / shallow.estimate
    assert abs(ratio - 0.39149) < 0.25 * 0.39149


def test_mc_placement_diagonal_variance_smoke():
    term = pauli_term("ZZZ")
    rep = mc_placement_diagonal_variance(
        "binary1d", 2, 1, 3, term, 1, samples=200, seed=211)
    assert rep.estimate > 0
    assert rep.stderr > 0
    assert rep.params["which"] == "disentangler"
    assert np.isnan(rep.prediction)

    again = mc_placement_diagonal_variance(
        "binary1d", 2, 1, 3, term, 1, samples=200, seed=211, workers=2)
    assert again.estimate == rep.estimate
    assert again.stderr == rep.stderr


def test_mc_placement_diagonal_variance_validation():
    term = pauli_term("ZZZ")
    with pytest.raises(ValueError):
        mc_placement_diagonal_variance("binary1d", 2, 1, 3, term, 1,
                                       samples=50)
    with pytest.raises(ValueError):
        mc_placement_diagonal_variance("binary1d", 2, 1, 3, term, 2,
                                       samples=100)
    with pytest.raises(ValueError):
        mc_placement_diagonal_variance("binary1d", 2, 1, 3, term, 1,
                                       which="gate", samples=100)
    with pytest.raises(ValueError):
        mc_placement_diagonal_variance("binary1d", 2, 1, 3, term, 1,
                                       flavor="ttns", samples=100)
