import itertools
import math

import numpy as np
import pytest

from spinchain import oracle
from spinchain.diagnostics import (DIRICHLET_ENTROPY_C_STAR, _random_dense,
                                   dirichlet_entropy_gap, two_point_entropy_gap)
from spinchain.graphs import cycle_graph, graph_from_edges, path_graph
from spinchain.models import TwoSpinParams, hardcore_params, ising_params
from spinchain.oracle import (DenseDistribution, blow_up, chain_transition_matrix,
                              correlation_matrix, certify_c_bounded,
                              certify_spectral_domination, dehomogenize,
                              detailed_balance_residual, divergences, down_apply,
                              down_up_walk, entropy_contraction_ratio,
                              entropy_functional, enumerate_model,
                              field_dynamics_matrix, homogenize, marginalize, pin,
                              projected_block_row, stationarity_residual, tilt)


def brute_weights(model, g):
    """Independent brute-force enumeration (per-configuration arithmetic)."""
    n = g.n
    w = np.zeros(1 << n)
    for mask in range(1 << n):
        spins = [(mask >> i) & 1 for i in range(n)]
        if hasattr(model, "fugacities"):
            if any(spins[u] and spins[v] for u, v in g.edges()):
                continue
            val = 1.0
            for i in range(n):
                if spins[i]:
                    val *= model.fugacities[i]
        else:
            val = model.lam ** sum(spins)
            for u, v in g.edges():
                if spins[u] == 1 and spins[v] == 1:
                    val *= model.beta
                elif spins[u] == 0 and spins[v] == 0:
                    val *= model.gamma
        w[mask] = val
    return w / w.sum()


def test_enumerate_hardcore_single_edge():
    g = path_graph(2)
    mu = enumerate_model(hardcore_params(1.0, 2), g)
    assert mu.weights[0b00] == pytest.approx(1 / 3)
    assert mu.weights[0b01] == pytest.approx(1 / 3)
    assert mu.weights[0b10] == pytest.approx(1 / 3)
    assert mu.weights[0b11] == 0.0


def test_enumerate_ising_single_site():
    g = graph_from_edges([], n=1)
    mu = enumerate_model(ising_params(0.7, 1.0), g)
    assert mu.weights[0] == pytest.approx(0.5)
    assert mu.weights[1] == pytest.approx(0.5)


def test_enumerate_hardcore_triangle():
    g = cycle_graph(3)
    mu = enumerate_model(hardcore_params(2.0, 3), g)
    assert mu.weights[0] == pytest.approx(1 / 7)
    for mask in (1, 2, 4):
        assert mu.weights[mask] == pytest.approx(2 / 7)


def test_enumerate_matches_bruteforce():
    rng = np.random.default_rng(0)
    g = cycle_graph(5)
    hc = hardcore_params(rng.uniform(0.5, 2.0, 5))
    assert np.allclose(enumerate_model(hc, g).weights, brute_weights(hc, g), atol=1e-14)
    ts = TwoSpinParams(beta=0.6, gamma=1.3, lam=0.8)
    assert np.allclose(enumerate_model(ts, g).weights, brute_weights(ts, g), atol=1e-14)


def test_tilt_identity_composition_and_hardcore_refugacity():
    rng = np.random.default_rng(1)
    mu = _random_dense(rng, 5)
    assert np.allclose(tilt(mu, np.ones(5)).weights, mu.weights)
    a = rng.uniform(0.2, 3.0, 5)
    b = rng.uniform(0.2, 3.0, 5)
    assert np.allclose(tilt(tilt(mu, a), b).weights, tilt(mu, a * b).weights, atol=1e-14)
    # tilting a hardcore model by theta equals re-fugacity theta*lambda
    g = cycle_graph(5)
    lam = rng.uniform(0.5, 2.0, 5)
    theta = rng.uniform(0.1, 0.9, 5)
    left = tilt(enumerate_model(hardcore_params(lam), g), theta)
    right = enumerate_model(hardcore_params(lam * theta), g)
    assert np.allclose(left.weights, right.weights, atol=1e-14)
    with pytest.raises(ValueError):
        tilt(mu, np.array([1.0, 1.0, 0.0, 1.0, 1.0]))


def test_pin_examples():
    g = path_graph(2)
    mu = enumerate_model(hardcore_params(1.0, 2), g)
    assert pin(mu, {}) is mu
    cond = pin(mu, {0: 1})  # neighbor exclusion forces site 1 empty
    assert cond.ground == (1,)
    assert cond.weights[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        pin(mu, {0: 1, 1: 1})  # zero-mass pinning


def test_homogenize_single_site_relabel():
    mu = DenseDistribution((0,), np.array([0.3, 0.7]))
    hom = homogenize(mu)
    assert hom.homogeneous_k == 1
    assert hom.weights[0b01] == pytest.approx(0.7)   # {0}
    assert hom.weights[0b10] == pytest.approx(0.3)   # {bar 0}
    assert np.allclose(dehomogenize(hom, 1).weights, mu.weights)


def test_blowup_identity_and_projection():
    rng = np.random.default_rng(2)
    mu = _random_dense(rng, 4)
    same = blow_up(mu, [1, 1, 1, 1])
    assert np.allclose(same.weights, mu.weights)
    # projection of a blow-up recovers mu; no two copies co-occur
    ks = [2, 3, 1, 2]
    big = blow_up(mu, ks)
    offs = np.concatenate([[0], np.cumsum(ks)])
    proj = np.zeros(1 << 4)
    for mask, w in enumerate(big.weights):
        if w == 0:
            continue
        small = 0
        for i in range(4):
            copies = [(mask >> (offs[i] + j)) & 1 for j in range(ks[i])]
            assert sum(copies) <= 1
            if any(copies):
                small |= 1 << i
        proj[small] += w
    assert np.allclose(proj, mu.weights, atol=1e-14)


def test_down_operator():
    # point mass on {1,2} drops to uniform on singletons
    w = np.zeros(8)
    w[0b110] = 1.0
    mu = DenseDistribution((0, 1, 2), w, homogeneous_k=2)
    d1 = down_apply(mu, 1)
    assert d1.weights[0b010] == pytest.approx(0.5)
    assert d1.weights[0b100] == pytest.approx(0.5)
    assert down_apply(mu, 2) is mu
    with pytest.raises(ValueError):
        down_apply(mu, 3)


def test_down_up_walk_identity_case():
    rng = np.random.default_rng(3)
    hom = homogenize(_random_dense(rng, 3))
    tm = down_up_walk(hom, hom.homogeneous_k)
    assert np.allclose(tm.matrix, np.eye(tm.states.size))


def test_projected_block_k1_full_resample():
    rng = np.random.default_rng(4)
    mu = _random_dense(rng, 3)
    # k=1 with theta high enough that ell = n: every row is mu itself
    tm = projected_block_row(mu, 1, 0.9)
    for r in range(tm.states.size):
        assert np.allclose(tm.matrix[r], mu.weights[tm.states], atol=1e-12)


def test_projected_block_converges_to_field_dynamics():
    # theta chosen so theta*k*n is integral along the doubling sequence
    rng = np.random.default_rng(5)
    mu = _random_dense(rng, 3)
    theta = 0.5
    states = np.arange(8)
    tilted = tilt(mu, np.full(3, theta))
    F = np.zeros((8, 8))
    for s in states:
        occ = [i for i in range(3) if (s >> i) & 1]
        for sz in range(len(occ) + 1):
            for kept in itertools.combinations(occ, sz):
                wpat = (1 - theta) ** len(kept) * theta ** (len(occ) - len(kept))
                km = 0
                for i in kept:
                    km |= 1 << i
                cw = tilted.weights.copy()
                cw[(states & km) != km] = 0
                F[s] += wpat * cw / cw.sum()
    gaps = []
    for k in (2, 4, 8, 16):
        tm = projected_block_row(mu, k, theta)
        assert stationarity_residual(tm, mu) < 1e-12
        w = mu.weights[tm.states]
        w = w / w.sum()
        flux = w[:, None] * tm.matrix
        assert np.max(np.abs(flux - flux.T)) < 1e-12
        gaps.append(np.max(np.abs(tm.matrix - F)))
    assert all(gaps[i + 1] < gaps[i] for i in range(len(gaps) - 1))
    assert gaps[-1] < 0.01


def test_projected_block_hardcore_support():
    g = path_graph(3)
    model = hardcore_params(1.0, 3)
    mu = enumerate_model(model, g)
    tm = projected_block_row(mu, 2, 0.5)
    assert tm.states.size == int((mu.weights > 0).sum())
    assert stationarity_residual(tm, mu) < 1e-12


def test_divergences():
    rng = np.random.default_rng(6)
    mu = _random_dense(rng, 5)
    same = divergences(mu, mu)
    assert same["kl"] == pytest.approx(0.0, abs=1e-14)
    assert same["tv"] == pytest.approx(0.0, abs=1e-14)
    # point mass vs uniform over N states
    n_states = 32
    point = np.zeros(n_states)
    point[7] = 1.0
    pm = DenseDistribution(tuple(range(5)), point)
    unif = DenseDistribution(tuple(range(5)), np.full(n_states, 1 / n_states))
    assert divergences(pm, unif)["kl"] == pytest.approx(math.log(n_states))
    assert divergences(unif, pm)["kl"] == math.inf
    # Pinsker on random pairs
    for _ in range(1000):
        nu = _random_dense(rng, 4)
        mu4 = _random_dense(rng, 4)
        d = divergences(nu, mu4)
        assert d["tv"] <= math.sqrt(d["kl"] / 2) + 1e-12
        assert d["chi2"] >= 0


def test_entropy_functional():
    rng = np.random.default_rng(7)
    mu = _random_dense(rng, 4)
    f = rng.uniform(0.1, 2.0, mu.weights.size)
    nu_w = mu.weights * f
    nu = DenseDistribution(mu.ground, nu_w / nu_w.sum())
    # Ent_mu[d nu/d mu] = KL(nu || mu) after normalizing f to mean one
    fn = f / np.dot(mu.weights, f)
    assert entropy_functional(mu, fn) == pytest.approx(divergences(nu, mu)["kl"], abs=1e-12)
    assert entropy_functional(mu, np.ones_like(f)) == pytest.approx(0.0, abs=1e-14)


def test_correlation_matrix_product_measure():
    # independent sites: off-diagonals vanish, spectrum is {1 - P(i)}
    probs = np.array([0.2, 0.5, 0.7])
    w = np.ones(8)
    for mask in range(8):
        for i in range(3):
            w[mask] *= probs[i] if (mask >> i) & 1 else 1 - probs[i]
    mu = DenseDistribution((0, 1, 2), w)
    psi, labels, eig, dropped = correlation_matrix(mu)
    assert not dropped
    assert np.allclose(psi, np.diag(1 - probs), atol=1e-12)
    assert np.allclose(np.sort(eig), np.sort(1 - probs), atol=1e-12)


def test_correlation_matrix_real_spectrum_matches_asymmetric():
    rng = np.random.default_rng(8)
    for _ in range(20):
        mu = _random_dense(rng, 4)
        psi, _, eig, _ = correlation_matrix(mu)
        raw = np.linalg.eigvals(psi)
        assert np.max(np.abs(raw.imag)) < 1e-10
        assert np.allclose(np.sort(raw.real), np.sort(eig), atol=1e-8)


def test_certify_spectral_domination_product():
    rng = np.random.default_rng(9)
    w = np.ones(8)
    probs = [0.3, 0.6, 0.5]
    for mask in range(8):
        for i in range(3):
            w[mask] *= probs[i] if (mask >> i) & 1 else 1 - probs[i]
    mu = DenseDistribution((0, 1, 2), w)
    rep = certify_spectral_domination(mu, eta=1.0, eps=0.5,
                                      rng=rng, random_fields=20)
    assert rep["certified"] and rep["heuristic"]


def test_certify_c_bounded():
    rng = np.random.default_rng(10)
    mu = _random_dense(rng, 4)
    rep = certify_c_bounded(mu, mu, 1.0, rng)
    assert rep["passes"] and rep["max_ratio"] == pytest.approx(1.0)
    # blow-up preserves the bound
    nu = _random_dense(rng, 4)
    base = certify_c_bounded(nu, mu, 1.0, rng)["max_ratio"]
    ks = [2, 1, 3, 2]
    lifted = certify_c_bounded(blow_up(nu, ks), blow_up(mu, ks), base, rng)
    assert lifted["passes"]


def test_post_scan_c_bounded_cap():
    # post-scan hardcore measures pass the boundedness cap C' = e^{3e^2}(1+e^2)e^{3e^2}
    g = cycle_graph(5)
    model = hardcore_params(0.9 * 4.0, 5)
    mu = enumerate_model(model, g)
    scan = chain_transition_matrix("scan", model, g)
    rng = np.random.default_rng(11)
    cap = math.exp(3 * math.e ** 2) * (1 + math.e ** 2) * math.exp(3 * math.e ** 2)
    for _ in range(5):
        start = np.zeros(scan.states.size)
        start[rng.integers(scan.states.size)] = 1.0
        post = start @ scan.matrix
        full = np.zeros(mu.weights.size)
        full[scan.states] = post
        nu = DenseDistribution(mu.ground, full)
        rep = certify_c_bounded(nu, mu, cap, rng)
        assert rep["passes"]
        # and the exact post-scan odds never exceed e^{3e^2} * lambda_v
        for v in range(5):
            for mask in range(32):
                if (mask >> v) & 1 or mu.weights[mask | (1 << v)] == 0:
                    continue
                if full[mask] > 0:
                    ratio = full[mask | (1 << v)] / full[mask]
                    assert ratio <= math.exp(3 * math.e ** 2) * model.fugacities[v] + 1e-9


def test_entropy_contraction_ratio_edges():
    rng = np.random.default_rng(12)
    mu = _random_dense(rng, 5)
    nu = _random_dense(rng, 5)
    r0 = entropy_contraction_ratio(nu, mu, 0)
    assert r0["ratio"] == pytest.approx(1.0, abs=1e-10)
    rn = entropy_contraction_ratio(nu, mu, 5)
    assert rn["ratio"] == pytest.approx(0.0, abs=1e-12)
    ratios = [entropy_contraction_ratio(nu, mu, ell)["ratio"] for ell in range(6)]
    assert all(ratios[i + 1] <= ratios[i] + 1e-12 for i in range(5))
    with_kappa = entropy_contraction_ratio(nu, mu, 2, eta_prime=2.0)
    assert "one_minus_kappa" in with_kappa
    with pytest.raises(ValueError):
        entropy_contraction_ratio(mu, mu, 2)


def test_glauber_matrix_hand_n2():
    # single edge, lam = 1: states {00, 01, 10}; glauber picks a site at
    # random and resamples it (prob 1/2 occupied when allowed)
    g = path_graph(2)
    model = hardcore_params(1.0, 2)
    tm = chain_transition_matrix("glauber", model, g)
    assert list(tm.states) == [0b00, 0b01, 0b10]
    expected = np.array([
        [0.5, 0.25, 0.25],
        [0.25, 0.75, 0.0],
        [0.25, 0.0, 0.75],
    ])
    assert np.allclose(tm.matrix, expected, atol=1e-14)
    mu = enumerate_model(model, g)
    assert stationarity_residual(tm, mu) < 1e-14


def test_ising_cycle6_glauber_matrix_stationary():
    # full 64-state transition matrix on the 6-cycle fixes the exact law
    g = cycle_graph(6)
    model = ising_params(0.7, 0.9)
    mu = enumerate_model(model, g)
    tm = chain_transition_matrix("glauber", model, g)
    assert tm.states.size == 64
    assert stationarity_residual(tm, mu) < 1e-12
    assert detailed_balance_residual(tm, mu) < 1e-12  # glauber is reversible


def test_spectral_certificate_monotone_under_refinement():
    # same seed makes the coarse grid a prefix of the fine grid, so the
    # reported maximum can only grow
    g = cycle_graph(5)
    mu = enumerate_model(hardcore_params(0.5 * 4.0, 5), g)
    coarse = certify_spectral_domination(mu, eta=10.0, eps=0.5,
                                         rng=np.random.default_rng(30),
                                         random_fields=30)
    fine = certify_spectral_domination(mu, eta=10.0, eps=0.5,
                                       rng=np.random.default_rng(30),
                                       random_fields=200)
    assert math.isfinite(coarse["max_lambda"])
    assert fine["max_lambda"] >= coarse["max_lambda"] - 1e-12


def test_field_dynamics_detailed_balance_small():
    for n, theta in ((4, 0.2), (5, 0.45)):
        g = cycle_graph(n)
        model = hardcore_params(1.2, n)
        mu = enumerate_model(model, g)
        tm = field_dynamics_matrix(model, g, theta)
        assert detailed_balance_residual(tm, mu) < 1e-12
        assert stationarity_residual(tm, mu) < 1e-12


def test_balanced_chain_matrix_rejected():
    g = path_graph(3)
    with pytest.raises(ValueError, match="balanced"):
        chain_transition_matrix("balanced:K=2", hardcore_params(1.0, 3), g)


def test_cap_errors():
    with pytest.raises(oracle.CapExceededError):
        DenseDistribution(tuple(range(15)), np.full(1 << 15, 2.0 ** -15))
    g = cycle_graph(10)
    with pytest.raises(oracle.CapExceededError):
        chain_transition_matrix("glauber", hardcore_params(1.0, 10), g)


def test_dense_json_roundtrip_support():
    rng = np.random.default_rng(13)
    mu = _random_dense(rng, 3)
    import json
    payload = json.loads(mu.to_json())
    assert len(payload["weights"]) == 8
    assert sum(payload["weights"].values()) == pytest.approx(1.0)


def test_marginalize_consistency():
    rng = np.random.default_rng(14)
    mu = _random_dense(rng, 4)
    dropped = marginalize(mu, [2])
    assert dropped.m == 3
    assert dropped.marginal(0) == pytest.approx(mu.marginal(0), abs=1e-14)
    assert dropped.marginal(3) == pytest.approx(mu.marginal(3), abs=1e-14)


# ---------------------------------------------------------------------------
# numerical two-point lemmas

def test_two_point_entropy_comparison_sweep():
    rng = np.random.default_rng(15)
    lo, hi = math.log(1e-3), math.log(1e3)
    a, b, x, eta = (np.exp(rng.uniform(lo, hi, 20000)) for _ in range(4))
    gap = two_point_entropy_gap(a, b, x, eta)
    scale = np.maximum(1.0, np.abs(a * np.log(a)) + np.abs(b * np.log(b)))
    assert int(np.sum(gap < -1e-12 * scale)) == 0


def test_dirichlet_entropy_corrected_regime():
    """The entropy-vs-Dirichlet comparison holds exactly for multipliers
    above ~2.33 and is genuinely false below.

    Dir/Ent -> 2 as f+ -> f-, and sup over mu of Dir/Ent at value ratio a
    is (a-1)log(a)/(a-1-log(a)); so violations exist iff the multiplier C
    satisfies (2C-1)log C > C(C-1), i.e. C < C* ~ 2.3255. All observed
    violations must sit below C*.
    """
    rng = np.random.default_rng(16)
    n = 100000
    lo, hi = math.log(1e-3), math.log(1e3)
    # restricted sweep: C >= 2.4 -> zero violations
    c = np.exp(rng.uniform(math.log(2.4), math.log(1e3), n))
    f_minus = np.exp(rng.uniform(lo, hi, n))
    f_plus = f_minus * np.exp(rng.uniform(-np.log(c), np.log(c)))
    mu_plus = rng.uniform(1e-6, 1 - 1e-6, n)
    gap = dirichlet_entropy_gap(f_plus, f_minus, c, mu_plus)
    scale = np.maximum(1.0, c * (np.abs(f_plus * np.log(f_plus))
                                 + np.abs(f_minus * np.log(f_minus))))
    assert int(np.sum(gap < -1e-12 * scale)) == 0
    # unrestricted sweep: violations exist but only below C*
    c = np.exp(rng.uniform(0.0, math.log(1e3), n))
    c = np.maximum(c, np.nextafter(1.0, 2.0))
    f_plus = f_minus * np.exp(rng.uniform(-np.log(c), np.log(c)))
    gap = dirichlet_entropy_gap(f_plus, f_minus, c, mu_plus)
    scale = np.maximum(1.0, c * (np.abs(f_plus * np.log(f_plus))
                                 + np.abs(f_minus * np.log(f_minus))))
    bad = gap < -1e-12 * scale
    assert bad.any()
    assert float(c[bad].max()) < DIRICHLET_ENTROPY_C_STAR
    # frozen counterexample (verified in 60-digit arithmetic)
    g1 = dirichlet_entropy_gap(np.array([0.22068379709984878]),
                               np.array([0.22055301361652965]),
                               np.array([1.0370409686981135]),
                               np.array([0.20624067119388964]))
    assert g1[0] == pytest.approx(-6.1105e-9, rel=1e-3)
