"""Invariant suites behind `spinchain verify`: per-check JSON results.

Each check returns {"suite", "check", "status", "measured"}; these are
the module-level invariants (normalization, data processing, operator
identities, conditional sandwiches, factory exactness smoke tests), a
superset of what the unit tests assert and a subset of the acceptance
criteria's budgets.
"""

from __future__ import annotations

import math

import numpy as np

from . import chains, diagnostics, kernels, models, oracle
from .graphs import cycle_graph, generate_random_regular, path_graph
from .models import hardcore_params, ising_params


def _check(suite, name, ok, measured):
    return {"suite": suite, "check": name, "status": "pass" if bool(ok) else "fail",
            "measured": measured}


def oracle_suite(seed: int, fast: bool) -> list:
    rng = np.random.default_rng(seed)
    out = []
    n = 5
    mu = diagnostics._random_dense(rng, n)
    nu = diagnostics._random_dense(rng, n)

    # tilt composition: tilt(tilt(mu,a),b) == tilt(mu, a*b)
    a = rng.uniform(0.2, 2.0, n)
    b = rng.uniform(0.2, 2.0, n)
    lhs = oracle.tilt(oracle.tilt(mu, a), b)
    rhs = oracle.tilt(mu, a * b)
    out.append(_check("oracle", "tilt-composition",
                      np.max(np.abs(lhs.weights - rhs.weights)) < 1e-12,
                      float(np.max(np.abs(lhs.weights - rhs.weights)))))

    # pin/tilt commute (tilt restricted to unpinned coordinates)
    keep = {0: 1, 3: 0}
    lam = rng.uniform(0.2, 2.0, n)
    left = oracle.pin(oracle.tilt(mu, lam), keep)
    lam_sub = np.array([lam[i] for i in range(n) if i not in keep])
    right = oracle.tilt(oracle.pin(mu, keep), lam_sub)
    out.append(_check("oracle", "pin-tilt-commute",
                      np.max(np.abs(left.weights - right.weights)) < 1e-12,
                      float(np.max(np.abs(left.weights - right.weights)))))

    # homogenize: marginals preserved, round trip, generating identity
    hom = oracle.homogenize(mu)
    marg_err = max(abs(hom.marginal(i) - mu.marginal(i)) for i in range(n))
    back = oracle.dehomogenize(hom, n)
    out.append(_check("oracle", "homogenize-roundtrip",
                      marg_err < 1e-12 and np.max(np.abs(back.weights - mu.weights)) < 1e-12,
                      marg_err))
    z = rng.uniform(0.5, 2.0, n)
    zbar = rng.uniform(0.5, 2.0, n)
    ghom = sum(hom.weights[m] * math.prod(
        (z[i] if i < n else zbar[i - n]) for i in range(2 * n) if (m >> i) & 1)
        for m in range(hom.weights.size) if hom.weights[m] > 0)
    gbase = sum(mu.weights[m] * math.prod((z[i] / zbar[i]) for i in range(n) if (m >> i) & 1)
                for m in range(mu.weights.size)) * math.prod(zbar)
    out.append(_check("oracle", "homogenize-generating-identity",
                      abs(ghom - gbase) < 1e-10 * abs(gbase), abs(ghom - gbase)))

    # KL/TV/Pinsker and data processing through a random chain
    trials = 100 if fast else 1000
    div = oracle.divergences(nu, mu)
    pinsker_ok = div["tv"] <= math.sqrt(div["kl"] / 2) + 1e-12
    g = cycle_graph(n)
    model = hardcore_params(1.0, n)
    tm = oracle.chain_transition_matrix("glauber", model, g)
    mu_hc = oracle.enumerate_model(model, g)
    worst_dp = -math.inf
    w_mu = mu_hc.weights[tm.states]
    for _ in range(trials):
        raw = rng.random(tm.states.size) * (w_mu > 0)
        w_nu = raw / raw.sum()
        kl0 = float(np.sum(w_nu[w_nu > 0] * np.log(w_nu[w_nu > 0] / w_mu[w_nu > 0])))
        nu1 = w_nu @ tm.matrix
        mu1 = w_mu @ tm.matrix
        sel = nu1 > 0
        kl1 = float(np.sum(nu1[sel] * np.log(nu1[sel] / mu1[sel])))
        worst_dp = max(worst_dp, kl1 - kl0)
    out.append(_check("oracle", "pinsker-and-data-processing",
                      pinsker_ok and worst_dp <= 1e-10, worst_dp))

    # down operator composition D_{k->l} D_{l->m} = D_{k->m}
    hom4 = oracle.homogenize(diagnostics._random_dense(rng, 4))
    two_step = oracle.down_apply(oracle.down_apply(hom4, 2), 1)
    one_step = oracle.down_apply(hom4, 1)
    out.append(_check("oracle", "down-composition",
                      np.max(np.abs(two_step.weights - one_step.weights)) < 1e-12,
                      float(np.max(np.abs(two_step.weights - one_step.weights)))))

    # down-up walk: reversible, nonnegative spectrum
    duw = oracle.down_up_walk(hom4, 2)
    mu_states = hom4.weights[duw.states]
    mu_states = mu_states / mu_states.sum()
    flux = mu_states[:, None] * duw.matrix
    rev = float(np.max(np.abs(flux - flux.T)))
    sym = flux / np.sqrt(np.outer(mu_states, mu_states))
    min_eig = float(np.linalg.eigvalsh((sym + sym.T) / 2).min())
    out.append(_check("oracle", "down-up-reversible-psd",
                      rev < 1e-12 and min_eig > -1e-9, {"rev": rev, "min_eig": min_eig}))

    # Dirichlet-form bounds with v1/v2 on a small reversible chain
    trials = 100 if fast else 1000
    worst1 = worst2 = -math.inf
    states = tm.states.size
    Q = tm.matrix
    for _ in range(trials):
        f = rng.uniform(0.0, 2.0, states)
        gamma = rng.uniform(0.05, 2.0)
        kappa = max(0.0, np.max(np.where(Q > 0, f[None, :] - f[:, None], -np.inf)))
        ef = np.exp(gamma * f)
        diri = 0.5 * float(np.sum(w_mu[:, None] * Q
                                  * (ef[:, None] - ef[None, :])
                                  * (gamma * f[:, None] - gamma * f[None, :])))
        v1 = float(np.max(np.sum(Q * np.clip(f[:, None] - f[None, :], 0, None) ** 2, axis=1)))
        v2 = float(np.max(np.sum(Q * np.clip(f[None, :] - f[:, None], 0, None) ** 2, axis=1)))
        mean_ef = float(np.dot(w_mu, ef))
        worst1 = max(worst1, diri - gamma * gamma * v1 * mean_ef)
        worst2 = max(worst2, diri - math.exp(gamma * kappa) * gamma * gamma * v2 * mean_ef)
    out.append(_check("oracle", "dirichlet-v1-v2-bounds",
                      worst1 <= 1e-10 and worst2 <= 1e-10,
                      {"v1_excess": worst1, "v2_excess": worst2}))

    # scan is generally non-reversible
    g6 = path_graph(4)
    tm_scan = oracle.chain_transition_matrix("scan", hardcore_params(1.5, 4), g6)
    mu_scan = oracle.enumerate_model(hardcore_params(1.5, 4), g6)
    db = oracle.detailed_balance_residual(tm_scan, mu_scan)
    out.append(_check("oracle", "scan-non-reversible", db > 1e-6, db))
    return out


def models_suite(seed: int, fast: bool) -> list:
    rng = np.random.default_rng(seed)
    out = []
    # hardcore conditional-marginal sandwich under exhaustive pinnings
    lam_c = models.hardcore_critical_fugacity(3)
    worst_lo, worst_hi = 0.0, 0.0
    for g in (cycle_graph(5), generate_random_regular(6, 3, rng)):
        model = hardcore_params(0.9 * lam_c, g.n)
        mu = oracle.enumerate_model(model, g)
        for v in range(g.n):
            nb = set(int(w) for w in g.neighbors(v))
            others = [u for u in range(g.n) if u != v]
            floor_prob = (model.fugacities[v] / (1 + model.fugacities[v])
                          * math.prod(1 / (1 + model.fugacities[w]) for w in nb))
            cap_prob = model.fugacities[v] / (1 + model.fugacities[v])
            for pattern in range(3 ** len(others)):
                assign = {}
                x = pattern
                for u in others:
                    r = x % 3
                    x //= 3
                    if r < 2:
                        assign[u] = r
                if any(assign.get(u, 0) == 1 for u in nb):
                    continue
                try:
                    cond = oracle.pin(mu, assign) if assign else mu
                except ValueError:
                    continue
                pv = cond.marginal(v)
                worst_lo = max(worst_lo, floor_prob - pv)
                worst_hi = max(worst_hi, pv - cap_prob)
    out.append(_check("models", "hardcore-marginal-sandwich",
                      worst_lo <= 1e-12 and worst_hi <= 1e-12,
                      {"floor_excess": worst_lo, "cap_excess": worst_hi}))

    # two-spin odds-ratio sandwich and single-flip ratio bounds
    g = cycle_graph(5)
    params = models.two_spin_params(0.6, 1.2, 0.7)
    tau = 1.0 / (params.beta * params.gamma)
    mu = oracle.enumerate_model(params, g)
    worst = -math.inf
    flip_worst = -math.inf
    for theta_u in (1.0, 0.5):
        tilted = oracle.tilt(mu, np.full(g.n, theta_u))
        for v in range(g.n):
            dv = g.degree(v)
            lo_bound = theta_u * params.lam * params.beta ** dv
            hi_bound = lo_bound * tau ** g.max_degree
            others = [u for u in range(g.n) if u != v]
            for pattern in range(3 ** len(others)):
                assign = {}
                x = pattern
                for u in others:
                    r = x % 3
                    x //= 3
                    if r < 2:
                        assign[u] = r
                cond = oracle.pin(tilted, assign) if assign else tilted
                pv = cond.marginal(v)
                odds = pv / (1 - pv)
                worst = max(worst, lo_bound - odds, odds - hi_bound)
    # single-site flip ratios over full assignments
    for v in range(g.n):
        u = int(g.neighbors(v)[0])
        others = [w for w in range(g.n) if w not in (u, v)]
        for pattern in range(1 << len(others)):
            base = {w: (pattern >> i) & 1 for i, w in enumerate(others)}
            plus = oracle.pin(mu, {**base, v: 1})
            minus = oracle.pin(mu, {**base, v: 0})
            p1, p0 = plus.marginal(u), minus.marginal(u)
            if 0 < p0 < 1 and 0 < p1 < 1:
                r_plus = p1 / p0
                r_minus = (1 - p1) / (1 - p0)
                flip_worst = max(flip_worst, 1 / tau - r_plus, r_plus - 1.0,
                                 1.0 - r_minus, r_minus - tau)
    out.append(_check("models", "two-spin-ratio-sandwich",
                      worst <= 1e-10 and flip_worst <= 1e-10,
                      {"odds_excess": worst, "flip_excess": flip_worst}))

    # tree recursion against the hardcore threshold
    errs = []
    for d in (3, 4, 5):
        lam_d = models.hardcore_critical_fugacity(d)
        p = models.TwoSpinParams(beta=0.0, gamma=1.0, lam=lam_d)
        _, gap = models.tree_recursion_gap(p, d - 1)
        errs.append(abs(gap))
    out.append(_check("models", "tree-recursion-critical-gap",
                      max(errs) < 1e-9, max(errs)))
    return out


def chains_suite(seed: int, fast: bool) -> list:
    rng = np.random.default_rng(seed)
    out = []
    g = cycle_graph(6)
    model = hardcore_params(0.9 * models.hardcore_critical_fugacity(3), g.n)
    mu = oracle.enumerate_model(model, g)
    # field dynamics: irreducible and aperiodic on the support
    tm = oracle.field_dynamics_matrix(model, g, 0.3)
    reach = np.linalg.matrix_power(tm.matrix + np.eye(tm.states.size), tm.states.size)
    irreducible = bool(np.all(reach > 0))
    aperiodic = bool(np.any(np.diag(tm.matrix) > 0))
    out.append(_check("chains", "field-dynamics-ergodic", irreducible and aperiodic,
                      {"irreducible": irreducible, "aperiodic": aperiodic}))

    # balanced dynamics: per-realized-sequence stationarity via site products
    states = tm.states
    pos = {int(s): r for r, s in enumerate(states)}
    seq = [int(rng.integers(g.n)) for _ in range(12)] + list(range(g.n))
    P = np.eye(states.size)
    for v in seq:
        P = P @ oracle.chain_transition_matrix(f"site:{v}", model, g).matrix
    w = mu.weights[states]
    w = w / w.sum()
    resid = float(np.max(np.abs(w @ P - w)))
    out.append(_check("chains", "site-product-stationarity", resid < 1e-11, resid))

    # debt invariant + forced-update accounting on a live run
    state = chains.BalancedState.fresh(chains.new_config(g.n), g, K=2.0)
    ok = True
    for _ in range(200 if fast else 2000):
        chains.balanced_glauber_step(model, g, state, rng, debug=True)
        ok &= int(state.debt.max()) <= state.threshold
    ok &= state.forced_updates <= state.public_steps / (state.K - 1)
    out.append(_check("chains", "balanced-debt-invariant", ok,
                      {"forced": state.forced_updates, "public": state.public_steps}))
    return out


def factories_suite(seed: int, fast: bool) -> list:
    from . import factories as fac
    rng = np.random.default_rng(seed)
    out = []
    trials = 20000 if fast else 100000
    # exponential factory against closed forms
    hits = sum(fac.exp_factory(-1.0, fac.BiasCoin(0.5), rng) for _ in range(trials))
    p, want = hits / trials, math.exp(-0.5)
    z1 = abs(p - want) / math.sqrt(want * (1 - want) / trials)
    hits = sum(fac.exp_factory(-2.0, fac.ConstCoin(1), rng) for _ in range(trials))
    p, want = hits / trials, math.exp(-2.0)
    z2 = abs(p - want) / math.sqrt(want * (1 - want) / trials)
    # logistic factory
    hits = sum(fac.logistic_factory(2.0, fac.BiasCoin(0.5), rng) for _ in range(trials))
    z3 = abs(hits / trials - 0.5) / math.sqrt(0.25 / trials)
    out.append(_check("factories", "primitive-exactness", max(z1, z2, z3) < 4.0,
                      {"z": [z1, z2, z3]}))

    # swap-in equivalence: factory-driven Glauber stays stationary (chi-square)
    g = cycle_graph(6)
    beta = 0.75
    model = ising_params(beta, 0.8)
    mu = oracle.enumerate_model(model, g)
    nchains = 4000 if fast else 20000
    masks = kernels.ising_glauber_ensemble(g.indptr, g.indices, model.lam, model.beta,
                                           40 * g.n, nchains, kernels.chain_seed(seed, 3),
                                           True)
    counts = np.bincount(masks, minlength=mu.weights.size)
    expected = mu.weights * nchains
    sel = expected > 5
    chi2 = float(np.sum((counts[sel] - expected[sel]) ** 2 / expected[sel]))
    dof = int(sel.sum()) - 1
    from scipy import stats as sstats
    pval = float(sstats.chi2.sf(chi2, dof))
    out.append(_check("factories", "factory-swap-in-stationarity", pval > 1e-4,
                      {"chi2": chi2, "dof": dof, "pvalue": pval}))
    return out


SUITES = {
    "oracle": oracle_suite,
    "models": models_suite,
    "chains": chains_suite,
    "factories": factories_suite,
}


def run_suites(which: str, seed: int = 7, fast: bool = False) -> list:
    names = list(SUITES) if which == "all" else [which]
    out = []
    for name in names:
        out.extend(SUITES[name](seed, fast))
    return out
