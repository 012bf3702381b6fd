"""Empirical mixing measurement, concentration experiments, factory cost
profiling, and the acceptance-suite driver.

Chain ensembles run through the kernels module (parallel, per-chain
seeded); everything here is deterministic under a fixed master seed.
The plug-in total-variation estimator is biased upward, so mixing checks
carry an additive bias allowance measured by feeding the estimator exact
stationary samples of the same ensemble size.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats as sstats

from . import chains, factories, kernels, models, oracle
from .graphs import Graph, generate_random_regular, generate_random_max_degree, \
    graph_from_edges, path_graph, cycle_graph, complete_graph
from .models import HardcoreParams, TwoSpinParams, hardcore_params, ising_params

__all__ = [
    "MixingReport",
    "TailReport",
    "estimate_tv",
    "concentration_experiment",
    "factory_cost_profile",
    "run_acceptance_suite",
    "ACCEPTANCE_CRITERIA",
]

BOOTSTRAP_RESAMPLES = 200


@dataclass
class MixingReport:
    chain_spec: str
    steps: int
    ensemble: int
    tv_estimate: float
    bias_allowance: float
    mc_error: float
    reference: str = "exact-oracle"

    def to_json(self) -> dict:
        return {"chain": self.chain_spec, "T": self.steps, "ensemble": self.ensemble,
                "tv_estimate": self.tv_estimate, "bias_allowance": self.bias_allowance,
                "mc_error": self.mc_error, "reference": self.reference}


@dataclass
class TailReport:
    f_spec: str
    kappa: float
    n: int
    samples: int
    mean: float
    sigma_hat: float
    thresholds: list
    exceedance: list
    c_hat: float
    c_hat_scaled: float | None = None

    def to_json(self) -> dict:
        return {"f": self.f_spec, "kappa": self.kappa, "n": self.n,
                "samples": self.samples, "mean": self.mean, "sigma_hat": self.sigma_hat,
                "thresholds": self.thresholds, "exceedance": self.exceedance,
                "c_hat": self.c_hat, "c_hat_scaled": self.c_hat_scaled}

    def to_csv(self) -> str:
        lines = ["threshold,exceedance"]
        for t, e in zip(self.thresholds, self.exceedance):
            lines.append(f"{t},{e}")
        return "\n".join(lines) + "\n"


def _plugin_tv(masks: np.ndarray, mu: oracle.DenseDistribution) -> float:
    counts = np.bincount(masks, minlength=mu.weights.size).astype(np.float64)
    emp = counts / counts.sum()
    return 0.5 * float(np.abs(emp - mu.weights).sum())


def _bootstrap_tv_error(masks: np.ndarray, mu: oracle.DenseDistribution,
                        rng: np.random.Generator,
                        resamples: int = BOOTSTRAP_RESAMPLES) -> float:
    counts = np.bincount(masks, minlength=mu.weights.size).astype(np.float64)
    total = int(counts.sum())
    phat = counts / total
    boots = rng.multinomial(total, phat, size=resamples) / total
    tvs = 0.5 * np.abs(boots - mu.weights[None, :]).sum(axis=1)
    return float(tvs.std())


def _ensemble_masks(model, g: Graph, chain_spec: str, T: int, ensemble: int,
                    seed: int, eps: float = 0.05) -> np.ndarray:
    """Final configurations (bitmasks) of `ensemble` independent chains."""
    name, opts = chains._parse_chain_spec(chain_spec)
    seed = kernels.chain_seed(seed, 0)
    if isinstance(model, HardcoreParams):
        lam = np.ascontiguousarray(model.fugacities)
        if name == "glauber":
            return kernels.hc_glauber_ensemble(g.indptr, g.indices, lam, T, ensemble, seed)
        if name == "balanced":
            K = float(opts.get("K", 2.0))
            thr = math.ceil(K * g.max_degree)
            masks, max_forced = kernels.hc_balanced_ensemble(
                g.indptr, g.indices, lam, thr, T, ensemble, seed)
            if max_forced > T / (K - 1.0):
                raise AssertionError(
                    f"forced-update bound violated: J_T = {max_forced} > T/(K-1)")
            return masks
        if name == "interleaved":
            theta = float(opts.get("theta", 0.1))
            return kernels.hc_interleaved_ensemble(g.indptr, g.indices, lam, theta,
                                                   T, eps, ensemble, seed)
        raise ValueError(f"no ensemble kernel for hardcore chain {chain_spec!r}")
    if isinstance(model, TwoSpinParams) and model.is_ising:
        if name != "glauber":
            raise ValueError(f"no ensemble kernel for Ising chain {chain_spec!r}")
        use_factory = opts.get("path", "naive") == "factory"
        return kernels.ising_glauber_ensemble(g.indptr, g.indices, model.lam,
                                              model.beta, T, ensemble, seed, use_factory)
    raise ValueError(f"no ensemble kernel for model {type(model).__name__}")


def estimate_tv(model, g: Graph, chain_spec: str, T: int, ensemble: int,
                seed: int = 7, eps: float = 0.05) -> MixingReport:
    """Plug-in TV between the time-T ensemble law and the exact stationary
    distribution, with a measured bias allowance and bootstrap error bar."""
    if g.n > oracle.GROUND_CAP:
        raise oracle.CapExceededError("exact reference needs n within the oracle cap")
    mu = oracle.enumerate_model(model, g)
    masks = _ensemble_masks(model, g, chain_spec, T, ensemble, seed, eps)
    rng = np.random.default_rng(kernels.chain_seed(seed, 1))
    exact_masks = oracle.sample_from_dense(mu, rng, size=ensemble)
    bias = _plugin_tv(exact_masks, mu)
    return MixingReport(
        chain_spec=chain_spec, steps=T, ensemble=ensemble,
        tv_estimate=_plugin_tv(masks, mu),
        bias_allowance=bias,
        mc_error=_bootstrap_tv_error(masks, mu, rng),
    )


def _fit_subgaussian(thresholds, exceedance, denom: float) -> float:
    """Slope c of -log(P) against t^2/denom on the two largest thresholds."""
    pts = [(t, p) for t, p in zip(thresholds[-2:], exceedance[-2:]) if p > 0]
    if not pts:
        return float("nan")
    cs = [-math.log(p) * denom / (t * t) for t, p in pts]
    return float(np.mean(cs))


def concentration_experiment(model, g: Graph, samples: int, seed: int = 7,
                             burn_rounds: int = 30, thin: int | None = None,
                             f_spec: str = "occupied-count",
                             kappa: float = 1.0) -> TailReport:
    """Tail behavior of the occupied-count under the stationary law.

    One long chain: interleaved burn-in with recipe defaults, then `thin`
    single-site updates between retained samples. Exceedance is measured
    at 1, 2, 3 sample standard deviations; the sub-Gaussian coefficient is
    fitted on the top two thresholds only.
    """
    if f_spec != "occupied-count":
        raise ValueError("only the occupied-count functional is built in")
    if not isinstance(model, HardcoreParams):
        raise ValueError("concentration sampling is implemented for hardcore models")
    thin = g.n if thin is None else thin
    lam = np.ascontiguousarray(model.fugacities)
    vals = kernels.hc_thinned_occupancy(g.indptr, g.indices, lam,
                                        chains.default_theta(model), burn_rounds,
                                        samples, thin, kernels.chain_seed(seed, 2))
    vals = np.asarray(vals, dtype=np.float64)
    mean = float(vals.mean())
    sig = float(vals.std())
    thresholds = [sig, 2 * sig, 3 * sig]
    exceed = [float(np.mean(vals - mean > t)) for t in thresholds]
    lam_bar = float(np.max(model.fugacities))
    c_hat = _fit_subgaussian(thresholds, exceed, kappa * kappa * g.n)
    c_scaled = _fit_subgaussian(thresholds, exceed, lam_bar * kappa * kappa * g.n)
    return TailReport(f_spec=f_spec, kappa=kappa, n=g.n, samples=samples,
                      mean=mean, sigma_hat=sig, thresholds=thresholds,
                      exceedance=exceed, c_hat=c_hat, c_hat_scaled=c_scaled)


def _star_config(delta: int, s_minus: int) -> tuple[Graph, np.ndarray]:
    """Star with center 0 and delta leaves, s_minus of them at spin -1."""
    g = graph_from_edges([(0, i + 1) for i in range(delta)], n=delta + 1)
    cfg = np.ones(delta + 1, dtype=np.uint8)
    cfg[1:1 + s_minus] = 0
    return g, cfg


def factory_cost_profile(delta_grid=(8, 64, 512), lam: float = 1.0, u0: float = 1.0,
                         coin_trials: int = 30000, timed_trials: int = 500000,
                         seed: int = 7, alpha_cap: float = factories.DEFAULT_ALPHA_CAP):
    """Coins and wall time per update across degrees at fixed interaction.

    Each degree uses beta = exp(-u0/Delta) so the exponent budget
    |c2| = 4*u0 is degree-independent (and within the alpha cap); the
    tested neighborhood is balanced (half +, half -). Wall times compare
    the factory path against the naive full-scan path on identical
    configurations.
    """
    rows = []
    for j, delta in enumerate(delta_grid):
        beta = math.exp(-u0 / delta)
        if u0 > alpha_cap:
            rows.append({"delta": delta, "beta": beta, "capped": True})
            continue
        g, cfg = _star_config(delta, delta // 2)
        sd = kernels.chain_seed(seed, 10 + j)
        plus, reads, max_reads = kernels.ising_factory_trials(
            g.indptr, g.indices, cfg.copy(), 0, lam, beta, coin_trials, sd)
        t0 = time.perf_counter()
        kernels.ising_factory_trials(g.indptr, g.indices, cfg.copy(), 0, lam, beta,
                                     timed_trials, sd + 1)
        t_factory = (time.perf_counter() - t0) / timed_trials
        t0 = time.perf_counter()
        kernels.ising_naive_timed_loop(g.indptr, g.indices, cfg.copy(), 0, lam, beta,
                                       timed_trials, sd + 2)
        t_naive = (time.perf_counter() - t0) / timed_trials
        rows.append({
            "delta": delta, "beta": beta, "capped": False,
            "mean_coins": reads / coin_trials, "max_coins": int(max_reads),
            "plus_freq": plus / coin_trials,
            "sec_per_update_factory": t_factory,
            "sec_per_update_naive": t_naive,
        })
    return rows


# ---------------------------------------------------------------------------
# acceptance criteria


def _criterion(func):
    func._criterion = True
    return func


def _small_instances(seed: int):
    """Graphs for the stationarity sweep: paths, cycles, K4, random cubic."""
    rng = np.random.default_rng(seed)
    graphs = [("path3", path_graph(3)), ("path4", path_graph(4)),
              ("path5", path_graph(5)), ("path6", path_graph(6)),
              ("cycle4", cycle_graph(4)), ("cycle5", cycle_graph(5)),
              ("cycle6", cycle_graph(6)), ("K4", complete_graph(4)),
              ("rr6a", generate_random_regular(6, 3, rng)),
              ("rr6b", generate_random_regular(6, 3, rng))]
    return graphs


@_criterion
def criterion_01_stationarity(seed: int = 7) -> dict:
    """Exact mu P = mu for Glauber/scan/field dynamics; field dynamics
    additionally satisfies detailed balance. Residual tolerance 1e-11."""
    tol = 1e-11
    worst_stat = 0.0
    worst_db = 0.0
    count = 0
    instances = []
    lam3 = models.hardcore_critical_fugacity(3)
    for name, g in _small_instances(seed):
        lam_c = models.hardcore_critical_fugacity(max(3, g.max_degree))
        for frac in (0.3, 0.9):
            instances.append((f"hc-{name}-{frac}", g,
                              hardcore_params(frac * lam_c, g.n)))
    lo, hi = models.ising_worst_case_interval(3, 0.2)
    for name, g in [("cycle5", cycle_graph(5)), ("K4", complete_graph(4)),
                    ("rr6", generate_random_regular(6, 3, np.random.default_rng(seed + 1)))]:
        for beta in (lo + 0.1 * (hi - lo), 1.0 / (lo + 0.1 * (hi - lo))):
            instances.append((f"is-{name}-{beta:.3f}", g, ising_params(beta, 1.0)))
    for tag, g, model in instances:
        mu = oracle.enumerate_model(model, g)
        count += 1
        for spec in ("glauber", "scan"):
            tm = oracle.chain_transition_matrix(spec, model, g)
            worst_stat = max(worst_stat, oracle.stationarity_residual(tm, mu))
        for theta in (0.1, 0.5):
            tm = oracle.field_dynamics_matrix(model, g, theta)
            worst_stat = max(worst_stat, oracle.stationarity_residual(tm, mu))
            worst_db = max(worst_db, oracle.detailed_balance_residual(tm, mu))
    ok = worst_stat <= tol and worst_db <= tol and count >= 20
    return {"criterion_id": 1, "status": "pass" if ok else "fail",
            "measured": {"instances": count, "max_stationarity_residual": worst_stat,
                         "max_detailed_balance_residual": worst_db},
            "tolerance": tol}


def _random_dense(rng: np.random.Generator, n: int) -> oracle.DenseDistribution:
    w = rng.random(1 << n) + 1e-3
    return oracle.DenseDistribution.from_weights(tuple(range(n)), w)


def _labelled_weights(dist: oracle.DenseDistribution, rename=lambda x: x) -> dict:
    out = {}
    for mask, w in enumerate(dist.weights):
        if w > 0:
            key = frozenset(rename(dist.ground[i]) for i in range(dist.m)
                            if (mask >> i) & 1)
            out[key] = out.get(key, 0.0) + float(w)
    return out


@_criterion
def criterion_02_blowup_identities(seed: int = 7, instances: int = 50) -> dict:
    """Copy-splitting preserves KL exactly, and its conditionals are
    copy-splittings of conditionals of the rescaled base distribution."""
    tol = 1e-11
    rng = np.random.default_rng(seed)
    worst_kl = 0.0
    worst_cond = 0.0
    for _ in range(instances):
        n = int(rng.integers(2, 5))
        ks = [int(k) for k in rng.integers(1, 4, size=n)]
        mu = _random_dense(rng, n)
        nu = _random_dense(rng, n)
        mu_k = oracle.blow_up(mu, ks)
        nu_k = oracle.blow_up(nu, ks)
        worst_kl = max(worst_kl, abs(oracle.divergences(nu, mu)["kl"]
                                     - oracle.divergences(nu_k, mu_k)["kl"]))
        i = int(rng.integers(n))
        j = int(rng.integers(ks[i]))
        # included copy: conditional == blow-up of mu(.|i) on the other elements
        cond_in = oracle.pin(mu_k, {(i, j): 1})
        cond_in = oracle.marginalize(cond_in, [(i, jj) for jj in range(ks[i]) if jj != j])
        ref_in = oracle.blow_up(oracle.pin(mu, {i: 1}),
                                [ks[t] for t in range(n) if t != i])
        a = _labelled_weights(cond_in)
        b = _labelled_weights(ref_in)
        for key in set(a) | set(b):
            worst_cond = max(worst_cond, abs(a.get(key, 0.0) - b.get(key, 0.0)))
        # excluded copy: conditional == blow-up of ((k_i-1)/k_i field at i) * mu
        cond_out = oracle.pin(mu_k, {(i, j): 0})
        if ks[i] > 1:
            lamv = np.ones(n)
            lamv[i] = (ks[i] - 1) / ks[i]
            ref_base = oracle.tilt(mu, lamv)
            ks_out = list(ks)
            ks_out[i] = ks[i] - 1
            ref_out = oracle.blow_up(ref_base, ks_out)
            remaining = [jj for jj in range(ks[i]) if jj != j]
            renumber = {(i, jj): (i, t) for t, jj in enumerate(remaining)}
            a = _labelled_weights(cond_out, rename=lambda x: renumber.get(x, x))
        else:
            ref_out = oracle.blow_up(oracle.pin(mu, {i: 0}),
                                     [ks[t] for t in range(n) if t != i])
            a = _labelled_weights(cond_out)
        b = _labelled_weights(ref_out)
        for key in set(a) | set(b):
            worst_cond = max(worst_cond, abs(a.get(key, 0.0) - b.get(key, 0.0)))
    ok = worst_kl <= tol and worst_cond <= tol
    return {"criterion_id": 2, "status": "pass" if ok else "fail",
            "measured": {"max_kl_mismatch": worst_kl, "max_conditional_mismatch": worst_cond},
            "tolerance": tol}


@_criterion
def criterion_03_blowup_spectrum(seed: int = 7, instances: int = 50) -> dict:
    """Influence-matrix spectrum under copy-splitting: spectrum of the split
    (tilted) distribution equals the base spectrum plus an eigenvalue 1
    with multiplicity sum(k_i - 1)."""
    tol = 1e-8
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(2, 5))
        ks = [int(k) for k in rng.integers(1, 4, size=n)]
        mu = _random_dense(rng, n)
        lam_prime = rng.uniform(0.05, 1.0, size=sum(ks))
        lam_base = np.empty(n)
        ofs = 0
        for i, k in enumerate(ks):
            lam_base[i] = lam_prime[ofs:ofs + k].mean()
            ofs += k
        mu_k = oracle.blow_up(mu, ks)
        _, _, eig_big, _ = oracle.correlation_matrix(oracle.tilt(mu_k, lam_prime))
        _, _, eig_small, _ = oracle.correlation_matrix(oracle.tilt(mu, lam_base))
        expected = np.sort(np.concatenate([eig_small,
                                           np.ones(sum(ks) - n)]))[::-1]
        worst = max(worst, float(np.max(np.abs(np.sort(eig_big)[::-1] - expected))))
    ok = worst <= tol
    return {"criterion_id": 3, "status": "pass" if ok else "fail",
            "measured": {"max_eigenvalue_mismatch": worst}, "tolerance": tol}


@_criterion
def criterion_04_entropy_contraction(seed: int = 7) -> dict:
    """Post-scan measures contract in KL under the homogenized drop
    operator: ratio < 1 - 1e-4 at ell = ceil(n/3), nonincreasing in ell."""
    rng = np.random.default_rng(seed)
    lam = 0.5 * models.hardcore_critical_fugacity(3)
    worst_ratio = 0.0
    monotone = True
    measures = 0
    graphs = []
    for _ in range(5):
        graphs.append(generate_random_max_degree(5, 3, rng))
        graphs.append(generate_random_regular(6, 3, rng))
    for g in graphs:
        model = hardcore_params(lam, g.n)
        mu = oracle.enumerate_model(model, g)
        scan = oracle.chain_transition_matrix("scan", model, g)
        supp = [int(s) for s in scan.states]
        full = np.zeros(mu.weights.size)
        for _ in range(2):
            start = np.zeros(mu.weights.size)
            start[int(rng.choice(supp))] = 1.0
            post = start[scan.states] @ scan.matrix
            full[:] = 0.0
            full[scan.states] = post
            nu = oracle.DenseDistribution.from_weights(mu.ground, full)
            measures += 1
            ratios = []
            for ell in range(1, g.n + 1):
                ratios.append(oracle.entropy_contraction_ratio(nu, mu, ell)["ratio"])
            pivot = ratios[math.ceil(g.n / 3) - 1]
            worst_ratio = max(worst_ratio, pivot)
            if np.any(np.diff(ratios) > 1e-12):
                monotone = False
    ok = worst_ratio < 1 - 1e-4 and monotone and measures >= 20
    return {"criterion_id": 4, "status": "pass" if ok else "fail",
            "measured": {"measures": measures, "max_pivot_ratio": worst_ratio,
                         "nonincreasing_in_ell": monotone},
            "tolerance": 1 - 1e-4}


def two_point_entropy_gap(a, b, x, eta):
    """RHS - LHS of the two-point entropy comparison; nonnegative when the
    inequality holds. Vectorized."""
    def ent(a, b, x):
        m = (a + x * b) / (x + 1.0)
        return (a * np.log(a) + x * b * np.log(b)) / (x + 1.0) - m * np.log(m)
    lhs = ent(a, b, x)
    rhs = np.maximum(eta, 1.0 / eta) * ent(a, b, eta * x)
    return rhs - lhs


def dirichlet_entropy_gap(f_plus, f_minus, c, mu_plus):
    """LHS - RHS of the entropy-vs-Dirichlet two-point comparison;
    nonnegative when the inequality holds. Vectorized."""
    mu_minus = 1.0 - mu_plus
    mean = mu_minus * f_minus + mu_plus * f_plus
    ent = mu_minus * f_minus * np.log(f_minus) + mu_plus * f_plus * np.log(f_plus) \
        - mean * np.log(mean)
    dir_form = mu_minus * f_minus * np.log(f_minus) + mu_plus * f_plus * np.log(f_plus) \
        - mean * (mu_plus * np.log(f_plus) + mu_minus * np.log(f_minus))
    return c * ent - dir_form


# Above this multiplier the entropy-vs-Dirichlet comparison is a theorem;
# below it, it is genuinely false: sup over mu of Dirichlet/entropy at
# value ratio a equals (a-1)log(a)/(a-1-log(a)), which tends to 2 as
# a -> 1 and exceeds C exactly when (2C-1)log C > C(C-1). See the
# companion test of the C >= 2.4 regime in tests/test_oracle.py.
DIRICHLET_ENTROPY_C_STAR = 2.3255


@_criterion
def criterion_05_numerical_lemmas(seed: int = 7, tuples: int = 100000) -> dict:
    """Vectorized sweeps of the two-point entropy comparison and the
    entropy-vs-Dirichlet inequality; zero violations beyond 1e-12*scale.

    The second sweep deliberately covers multipliers all the way down to 1,
    where the inequality is false (the entropy-tensorization machinery only
    ever invokes it with large multipliers); this check records those
    violations and their C-range rather than masking them.
    """
    rng = np.random.default_rng(seed)
    lo, hi = math.log(1e-3), math.log(1e3)
    a, b, x, eta = (np.exp(rng.uniform(lo, hi, tuples)) for _ in range(4))
    gap1 = two_point_entropy_gap(a, b, x, eta)
    scale1 = np.maximum(1.0, np.abs(a * np.log(a)) + np.abs(b * np.log(b)))
    viol1 = int(np.sum(gap1 < -1e-12 * scale1))
    c = np.exp(rng.uniform(0, math.log(1e3), tuples))
    c = np.maximum(c, np.nextafter(1.0, 2.0))
    f_minus = np.exp(rng.uniform(lo, hi, tuples))
    ratio = np.exp(rng.uniform(-np.log(c), np.log(c)))
    f_plus = f_minus * ratio
    mu_plus = rng.uniform(1e-6, 1 - 1e-6, tuples)
    gap2 = dirichlet_entropy_gap(f_plus, f_minus, c, mu_plus)
    scale2 = np.maximum(1.0, c * (np.abs(f_plus * np.log(f_plus))
                                  + np.abs(f_minus * np.log(f_minus))))
    bad = gap2 < -1e-12 * scale2
    viol2 = int(np.sum(bad))
    ok = viol1 == 0 and viol2 == 0
    measured = {"tuples": tuples, "entropy_compare_violations": viol1,
                "dirichlet_entropy_violations": viol2}
    if viol2:
        measured["max_violating_C"] = float(c[bad].max())
        measured["violations_above_C_star"] = int(np.sum(bad & (c >= DIRICHLET_ENTROPY_C_STAR)))
        measured["note"] = ("entropy-vs-Dirichlet comparison is false for C < "
                            f"{DIRICHLET_ENTROPY_C_STAR} (Dirichlet/entropy -> 2 "
                            "as the two values merge)")
    return {"criterion_id": 5, "status": "pass" if ok else "fail",
            "measured": measured, "tolerance": 0}


def _mixing_instance(seed: int = 7):
    rng = np.random.default_rng(seed)
    g = generate_random_regular(12, 3, rng)
    lam = 0.9 * models.hardcore_critical_fugacity(3)
    return g, hardcore_params(lam, g.n)


@_criterion
def criterion_06_desk_scale_mixing(seed: int = 7, ensemble: int = 200000) -> dict:
    """Plug-in TV <= 0.05 + bias allowance for the balanced chain at
    T = ceil(8 n log(n/0.05)) and for the interleaved sampler at T = 40."""
    g, model = _mixing_instance(seed)
    eps = 0.05
    T = math.ceil(8 * g.n * math.log(g.n / eps))
    rep_bal = estimate_tv(model, g, "balanced:K=2", T, ensemble, seed=seed, eps=eps)
    rep_int = estimate_tv(model, g, "interleaved:theta=0.1", 40, ensemble,
                          seed=seed + 1, eps=eps)
    ok = (rep_bal.tv_estimate <= eps + rep_bal.bias_allowance
          and rep_int.tv_estimate <= eps + rep_int.bias_allowance)
    return {"criterion_id": 6, "status": "pass" if ok else "fail",
            "measured": {"balanced": rep_bal.to_json(), "interleaved": rep_int.to_json(),
                         "T_balanced": T},
            "tolerance": eps}


@_criterion
def criterion_07_factory_exactness(seed: int = 7, trials: int = 100000) -> dict:
    """Factory update frequencies match the closed-form conditionals within
    4 binomial sigma on the full (lambda, beta, degree, s) grid; same for
    the lazy hardcore update on random configurations."""
    worst_z = 0.0
    fallbacks = 0
    points = 0
    idx = 0
    for lam in (0.25, 1.0):
        for beta in (0.85, 0.95, 1.05):
            for delta in (4, 16, 64):
                for s_minus in (0, delta // 2, delta):
                    idx += 1
                    params = ising_params(beta, lam)
                    p_exact = models.two_spin_conditional(params, delta, s_minus)
                    g, cfg = _star_config(delta, s_minus)
                    if factories.ising_factory_caps_ok(params, delta):
                        plus, _, _ = kernels.ising_factory_trials(
                            g.indptr, g.indices, cfg, 0, lam, beta, trials,
                            kernels.chain_seed(seed, idx))
                    else:
                        # cap exceeded: the update path falls back to the
                        # naive full-scan implementation, still exact
                        fallbacks += 1
                        plus = kernels.ising_naive_timed_loop(
                            g.indptr, g.indices, cfg, 0, lam, beta, trials,
                            kernels.chain_seed(seed, idx))
                    phat = plus / trials
                    sigma = math.sqrt(max(p_exact * (1 - p_exact), 1.0 / trials) / trials)
                    worst_z = max(worst_z, abs(phat - p_exact) / sigma)
                    points += 1
    # hardcore: 10 random independent-set configurations
    rng = np.random.default_rng(seed)
    g = generate_random_regular(30, 3, rng)
    lam_vec = hardcore_params(0.8 * models.hardcore_critical_fugacity(3), g.n)
    for rep in range(10):
        cfg = np.zeros(g.n, dtype=np.uint8)
        for v in rng.permutation(g.n)[: g.n // 2]:
            if not cfg[g.neighbors(v)].any():
                cfg[v] = 1
        v = int(rng.integers(g.n))
        cfg[v] = 0
        p_exact = chains.conditional_occupied(lam_vec, g, cfg, v)
        occ, _ = kernels.hc_factory_trials(g.indptr, g.indices,
                                           np.ascontiguousarray(lam_vec.fugacities),
                                           cfg, v, trials, kernels.chain_seed(seed, 500 + rep))
        sigma = math.sqrt(max(p_exact * (1 - p_exact), 1.0 / trials) / trials)
        worst_z = max(worst_z, abs(occ / trials - p_exact) / sigma)
        points += 1
    ok = worst_z <= 4.0
    return {"criterion_id": 7, "status": "pass" if ok else "fail",
            "measured": {"grid_points": points, "worst_z_score": worst_z,
                         "cap_fallbacks": fallbacks},
            "tolerance": 4.0}


@_criterion
def criterion_08_amortized_cost(seed: int = 7) -> dict:
    """Mean coins per factory update is flat across degrees (ratio <= 2 at
    the fixed exponent budget) and the naive path at degree 512 is at
    least 10x slower in wall time."""
    rows = factory_cost_profile(seed=seed)
    coins = [r["mean_coins"] for r in rows if not r["capped"]]
    ratio = max(coins) / min(coins)
    big = rows[-1]
    wall_ratio = big["sec_per_update_naive"] / big["sec_per_update_factory"]
    ok = ratio <= 2.0 and wall_ratio >= 10.0
    return {"criterion_id": 8, "status": "pass" if ok else "fail",
            "measured": {"mean_coins": coins, "coin_ratio": ratio,
                         "wall_ratio_naive_over_factory_at_512": wall_ratio,
                         "rows": rows},
            "tolerance": {"coin_ratio": 2.0, "wall_ratio": 10.0}}


@_criterion
def criterion_09_balance_bound(seed: int = 7, runs: int = 1000, T: int = 10000) -> dict:
    """Forced updates J_T never exceed T/(K-1), deterministically, across
    seeded runs at K in {1.5, 2, 4} (threshold ceil(K*Delta))."""
    rng = np.random.default_rng(seed)
    g = generate_random_regular(30, 3, rng)
    lam = np.ascontiguousarray(
        hardcore_params(0.9 * models.hardcore_critical_fugacity(3), g.n).fugacities)
    worst_slack = math.inf
    violations = 0
    idx = 0
    per_k = [runs // 3 + (1 if i < runs % 3 else 0) for i in range(3)]
    for K, reps in zip((1.5, 2.0, 4.0), per_k):
        thr = math.ceil(K * g.max_degree)
        bound = T / (K - 1.0)
        for _ in range(reps):
            idx += 1
            J = kernels.hc_balanced_forced_count(g.indptr, g.indices, lam, thr, T,
                                                 kernels.chain_seed(seed, idx))
            if J > bound:
                violations += 1
            worst_slack = min(worst_slack, bound - J)
    ok = violations == 0
    return {"criterion_id": 9, "status": "pass" if ok else "fail",
            "measured": {"runs": idx, "violations": violations,
                         "min_slack": worst_slack},
            "tolerance": 0}


@_criterion
def criterion_10_dobrushin(seed: int = 7) -> dict:
    """Exact neighbor influence equals the closed-form maximum over the
    minus-count and is dominated by lam*|beta^2-1|*max(beta^(D-2), beta^-D)."""
    tol = 1e-12
    worst_eq = 0.0
    worst_dom = -math.inf
    points = 0
    for lam in (0.25, 0.5, 1.0):
        for beta in (0.7, 0.9, 1.2, 1.4):
            for delta in (3, 7, 15):
                if points >= 20 or lam > 1:
                    continue
                points += 1
                exact = models.dobrushin_entry_exact(lam, beta, delta)
                # closed-form display: max over s of the two-conditional gap
                best = 0.0
                for s in range(delta):
                    num = lam * beta ** (delta - 2 * s - 2) * abs(beta * beta - 1)
                    den = (1 + lam * beta ** (delta - 2 * s)) * (1 + lam * beta ** (delta - 2 * s - 2))
                    best = max(best, num / den)
                bound = lam * abs(beta * beta - 1) * max(beta ** (delta - 2), beta ** (-delta))
                worst_eq = max(worst_eq, abs(exact - best))
                worst_dom = max(worst_dom, exact - bound)
    ok = worst_eq <= tol and worst_dom <= tol and points == 20
    return {"criterion_id": 10, "status": "pass" if ok else "fail",
            "measured": {"points": points, "max_form_mismatch": worst_eq,
                         "max_bound_excess": worst_dom},
            "tolerance": tol}


@_criterion
def criterion_11_concentration(seed: int = 7, samples: int = 100000) -> dict:
    """Occupied-count tails on a 3-regular n=2000 instance: exceedance at
    3 sigma strictly below 2 sigma, fitted coefficient positive, and the
    independent-spin control matches the exact binomial tail within 0.01."""
    rng = np.random.default_rng(seed)
    g = generate_random_regular(2000, 3, rng)
    model = hardcore_params(0.8 * models.hardcore_critical_fugacity(3), g.n)
    rep = concentration_experiment(model, g, samples, seed=seed)
    # independent-spin control: plus-count of beta=1, lambda=1 Ising is Binomial(n, 1/2)
    ctrl = rng.binomial(g.n, 0.5, size=samples).astype(np.float64)
    m, s = ctrl.mean(), ctrl.std()
    emp = float(np.mean(ctrl - m > 2 * s))
    exact_tail = float(sstats.binom.sf(math.floor(m + 2 * s), g.n, 0.5))
    ok = (rep.exceedance[2] < rep.exceedance[1]
          and rep.c_hat > 0
          and abs(emp - exact_tail) <= 0.01)
    return {"criterion_id": 11, "status": "pass" if ok else "fail",
            "measured": {"tail_report": rep.to_json(),
                         "control_empirical": emp, "control_exact": exact_tail},
            "tolerance": {"control": 0.01}}


@_criterion
def criterion_12_thresholds(seed: int = 7) -> dict:
    """Critical-fugacity values at degrees 3-5, the critical-field product
    identity, and the lower-bound sandwich on a 50-point grid."""
    tol = 1e-12
    ok = True
    measured = {}
    expected = {3: 4.0, 4: 27.0 / 16.0, 5: 256.0 / 243.0}
    worst = 0.0
    for d, val in expected.items():
        worst = max(worst, abs(models.hardcore_critical_fugacity(d) - val))
    measured["critical_fugacity_error"] = worst
    ok &= worst <= tol
    rng = np.random.default_rng(seed)
    worst_prod = 0.0
    worst_lower = -math.inf
    grid = 0
    while grid < 50:
        beta = float(rng.uniform(0.1, 0.95))
        gamma = float(rng.uniform(beta, min(1.0 / beta, 3.0)))
        bg = beta * gamma
        if bg > 0.98:  # keep d (and gamma^d) moderate
            continue
        delta_gap = float(rng.uniform(0.0, 0.6))
        dbar = (1 + math.sqrt(bg)) / (1 - math.sqrt(bg))
        d = int(math.ceil((1 - delta_gap) * dbar)) + int(rng.integers(1, 6))
        case, info = models.antiferro_uniqueness_lambdas(beta, gamma, delta_gap, d)
        if case != "interval":
            continue
        grid += 1
        rel = abs(info["lambda1"] * info["lambda2"] - (gamma / beta) ** (d + 1)) \
            / (gamma / beta) ** (d + 1)
        worst_prod = max(worst_prod, rel)
        lower, value, upper = models.lambda1_bounds_check(beta, gamma, delta_gap, d)
        worst_lower = max(worst_lower, lower - value, value - upper)
    measured["grid_points"] = grid
    measured["max_product_identity_rel_err"] = worst_prod
    measured["max_sandwich_excess"] = worst_lower
    ok &= worst_prod <= 1e-9 and worst_lower <= 1e-12
    return {"criterion_id": 12, "status": "pass" if bool(ok) else "fail",
            "measured": measured, "tolerance": {"values": tol, "product": 1e-9}}


ACCEPTANCE_CRITERIA = [
    criterion_01_stationarity,
    criterion_02_blowup_identities,
    criterion_03_blowup_spectrum,
    criterion_04_entropy_contraction,
    criterion_05_numerical_lemmas,
    criterion_06_desk_scale_mixing,
    criterion_07_factory_exactness,
    criterion_08_amortized_cost,
    criterion_09_balance_bound,
    criterion_10_dobrushin,
    criterion_11_concentration,
    criterion_12_thresholds,
]


def run_acceptance_suite(seed: int = 7, only: int | None = None,
                         fast: bool = False, log=print) -> dict:
    """Run every acceptance criterion (or a single one) and report.

    fast=True shrinks the Monte-Carlo budgets by ~10x for smoke runs;
    the acceptance thresholds themselves never change.
    """
    results = []
    for func in ACCEPTANCE_CRITERIA:
        cid = int(func.__name__.split("_")[1])
        if only is not None and cid != only:
            continue
        kwargs = {"seed": seed}
        if fast:
            if cid == 6:
                kwargs["ensemble"] = 20000
            elif cid == 7:
                kwargs["trials"] = 10000
            elif cid == 9:
                kwargs["runs"] = 100
            elif cid == 11:
                kwargs["samples"] = 20000
            elif cid == 5:
                kwargs["tuples"] = 10000
        t0 = time.perf_counter()
        res = func(**kwargs)
        res["seconds"] = round(time.perf_counter() - t0, 3)
        results.append(res)
        if log:
            log(f"criterion {res['criterion_id']:2d}: {res['status'].upper():4s} "
                f"({res['seconds']:.1f}s)")
    status = "pass" if all(r["status"] == "pass" for r in results) else "fail"
    return {"status": status, "seed": seed, "results": results}
