"""Markov chains: Glauber, systematic scan, balanced dynamics, field
dynamics, and the interleaved sampler driver.

These are the reference (python-level) implementations used by the tests
and by run_schedule; diagnostics routes large ensembles through the
kernels module instead. Configurations are uint8 arrays with 1 meaning
occupied/+1; for hardcore runs every update preserves the independent-set
invariant (checked when debug=True).
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from . import oracle
from .graphs import Graph
from .models import HardcoreParams, TwoSpinParams, two_spin_conditional

__all__ = [
    "SpinConfig",
    "BalancedState",
    "FieldDynConfig",
    "new_config",
    "config_to_mask",
    "mask_to_config",
    "config_hex",
    "config_hash",
    "is_independent",
    "conditional_occupied",
    "glauber_step",
    "systematic_scan_pass",
    "balanced_glauber_step",
    "field_dynamics_step",
    "interleaved_sampler",
    "default_theta",
    "inner_steps",
    "run_schedule",
]

SpinConfig = np.ndarray  # uint8 per site, 1 = occupied / +1


def new_config(n: int, fill: int = 0) -> SpinConfig:
    return np.full(n, fill, dtype=np.uint8)


def config_to_mask(config: SpinConfig) -> int:
    mask = 0
    for v in range(config.size):
        if config[v]:
            mask |= 1 << v
    return mask


def mask_to_config(mask: int, n: int) -> SpinConfig:
    return np.array([(mask >> v) & 1 for v in range(n)], dtype=np.uint8)


def config_hex(config: SpinConfig) -> str:
    """Bit-packed hex string, site 0 = most significant bit of first byte."""
    return np.packbits(config.astype(np.uint8)).tobytes().hex()


def config_hash(config: SpinConfig) -> int:
    return zlib.crc32(np.packbits(config.astype(np.uint8)).tobytes())


def is_independent(g: Graph, config: SpinConfig) -> bool:
    for u, v in g.edges():
        if config[u] and config[v]:
            return False
    return True


def conditional_occupied(model, g: Graph, config: SpinConfig, v: int) -> float:
    """P(v occupied/+1 | rest of config) for either model."""
    if isinstance(model, HardcoreParams):
        lam = model.fugacities[v]
        nbrs = g.neighbors(v)
        if nbrs.size and config[nbrs].any():
            return 0.0
        return lam / (1.0 + lam)
    nbrs = g.neighbors(v)
    s_minus = int(nbrs.size - config[nbrs].sum())
    return two_spin_conditional(model, g.degree(v), s_minus)


def _resample_site(model, g, config, v, rng, debug=False):
    p = conditional_occupied(model, g, config, v)
    config[v] = 1 if rng.random() < p else 0
    if debug and isinstance(model, HardcoreParams):
        assert is_independent(g, config), "independent-set invariant broken"


def glauber_step(model, g: Graph, config: SpinConfig, rng: np.random.Generator,
                 debug: bool = False) -> SpinConfig:
    """Resample one uniformly random site from its exact conditional."""
    v = int(rng.integers(g.n))
    _resample_site(model, g, config, v, rng, debug)
    return config


def systematic_scan_pass(model, g: Graph, config: SpinConfig, order,
                         rng: np.random.Generator, debug: bool = False) -> SpinConfig:
    """Resample every site once, in the given fixed order."""
    if sorted(order) != list(range(g.n)):
        raise ValueError("order must be a permutation of the vertices")
    for v in order:
        _resample_site(model, g, config, v, rng, debug)
    return config


@dataclass
class BalancedState:
    """Configuration plus per-site debt counters for balanced dynamics.

    debt[v] counts neighbor updates since v's last update; after every
    public step max debt <= threshold and debt at the just-updated site
    is 0. update_log_len counts all single-site updates (public + forced).
    """

    config: SpinConfig
    debt: np.ndarray
    K: float
    threshold: int
    update_log_len: int = 0
    public_steps: int = 0
    forced_updates: int = 0

    @staticmethod
    def fresh(config: SpinConfig, g: Graph, K: float = 2.0) -> "BalancedState":
        if K <= 1.0:
            raise ValueError("balance parameter K must exceed 1")
        return BalancedState(config=config, debt=np.zeros(g.n, dtype=np.int64),
                             K=K, threshold=math.ceil(K * g.max_degree))


def balanced_glauber_step(model, g: Graph, state: BalancedState,
                          rng: np.random.Generator, debug: bool = False) -> BalancedState:
    """One public uniform update plus any forced catch-up updates.

    Forced updates fire at the smallest-index site whose debt exceeds the
    threshold, until none remain. Deterministically, the total number of
    forced updates over T public steps is at most T/(K-1).
    """
    v = int(rng.integers(g.n))
    _resample_site(model, g, state.config, v, rng, debug)
    state.debt[g.neighbors(v)] += 1
    state.debt[v] = 0
    j = 0
    while True:
        over = np.nonzero(state.debt > state.threshold)[0]
        if over.size == 0:
            break
        w = int(over[0])  # smallest index
        _resample_site(model, g, state.config, w, rng, debug)
        state.debt[g.neighbors(w)] += 1
        state.debt[w] = 0
        j += 1
    state.update_log_len += 1 + j
    state.public_steps += 1
    state.forced_updates += j
    if debug:
        assert int(state.debt.max(initial=0)) <= state.threshold
    return state


@dataclass
class FieldDynConfig:
    """Resampling-set fraction theta, inner budget m, and resampler choice.

    resampler is 'exact-oracle' (exact enumeration of the tilted pinned
    model; small n only) or 'glauber-m' (m lazy updates from the
    empty/all-minus start). m=None with glauber-m recomputes the budget
    per step from the realized resample-set size:
    ceil(10*|S|*log(|S|*rounds/eps)).
    """

    theta: float
    m: int | None = None
    resampler: str = "exact-oracle"
    rounds: int = 1
    eps: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0,1)")
        if self.resampler not in ("exact-oracle", "glauber-m"):
            raise ValueError(f"unknown resampler {self.resampler!r}")
        if self.m is not None and self.m < 0:
            raise ValueError("m must be nonnegative")


def _tilted(model, theta: float):
    if isinstance(model, HardcoreParams):
        return HardcoreParams(model.fugacities * theta)
    return TwoSpinParams(beta=model.beta, gamma=model.gamma,
                         lam=model.lam * theta, flipped=model.flipped)


def field_dynamics_step(model, g: Graph, config: SpinConfig, fd: FieldDynConfig,
                        rng: np.random.Generator, debug: bool = False) -> SpinConfig:
    """Unpin a theta-thinned set of occupied sites and resample it.

    The resample set S holds every unoccupied site plus each occupied site
    independently with probability theta; sites outside S keep their
    (occupied) values, and S is redrawn from the theta-tilted model
    conditioned on the pinned part.
    """
    n = g.n
    occ = config == 1
    keep = occ & (rng.random(n) >= fd.theta)
    S = np.nonzero(~keep)[0]
    tilted = _tilted(model, fd.theta)
    if fd.resampler == "exact-oracle":
        if n > oracle.GROUND_CAP:
            raise oracle.CapExceededError(
                f"exact resampler needs n <= {oracle.GROUND_CAP}, got {n}")
        dist = oracle.enumerate_model(tilted, g)
        pinned = {int(i): 1 for i in np.nonzero(keep)[0]}
        cond = oracle.pin(dist, pinned) if pinned else dist
        sub = int(oracle.sample_from_dense(cond, rng))
        config[S] = 0
        for j, lbl in enumerate(cond.ground):
            config[int(lbl)] = (sub >> j) & 1
        for i in pinned:
            config[i] = 1
    else:
        config[S] = 0  # empty / all-minus start on the resample set
        m_eff = fd.m if fd.m is not None else inner_steps(S.size, fd.rounds, fd.eps)
        for _ in range(m_eff):
            if S.size == 0:
                break
            v = int(S[rng.integers(S.size)])
            _resample_site(tilted, g, config, v, rng)
    if debug and isinstance(model, HardcoreParams):
        assert is_independent(g, config)
    return config


def default_theta(model, delta_gap: float | None = None) -> float:
    """Recipe defaults: 1/10 for hardcore, delta^2/64 for Ising."""
    if isinstance(model, HardcoreParams):
        return 0.1
    if delta_gap is None:
        raise ValueError("Ising theta recipe needs the uniqueness gap delta")
    return delta_gap * delta_gap / 64.0


def inner_steps(n_resample: int, rounds: int, eps: float) -> int:
    """m = ceil(10 * |S| * log(|S| * T / eps)), floored at log 2."""
    if n_resample == 0:
        return 0
    arg = max(2.0, n_resample * rounds / eps)
    return math.ceil(10.0 * n_resample * math.log(arg))


def interleaved_sampler(model, g: Graph, start: SpinConfig, theta: float,
                        m: int | str, T: int, rng: np.random.Generator,
                        eps: float = 0.05, debug: bool = False,
                        rounds_total: int | None = None) -> SpinConfig:
    """T rounds of (systematic scan, then approximate tilted resample).

    m='auto' recomputes the inner budget per round from the realized
    resample-set size; rounds_total overrides the T used inside that
    formula when the caller drives rounds one at a time.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    budget_rounds = T if rounds_total is None else rounds_total
    config = start.copy()
    order = list(range(g.n))
    tilted = _tilted(model, theta)
    for _ in range(T):
        systematic_scan_pass(model, g, config, order, rng, debug)
        occ = config == 1
        keep = occ & (rng.random(g.n) >= theta)
        S = np.nonzero(~keep)[0]
        m_round = inner_steps(S.size, budget_rounds, eps) if m == "auto" else int(m)
        config[S] = 0
        for _ in range(m_round):
            if S.size == 0:
                break
            v = int(S[rng.integers(S.size)])
            _resample_site(tilted, g, config, v, rng)
    return config


def _parse_chain_spec(spec: str) -> tuple[str, dict]:
    name, _, rest = spec.partition(":")
    opts: dict = {}
    if rest:
        for part in rest.split(","):
            key, _, val = part.partition("=")
            opts[key.strip()] = val.strip()
    return name.strip(), opts


def run_schedule(chain_spec: str, model, g: Graph, start: SpinConfig, steps: int,
                 rng: np.random.Generator, callbacks=None, stride: int = 1,
                 debug: bool = False, update_path: str = "naive",
                 include_hex: bool = False) -> dict:
    """Run a named chain for `steps` steps with stride callbacks.

    Registered specs: 'glauber', 'scan', 'balanced:K=2',
    'field:theta=0.1,m=auto|<int>,resampler=exact|glauber',
    'interleaved:theta=0.1,m=auto,eps=0.05'. Deterministic under a fixed
    rng seed; trace records {step, occupied_count, config_hash[, hex]}.
    update_path='factory' routes Ising glauber updates through the
    Bernoulli-factory path (caps must hold); 'naive' scans neighbors.
    """
    name, opts = _parse_chain_spec(chain_spec)
    if update_path not in ("naive", "factory"):
        raise ValueError(f"unknown update path {update_path!r}")
    use_factory = update_path == "factory"
    if use_factory and name == "glauber":
        from . import factories
        if isinstance(model, TwoSpinParams):
            def glauber_update(cfg):
                v = int(rng.integers(g.n))
                factories.fast_ising_update(model, g, v, cfg, rng)
        else:
            def glauber_update(cfg):
                v = int(rng.integers(g.n))
                factories.fast_hardcore_update(model, g, v, cfg, rng)
    else:
        def glauber_update(cfg):
            glauber_step(model, g, cfg, rng, debug)
    config = start.copy()
    trace = []
    state = None
    if name == "balanced":
        state = BalancedState.fresh(config, g, K=float(opts.get("K", 2.0)))
    elif name == "field":
        theta = float(opts.get("theta", 0.1))
        m_opt = opts.get("m", "auto")
        resampler = {"exact": "exact-oracle", "exact-oracle": "exact-oracle",
                     "glauber": "glauber-m", "glauber-m": "glauber-m"}.get(
                         opts.get("resampler", "exact"))
        if resampler is None:
            raise ValueError(f"unknown resampler {opts.get('resampler')!r}")
        m_val = None if m_opt == "auto" else int(m_opt)
        fd = FieldDynConfig(theta=theta, m=m_val, resampler=resampler,
                            rounds=max(steps, 1), eps=float(opts.get("eps", 0.05)))
    elif name == "interleaved":
        theta = float(opts.get("theta", default_theta(model) if isinstance(model, HardcoreParams) else 0.1))
        eps = float(opts.get("eps", 0.05))
        m_opt = opts.get("m", "auto")
    elif name == "scan":
        order = list(range(g.n))
    elif name != "glauber":
        raise ValueError(f"unknown chain spec {chain_spec!r}")

    def record(step):
        entry = {"step": step, "occupied_count": int(config.sum()),
                 "config_hash": config_hash(config)}
        if include_hex:
            entry["hex"] = config_hex(config)
        trace.append(entry)
        if callbacks:
            for cb in callbacks:
                cb(step, config)

    record(0)
    for t in range(1, steps + 1):
        if name == "glauber":
            glauber_update(config)
        elif name == "scan":
            systematic_scan_pass(model, g, config, order, rng, debug)
        elif name == "balanced":
            balanced_glauber_step(model, g, state, rng, debug)
            config = state.config
        elif name == "field":
            field_dynamics_step(model, g, config, fd, rng, debug)
        elif name == "interleaved":
            config = interleaved_sampler(model, g, config, theta,
                                         m_opt if m_opt == "auto" else int(m_opt),
                                         1, rng, eps, debug, rounds_total=steps)
        if t % stride == 0 or t == steps:
            record(t)
    out = {"chain": chain_spec, "steps": steps, "trace": trace,
           "final": config}
    if state is not None:
        out["update_log_len"] = state.update_log_len
        out["forced_updates"] = state.forced_updates
    return out
