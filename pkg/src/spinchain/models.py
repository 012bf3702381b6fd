"""Model parameterizations, conditional spin laws, and uniqueness thresholds.

Hardcore models carry a per-site fugacity vector; two-spin models carry
edge activities (beta for ++ edges, gamma for -- edges) and an external
field lambda, with the Ising model as the special case beta == gamma.
Conventions enforced at construction: beta <= gamma (swap spins
otherwise), and Ising fields are normalized to lambda <= 1 by a global
spin flip recorded in a flag.

All threshold formulas are evaluated in log space once exponents get
large, so degrees up to ~1e6 are supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HardcoreParams",
    "TwoSpinParams",
    "UniquenessReport",
    "hardcore_params",
    "ising_params",
    "two_spin_params",
    "hardcore_critical_fugacity",
    "hardcore_conditional",
    "two_spin_conditional",
    "ising_worst_case_interval",
    "tree_recursion_gap",
    "antiferro_uniqueness_lambdas",
    "lambda1_bounds_check",
    "dobrushin_row_bound",
    "dobrushin_entry_exact",
    "uniqueness_report",
    "load_model_config",
]


@dataclass(frozen=True)
class HardcoreParams:
    """Hardcore (independent-set) model with per-site fugacities > 0."""

    fugacities: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.fugacities, dtype=np.float64)
        if lam.ndim != 1 or not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("fugacities must be a 1-d vector of finite positive values")
        lam.setflags(write=False)
        object.__setattr__(self, "fugacities", lam)

    @property
    def kind(self) -> str:
        return "hardcore"


@dataclass(frozen=True)
class TwoSpinParams:
    """Two-spin system (beta, gamma, lambda); Ising when beta == gamma.

    `flipped` records that the constructor swapped +/- globally (to get
    lambda <= 1 for Ising, or beta <= gamma in general); samplers undo the
    flip when emitting configurations.
    """

    beta: float
    gamma: float
    lam: float
    flipped: bool = False

    def __post_init__(self):
        if self.beta < 0 or self.gamma <= 0 or self.lam <= 0:
            raise ValueError("need beta >= 0, gamma > 0, lambda > 0")
        if self.beta > self.gamma:
            raise ValueError("convention beta <= gamma violated; use two_spin_params()")

    @property
    def kind(self) -> str:
        return "two-spin"

    @property
    def is_ising(self) -> bool:
        return self.beta == self.gamma

    @property
    def antiferro(self) -> bool:
        return self.beta * self.gamma <= 1.0


def hardcore_params(lam, n: int | None = None) -> HardcoreParams:
    """Uniform or per-site fugacities."""
    if np.isscalar(lam):
        if n is None:
            raise ValueError("scalar fugacity needs an explicit vertex count")
        return HardcoreParams(np.full(n, float(lam)))
    return HardcoreParams(np.asarray(lam, dtype=np.float64))


def ising_params(beta: float, lam: float) -> TwoSpinParams:
    """Ising model; lambda > 1 is normalized to 1/lambda by a spin flip."""
    if lam > 1.0:
        return TwoSpinParams(beta=beta, gamma=beta, lam=1.0 / lam, flipped=True)
    return TwoSpinParams(beta=beta, gamma=beta, lam=lam, flipped=False)


def two_spin_params(beta: float, gamma: float, lam: float) -> TwoSpinParams:
    """General two-spin system; beta > gamma is normalized by a spin flip."""
    if beta > gamma:
        return TwoSpinParams(beta=gamma, gamma=beta, lam=1.0 / lam, flipped=True)
    return TwoSpinParams(beta=beta, gamma=gamma, lam=lam, flipped=False)


def hardcore_critical_fugacity(delta_max: int) -> float:
    """Critical fugacity (D-1)^(D-1)/(D-2)^D for max degree D >= 3."""
    d = int(delta_max)
    if d < 3:
        raise ValueError(f"critical fugacity needs max degree >= 3, got {d}")
    if d <= 50:
        return (d - 1) ** (d - 1) / float((d - 2) ** d)
    return math.exp((d - 1) * math.log(d - 1) - d * math.log(d - 2))


def hardcore_conditional(params: HardcoreParams, g, config, v: int) -> float:
    """P(v occupied | rest) = lam_v/(1+lam_v) * 1{no neighbor occupied}."""
    lam = params.fugacities[v]
    nbrs = g.neighbors(v)
    if config[nbrs].any():
        return 0.0
    return lam / (1.0 + lam)


def two_spin_conditional(params: TwoSpinParams, delta_v: int, s_v: int) -> float:
    """P(sigma_v = + | s_v minus-neighbors out of delta_v).

    Evaluated in log space: P = 1/(1 + exp(b - a)) with
    a = log(lam) + (delta_v - s_v) log(beta) and b = s_v log(gamma).
    beta = 0 gives the hard-constraint limit (probability 0 whenever a
    minus / unoccupied-blocking neighbor count leaves beta^k with k > 0).
    """
    if not 0 <= s_v <= delta_v:
        raise ValueError(f"need 0 <= s_v <= delta_v, got s_v={s_v}, delta_v={delta_v}")
    k = delta_v - s_v
    if params.beta == 0.0 and k > 0:
        return 0.0
    a = math.log(params.lam) + (k * math.log(params.beta) if k > 0 else 0.0)
    b = s_v * math.log(params.gamma)
    if not (math.isfinite(a) or math.isfinite(b)):
        raise ValueError("degenerate two-spin parameters: numerator and denominator both vanish")
    x = b - a
    if x > 700.0:
        return math.exp(-x)
    return 1.0 / (1.0 + math.exp(x))


def ising_worst_case_interval(delta_max: int, delta_gap: float) -> tuple[float, float]:
    """Edge-activity interval [(D-2+d)/(D-d), (D-d)/(D-2+d)] for gap d."""
    if delta_max < 3:
        raise ValueError("need max degree >= 3")
    if not 0.0 <= delta_gap <= 1.0:
        raise ValueError("gap must lie in [0, 1]")
    lo = (delta_max - 2 + delta_gap) / (delta_max - delta_gap)
    return (lo, 1.0 / lo)


def _tree_map_log(params: TwoSpinParams, d: int, x: float) -> float:
    """log F_d(x) for F_d(x) = lam*((beta*x+1)/(x+gamma))^d."""
    return math.log(params.lam) + d * (math.log1p(params.beta * x) - math.log(x + params.gamma))


def tree_recursion_gap(params: TwoSpinParams, d: int,
                       tol: float = 1e-12, max_iter: int = 500) -> tuple[float, float]:
    """Unique positive fixpoint of the tree recursion and its stability gap.

    Returns (x_hat, 1 - |F_d'(x_hat)|); a negative gap means d-uniqueness
    fails. For beta*gamma <= 1 the map is nonincreasing, so x - F_d(x)
    crosses zero exactly once; bisection is robust even with a flat
    derivative near criticality.
    """
    if params.beta * params.gamma > 1.0:
        raise ValueError("tree recursion fixpoint solver assumes beta*gamma <= 1")
    if d < 1:
        raise ValueError("need d >= 1")
    lo = 0.0
    hi = max(params.lam, 1.0)
    # expand the bracket until x > F_d(x) at the top (F is nonincreasing)
    for _ in range(200):
        if math.log(hi) > _tree_map_log(params, d, hi):
            break
        hi *= 2.0
    else:
        raise RuntimeError("failed to bracket the tree-recursion fixpoint")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if math.log(mid) > _tree_map_log(params, d, mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    else:
        raise RuntimeError("tree-recursion bisection did not converge")
    x = 0.5 * (lo + hi)
    # F'(x) = d * F(x) * (beta*gamma - 1) / ((beta*x+1)(x+gamma)); F(x_hat) = x_hat
    fprime = d * x * (params.beta * params.gamma - 1.0) / ((params.beta * x + 1.0) * (x + params.gamma))
    return x, 1.0 - abs(fprime)


def antiferro_uniqueness_lambdas(beta: float, gamma: float, delta_gap: float, d: int):
    """Critical field pair for d-uniqueness of an antiferro two-spin system.

    Returns ("all-lambda", None) when d <= (1-delta)*Dbar (every field is
    d-unique with the requested gap); otherwise ("interval", info) where
    info carries x_{1,delta}, x_{2,delta}, lambda_{1,delta}, lambda_{2,delta}
    and the product identity lambda_1*lambda_2 = (gamma/beta)^(d+1) has been
    validated to relative 1e-9.
    """
    if not (beta > 0 and beta * gamma <= 1.0):
        raise ValueError("need beta > 0 and beta*gamma <= 1")
    if not 0.0 <= delta_gap < 1.0:
        raise ValueError("need delta in [0, 1)")
    if d < 1:
        raise ValueError("need d >= 1")
    bg = beta * gamma
    dbar = (1.0 + math.sqrt(bg)) / (1.0 - math.sqrt(bg)) if bg < 1 else math.inf
    if d <= (1.0 - delta_gap) * dbar:
        return "all-lambda", None
    zeta = d * (1.0 - bg) - (1.0 - delta_gap) * (1.0 + bg)
    disc = zeta * zeta - 4.0 * (1.0 - delta_gap) ** 2 * bg
    if disc < 0:
        raise ArithmeticError(f"negative discriminant {disc} in case 2; inconsistent inputs")
    sq = math.sqrt(disc)
    x1 = (zeta - sq) / (2.0 * (1.0 - delta_gap) * beta)
    x2 = (zeta + sq) / (2.0 * (1.0 - delta_gap) * beta)

    def lam_of(x):
        return math.exp(math.log(x) + d * (math.log(x + gamma) - math.log1p(beta * x)))

    lam1, lam2 = lam_of(x1), lam_of(x2)
    ident = math.exp((d + 1) * (math.log(gamma) - math.log(beta)))
    if not math.isclose(lam1 * lam2, ident, rel_tol=1e-9):
        raise ArithmeticError(
            f"product identity violated: lambda1*lambda2 = {lam1 * lam2}, expected {ident}")
    return "interval", {
        "zeta": zeta,
        "x1": x1,
        "x2": x2,
        "lambda1": lam1,
        "lambda2": lam2,
        "geometric_mean": math.exp(0.5 * (d + 1) * (math.log(gamma) - math.log(beta))),
    }


def lambda1_bounds_check(beta: float, gamma: float, delta_gap: float, d: int):
    """(lower, lambda_1, upper) sandwich for the small critical field.

    lower = (1-delta)*gamma^(d+1)/zeta_delta(d), upper = 9*gamma^(d+1)/sqrt(beta*gamma).
    Raises on case-1 inputs (no critical field exists there).
    """
    case, info = antiferro_uniqueness_lambdas(beta, gamma, delta_gap, d)
    if case != "interval":
        raise ValueError("case-1 input: every field is d-unique, no lambda_1 to bound")
    zeta = info["zeta"]
    lg = math.log(gamma)
    lower = (1.0 - delta_gap) * math.exp((d + 1) * lg) / zeta
    upper = 9.0 * math.exp((d + 1) * lg) / math.sqrt(beta * gamma)
    return lower, info["lambda1"], upper


def dobrushin_entry_exact(lam: float, beta: float, delta_i: int) -> float:
    """Exact worst-case influence of one neighbor on site i (Ising).

    Brute-force maximum over s in {0..delta_i-1} of
    |P(+|s minus) - P(+|s+1 minus)| for the conditional with degree delta_i.
    """
    p = ising_params(beta, lam)
    best = 0.0
    for s in range(delta_i):
        a = two_spin_conditional(p, delta_i, s)
        b = two_spin_conditional(p, delta_i, s + 1)
        best = max(best, abs(a - b))
    return best


def dobrushin_row_bound(params: TwoSpinParams, delta_max: int) -> tuple[float, float]:
    """(row bound, gap): Delta * lam * |beta^2-1| * max{beta^(D-2), beta^-D}.

    Computed in log space; for very subcritical beta and huge degrees the
    bound can overflow to inf, which is reported honestly (gap -inf).
    """
    if not params.is_ising:
        raise ValueError("Dobrushin row bound implemented for the Ising case")
    if params.lam > 1.0:
        raise ValueError("callers must normalize to lambda <= 1 (spin flip)")
    beta, lam = params.beta, params.lam
    if beta == 1.0:
        return 0.0, 1.0
    lb = math.log(beta)
    log_entry = math.log(lam) + math.log(abs(beta * beta - 1.0)) + max((delta_max - 2) * lb, -delta_max * lb)
    log_row = math.log(delta_max) + log_entry
    row = math.exp(log_row) if log_row < 709 else math.inf
    return row, 1.0 - row


@dataclass(frozen=True)
class UniquenessReport:
    """Classification of a model against its tree-uniqueness threshold."""

    regime: str                 # hardcore-delta-unique | ising-worst-case-delta-unique |
                                # up-to-Delta-unique | non-unique
    delta_gap: float
    critical: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"regime": self.regime, "delta_gap": self.delta_gap,
                "critical": {k: v for k, v in self.critical.items()}}


def uniqueness_report(model, delta_max: int, requested_gap: float = 0.0) -> UniquenessReport:
    """Classify a model at max degree delta_max.

    Hardcore: delta-unique iff max lam_v <= (1-delta)*lambda_Delta (ties
    count as unique). Ising: checks the worst-case-field interval first,
    then the per-degree tree recursion for up-to-Delta uniqueness.
    """
    if isinstance(model, HardcoreParams):
        lam_max = float(np.max(model.fugacities))
        lam_c = hardcore_critical_fugacity(max(3, delta_max))
        gap = 1.0 - lam_max / lam_c
        regime = "hardcore-delta-unique" if lam_max <= (1.0 - requested_gap) * lam_c else "non-unique"
        return UniquenessReport(regime=regime, delta_gap=max(gap, 0.0) if regime != "non-unique" else gap,
                                critical={"lambda_Delta": lam_c, "lambda_max": lam_max})
    if not isinstance(model, TwoSpinParams):
        raise TypeError(f"unknown model type {type(model)!r}")
    crit: dict = {}
    if model.is_ising and delta_max >= 3:
        lo, hi = ising_worst_case_interval(delta_max, requested_gap)
        crit["beta_interval"] = (lo, hi)
        if lo <= model.beta <= hi:
            return UniquenessReport("ising-worst-case-delta-unique", requested_gap, crit)
    if model.antiferro and model.beta > 0:
        worst = math.inf
        for d in range(1, delta_max):
            _, gap = tree_recursion_gap(model, d)
            worst = min(worst, gap)
            case, info = antiferro_uniqueness_lambdas(model.beta, model.gamma, 0.0, d)
            if case == "interval":
                crit[f"lambda_1(d={d})"] = info["lambda1"]
                crit[f"lambda_2(d={d})"] = info["lambda2"]
        crit["min_tree_gap"] = worst
        if worst >= requested_gap and worst > 0:
            return UniquenessReport("up-to-Delta-unique", worst, crit)
    return UniquenessReport("non-unique", requested_gap, crit)


def load_model_config(path: str) -> dict:
    """key=value config lines; '#' comments; values parsed as floats when possible."""
    out: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            try:
                out[key] = float(val)
            except ValueError:
                out[key] = val
    return out
