"""Exact enumeration oracle for small systems (<= ~14 ground elements).

Dense distributions over 2^[m] indexed by bitmask, with the operator
toolbox used to verify every identity the samplers rely on: tilting,
pinning, homogenization, blow-ups, down/up operators, down-up walks,
projected block dynamics, divergences, correlation matrices, boundedness
and spectral-domination certificates, and exact transition matrices for
the chains.

Zero-probability states are retained with weight 0 so bitmask indexing
stays uniform; operators skip zero rows. KL uses the 0*log 0 = 0
convention and returns +inf when absolute continuity fails.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .models import HardcoreParams, TwoSpinParams, two_spin_conditional

__all__ = [
    "DenseDistribution",
    "TransitionMatrix",
    "CapExceededError",
    "enumerate_model",
    "tilt",
    "pin",
    "marginalize",
    "homogenize",
    "dehomogenize",
    "blow_up",
    "down_apply",
    "down_up_walk",
    "projected_block_row",
    "field_dynamics_matrix",
    "chain_transition_matrix",
    "divergences",
    "entropy_functional",
    "correlation_matrix",
    "certify_spectral_domination",
    "certify_c_bounded",
    "entropy_contraction_ratio",
    "sample_from_dense",
    "hardcore_weights",
    "two_spin_weights",
    "stationarity_residual",
    "detailed_balance_residual",
]

GROUND_CAP = 14          # dense weight vectors up to 2^14
MATRIX_CAP = 6           # full transition matrices up to 2^6 states

NORM_TOL = 1e-12


class CapExceededError(ValueError):
    """State space larger than the configured exact-enumeration cap."""


def _popcount_table(m: int) -> np.ndarray:
    masks = np.arange(1 << m, dtype=np.int64)
    out = np.zeros(1 << m, dtype=np.int64)
    for b in range(m):
        out += (masks >> b) & 1
    return out


@dataclass(frozen=True)
class DenseDistribution:
    """Probability table over subsets of a labeled ground set.

    weights[mask] is the probability of the subset whose members are the
    ground labels at the set bits of mask. `homogeneous_k` is set iff the
    support consists only of k-subsets.
    """

    ground: tuple
    weights: np.ndarray
    homogeneous_k: int | None = None

    def __post_init__(self):
        m = len(self.ground)
        if m > GROUND_CAP:
            raise CapExceededError(f"{m} ground elements exceeds cap {GROUND_CAP}")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (1 << m,):
            raise ValueError(f"weights must have length 2^{m}")
        if np.any(w < -NORM_TOL):
            raise ValueError("negative weight")
        total = w.sum()
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"weights sum to {total}, not 1")
        w = np.clip(w, 0.0, None)
        w = w / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "ground", tuple(self.ground))
        if self.homogeneous_k is not None:
            pc = _popcount_table(m)
            if np.any(w[pc != self.homogeneous_k] > 0):
                raise ValueError("support not homogeneous of the declared size")

    @property
    def m(self) -> int:
        return len(self.ground)

    def index_of(self, label) -> int:
        return self.ground.index(label)

    def marginal(self, label) -> float:
        """P(label in S)."""
        i = self.index_of(label)
        masks = np.arange(self.weights.size)
        return float(self.weights[(masks >> i) & 1 == 1].sum())

    def marginals(self) -> np.ndarray:
        masks = np.arange(self.weights.size)
        return np.array([float(self.weights[(masks >> i) & 1 == 1].sum())
                         for i in range(self.m)])

    def to_json(self) -> str:
        support = {format(mask, "x"): float(w)
                   for mask, w in enumerate(self.weights) if w > 0}
        return json.dumps({"ground": [repr(x) for x in self.ground],
                           "weights": support,
                           "homogeneous_k": self.homogeneous_k})

    @staticmethod
    def from_json(payload: str) -> "DenseDistribution":
        """Restore a dump; ground labels come back as their repr strings."""
        data = json.loads(payload)
        ground = tuple(data["ground"])
        w = np.zeros(1 << len(ground))
        for key, val in data["weights"].items():
            w[int(key, 16)] = val
        return DenseDistribution(ground, w, data.get("homogeneous_k"))

    @staticmethod
    def from_weights(ground, raw_weights, homogeneous_k=None) -> "DenseDistribution":
        w = np.asarray(raw_weights, dtype=np.float64)
        total = w.sum()
        if total <= 0:
            raise ValueError("total mass is zero")
        return DenseDistribution(tuple(ground), w / total, homogeneous_k)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix over an explicit enumeration of states."""

    states: np.ndarray   # int64 bitmasks
    matrix: np.ndarray   # (len(states), len(states))

    def __post_init__(self):
        p = np.asarray(self.matrix, dtype=np.float64)
        if np.any(p < -NORM_TOL):
            raise ValueError("negative transition probability")
        rows = p.sum(axis=1)
        if np.max(np.abs(rows - 1.0)) > 1e-9:
            raise ValueError("rows do not sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "matrix", p)


# ---------------------------------------------------------------------------
# model enumeration

def hardcore_weights(params: HardcoreParams, g) -> np.ndarray:
    """Unnormalized hardcore weights over 2^n bitmasks (0 on non-independent sets)."""
    n = g.n
    if n > GROUND_CAP:
        raise CapExceededError(f"n={n} exceeds cap {GROUND_CAP}")
    log_lam = np.log(params.fugacities)
    w = np.zeros(1 << n)
    edge_masks = [(1 << u) | (1 << v) for u, v in g.edges()]
    for mask in range(1 << n):
        if any((mask & em) == em for em in edge_masks):
            continue
        s = 0.0
        mm = mask
        while mm:
            b = (mm & -mm).bit_length() - 1
            s += log_lam[b]
            mm &= mm - 1
        w[mask] = math.exp(s)
    return w


def two_spin_weights(params: TwoSpinParams, g) -> np.ndarray:
    """Unnormalized two-spin weights; bit 1 = spin +1, bit 0 = spin -1."""
    n = g.n
    if n > GROUND_CAP:
        raise CapExceededError(f"n={n} exceeds cap {GROUND_CAP}")
    edges = list(g.edges())
    w = np.zeros(1 << n)
    llam, lbeta = math.log(params.lam), (math.log(params.beta) if params.beta > 0 else -math.inf)
    lgamma = math.log(params.gamma)
    for mask in range(1 << n):
        npl = bin(mask).count("1")
        mplus = sum(1 for u, v in edges if (mask >> u) & 1 and (mask >> v) & 1)
        mminus = sum(1 for u, v in edges if not (mask >> u) & 1 and not (mask >> v) & 1)
        s = npl * llam + mminus * lgamma + (mplus * lbeta if mplus else 0.0)
        w[mask] = math.exp(s) if math.isfinite(s) else 0.0
    return w


def enumerate_model(model, g) -> DenseDistribution:
    """Exact normalized distribution of a model on a small graph."""
    if isinstance(model, HardcoreParams):
        raw = hardcore_weights(model, g)
    elif isinstance(model, TwoSpinParams):
        raw = two_spin_weights(model, g)
    else:
        raise TypeError(f"unknown model {type(model)!r}")
    return DenseDistribution.from_weights(tuple(range(g.n)), raw)


# ---------------------------------------------------------------------------
# operators on dense distributions

def tilt(dist: DenseDistribution, lam_vec) -> DenseDistribution:
    """External-field tilt: new weight(S) proportional to w(S) * prod_{i in S} lam_i."""
    lam = np.asarray(lam_vec, dtype=np.float64)
    if lam.shape != (dist.m,):
        raise ValueError("field vector length mismatch")
    if np.any(lam <= 0):
        raise ValueError("field entries must be positive")
    mult = np.ones(dist.weights.size)
    for i in range(dist.m):
        bit = (np.arange(dist.weights.size) >> i) & 1
        mult *= np.where(bit == 1, lam[i], 1.0)
    return DenseDistribution.from_weights(dist.ground, dist.weights * mult, dist.homogeneous_k)


def pin(dist: DenseDistribution, assignment: dict) -> DenseDistribution:
    """Condition on a partial configuration {label: 0/1}; reduced ground set."""
    if not assignment:
        return dist
    idx = {label: dist.index_of(label) for label in assignment}
    keep = [i for i in range(dist.m) if dist.ground[i] not in assignment]
    new_ground = tuple(dist.ground[i] for i in keep)
    masks = np.arange(dist.weights.size)
    sel = np.ones(dist.weights.size, dtype=bool)
    for label, val in assignment.items():
        bit = (masks >> idx[label]) & 1
        sel &= bit == (1 if val else 0)
    w = np.zeros(1 << len(keep))
    for mask in masks[sel]:
        sub = 0
        for j, i in enumerate(keep):
            if (mask >> i) & 1:
                sub |= 1 << j
        w[sub] += dist.weights[mask]
    if w.sum() <= 0:
        raise ValueError("invalid pinning: zero total mass")
    hk = None
    if dist.homogeneous_k is not None:
        hk = dist.homogeneous_k - sum(1 for v in assignment.values() if v)
    return DenseDistribution.from_weights(new_ground, w, hk)


def marginalize(dist: DenseDistribution, labels_to_drop) -> DenseDistribution:
    """Sum out the given labels."""
    drop = set(labels_to_drop)
    keep = [i for i in range(dist.m) if dist.ground[i] not in drop]
    new_ground = tuple(dist.ground[i] for i in keep)
    w = np.zeros(1 << len(keep))
    for mask in range(dist.weights.size):
        if dist.weights[mask] == 0:
            continue
        sub = 0
        for j, i in enumerate(keep):
            if (mask >> i) & 1:
                sub |= 1 << j
        w[sub] += dist.weights[mask]
    return DenseDistribution.from_weights(new_ground, w)


def _bar(label):
    return ("bar", label)


def homogenize(dist: DenseDistribution) -> DenseDistribution:
    """Encode subsets of [m] as m-subsets of the doubled ground set.

    S maps to S union {bar(i) : i not in S}; the result is homogeneous of
    degree m and keeps P(i in S) as the marginal of the unbarred label.
    """
    m = dist.m
    if 2 * m > GROUND_CAP:
        raise CapExceededError(f"homogenization needs {2 * m} elements, cap {GROUND_CAP}")
    ground = tuple(dist.ground) + tuple(_bar(x) for x in dist.ground)
    w = np.zeros(1 << (2 * m))
    for mask in range(dist.weights.size):
        if dist.weights[mask] == 0:
            continue
        comp = ((1 << m) - 1) & ~mask
        w[mask | (comp << m)] = dist.weights[mask]
    return DenseDistribution.from_weights(ground, w, homogeneous_k=m)


def dehomogenize(dist: DenseDistribution, m: int) -> DenseDistribution:
    """Inverse of homogenize: project an m-homogenized table back to 2^[m]."""
    w = np.zeros(1 << m)
    lim = (1 << m) - 1
    for mask in range(dist.weights.size):
        if dist.weights[mask] == 0:
            continue
        w[mask & lim] += dist.weights[mask]
    return DenseDistribution.from_weights(dist.ground[:m], w)


def blow_up(dist: DenseDistribution, k_vec) -> DenseDistribution:
    """Split element i into k_i copies, one of which is occupied when i is.

    Ground labels become (label, j) pairs, j in range(k_i); a sample never
    contains two copies of the same element, and projecting a sample back
    (copy -> element) recovers the original distribution.
    """
    ks = [int(k) for k in k_vec]
    if len(ks) != dist.m or any(k < 1 for k in ks):
        raise ValueError("k_vec must give a positive multiplicity per element")
    total = sum(ks)
    if total > GROUND_CAP:
        raise CapExceededError(f"blow-up needs {total} elements, cap {GROUND_CAP}")
    ground = tuple((x, j) for x, k in zip(dist.ground, ks) for j in range(k))
    offsets = np.concatenate([[0], np.cumsum(ks)]).astype(int)
    w = np.zeros(1 << total)
    for mask in range(dist.weights.size):
        p = dist.weights[mask]
        if p == 0:
            continue
        members = [i for i in range(dist.m) if (mask >> i) & 1]
        share = p
        for i in members:
            share /= ks[i]
        for choice in itertools.product(*[range(ks[i]) for i in members]):
            bm = 0
            for i, j in zip(members, choice):
                bm |= 1 << (offsets[i] + j)
            w[bm] += share
    return DenseDistribution.from_weights(ground, w, dist.homogeneous_k)


def down_apply(dist: DenseDistribution, ell: int) -> DenseDistribution:
    """Push a k-homogeneous distribution through the drop-to-ell operator.

    Each k-set sends mass 1/C(k, ell) to each of its ell-subsets.
    Composition law D_{k->l} D_{l->m} = D_{k->m} holds exactly.
    """
    k = dist.homogeneous_k
    if k is None:
        raise ValueError("down operator needs a homogeneous distribution")
    if not 0 <= ell <= k:
        raise ValueError(f"need 0 <= ell <= {k}, got {ell}")
    if ell == k:
        return dist
    w = np.zeros(dist.weights.size)
    denom = math.comb(k, ell)
    for mask in range(dist.weights.size):
        p = dist.weights[mask]
        if p == 0:
            continue
        members = [i for i in range(dist.m) if (mask >> i) & 1]
        share = p / denom
        for sub in itertools.combinations(members, ell):
            sm = 0
            for i in sub:
                sm |= 1 << i
            w[sm] += share
    return DenseDistribution.from_weights(dist.ground, w, homogeneous_k=ell)


def down_up_walk(dist: DenseDistribution, ell: int) -> TransitionMatrix:
    """k <-> ell down-up walk of a homogeneous distribution (reversible, PSD)."""
    k = dist.homogeneous_k
    if k is None:
        raise ValueError("down-up walk needs a homogeneous distribution")
    if not 0 <= ell <= k:
        raise ValueError(f"need 0 <= ell <= {k}")
    states = np.array([m for m in range(dist.weights.size) if dist.weights[m] > 0],
                      dtype=np.int64)
    ns = states.size
    if ell == k:
        return TransitionMatrix(states, np.eye(ns))
    mu_ell = down_apply(dist, ell)
    denom = math.comb(k, ell)
    pos = {int(s): r for r, s in enumerate(states)}
    P = np.zeros((ns, ns))
    for r, s in enumerate(states):
        members = [i for i in range(dist.m) if (int(s) >> i) & 1]
        for sub in itertools.combinations(members, ell):
            sm = 0
            for i in sub:
                sm |= 1 << i
            # up step: P(T -> S') = w(S') / sum_{S'' superset T} w(S''),
            # and that superset mass equals C(k, ell) * mu_ell(T)
            mass_T = denom * mu_ell.weights[sm]
            for r2, s2 in enumerate(states):
                if (int(s2) & sm) == sm:
                    P[r, r2] += (1.0 / denom) * dist.weights[int(s2)] / mass_T
    return TransitionMatrix(states, P)


def projected_block_row(dist: DenseDistribution, k: int, theta: float) -> TransitionMatrix:
    """Transition matrix of the (k, ceil(theta*k*n))-projected block dynamics.

    The walk lives on the homogenized k-fold blow-up (kn-subsets of a 2kn
    ground set) and drops ell = ceil(theta*k*n) elements uniformly before
    resampling; rows are computed by enumerating per-element removal
    patterns (hypergeometric weights) and resolving each pattern to a
    tilt-and-pin resample law of the base distribution, using the
    conditional structure of blow-ups. Exact; no kn-sized state space is
    materialized.
    """
    n = dist.m
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0,1)")
    if k < 1:
        raise ValueError("k must be >= 1")
    if (2 * k) ** n > 5_000_000:  # pattern enumeration cost guard
        raise CapExceededError(f"projected block row with n={n}, k={k} too large")
    ell = math.ceil(theta * k * n)
    masks = np.arange(1 << n)
    bits = np.stack([(masks >> i) & 1 for i in range(n)], axis=0)  # (n, 2^n)
    states = np.array([m for m in range(1 << n) if dist.weights[m] > 0], dtype=np.int64)
    pos = {int(s): r for r, s in enumerate(states)}
    P = np.zeros((states.size, states.size))
    log_denom = math.lgamma(k * n + 1) - math.lgamma(ell + 1) - math.lgamma(k * n - ell + 1)
    for row_idx, sigma in enumerate(int(s) for s in states):
        # per-site removal states: (removed_count, multiplicity, factor_if_empty, factor_if_occ)
        site_states = []
        for i in range(n):
            opts = []
            if (sigma >> i) & 1:
                # one occupied slot (a in {0,1}) and k-1 barred slots (b removed)
                for a in (0, 1):
                    for b in range(k):
                        mult = math.comb(k - 1, b)
                        if a == 0:
                            # occupied slot kept: site pinned occupied
                            opts.append((a + b, mult, 0.0, 1.0))
                        else:
                            f = a + b  # freed slots available for re-occupation
                            opts.append((a + b, mult, 1.0, f / k))
            else:
                for b in range(k + 1):
                    mult = math.comb(k, b)
                    opts.append((b, mult, 1.0, b / k))
            site_states.append(opts)
        # enumerate joint patterns with total removed == ell
        row = np.zeros(1 << n)
        for combo in itertools.product(*site_states):
            removed = sum(c[0] for c in combo)
            if removed != ell:
                continue
            log_w = sum(math.log(c[1]) for c in combo) - log_denom
            # resample law: w(sigma') * prod_i factor(c_i, bit_i(sigma'))
            fac = dist.weights.copy()
            for i, c in enumerate(combo):
                fac *= np.where(bits[i] == 1, c[3], c[2])
            total = fac.sum()
            if total <= 0:
                raise ArithmeticError("pattern with zero-mass resample law")
            row += math.exp(log_w) * fac / total
        if abs(row.sum() - 1.0) > 1e-8:
            raise ArithmeticError(f"pattern weights sum to {row.sum()}, not 1")
        P[row_idx] = row[states] / row.sum()
    return TransitionMatrix(states, P)


# ---------------------------------------------------------------------------
# divergences and functionals

def divergences(nu: DenseDistribution, mu: DenseDistribution) -> dict:
    """KL, total variation, and chi-square between two aligned tables.

    KL returns +inf when nu is not absolutely continuous w.r.t. mu
    (0*log 0 = 0 convention elsewhere).
    """
    if nu.ground != mu.ground:
        raise ValueError("distributions live on different ground sets")
    p, q = nu.weights, mu.weights
    if np.any((p > 0) & (q == 0)):
        kl = math.inf
        chi2 = math.inf
    else:
        sel = p > 0
        kl = float(np.sum(p[sel] * np.log(p[sel] / q[sel])))
        sel = q > 0
        chi2 = float(np.sum((p[sel] - q[sel]) ** 2 / q[sel]))
    tv = 0.5 * float(np.abs(p - q).sum())
    return {"kl": kl, "tv": tv, "chi2": chi2}


def entropy_functional(mu: DenseDistribution, f_values: np.ndarray) -> float:
    """Ent_mu[f] = E[f log f] - E[f] log E[f] for nonnegative f."""
    f = np.asarray(f_values, dtype=np.float64)
    if f.shape != mu.weights.shape:
        raise ValueError("f must be tabulated over the full state space")
    if np.any(f < 0):
        raise ValueError("f must be nonnegative")
    w = mu.weights
    sel = (w > 0) & (f > 0)
    ef = float(np.sum(w * f))
    eflogf = float(np.sum(w[sel] * f[sel] * np.log(f[sel])))
    if ef <= 0:
        return 0.0
    return eflogf - ef * math.log(ef)


def correlation_matrix(dist: DenseDistribution):
    """Pairwise influence matrix: diag 1-P(i), off-diag P(j|i)-P(j).

    Elements with zero marginal are dropped (and reported); the returned
    spectrum is real because the matrix is similar to the symmetric matrix
    (P(ij)-P(i)P(j))/sqrt(P(i)P(j)) via a diagonal conjugation.

    Returns (psi, kept_labels, eigenvalues_desc, dropped_labels).
    """
    marg = dist.marginals()
    kept = [i for i in range(dist.m) if marg[i] > 0]
    dropped = [dist.ground[i] for i in range(dist.m) if marg[i] == 0]
    r = len(kept)
    masks = np.arange(dist.weights.size)
    pair = np.zeros((r, r))
    for a, i in enumerate(kept):
        sel_i = ((masks >> i) & 1) == 1
        wi = dist.weights[sel_i]
        sub = masks[sel_i]
        for b, j in enumerate(kept):
            pair[a, b] = float(wi[((sub >> j) & 1) == 1].sum())
    p = marg[kept]
    psi = np.empty((r, r))
    for a in range(r):
        for b in range(r):
            if a == b:
                psi[a, b] = 1.0 - p[a]
            else:
                psi[a, b] = pair[a, b] / p[a] - p[b]
    sym = (pair - np.outer(p, p)) / np.sqrt(np.outer(p, p))
    np.fill_diagonal(sym, 1.0 - p)
    eig = np.linalg.eigvalsh(sym)[::-1]
    return psi, [dist.ground[i] for i in kept], eig, dropped


def _field_grid(m: int, eps: float, rng: np.random.Generator,
                geo_points: int = 5, random_fields: int = 200):
    """Heuristic certificate grid over (0, 1+eps]^m: per-coordinate geometric
    levels crossed coordinate-wise plus random product fields."""
    levels = (1.0 + eps) * np.geomspace(1e-3, 1.0, geo_points)
    for lv in levels:
        yield np.full(m, lv)
    # coordinate-wise extremes of the geometric levels
    for lv_hi in (levels[0], levels[-1]):
        for i in range(m):
            v = np.full(m, levels[-1])
            v[i] = lv_hi
            yield v
    for _ in range(random_fields):
        yield (1.0 + eps) * np.exp(rng.uniform(np.log(1e-3), 0.0, size=m))


def certify_spectral_domination(dist: DenseDistribution, eta: float, eps: float,
                                rng: np.random.Generator, complete: bool = False,
                                random_fields: int = 200,
                                field_grid=None) -> dict:
    """Grid check of lambda_max(Psi of tilted dist) <= eta over (0, 1+eps]^m.

    This is a heuristic certificate (the quantifier ranges over a
    continuum); the report carries the measured maximum over the grid. The
    complete variant additionally quantifies over all pinnings of size at
    most m-2. An explicit field_grid (iterable of full-length field
    vectors) replaces the default geometric-plus-random grid.
    """
    worst = -math.inf
    worst_at = None
    explicit = None if field_grid is None else [np.asarray(f, dtype=np.float64)
                                                for f in field_grid]

    def scan(d, tag):
        nonlocal worst, worst_at
        if explicit is not None:
            grid = (f[:d.m] if f.size > d.m else f for f in explicit)
        else:
            grid = _field_grid(d.m, eps, rng, random_fields=random_fields)
        for lam in grid:
            _, _, eig, _ = correlation_matrix(tilt(d, lam))
            if eig.size and eig[0] > worst:
                worst = float(eig[0])
                worst_at = tag
    scan(dist, "unpinned")
    if complete:
        for size in range(1, dist.m - 1):
            for labels in itertools.combinations(dist.ground, size):
                for vals in itertools.product((0, 1), repeat=size):
                    try:
                        sub = pin(dist, dict(zip(labels, vals)))
                    except ValueError:
                        continue  # invalid pinning
                    if sub.m >= 1:
                        scan(sub, f"pin{dict(zip(labels, vals))}")
    return {"max_lambda": worst, "eta": eta, "certified": bool(worst <= eta),
            "heuristic": True, "worst_at": worst_at}


def _bounded_ratio(nu: DenseDistribution, mu: DenseDistribution) -> float:
    worst = 0.0
    for i in range(mu.m):
        masks = np.arange(mu.weights.size)
        sel = ((masks >> i) & 1) == 1
        nu_i = float(nu.weights[sel].sum())
        mu_i = float(mu.weights[sel].sum())
        if mu_i == 0:
            if nu_i > 0:
                return math.inf
            continue
        if nu_i >= 1.0:
            return math.inf
        worst = max(worst, nu_i * (1 - mu_i) / (mu_i * (1 - nu_i)))
    return worst


def certify_c_bounded(nu: DenseDistribution, mu: DenseDistribution, c: float,
                      rng: np.random.Generator, complete: bool = False,
                      random_fields: int = 50, field_grid=None) -> dict:
    """Check occupancy-odds domination nu(i)(1-mu(i)) <= C mu(i)(1-nu(i)).

    The complete variant quantifies over pinnings and fields in (0,1]^m
    (grid heuristic, reported as such; an explicit field_grid overrides
    the default).
    """
    if nu.ground != mu.ground:
        raise ValueError("distributions live on different ground sets")
    if np.any((nu.weights > 0) & (mu.weights == 0)):
        raise ValueError("nu is not absolutely continuous w.r.t. mu")
    worst = _bounded_ratio(nu, mu)
    if complete:
        if field_grid is not None:
            fields = [np.asarray(f, dtype=np.float64) for f in field_grid]
        else:
            fields = list(_field_grid(mu.m, 0.0, rng, random_fields=random_fields))
        pinnings = [{}]
        for size in range(1, mu.m - 1):
            for labels in itertools.combinations(mu.ground, size):
                for vals in itertools.product((0, 1), repeat=size):
                    pinnings.append(dict(zip(labels, vals)))
        for lam in fields:
            tn, tm = tilt(nu, lam), tilt(mu, lam)
            for pn in pinnings:
                try:
                    a = pin(tn, pn)
                    b = pin(tm, pn)
                except ValueError:
                    continue
                worst = max(worst, _bounded_ratio(a, b))
    return {"max_ratio": worst, "C": c, "passes": bool(worst <= c),
            "heuristic": complete}


def entropy_contraction_ratio(nu: DenseDistribution, mu: DenseDistribution,
                              ell: int, eta_prime: float | None = None) -> dict:
    """KL contraction of the homogenized drop operator.

    ratio = KL(nu_hom D_{m->(m-ell)} || mu_hom D_{m->(m-ell)}) / KL(nu || mu).
    Always in [0, 1] by data processing; when eta_prime is supplied the
    report includes the comparison value 1 - (theta/3)^eta_prime with
    theta = ell/m.
    """
    base = divergences(nu, mu)["kl"]
    if base <= 1e-10:
        raise ValueError("KL(nu||mu) too close to zero for a contraction ratio")
    m = mu.m
    if not 0 <= ell <= m:
        raise ValueError(f"need 0 <= ell <= {m}")
    nh, mh = homogenize(nu), homogenize(mu)
    nd = down_apply(nh, m - ell)
    md = down_apply(mh, m - ell)
    num = divergences(nd, md)["kl"]
    out = {"ratio": num / base, "kl_before": base, "kl_after": num, "ell": ell}
    if eta_prime is not None:
        theta = ell / m
        out["one_minus_kappa"] = 1.0 - (theta / 3.0) ** eta_prime
    return out


# ---------------------------------------------------------------------------
# exact chain transition matrices

def _conditional_occupied(model, g, mask: int, v: int) -> float:
    """P(site v occupied / + | the rest of mask) for either model."""
    if isinstance(model, HardcoreParams):
        lam = model.fugacities[v]
        for w in g.neighbors(v):
            if w != v and (mask >> w) & 1:
                return 0.0
        return lam / (1.0 + lam)
    s_minus = sum(1 for w in g.neighbors(v) if not (mask >> w) & 1)
    return two_spin_conditional(model, g.degree(v), s_minus)


def _site_update_matrix(model, g, states, pos, v: int) -> np.ndarray:
    ns = states.size
    P = np.zeros((ns, ns))
    for r, s in enumerate(states):
        s = int(s)
        p_occ = _conditional_occupied(model, g, s, v)
        up = s | (1 << v)
        down = s & ~(1 << v)
        if up in pos:
            P[r, pos[up]] += p_occ
        elif p_occ > 0:
            raise ArithmeticError("update assigns mass to a state outside the support")
        P[r, pos[down]] += 1.0 - p_occ
    return P


def _support_states(model, g) -> np.ndarray:
    dist = enumerate_model(model, g)
    return np.array([m for m in range(dist.weights.size) if dist.weights[m] > 0],
                    dtype=np.int64)


def field_dynamics_matrix(model, g, theta: float) -> TransitionMatrix:
    """Exact transition matrix of the field dynamics at parameter theta.

    From sigma: keep each occupied site pinned with probability 1-theta,
    resample everything else from the theta-tilted conditional model.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0,1)")
    if g.n > MATRIX_CAP + 2:
        raise CapExceededError(f"n={g.n} exceeds matrix cap")
    dist = enumerate_model(model, g)
    tilted = tilt(dist, np.full(g.n, theta))
    states = np.array([m for m in range(dist.weights.size) if dist.weights[m] > 0],
                      dtype=np.int64)
    pos = {int(s): r for r, s in enumerate(states)}
    ns = states.size
    P = np.zeros((ns, ns))
    # rows over full configs of the conditional law given each kept set,
    # cached because many states share kept patterns
    cond_cache: dict[int, np.ndarray] = {}

    def conditional_row(kept_mask: int) -> np.ndarray:
        row = cond_cache.get(kept_mask)
        if row is None:
            w = tilted.weights.copy()
            masks = np.arange(w.size)
            w[(masks & kept_mask) != kept_mask] = 0.0
            row = w / w.sum()
            cond_cache[kept_mask] = row
        return row

    for r, s in enumerate(states):
        s = int(s)
        occ = [i for i in range(g.n) if (s >> i) & 1]
        for kept_tuple in itertools.chain.from_iterable(
                itertools.combinations(occ, sz) for sz in range(len(occ) + 1)):
            w_pattern = (1 - theta) ** len(kept_tuple) * theta ** (len(occ) - len(kept_tuple))
            if w_pattern == 0:
                continue
            kept_mask = 0
            for i in kept_tuple:
                kept_mask |= 1 << i
            row = conditional_row(kept_mask)
            for r2, s2 in enumerate(states):
                w2 = row[int(s2)]
                if w2 > 0:
                    P[r, r2] += w_pattern * w2
    return TransitionMatrix(states, P)


def chain_transition_matrix(chain_spec: str, model, g,
                            order=None, theta: float = 0.1) -> TransitionMatrix:
    """Exact matrix for 'glauber', 'scan', 'field', or 'site:<v>' chains.

    The balanced dynamics has no transition matrix on configuration space
    alone (it carries debt counters); verify it through products of
    single-site matrices instead.
    """
    if g.n > MATRIX_CAP + 2:
        raise CapExceededError(f"n={g.n} exceeds matrix cap {MATRIX_CAP}")
    states = _support_states(model, g)
    pos = {int(s): r for r, s in enumerate(states)}
    if chain_spec == "glauber":
        P = np.zeros((states.size, states.size))
        for v in range(g.n):
            P += _site_update_matrix(model, g, states, pos, v) / g.n
        return TransitionMatrix(states, P)
    if chain_spec == "scan":
        if order is None:
            order = list(range(g.n))
        if sorted(order) != list(range(g.n)):
            raise ValueError("scan order must be a permutation of the vertices")
        P = np.eye(states.size)
        for v in order:
            P = P @ _site_update_matrix(model, g, states, pos, v)
        return TransitionMatrix(states, P)
    if chain_spec == "field":
        return field_dynamics_matrix(model, g, theta)
    if chain_spec.startswith("site:"):
        v = int(chain_spec.split(":", 1)[1])
        return TransitionMatrix(states, _site_update_matrix(model, g, states, pos, v))
    if chain_spec.startswith("balanced"):
        raise ValueError("balanced dynamics is not a Markov chain on configurations alone; "
                         "use per-site matrices ('site:v') and fixed realized sequences")
    raise ValueError(f"unknown chain spec {chain_spec!r}")


def stationarity_residual(tm: TransitionMatrix, mu: DenseDistribution) -> float:
    """max-abs |mu P - mu| over the matrix's states."""
    w = mu.weights[tm.states]
    w = w / w.sum()
    return float(np.max(np.abs(w @ tm.matrix - w)))


def detailed_balance_residual(tm: TransitionMatrix, mu: DenseDistribution) -> float:
    """max-abs |mu(x)P(x,y) - mu(y)P(y,x)|."""
    w = mu.weights[tm.states]
    w = w / w.sum()
    flux = w[:, None] * tm.matrix
    return float(np.max(np.abs(flux - flux.T)))


def sample_from_dense(dist: DenseDistribution, rng: np.random.Generator,
                      size: int | None = None):
    """Draw bitmask samples from a dense table."""
    return rng.choice(dist.weights.size, size=size, p=dist.weights)
