"""Exact Bernoulli factories and the O(1)-amortized single-site updates.

The two primitives are an exponential factory (Ber(e^{c2*p}) from Ber(p)
coins, via Poisson thinning with early exit) and a logistic factory
(Ber(M*q/(1+M*q)) from Ber(q) coins, via a race of geometrics). Both are
exact for every latent bias; their coin consumption is measured through
FactoryStats, never asserted.

fast_ising_update composes two exponential factories on the +/- random
neighbor coins into a race whose output is exactly the Ising conditional;
fast_hardcore_update is the lazy occupied-proposal update that only reads
neighbors when the proposal succeeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import Graph, IsolatedVertexError
from .models import HardcoreParams, TwoSpinParams

__all__ = [
    "CoinSource",
    "ConstCoin",
    "BiasCoin",
    "NeighborSpinCoin",
    "FactoryStats",
    "FactoryCapError",
    "neighbor_coin",
    "exp_factory",
    "logistic_factory",
    "fast_ising_update",
    "fast_hardcore_update",
    "ising_factory_caps_ok",
]

DEFAULT_ALPHA_CAP = 8.0


class FactoryCapError(ValueError):
    """Factory path inapplicable: exponent bounds exceed the configured cap.

    Callers fall back to the O(degree) neighbor scan."""


@dataclass
class FactoryStats:
    """Coin consumption per emitted output bit."""

    updates: int = 0
    coins: int = 0
    max_coins: int = 0
    _last: int = 0

    def start(self):
        self._last = 0

    def count(self, k: int = 1):
        self._last += k
        self.coins += k

    def finish(self):
        self.updates += 1
        self.max_coins = max(self.max_coins, self._last)

    @property
    def mean_coins(self) -> float:
        return self.coins / self.updates if self.updates else 0.0

    def to_json(self) -> dict:
        return {"mean_coins": self.mean_coins, "max_coins": self.max_coins,
                "updates": self.updates}


class CoinSource:
    """Stateful generator of i.i.d. {0,1} draws with a fixed latent bias."""

    def __init__(self):
        self.consumed = 0

    def draw(self, rng: np.random.Generator) -> int:
        raise NotImplementedError


class ConstCoin(CoinSource):
    def __init__(self, value: int):
        super().__init__()
        self.value = int(value)

    def draw(self, rng):
        self.consumed += 1
        return self.value


class BiasCoin(CoinSource):
    def __init__(self, p: float):
        super().__init__()
        if not 0.0 <= p <= 1.0:
            raise ValueError("bias must lie in [0,1]")
        self.p = p

    def draw(self, rng):
        self.consumed += 1
        return 1 if rng.random() < self.p else 0


class NeighborSpinCoin(CoinSource):
    """1 iff a uniformly random neighbor of v carries the wanted spin."""

    def __init__(self, g: Graph, v: int, config, want: int = 1):
        super().__init__()
        if g.degree(v) == 0:
            raise IsolatedVertexError(f"vertex {v} has no neighbors")
        self.g, self.v, self.config, self.want = g, v, config, want

    def draw(self, rng):
        self.consumed += 1
        nbrs = self.g.neighbors(self.v)
        w = nbrs[rng.integers(nbrs.size)]
        return 1 if self.config[w] == self.want else 0


def neighbor_coin(g: Graph, v: int, config, rng: np.random.Generator,
                  flip: bool = False) -> int:
    """Half-mixture neighbor coin: Ber(1/4 + s/(2*deg)) with s the count of
    +1 neighbors (-1 neighbors when flip). The bias always lies in
    [1/4, 3/4]: with probability 1/2 emit a fair coin, otherwise the spin
    indicator of a uniformly random neighbor.
    """
    if g.degree(v) == 0:
        raise IsolatedVertexError(f"vertex {v} has no neighbors")
    if rng.random() < 0.5:
        return int(rng.integers(2))
    nbrs = g.neighbors(v)
    w = nbrs[rng.integers(nbrs.size)]
    spin_plus = config[w] == 1
    return int(spin_plus != flip)


def exp_factory(c2: float, coin: CoinSource, rng: np.random.Generator,
                stats: FactoryStats | None = None) -> int:
    """Exact Ber(e^{c2*p}) from Ber(p) coins, c2 <= 0.

    Draw N ~ Poisson(-c2) and thin: the output is 1 iff none of the N
    p-coins lands heads (early exit at the first head), so
    P(1) = E[(1-p)^N] = e^{c2*p}. Expected coin use is at most min(-c2, ~1/p).
    """
    if c2 > 0:
        raise ValueError("exponential factory needs c2 <= 0")
    if c2 == 0:
        return 1
    n = rng.poisson(-c2)
    for _ in range(n):
        if stats is not None:
            stats.count()
        if coin.draw(rng) == 1:
            return 0
    return 1


def logistic_factory(M: float, subcoin: CoinSource, rng: np.random.Generator,
                     stats: FactoryStats | None = None) -> int:
    """Exact Ber(M*q/(1+M*q)) from Ber(q) coins, M > 0 known and finite.

    Race of geometrics: each round stops with 'no event' (probability
    1/(1+M), output 0) or consumes one q-coin (probability M/(1+M));
    a q-head outputs 1, a q-tail starts another round. Expected q-coin
    use is M/(1+M*q).
    """
    if not (M > 0 and math.isfinite(M)):
        raise ValueError("need finite M > 0")
    a = M / (1.0 + M)
    while True:
        if rng.random() >= a:
            return 0
        if stats is not None:
            stats.count()
        if subcoin.draw(rng) == 1:
            return 1


def _ising_strength(params: TwoSpinParams, deg: int) -> tuple[float, bool]:
    """(u, ferro): u = deg*|log beta|; ferro means beta > 1 (roles flip)."""
    beta = params.beta
    if beta <= 0:
        raise FactoryCapError("factory path needs beta > 0")
    if beta <= 1.0:
        return -deg * math.log(beta), False
    return deg * math.log(beta), True


def ising_factory_caps_ok(params: TwoSpinParams, deg: int,
                          alpha_cap: float = DEFAULT_ALPHA_CAP) -> bool:
    """Exponent caps: |c2| = 4*deg*|log beta| <= 4*alpha and lambda <= 1.

    lambda <= 1 is guaranteed for Ising params built through ising_params
    (spin-flip normalization); larger fields report False.
    """
    if not params.is_ising or params.lam > 1.0 or params.beta <= 0:
        return False
    u, _ = _ising_strength(params, deg)
    return u <= alpha_cap


def fast_ising_update(params: TwoSpinParams, g: Graph, v: int, config,
                      rng: np.random.Generator, alpha_cap: float = DEFAULT_ALPHA_CAP,
                      stats: FactoryStats | None = None) -> int:
    """Exact Ising conditional at v using O(1) expected neighbor reads.

    Writes and returns the new spin (1 = +1). The conditional odds are
    lam * e^{u*(1-2h)} with u = deg*|log beta| and h the +neighbor fraction
    (-neighbor fraction for ferromagnetic beta), realized as a race
    between two exponential-factory coins f± = Ber(e^{-u*h±}):
    each round picks the + side with probability lam/(1+lam) and emits
    that side's sign when its factory coin lands heads.
    """
    if not params.is_ising:
        raise ValueError("factory update implemented for the Ising case")
    if params.lam > 1.0:
        raise FactoryCapError("normalize to lambda <= 1 first (spin flip)")
    deg = g.degree(v)
    lam = params.lam
    if stats is not None:
        stats.start()
    if deg == 0 or params.beta == 1.0:
        bit = 1 if rng.random() < lam / (1.0 + lam) else 0
        config[v] = bit
        if stats is not None:
            stats.finish()
        return bit
    u, ferro = _ising_strength(params, deg)
    if u > alpha_cap:
        raise FactoryCapError(
            f"|c2| = {4 * u:.3f} exceeds cap {4 * alpha_cap:.3f} at degree {deg}")
    plus_coin = NeighborSpinCoin(g, v, config, want=(0 if ferro else 1))
    minus_coin = NeighborSpinCoin(g, v, config, want=(1 if ferro else 0))
    a = lam / (1.0 + lam)
    while True:
        if rng.random() < a:
            if exp_factory(-u, plus_coin, rng, stats) == 1:
                config[v] = 1
                if stats is not None:
                    stats.finish()
                return 1
        else:
            if exp_factory(-u, minus_coin, rng, stats) == 1:
                config[v] = 0
                if stats is not None:
                    stats.finish()
                return 0


def fast_hardcore_update(params: HardcoreParams, g: Graph, v: int, config,
                         rng: np.random.Generator,
                         stats: FactoryStats | None = None) -> int:
    """Exact hardcore conditional at v with expected O(1 + lam*deg) reads.

    Propose occupation with probability lam/(1+lam); only a successful
    proposal scans the neighbors (occupation is cancelled if any neighbor
    is occupied). The no-proposal path performs zero neighbor reads.
    """
    lam = params.fugacities[v]
    if stats is not None:
        stats.start()
    if rng.random() < lam / (1.0 + lam):
        occupied = False
        for w in g.neighbors(v):
            if stats is not None:
                stats.count()
            if config[w]:
                occupied = True
                break
        config[v] = 0 if occupied else 1
    else:
        config[v] = 0
    if stats is not None:
        stats.finish()
    return int(config[v])
