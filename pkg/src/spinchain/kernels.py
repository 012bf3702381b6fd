"""Hot single-site update loops, numba-jitted with a pure-python fallback.

Set SPINCHAIN_NO_NUMBA=1 to force the fallback path (same code executed by
the CPython interpreter; far slower). The active path is reported in
BACKEND. benchmarks/kernel_bench.py compares the two.

Chain kernels draw randomness from numpy's legacy global generator
(np.random.*), which numba reimplements with per-thread state; every
kernel seeds itself from explicit integer seeds so runs are reproducible
on both paths regardless of thread scheduling. The factory/naive trial
loops instead carry an inline xorshift generator (an order of magnitude
cheaper per draw, and bit-identical across backends) so their wall-clock
comparison is generator-fair. Configurations are uint8 arrays
(1 = occupied/+1); graphs are CSR pairs (indptr int64, indices int32).
"""

from __future__ import annotations

import math
import os

import numpy as np

USE_NUMBA = os.environ.get("SPINCHAIN_NO_NUMBA", "0").lower() not in ("1", "true", "yes")
if USE_NUMBA:
    try:
        from numba import njit, prange, set_num_threads, get_num_threads
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f
        return wrap

    prange = range

    def set_num_threads(n):
        pass

    def get_num_threads():
        return 1

BACKEND = "numba" if USE_NUMBA else "python"

SEED_MOD = 4294967291  # largest prime below 2^32


def chain_seed(seed0: int, index: int) -> int:
    """Distinct sub-seed per chain/run, valid for np.random.seed."""
    return int((int(seed0) % SEED_MOD) * 1000003 + 12345 + int(index) * 2654435761) % SEED_MOD


@njit(cache=True)
def _hc_site_update(indptr, indices, lam, cfg, v):
    """Lazy hardcore resample at v; returns neighbor reads performed."""
    p = lam[v] / (1.0 + lam[v])
    if np.random.random() < p:
        reads = 0
        occ = False
        for e in range(indptr[v], indptr[v + 1]):
            reads += 1
            if cfg[indices[e]] == 1:
                occ = True
                break
        cfg[v] = 0 if occ else 1
        return reads
    cfg[v] = 0
    return 0


@njit(cache=True)
def hc_glauber_run(indptr, indices, lam, cfg, steps, seed):
    """`steps` uniform-site hardcore Glauber updates in place."""
    np.random.seed(seed)
    n = cfg.size
    for _ in range(steps):
        v = np.random.randint(n)
        _hc_site_update(indptr, indices, lam, cfg, v)


@njit(cache=True)
def _hc_scan_pass(indptr, indices, lam, cfg):
    for v in range(cfg.size):
        _hc_site_update(indptr, indices, lam, cfg, v)


@njit(cache=True)
def _hc_balanced_steps(indptr, indices, lam, cfg, debt, thr, steps):
    """Balanced updates: uniform site, debt bump at neighbors, forced
    smallest-index updates while any debt exceeds thr. Returns forced count."""
    n = cfg.size
    forced_total = 0
    for _ in range(steps):
        v = np.random.randint(n)
        _hc_site_update(indptr, indices, lam, cfg, v)
        for e in range(indptr[v], indptr[v + 1]):
            debt[indices[e]] += 1
        debt[v] = 0
        over = 0
        for w in range(n):
            if debt[w] > thr:
                over += 1
        while over > 0:
            w = -1
            for u in range(n):
                if debt[u] > thr:
                    w = u
                    break
            _hc_site_update(indptr, indices, lam, cfg, w)
            forced_total += 1
            for e in range(indptr[w], indptr[w + 1]):
                u = indices[e]
                debt[u] += 1
                if debt[u] == thr + 1:
                    over += 1
            if debt[w] > thr:
                over -= 1
            debt[w] = 0
    return forced_total


@njit(cache=True, parallel=True)
def hc_balanced_ensemble(indptr, indices, lam, thr, steps, nchains, seed0):
    """Post-scan empty start, then `steps` balanced updates.

    Returns (final bitmasks, max forced-update count over the ensemble) so
    callers can assert the deterministic J_T <= T/(K-1) bound."""
    n = lam.size
    out = np.empty(nchains, np.int64)
    forced = np.empty(nchains, np.int64)
    for c in prange(nchains):
        np.random.seed((seed0 * 1000003 + 12345 + c * 2654435761) % 4294967291)
        cfg = np.zeros(n, np.uint8)
        debt = np.zeros(n, np.int64)
        _hc_scan_pass(indptr, indices, lam, cfg)
        forced[c] = _hc_balanced_steps(indptr, indices, lam, cfg, debt, thr, steps)
        mask = 0
        for v in range(n):
            if cfg[v] == 1:
                mask |= 1 << v
        out[c] = mask
    return out, forced.max()


@njit(cache=True)
def hc_balanced_forced_count(indptr, indices, lam, thr, steps, seed):
    """Forced-update total J_T of one balanced run (debt bound checks)."""
    np.random.seed(seed)
    n = lam.size
    cfg = np.zeros(n, np.uint8)
    debt = np.zeros(n, np.int64)
    return _hc_balanced_steps(indptr, indices, lam, cfg, debt, thr, steps)


@njit(cache=True, parallel=True)
def hc_glauber_ensemble(indptr, indices, lam, steps, nchains, seed0):
    """Vanilla hardcore Glauber chains from the post-scan empty start."""
    n = lam.size
    out = np.empty(nchains, np.int64)
    for c in prange(nchains):
        np.random.seed((seed0 * 1000003 + 12345 + c * 2654435761) % 4294967291)
        cfg = np.zeros(n, np.uint8)
        _hc_scan_pass(indptr, indices, lam, cfg)
        for _ in range(steps):
            v = np.random.randint(n)
            _hc_site_update(indptr, indices, lam, cfg, v)
        mask = 0
        for v in range(n):
            if cfg[v] == 1:
                mask |= 1 << v
        out[c] = mask
    return out


@njit(cache=True)
def _hc_interleaved_round(indptr, indices, lam, theta, cfg, scratch, rounds_total, eps):
    """One systematic scan followed by one approximate tilted resample round.

    The resample set holds every empty site plus a theta-fraction of the
    occupied ones; those sites restart from empty and mix with
    m = ceil(10 * |S| * log(|S| * rounds_total / eps)) lazy updates of the
    theta-tilted model (occupied sites outside the set stay pinned).
    """
    n = cfg.size
    _hc_scan_pass(indptr, indices, lam, cfg)
    ns = 0
    for v in range(n):
        if cfg[v] == 0:
            scratch[ns] = v
            ns += 1
        elif np.random.random() < theta:
            scratch[ns] = v
            ns += 1
    for i in range(ns):
        cfg[scratch[i]] = 0
    if ns == 0:
        return 0
    arg = ns * rounds_total / eps
    if arg < 2.0:
        arg = 2.0
    m = int(math.ceil(10.0 * ns * math.log(arg)))
    for _ in range(m):
        v = scratch[np.random.randint(ns)]
        tl = theta * lam[v]
        if np.random.random() < tl / (1.0 + tl):
            occ = False
            for e in range(indptr[v], indptr[v + 1]):
                if cfg[indices[e]] == 1:
                    occ = True
                    break
            cfg[v] = 0 if occ else 1
        else:
            cfg[v] = 0
    return m


@njit(cache=True, parallel=True)
def hc_interleaved_ensemble(indptr, indices, lam, theta, rounds, eps, nchains, seed0):
    """Scan + tilted-resample rounds from the all-empty start; final bitmasks."""
    n = lam.size
    out = np.empty(nchains, np.int64)
    for c in prange(nchains):
        np.random.seed((seed0 * 1000003 + 12345 + c * 2654435761) % 4294967291)
        cfg = np.zeros(n, np.uint8)
        scratch = np.empty(n, np.int64)
        for _ in range(rounds):
            _hc_interleaved_round(indptr, indices, lam, theta, cfg, scratch, rounds, eps)
        mask = 0
        for v in range(n):
            if cfg[v] == 1:
                mask |= 1 << v
        out[c] = mask
    return out


@njit(cache=True)
def hc_thinned_occupancy(indptr, indices, lam, theta, burn_rounds, nsamples, thin, seed):
    """Occupied-count samples from one long chain: interleaved burn-in, then
    `thin` Glauber updates between retained samples."""
    np.random.seed(seed)
    n = lam.size
    cfg = np.zeros(n, np.uint8)
    scratch = np.empty(n, np.int64)
    for _ in range(burn_rounds):
        _hc_interleaved_round(indptr, indices, lam, theta, cfg, scratch, burn_rounds, 0.05)
    count = 0
    for v in range(n):
        count += int(cfg[v])
    out = np.empty(nsamples, np.int64)
    for s in range(nsamples):
        for _ in range(thin):
            v = np.random.randint(n)
            was = int(cfg[v])
            _hc_site_update(indptr, indices, lam, cfg, v)
            count += int(cfg[v]) - was
        out[s] = count
    return out


# ---------------------------------------------------------------------------
# Ising updates: naive scan and the Bernoulli-factory path

@njit(cache=True)
def ising_naive_update(indptr, indices, cfg, v, lam, beta):
    """Exact conditional resample at v by reading all neighbors."""
    s_minus = 0
    for e in range(indptr[v], indptr[v + 1]):
        if cfg[indices[e]] == 0:
            s_minus += 1
    deg = indptr[v + 1] - indptr[v]
    a = math.log(lam) + (deg - s_minus) * math.log(beta)
    b = s_minus * math.log(beta)
    x = b - a
    if x > 700.0:
        p = math.exp(-x)
    else:
        p = 1.0 / (1.0 + math.exp(x))
    cfg[v] = 1 if np.random.random() < p else 0
    return deg


@njit(cache=True, inline="always")
def _poisson_inv(u, exp_neg_u):
    """Poisson(u) by cdf inversion; one uniform, ~u mult-adds."""
    acc = exp_neg_u
    pmf = exp_neg_u
    target = np.random.random()
    k = 0
    while target > acc:
        k += 1
        pmf *= u / k
        acc += pmf
        if k > 400:  # acc saturated by roundoff
            break
    return k


# Inline xorshift128 for the trial/timing kernels: ~10x cheaper per draw
# than the library generator, add-free so the pure-python fallback wraps
# silently, and identical streams on both backends.

_INV64 = 1.0 / 18446744073709551616.0


@njit(cache=True, inline="always")
def _xs_next(state):
    x = state[0]
    y = state[1]
    state[0] = y
    x ^= x << np.uint64(23)
    x ^= x >> np.uint64(17)
    x ^= y ^ (y >> np.uint64(26))
    state[1] = x
    return x ^ y


@njit(cache=True)
def _xs_init(seed):
    state = np.empty(2, np.uint64)
    s = np.uint64(seed)
    state[0] = s ^ np.uint64(0x9E3779B97F4A7C15)
    state[1] = (s << np.uint64(32)) ^ s ^ np.uint64(0xBF58476D1CE4E5B9)
    for _ in range(16):
        _xs_next(state)
    return state


@njit(cache=True, inline="always")
def _xs_uniform(state):
    return float(_xs_next(state)) * _INV64


@njit(cache=True, inline="always")
def _xs_poisson(state, u, exp_neg_u):
    """Poisson(u) by cdf inversion on the inline generator.

    Modulo/rounding bias is ~2^-53, far below every test tolerance."""
    acc = exp_neg_u
    pmf = exp_neg_u
    target = _xs_uniform(state)
    k = 0
    while target > acc:
        k += 1
        pmf *= u / k
        acc += pmf
        if k > 400:
            break
    return k


@njit(cache=True, inline="always")
def _exp_factory_neighbor(indptr, indices, cfg, v, u, exp_neg_u, want):
    """One Ber(e^{-u*h}) draw, h = fraction of neighbors with spin `want`.

    Poisson(u) thinning of random-neighbor coins, exiting at the first
    head: output 1 iff none of the N reads shows `want`. Returns
    (bit, neighbor reads).
    """
    nflips = _poisson_inv(u, exp_neg_u)
    deg = indptr[v + 1] - indptr[v]
    reads = 0
    for _ in range(nflips):
        e = indptr[v] + np.random.randint(deg)
        reads += 1
        if cfg[indices[e]] == want:
            return 0, reads
    return 1, reads


@njit(cache=True)
def ising_factory_update(indptr, indices, cfg, v, lam, beta):
    """Exact conditional resample at v via the two-sided factory race.

    Antiferro: odds(+) = lam * e^{-u*h+} / e^{-u*h-} with u = deg*|log beta|
    and h± the ±neighbor fractions; each race round draws Ber(lam/(1+lam))
    to pick a side and then one exponential-factory coin for that side.
    Ferromagnetic beta > 1 swaps the neighbor roles (and uses 1/beta).
    Returns (spin, neighbor reads).
    """
    deg = indptr[v + 1] - indptr[v]
    if beta <= 1.0:
        want_plus, want_minus = 1, 0
        u = -deg * math.log(beta)
    else:
        want_plus, want_minus = 0, 1
        u = deg * math.log(beta)
    if deg == 0 or u == 0.0:
        bit = 1 if np.random.random() < lam / (1.0 + lam) else 0
        cfg[v] = bit
        return bit, 0
    exp_neg_u = math.exp(-u)
    a = lam / (1.0 + lam)
    reads = 0
    while True:
        if np.random.random() < a:
            bit, r = _exp_factory_neighbor(indptr, indices, cfg, v, u, exp_neg_u, want_plus)
            reads += r
            if bit == 1:
                cfg[v] = 1
                return 1, reads
        else:
            bit, r = _exp_factory_neighbor(indptr, indices, cfg, v, u, exp_neg_u, want_minus)
            reads += r
            if bit == 1:
                cfg[v] = 0
                return 0, reads


@njit(cache=True)
def ising_factory_trials(indptr, indices, cfg, v, lam, beta, trials, seed):
    """Repeated factory updates at a frozen neighborhood; returns
    (plus count, total neighbor reads, max reads in one update).

    The race loop is inlined on the fast generator so the per-update cost
    reflects the production path rather than call or library-RNG overhead.
    """
    state = _xs_init(seed)
    deg = indptr[v + 1] - indptr[v]
    if beta <= 1.0:
        want_plus = 1
        u = -deg * math.log(beta)
    else:
        want_plus = 0
        u = deg * math.log(beta)
    want_minus = 1 - want_plus
    a = lam / (1.0 + lam)
    plus = 0
    total_reads = 0
    max_reads = 0
    if deg == 0 or u == 0.0:
        for _ in range(trials):
            if _xs_uniform(state) < a:
                plus += 1
        return plus, 0, 0
    exp_neg_u = math.exp(-u)
    base = indptr[v]
    udeg = np.uint64(deg)
    for _ in range(trials):
        reads = 0
        while True:
            want = want_plus if _xs_uniform(state) < a else want_minus
            nflips = _xs_poisson(state, u, exp_neg_u)
            head = False
            for _ in range(nflips):
                reads += 1
                e = base + np.int64(_xs_next(state) % udeg)
                if cfg[indices[e]] == want:
                    head = True
                    break
            if not head:
                if want == want_plus:
                    plus += 1
                    cfg[v] = 1
                else:
                    cfg[v] = 0
                break
        total_reads += reads
        if reads > max_reads:
            max_reads = reads
    return plus, total_reads, max_reads


@njit(cache=True)
def hc_factory_trials(indptr, indices, lam, cfg, v, trials, seed):
    """Repeated lazy hardcore updates at a frozen neighborhood; returns
    (occupied count, total neighbor reads)."""
    np.random.seed(seed)
    occ = 0
    reads = 0
    for _ in range(trials):
        reads += _hc_site_update(indptr, indices, lam, cfg, v)
        occ += int(cfg[v])
    return occ, reads


@njit(cache=True)
def ising_naive_timed_loop(indptr, indices, cfg, v, lam, beta, trials, seed):
    """Wall-clock payload for the naive path (model constants hoisted, same
    fast generator as the factory loop; the per-update work is the full
    neighbor scan plus one exp); returns plus count."""
    state = _xs_init(seed)
    llam = math.log(lam)
    lbeta = math.log(beta)
    lo = indptr[v]
    hi = indptr[v + 1]
    deg = hi - lo
    plus = 0
    for _ in range(trials):
        s_minus = 0
        for e in range(lo, hi):
            if cfg[indices[e]] == 0:
                s_minus += 1
        x = s_minus * lbeta - (llam + (deg - s_minus) * lbeta)
        if x > 700.0:
            p = math.exp(-x)
        else:
            p = 1.0 / (1.0 + math.exp(x))
        bit = 1 if _xs_uniform(state) < p else 0
        cfg[v] = bit
        plus += bit
    return plus


@njit(cache=True, parallel=True)
def ising_glauber_ensemble(indptr, indices, lam, beta, steps, nchains, seed0, use_factory):
    """Ising Glauber chains from the all-minus start; final bitmasks."""
    n = indptr.size - 1
    out = np.empty(nchains, np.int64)
    for c in prange(nchains):
        np.random.seed((seed0 * 1000003 + 12345 + c * 2654435761) % 4294967291)
        cfg = np.zeros(n, np.uint8)
        for _ in range(steps):
            v = np.random.randint(n)
            if use_factory:
                ising_factory_update(indptr, indices, cfg, v, lam, beta)
            else:
                ising_naive_update(indptr, indices, cfg, v, lam, beta)
        mask = 0
        for v in range(n):
            if cfg[v] == 1:
                mask |= 1 << v
        out[c] = mask
    return out


def warmup():
    """Compile (or no-op) every kernel on tiny inputs."""
    indptr = np.array([0, 1, 2], dtype=np.int64)
    indices = np.array([1, 0], dtype=np.int32)
    lam = np.array([0.5, 0.5])
    hc_glauber_run(indptr, indices, lam, np.zeros(2, np.uint8), 4, 1)
    hc_glauber_ensemble(indptr, indices, lam, 4, 2, 1)
    hc_balanced_ensemble(indptr, indices, lam, 4, 4, 2, 1)
    hc_balanced_forced_count(indptr, indices, lam, 4, 4, 1)
    hc_interleaved_ensemble(indptr, indices, lam, 0.1, 2, 0.05, 2, 1)
    hc_thinned_occupancy(indptr, indices, lam, 0.1, 1, 2, 2, 1)
    cfg = np.zeros(2, np.uint8)
    ising_factory_trials(indptr, indices, cfg, 0, 0.5, 0.9, 4, 1)
    ising_naive_timed_loop(indptr, indices, cfg, 0, 0.5, 0.9, 4, 1)
    hc_factory_trials(indptr, indices, lam, cfg, 0, 4, 1)
    ising_glauber_ensemble(indptr, indices, 0.5, 0.9, 4, 2, 1, True)
    ising_glauber_ensemble(indptr, indices, 0.5, 0.9, 4, 2, 1, False)
