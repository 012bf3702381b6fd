import math

import numpy as np
import pytest

from spinchain import kernels
from spinchain.factories import (BiasCoin, ConstCoin, FactoryCapError, FactoryStats,
                                 NeighborSpinCoin, exp_factory, fast_hardcore_update,
                                 fast_ising_update, ising_factory_caps_ok,
                                 logistic_factory, neighbor_coin)
from spinchain.graphs import graph_from_edges, generate_random_regular
from spinchain.models import (hardcore_params, ising_params, two_spin_conditional)


def binom_tol(p, n, k=4):
    return k * math.sqrt(max(p * (1 - p), 1.0 / n) / n)


def star(delta, s_minus):
    g = graph_from_edges([(0, i + 1) for i in range(delta)], n=delta + 1)
    cfg = np.ones(delta + 1, dtype=np.uint8)
    cfg[1:1 + s_minus] = 0
    return g, cfg


def test_neighbor_coin_bias():
    rng = np.random.default_rng(0)
    trials = 100000
    for s_minus, want_p in ((0, 0.75), (4, 0.25), (2, 0.5)):
        g, cfg = star(4, s_minus)
        freq = np.mean([neighbor_coin(g, 0, cfg, rng) for _ in range(trials)])
        assert abs(freq - want_p) < binom_tol(want_p, trials)
    # flipped coin counts minus neighbors
    g, cfg = star(4, 1)
    freq = np.mean([neighbor_coin(g, 0, cfg, rng, flip=True) for _ in range(trials // 4)])
    want = 0.25 + 1 / 8
    assert abs(freq - want) < binom_tol(want, trials // 4)


def test_neighbor_coin_isolated():
    g = graph_from_edges([(0, 1)], n=3)
    with pytest.raises(Exception):
        neighbor_coin(g, 2, np.zeros(3, np.uint8), np.random.default_rng(0))


def test_exp_factory_degenerate_and_closed_forms():
    rng = np.random.default_rng(1)
    assert all(exp_factory(0.0, BiasCoin(0.3), rng) == 1 for _ in range(50))
    trials = 100000
    freq = np.mean([exp_factory(-1.0, BiasCoin(0.5), rng) for _ in range(trials)])
    assert abs(freq - math.exp(-0.5)) < binom_tol(math.exp(-0.5), trials)
    freq = np.mean([exp_factory(-2.0, ConstCoin(1), rng) for _ in range(trials)])
    assert abs(freq - math.exp(-2.0)) < binom_tol(math.exp(-2.0), trials)
    with pytest.raises(ValueError):
        exp_factory(0.5, BiasCoin(0.5), rng)


def test_logistic_factory_closed_forms():
    rng = np.random.default_rng(2)
    trials = 100000
    freq = np.mean([logistic_factory(1.0, ConstCoin(1), rng) for _ in range(trials)])
    assert abs(freq - 0.5) < binom_tol(0.5, trials)
    assert all(logistic_factory(5.0, ConstCoin(0), rng) == 0 for _ in range(200))
    freq = np.mean([logistic_factory(2.0, BiasCoin(0.5), rng) for _ in range(trials)])
    assert abs(freq - 0.5) < binom_tol(0.5, trials)
    with pytest.raises(ValueError):
        logistic_factory(0.0, ConstCoin(1), rng)


def test_logistic_factory_cost_stability():
    # mean subcoin use is finite and stable across seeds (CV of the mean < 0.1)
    trials = 4000
    means = []
    for seed in range(8):
        rng = np.random.default_rng(100 + seed)
        stats = FactoryStats()
        for _ in range(trials):
            stats.start()
            logistic_factory(3.0, BiasCoin(0.4), rng, stats)
            stats.finish()
        means.append(stats.mean_coins)
    means = np.array(means)
    assert means.std() / means.mean() < 0.1
    # expected q-coin use is M/(1+Mq) = 3/2.2
    assert abs(means.mean() - 3.0 / 2.2) < 0.1


def test_exp_factory_cost_stability():
    trials = 4000
    means = []
    for seed in range(8):
        rng = np.random.default_rng(200 + seed)
        stats = FactoryStats()
        for _ in range(trials):
            stats.start()
            exp_factory(-2.5, BiasCoin(0.5), rng, stats)
            stats.finish()
        means.append(stats.mean_coins)
    means = np.array(means)
    assert means.std() / means.mean() < 0.1


def test_fast_ising_update_matches_conditional():
    rng = np.random.default_rng(3)
    trials = 20000
    for lam, beta, delta, s_minus in ((1.0, 0.85, 4, 2), (0.25, 0.95, 16, 0),
                                      (1.0, 1.05, 8, 8), (0.5, 0.9, 6, 3)):
        params = ising_params(beta, lam)
        p_exact = two_spin_conditional(params, delta, s_minus)
        g, cfg = star(delta, s_minus)
        stats = FactoryStats()
        hits = 0
        for _ in range(trials):
            hits += fast_ising_update(params, g, 0, cfg, rng, stats=stats)
        assert abs(hits / trials - p_exact) < 4.5 * math.sqrt(
            max(p_exact * (1 - p_exact), 1.0 / trials) / trials)
        assert stats.updates == trials


def test_fast_ising_update_beta_one_zero_reads():
    params = ising_params(1.0, 0.6)
    g, cfg = star(8, 3)
    rng = np.random.default_rng(4)
    stats = FactoryStats()
    hits = 0
    trials = 50000
    for _ in range(trials):
        hits += fast_ising_update(params, g, 0, cfg, rng, stats=stats)
    assert stats.coins == 0
    p = 0.6 / 1.6
    assert abs(hits / trials - p) < binom_tol(p, trials)


def test_fast_ising_update_caps():
    params = ising_params(0.5, 1.0)  # u = 64*log(2) >> alpha at delta=64
    g, cfg = star(64, 10)
    assert not ising_factory_caps_ok(params, 64)
    with pytest.raises(FactoryCapError):
        fast_ising_update(params, g, 0, cfg, np.random.default_rng(5))
    assert ising_factory_caps_ok(ising_params(0.95, 1.0), 16)


def test_kernel_factory_matches_reference_distribution():
    # python reference and jitted kernel implement the same exact law
    lam, beta, delta, s_minus = 0.7, 0.9, 12, 5
    params = ising_params(beta, lam)
    p_exact = two_spin_conditional(params, delta, s_minus)
    g, cfg = star(delta, s_minus)
    trials = 200000
    plus, reads, _ = kernels.ising_factory_trials(g.indptr, g.indices, cfg.copy(), 0,
                                                  lam, beta, trials, 99)
    assert abs(plus / trials - p_exact) < binom_tol(p_exact, trials)
    assert reads > 0


def test_fast_hardcore_update_distribution_and_laziness():
    rng = np.random.default_rng(6)
    g = generate_random_regular(20, 3, rng)
    model = hardcore_params(1.2, 20)
    cfg = np.zeros(20, np.uint8)
    cfg[g.neighbors(0)[0]] = 1  # one occupied neighbor: must stay empty
    stats = FactoryStats()
    trials = 30000
    occ = sum(fast_hardcore_update(model, g, 0, cfg, rng, stats=stats)
              for _ in range(trials))
    assert occ == 0
    # no-proposal path takes zero reads: mean reads < full scan
    assert stats.mean_coins < 3.0
    # unblocked vertex matches lam/(1+lam)
    cfg[:] = 0
    hits = sum(fast_hardcore_update(model, g, 0, cfg, rng) for _ in range(trials))
    p = 1.2 / 2.2
    assert abs(hits / trials - p) < binom_tol(p, trials)


def test_fast_hardcore_zero_fugacity_limit():
    g = graph_from_edges([(0, 1)], n=2)
    model = hardcore_params([1e-12, 1.0])
    rng = np.random.default_rng(7)
    assert all(fast_hardcore_update(model, g, 0, np.zeros(2, np.uint8), rng) == 0
               for _ in range(2000))


def test_neighbor_spin_coin_counts_consumption():
    g, cfg = star(6, 2)
    coin = NeighborSpinCoin(g, 0, cfg, want=1)
    rng = np.random.default_rng(8)
    for _ in range(10):
        coin.draw(rng)
    assert coin.consumed == 10


def test_trial_kernels_identical_across_backends():
    """The factory/naive trial loops carry their own generator, so the
    jitted and pure-python paths return bit-identical results."""
    import json
    import os
    import subprocess
    import sys
    prog = (
        "import numpy as np, json\n"
        "from spinchain import kernels\n"
        "from spinchain.graphs import graph_from_edges\n"
        "g = graph_from_edges([(0, i + 1) for i in range(16)], n=17)\n"
        "cfg = np.ones(17, dtype=np.uint8); cfg[1:9] = 0\n"
        "a = kernels.ising_factory_trials(g.indptr, g.indices, cfg.copy(), 0, 0.8, 0.93, 3000, 42)\n"
        "b = kernels.ising_naive_timed_loop(g.indptr, g.indices, cfg.copy(), 0, 0.8, 0.93, 3000, 43)\n"
        "print(json.dumps([list(map(int, a)), int(b), kernels.BACKEND]))\n"
    )
    outs = {}
    for backend, env_val in (("numba", "0"), ("python", "1")):
        env = dict(os.environ, SPINCHAIN_NO_NUMBA=env_val)
        proc = subprocess.run([sys.executable, "-c", prog], capture_output=True,
                              text=True, env=env, check=True)
        payload = json.loads(proc.stdout.strip().splitlines()[-1])
        assert payload[2] == backend
        outs[backend] = payload[:2]
    assert outs["numba"] == outs["python"]


def test_factory_stats_json():
    stats = FactoryStats()
    stats.start(); stats.count(3); stats.finish()
    stats.start(); stats.count(1); stats.finish()
    payload = stats.to_json()
    assert payload == {"mean_coins": 2.0, "max_coins": 3, "updates": 2}
