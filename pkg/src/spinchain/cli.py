"""Command-line entry point: sample, mix, verify, concentrate, bench,
thresholds.

Data goes to stdout (newline-delimited JSON for reports, hex bitstrings
for configurations), logs to stderr. Every subcommand is deterministic
under --seed. Exit codes: 0 success, 1 verification failure, 2 usage
error. SPINCHAIN_THREADS caps ensemble parallelism.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import chains, diagnostics, factories, kernels, models, oracle
from .graphs import load_graph, generate_random_regular
from .models import hardcore_params, ising_params, two_spin_params

DEFAULT_SEED = 7


def _log(*args):
    print(*args, file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinchain",
                                description="samplers and verification for hardcore/Ising models")
    sub = p.add_subparsers(dest="command", required=True)

    def add_seed(q):
        q.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master RNG seed")

    def add_graph_flags(q):
        q.add_argument("--graph", help="edge-list or binary adjacency file")
        q.add_argument("--graph-format", choices=["edge-list", "binary"], default=None)
        q.add_argument("--random-regular", metavar="N,D",
                       help="generate a random D-regular graph on N vertices instead")

    def add_model_flags(q):
        q.add_argument("--model", choices=["hardcore", "ising", "two-spin"], required=True)
        q.add_argument("--lambda", dest="lam", type=float, default=None, help="fugacity / external field")
        q.add_argument("--beta", type=float, default=None, help="edge activity (++ edges)")
        q.add_argument("--gamma", type=float, default=None, help="edge activity (-- edges)")
        q.add_argument("--per-site-lambda", help="file with one fugacity per line")
        q.add_argument("--config", dest="config_file", help="key=value model config file")

    q = sub.add_parser("sample", help="emit configurations from a chain")
    add_seed(q)
    add_graph_flags(q)
    add_model_flags(q)
    q.add_argument("--chain", default="glauber",
                   help="chain spec, e.g. glauber | balanced:K=2 | interleaved:theta=0.1,m=auto")
    q.add_argument("--steps", type=int, default=None, help="default: ceil(8 n log(n/eps))")
    q.add_argument("--eps", type=float, default=0.05)
    q.add_argument("--emit", choices=["config", "count", "trace"], default="config",
                   help="hex bitstrings, occupied counts, or ndjson trace records")
    q.add_argument("--stride", type=int, default=1)
    q.add_argument("--update-path", choices=["naive", "factory", "auto"], default="auto")

    q = sub.add_parser("mix", help="estimate TV distance to stationarity")
    add_seed(q)
    add_graph_flags(q)
    add_model_flags(q)
    q.add_argument("--chain", default="glauber")
    q.add_argument("--steps", type=int, default=None)
    q.add_argument("--eps", type=float, default=0.05)
    q.add_argument("--ensemble", type=int, default=20000)

    q = sub.add_parser("verify", help="run verification suites")
    add_seed(q)
    q.add_argument("--suite", default="all",
                   choices=["all", "oracle", "models", "chains", "factories", "acceptance"])
    q.add_argument("--criterion", type=int, default=None,
                   help="run a single acceptance criterion")
    q.add_argument("--fast", action="store_true", help="reduced Monte-Carlo budgets")

    q = sub.add_parser("concentrate", help="tail/concentration experiment")
    add_seed(q)
    add_graph_flags(q)
    add_model_flags(q)
    q.add_argument("--samples", type=int, default=100000)
    q.add_argument("--burn-rounds", type=int, default=30)
    q.add_argument("--csv", action="store_true", help="emit the tail table as CSV")

    q = sub.add_parser("bench", help="factory cost profile across degrees")
    add_seed(q)
    q.add_argument("--deltas", default="8,64,512")
    q.add_argument("--lambda", dest="lam", type=float, default=1.0)
    q.add_argument("--u0", type=float, default=2.0,
                   help="per-site interaction budget Delta*|log beta|")
    q.add_argument("--trials", type=int, default=30000)

    q = sub.add_parser("thresholds", help="uniqueness report for given parameters")
    add_seed(q)
    q.add_argument("--model", choices=["hardcore", "ising", "two-spin"], required=True)
    q.add_argument("--lambda", dest="lam", type=float, default=None)
    q.add_argument("--beta", type=float, default=None)
    q.add_argument("--gamma", type=float, default=None)
    q.add_argument("--delta", type=float, default=0.0, help="requested uniqueness gap")
    q.add_argument("--max-degree", type=int, required=True)
    return p


def _load_graph_arg(args, rng):
    if args.random_regular:
        n, d = (int(x) for x in args.random_regular.split(","))
        return generate_random_regular(n, d, rng)
    if not args.graph:
        raise SystemExit2("need --graph FILE or --random-regular N,D")
    return load_graph(args.graph, fmt=args.graph_format)


class SystemExit2(SystemExit):
    def __init__(self, msg):
        _log(f"error: {msg}")
        super().__init__(2)


def _build_model(args, n: int):
    cfg = models.load_model_config(args.config_file) if args.config_file else {}
    lam = args.lam if args.lam is not None else cfg.get("lambda")
    beta = args.beta if args.beta is not None else cfg.get("beta")
    gamma = args.gamma if args.gamma is not None else cfg.get("gamma")
    if args.model == "hardcore":
        if args.per_site_lambda:
            vec = np.loadtxt(args.per_site_lambda, dtype=np.float64, ndmin=1)
            if vec.size != n:
                raise SystemExit2(f"per-site fugacity file has {vec.size} entries, graph has {n}")
            return hardcore_params(vec)
        if lam is None:
            raise SystemExit2("hardcore model needs --lambda (or --per-site-lambda)")
        if lam <= 0:
            raise SystemExit2("--lambda must be positive")
        return hardcore_params(float(lam), n)
    if args.model == "ising":
        if lam is None or beta is None:
            raise SystemExit2("ising model needs --lambda and --beta")
        if beta < 0 or lam <= 0:
            raise SystemExit2("need beta >= 0 and lambda > 0")
        return ising_params(float(beta), float(lam))
    if lam is None or beta is None or gamma is None:
        raise SystemExit2("two-spin model needs --lambda, --beta, --gamma")
    return two_spin_params(float(beta), float(gamma), float(lam))


def _maybe_flip(model, config):
    if isinstance(model, models.TwoSpinParams) and model.flipped:
        return 1 - config
    return config


def cmd_sample(args) -> int:
    rng = np.random.default_rng(args.seed)
    g = _load_graph_arg(args, rng)
    model = _build_model(args, g.n)
    eps = args.eps
    steps = args.steps if args.steps is not None else math.ceil(8 * g.n * math.log(g.n / eps))
    path = args.update_path
    if path == "auto":
        if isinstance(model, models.TwoSpinParams):
            usable = model.is_ising and factories.ising_factory_caps_ok(model, g.max_degree)
        else:
            usable = True  # the lazy hardcore update is always applicable
        path = "factory" if usable else "naive"
        _log(f"update path: {path} (auto)")
    elif path == "factory" and isinstance(model, models.TwoSpinParams) \
            and not factories.ising_factory_caps_ok(model, g.max_degree):
        raise SystemExit2("factory update path inapplicable (caps exceeded)")
    start = chains.new_config(g.n)
    emitted = []

    def cb(step, config):
        out = _maybe_flip(model, config)
        if args.emit == "config":
            emitted.append(chains.config_hex(out))
        elif args.emit == "count":
            emitted.append(str(int(out.sum())))
    result = chains.run_schedule(args.chain, model, g, start, steps, rng,
                                 callbacks=[cb], stride=args.stride, update_path=path,
                                 include_hex=(args.emit == "trace"))
    if args.emit == "trace":
        emitted = [json.dumps(entry) for entry in result["trace"]]
    print("\n".join(emitted))
    return 0


def cmd_mix(args) -> int:
    rng = np.random.default_rng(args.seed)
    g = _load_graph_arg(args, rng)
    model = _build_model(args, g.n)
    steps = args.steps if args.steps is not None else math.ceil(8 * g.n * math.log(g.n / args.eps))
    rep = diagnostics.estimate_tv(model, g, args.chain, steps, args.ensemble,
                                  seed=args.seed, eps=args.eps)
    print(json.dumps(rep.to_json()))
    return 0


def cmd_verify(args) -> int:
    from . import verify as verify_mod
    failures = 0
    if args.suite in ("all", "oracle", "models", "chains", "factories"):
        checks = verify_mod.run_suites(args.suite, seed=args.seed, fast=args.fast)
        for chk in checks:
            print(json.dumps(chk))
            failures += chk["status"] != "pass"
    if args.suite in ("all", "acceptance") or args.criterion is not None:
        report = diagnostics.run_acceptance_suite(seed=args.seed, only=args.criterion,
                                                  fast=args.fast, log=_log)
        print(json.dumps(report))
        failures += report["status"] != "pass"
    return 1 if failures else 0


def cmd_concentrate(args) -> int:
    rng = np.random.default_rng(args.seed)
    g = _load_graph_arg(args, rng)
    model = _build_model(args, g.n)
    rep = diagnostics.concentration_experiment(model, g, args.samples, seed=args.seed,
                                               burn_rounds=args.burn_rounds)
    if args.csv:
        print(rep.to_csv(), end="")
    else:
        print(json.dumps(rep.to_json()))
    return 0


def cmd_bench(args) -> int:
    deltas = tuple(int(x) for x in args.deltas.split(","))
    rows = diagnostics.factory_cost_profile(delta_grid=deltas, lam=args.lam,
                                            u0=args.u0, coin_trials=args.trials,
                                            seed=args.seed)
    for row in rows:
        print(json.dumps(row))
    return 0


def cmd_thresholds(args) -> int:
    if args.model == "hardcore":
        lam_c = models.hardcore_critical_fugacity(args.max_degree)
        print(f"lambda_Delta = {lam_c}")
        if args.lam is not None:
            model = hardcore_params(args.lam, 1)
            rep = models.uniqueness_report(model, args.max_degree, args.delta)
            print(json.dumps(rep.to_json()))
        return 0
    if args.model == "ising":
        lo, hi = models.ising_worst_case_interval(args.max_degree, args.delta)
        print(f"beta interval = [{lo}, {hi}]")
        if args.beta is not None and args.lam is not None:
            rep = models.uniqueness_report(ising_params(args.beta, args.lam),
                                           args.max_degree, args.delta)
            print(json.dumps(rep.to_json()))
        return 0
    if args.beta is None or args.gamma is None:
        raise SystemExit2("two-spin thresholds need --beta and --gamma")
    for d in range(1, args.max_degree):
        case, info = models.antiferro_uniqueness_lambdas(args.beta, args.gamma,
                                                         args.delta, d)
        if case == "all-lambda":
            print(json.dumps({"d": d, "case": "all-lambda"}))
        else:
            print(json.dumps({"d": d, "case": "interval",
                              "lambda1": info["lambda1"], "lambda2": info["lambda2"]}))
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "mix": cmd_mix,
    "verify": cmd_verify,
    "concentrate": cmd_concentrate,
    "bench": cmd_bench,
    "thresholds": cmd_thresholds,
}


def main(argv=None) -> int:
    threads = os.environ.get("SPINCHAIN_THREADS")
    if threads:
        try:
            kernels.set_num_threads(max(1, int(threads)))
        except ValueError:
            _log(f"ignoring invalid SPINCHAIN_THREADS={threads!r}")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SystemExit2:
        return 2
    except (ValueError, OSError, oracle.CapExceededError) as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
