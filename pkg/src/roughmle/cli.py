"""Command-line front end.

Subcommands: simulate, estimate, spectral-norm, noconvergence, heatmap,
homogenization, verify-appendix.  Experiment subcommands read a TOML config
mirroring ExperimentConfig and write deterministic CSV.  Exit codes:
0 success, 1 error, 2 assertion-style check failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import fgn, fracops
from .errors import RoughMleError
from .estimator import increments, mle_sigma2, subsample
from .harness import (
    CSV_HEADER,
    ExperimentConfig,
    format_value,
    run_experiment,
    write_csv,
)
from .paths import MultiscaleParams, PathSample, sample_multiscale

__all__ = ["main"]


def _load_config(path: str, experiment: str, args) -> ExperimentConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    raw.pop("experiment", None)
    kwargs = dict(
        experiment=experiment,
        H_values=raw.pop("H_values", ()),
        epsilon_values=raw.pop("epsilon_values", ()),
        alpha_values=raw.pop("alpha_values", ()),
        n_values=raw.pop("n_values", ()),
        delta_factors=raw.pop("delta_factors", ()),
    )
    for key in ("replicates", "sigma", "T", "seed_base", "parallelism"):
        if key in raw:
            kwargs[key] = raw.pop(key)
    if raw:
        raise RoughMleError(f"unknown config keys: {sorted(raw)}")
    if kwargs.get("parallelism") == "auto":
        kwargs["parallelism"] = None
    if getattr(args, "seed_base", None) is not None:
        kwargs["seed_base"] = args.seed_base
    if getattr(args, "parallelism", None) is not None:
        kwargs["parallelism"] = args.parallelism
    return ExperimentConfig(**kwargs)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    params = MultiscaleParams(
        H=args.H, sigma=args.sigma, epsilon=args.eps, T=args.T,
        fine_factor=args.kappa, burn_in_multiple=args.burn_in,
        scheme=args.scheme,
    )
    out_delta = args.out_delta if args.out_delta is not None else min(
        params.epsilon, params.T
    )
    paths = sample_multiscale(params, out_delta, args.seed)
    t = paths["slow"].times
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x_eps,y_eps,b_h\n")
        for row in zip(t, paths["slow"].values, paths["fast"].values,
                       paths["driver"].values):
            fh.write(",".join(format_value(v) for v in row) + "\n")
    return 0


def _cmd_estimate(args) -> int:
    delta = args.eps**args.alpha
    if args.from_csv:
        data = np.loadtxt(args.from_csv, delimiter=",", skiprows=1)
        t, x = data[:, 0], data[:, 1]
        path = PathSample(times=t, values=x)
        obs = subsample(path, delta)
    else:
        params = MultiscaleParams(H=args.H, sigma=args.sigma,
                                  epsilon=args.eps, T=args.T)
        paths = sample_multiscale(params, delta, args.seed)
        obs = subsample(paths["slow"], delta)
    est = mle_sigma2(increments(obs), delta, args.H)
    payload = json.dumps({
        "sigma2_hat": est.sigma2_hat,
        "N": est.N_used,
        "delta": delta,
        "epsilon": args.eps,
        "alpha": args.alpha,
    })
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def _cmd_spectral_norm(args) -> int:
    cfg = _load_config(args.config, "spectral_norm", args)
    rows = run_experiment(cfg)
    by_cell = {}
    for r in rows:
        by_cell.setdefault((r.H, r.n), {})[r.stat] = r.value
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("H,n,beta,inv_spectral_norm,ratio,log2_ratio\n")
        for (H, n) in sorted(by_cell):
            stats = by_cell[(H, n)]
            fields = [H, n, fgn.spectral_bound_exponent(H),
                      stats["inv_spectral_norm"], stats["ratio"],
                      stats["log2_ratio"]]
            fh.write(",".join(format_value(v) for v in fields) + "\n")
    return 0


def _cmd_harness(experiment: str):
    def run(args) -> int:
        cfg = _load_config(args.config, experiment, args)
        write_csv(run_experiment(cfg), args.out)
        return 0

    return run


def _cmd_verify_appendix(args) -> int:
    gamma = args.gamma if args.gamma is not None else args.H - 0.5
    H = gamma + 0.5
    reports = {
        n: fracops.verify_appendix_bounds(n, gamma, args.trials, seed=args.seed)
        for n in sorted({16, args.n})
    }
    base = reports[16]
    rows, all_hold = [], True
    for name, key in (("bound_A", "max_A_ratio"), ("bound_B", "max_B_ratio")):
        for n in sorted(reports):
            value = reports[n][key]
            holds = value <= 1.1 * base[key]
            all_hold &= holds
            rows.append((name, n, gamma, H, "max_ratio", value, holds))
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("check,n,gamma,H,statistic,value,holds\n")
        for row in rows:
            fields = [format_value(v) if not isinstance(v, bool)
                      else ("true" if v else "false") for v in row]
            fh.write(",".join(fields) + "\n")
    return 0 if all_hold else 2


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="roughmle",
        description="MLE of the diffusion coefficient for rough "
                    "homogenization limits of multiscale fOU processes",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate the multiscale system")
    sim.add_argument("--H", type=float, required=True)
    sim.add_argument("--sigma", type=float, default=1.0)
    sim.add_argument("--eps", type=float, required=True)
    sim.add_argument("--T", type=float, default=1.0)
    sim.add_argument("--out-delta", type=float, default=None)
    sim.add_argument("--kappa", type=int, default=50,
                     help="fine steps per min(eps, out-delta)")
    sim.add_argument("--burn-in", type=float, default=10.0,
                     help="burn-in window in multiples of eps")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--scheme", choices=("euler", "expeuler"),
                     default="euler")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=_cmd_simulate)

    est = sub.add_parser("estimate", help="subsample and estimate sigma^2")
    est.add_argument("--H", type=float, required=True)
    est.add_argument("--sigma", type=float, default=1.0)
    est.add_argument("--eps", type=float, required=True)
    est.add_argument("--alpha", type=float, required=True)
    est.add_argument("--T", type=float, default=1.0)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--from-csv", default=None,
                     help="read an observed path (CSV columns t,x)")
    est.add_argument("--out", default=None)
    est.set_defaults(func=_cmd_estimate)

    for name, fn in [
        ("spectral-norm", _cmd_spectral_norm),
        ("noconvergence", _cmd_harness("noconvergence")),
        ("heatmap", _cmd_harness("l2_heatmap")),
        ("homogenization", _cmd_harness("homogenization")),
    ]:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="TOML config file")
        sp.add_argument("--out", required=True)
        sp.add_argument("--seed-base", type=int, default=None)
        sp.add_argument("--parallelism", type=int, default=None)
        sp.set_defaults(func=fn)

    va = sub.add_parser("verify-appendix",
                        help="check boundedness of the quadratic-form weights")
    va.add_argument("--H", type=float, default=None)
    va.add_argument("--n", type=int, default=64)
    va.add_argument("--gamma", type=float, default=None)
    va.add_argument("--trials", type=int, default=50)
    va.add_argument("--seed", type=int, default=0)
    va.add_argument("--out", required=True)
    va.set_defaults(func=_cmd_verify_appendix)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "verify-appendix" and args.gamma is None and args.H is None:
        print("error: give --gamma or --H", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (RoughMleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
