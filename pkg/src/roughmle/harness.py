"""Configuration-driven Monte Carlo experiment runner.

Four experiments: spectral-norm growth of ||P^{-1}||, vanishing of the MLE
without subsampling, the (epsilon, alpha) L2-error heatmap, and the
homogenization rate.  Results are deterministic CSV rows: replicate seeds
are derived from (seed_base, experiment, cell key, replicate) so output is
byte-identical regardless of worker scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import fgn
from .errors import ConfigError
from .estimator import increments, mle_sigma2, subsample
from .paths import MultiscaleParams, homogenization_error, sample_multiscale
from .seeding import child_rng, key_hash

__all__ = [
    "ExperimentConfig",
    "ExperimentRow",
    "run_experiment",
    "run_spectral_norm",
    "run_noconvergence",
    "run_l2_heatmap",
    "run_homogenization",
    "write_csv",
    "format_value",
]

EXPERIMENTS = ("spectral_norm", "noconvergence", "l2_heatmap", "homogenization")

CSV_HEADER = "experiment,H,epsilon,alpha,delta,n,M,stat,value,se,seed_base"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    H_values: tuple[float, ...]
    epsilon_values: tuple[float, ...] = ()
    alpha_values: tuple[float, ...] = ()
    n_values: tuple[int, ...] = ()
    delta_factors: tuple[float, ...] = ()  # noconvergence: delta = eps * factor
    replicates: int = 100
    sigma: float = 1.0
    T: float = 1.0
    seed_base: int = 0
    parallelism: int | None = None  # None = auto

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        for name in ("H_values", "epsilon_values", "alpha_values", "n_values",
                     "delta_factors"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.H_values:
            raise ConfigError("H_values must be non-empty")
        if self.experiment == "spectral_norm":
            if not self.n_values:
                raise ConfigError("spectral_norm needs n_values")
        else:
            if not self.epsilon_values:
                raise ConfigError(f"{self.experiment} needs epsilon_values")
            if self.replicates < 2:
                raise ConfigError("need M >= 2 for a standard error")
        if self.experiment == "noconvergence":
            if not (self.delta_factors or self.alpha_values):
                raise ConfigError(
                    "noconvergence needs delta_factors or alpha_values"
                )
        if self.experiment == "l2_heatmap" and not self.alpha_values:
            raise ConfigError("l2_heatmap needs alpha_values")

    def workers(self) -> int:
        env = os.environ.get("ROUGHMLE_THREADS")
        if env:
            return max(1, int(env))
        if self.parallelism is not None:
            return max(1, self.parallelism)
        return min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class ExperimentRow:
    experiment: str
    H: float
    epsilon: float | None
    alpha: float | None
    delta: float | None
    n: int | None
    M: int
    stat: str
    value: float
    se: float
    seed_base: int

    def sort_key(self):
        none = float("-inf")
        return (
            self.experiment,
            self.H,
            self.epsilon if self.epsilon is not None else none,
            self.alpha if self.alpha is not None else none,
            self.delta if self.delta is not None else none,
            self.n if self.n is not None else -1,
            self.stat,
        )


def _replicate_seed(cfg: ExperimentConfig, cell_key: tuple, r: int) -> int:
    rng = child_rng(cfg.seed_base, key_hash(cfg.experiment), key_hash(*cell_key), r)
    return int(rng.integers(0, 2**63 - 1))


def _map_cells(cfg: ExperimentConfig, jobs, fn) -> list[ExperimentRow]:
    workers = cfg.workers()
    if workers == 1:
        results = [fn(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, jobs))
    rows = [row for chunk in results for row in chunk]
    rows.sort(key=ExperimentRow.sort_key)
    return rows


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


def _jackknife_rms(errors: np.ndarray) -> tuple[float, float]:
    """RMS of errors with a leave-one-out jackknife standard error."""
    M = len(errors)
    sq = errors**2
    total = sq.sum()
    rms = math.sqrt(total / M)
    loo = np.sqrt((total - sq) / (M - 1))
    se = math.sqrt((M - 1) / M * float(((loo - loo.mean()) ** 2).sum()))
    return rms, se


# --------------------------------------------------------------------------
# Experiments
# --------------------------------------------------------------------------

def run_spectral_norm(cfg: ExperimentConfig) -> list[ExperimentRow]:
    """||(P^(n))^{-1}||_2 / n^{max{1,2H}} on the unit interval; no randomness."""
    if list(cfg.n_values) != sorted(cfg.n_values):
        raise ConfigError("n_values must be ascending")

    def cell(job):
        H, n = job
        inv = fgn.inverse_spectral_norm(
            fgn.build_covariance(fgn.GridSpec.from_T(1.0, n), H)
        )
        ratio = inv / n ** fgn.spectral_bound_exponent(H)
        common = dict(experiment=cfg.experiment, H=H, epsilon=None, alpha=None,
                      delta=1.0 / n, n=n, M=1, se=0.0, seed_base=cfg.seed_base)
        return [
            ExperimentRow(stat="inv_spectral_norm", value=inv, **common),
            ExperimentRow(stat="ratio", value=ratio, **common),
            ExperimentRow(stat="log2_ratio", value=math.log2(ratio), **common),
        ]

    jobs = [(H, n) for H in cfg.H_values for n in cfg.n_values]
    return _map_cells(cfg, jobs, cell)


def _noconvergence_deltas(cfg: ExperimentConfig, eps: float) -> list[float]:
    if cfg.delta_factors:
        return [eps * f for f in cfg.delta_factors]
    return [eps**a for a in cfg.alpha_values]


def run_noconvergence(cfg: ExperimentConfig) -> list[ExperimentRow]:
    """Mean MLE across shrinking delta at fixed epsilon.

    One fine path per (H, epsilon, seed) serves every delta, matching the
    pathwise almost-sure statement being illustrated.
    """

    def cell(job):
        H, eps = job
        deltas = sorted(_noconvergence_deltas(cfg, eps), reverse=True)
        params = MultiscaleParams(H=H, sigma=cfg.sigma, epsilon=eps, T=cfg.T)
        delta_min = deltas[-1]
        per_delta = {d: [] for d in deltas}
        for r in range(cfg.replicates):
            seed = _replicate_seed(cfg, ("cell", H, eps), r)
            paths = sample_multiscale(params, out_delta=delta_min, seed=seed)
            for d in deltas:
                obs = subsample(paths["slow"], d)
                est = mle_sigma2(increments(obs), d, H)
                per_delta[d].append(est.sigma2_hat)
        rows = []
        for d in deltas:
            mean, se = _mean_se(np.array(per_delta[d]))
            alpha = math.log(d) / math.log(eps) if cfg.alpha_values else None
            rows.append(ExperimentRow(
                experiment=cfg.experiment, H=H, epsilon=eps, alpha=alpha,
                delta=d, n=None, M=cfg.replicates,
                stat="mean_sigma2_hat", value=mean, se=se,
                seed_base=cfg.seed_base,
            ))
        return rows

    jobs = [(H, eps) for H in cfg.H_values for eps in cfg.epsilon_values]
    return _map_cells(cfg, jobs, cell)


def run_l2_heatmap(cfg: ExperimentConfig) -> list[ExperimentRow]:
    """RMS of sigma2_hat - sigma^2 per (H, epsilon, alpha) cell.

    Within one (H, epsilon, seed) a single fine path serves every alpha;
    each nominal delta = eps^alpha is realized as the nearest multiple of
    the fine step and that realized delta is used in the likelihood.
    """

    def cell(job):
        H, eps = job
        nominal = {a: eps**a for a in cfg.alpha_values}
        delta_min = min(nominal.values())
        params = MultiscaleParams(H=H, sigma=cfg.sigma, epsilon=eps, T=cfg.T)
        per_alpha = {a: [] for a in cfg.alpha_values}
        realized: dict[float, float] = {}
        for r in range(cfg.replicates):
            seed = _replicate_seed(cfg, ("cell", H, eps), r)
            paths = sample_multiscale(params, out_delta=delta_min, seed=seed)
            h = paths["slow"].step
            for a in cfg.alpha_values:
                m = max(1, round(nominal[a] / h))
                d = m * h
                realized[a] = d
                obs = subsample(paths["slow"], d)
                est = mle_sigma2(increments(obs), d, H)
                per_alpha[a].append(est.sigma2_hat)
        rows = []
        sigma2 = cfg.sigma**2
        for a in cfg.alpha_values:
            err = np.array(per_alpha[a]) - sigma2
            rms, se = _jackknife_rms(err)
            rows.append(ExperimentRow(
                experiment=cfg.experiment, H=H, epsilon=eps, alpha=a,
                delta=realized[a], n=None, M=cfg.replicates,
                stat="l2_error", value=rms, se=se, seed_base=cfg.seed_base,
            ))
        return rows

    jobs = [(H, eps) for H in cfg.H_values for eps in cfg.epsilon_values]
    return _map_cells(cfg, jobs, cell)


def run_homogenization(cfg: ExperimentConfig) -> list[ExperimentRow]:
    """Mean pathwise sup-error vs epsilon, plus a log-log slope summary row."""

    def cell(job):
        H, eps = job
        params = MultiscaleParams(H=H, sigma=cfg.sigma, epsilon=eps, T=cfg.T)
        seeds = [
            _replicate_seed(cfg, ("cell", H, eps), r)
            for r in range(cfg.replicates)
        ]
        res = homogenization_error(params, seeds)
        return [ExperimentRow(
            experiment=cfg.experiment, H=H, epsilon=eps, alpha=None,
            delta=None, n=None, M=cfg.replicates, stat="mean_sup_error",
            value=res["mean_sup_error"], se=res["se"],
            seed_base=cfg.seed_base,
        )]

    jobs = [(H, eps) for H in cfg.H_values for eps in cfg.epsilon_values]
    rows = _map_cells(cfg, jobs, cell)

    # per-H summary: slope of log(mean error) against log(epsilon)
    for H in cfg.H_values:
        pts = [(r.epsilon, r.value) for r in rows
               if r.H == H and r.stat == "mean_sup_error"]
        if len(pts) >= 2:
            x = np.log([p[0] for p in pts])
            y = np.log([p[1] for p in pts])
            slope, intercept = np.polyfit(x, y, 1)
            resid = y - (slope * x + intercept)
            dof = max(len(x) - 2, 1)
            slope_se = math.sqrt(
                float(resid @ resid) / dof / float(((x - x.mean()) ** 2).sum())
            )
            rows.append(ExperimentRow(
                experiment=cfg.experiment, H=H, epsilon=None, alpha=None,
                delta=None, n=None, M=cfg.replicates, stat="loglog_slope",
                value=float(slope), se=slope_se, seed_base=cfg.seed_base,
            ))
    rows.sort(key=ExperimentRow.sort_key)
    return rows


_RUNNERS = {
    "spectral_norm": run_spectral_norm,
    "noconvergence": run_noconvergence,
    "l2_heatmap": run_l2_heatmap,
    "homogenization": run_homogenization,
}


def run_experiment(cfg: ExperimentConfig) -> list[ExperimentRow]:
    return _RUNNERS[cfg.experiment](cfg)


# --------------------------------------------------------------------------
# CSV output
# --------------------------------------------------------------------------

def format_value(x) -> str:
    """Shortest round-trip decimal form; empty string for missing fields."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def write_csv(rows: list[ExperimentRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in sorted(rows, key=ExperimentRow.sort_key):
            fields = [r.experiment, r.H, r.epsilon, r.alpha, r.delta, r.n,
                      r.M, r.stat, r.value, r.se, r.seed_base]
            fh.write(",".join(format_value(f) for f in fields) + "\n")
