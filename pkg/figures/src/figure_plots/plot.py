"""Render experiment CSVs into figures.

Three figure kinds, all batch-rendered with deterministic bytes:

- ratio_lines: log-ratio of the inverse spectral norm to its growth bound,
  one line per H, from either the generic experiment schema or the wide
  spectral-norm schema.
- heatmap: (alpha, epsilon) grid of L2 errors, smaller-is-darker, fixed
  per-file color normalization with annotated cell values.
- slope: mean sup-error against epsilon on log-log axes with the fitted
  rate per H.

The script only reads CSV values; it never recomputes statistics.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["PlotSpec", "plot_ratio_lines", "plot_heatmap", "plot_slope", "main"]

GENERIC_HEADER = [
    "experiment", "H", "epsilon", "alpha", "delta", "n", "M", "stat",
    "value", "se", "seed_base",
]
WIDE_HEADER = ["H", "n", "beta", "inv_spectral_norm", "ratio", "log2_ratio"]

KNOWN_STATS = {
    "inv_spectral_norm", "ratio", "log2_ratio", "mean_sigma2_hat",
    "l2_error", "mean_sup_error", "loglog_slope",
}


class PlotError(Exception):
    pass


@dataclass
class PlotSpec:
    input_csv: str
    kind: str  # ratio_lines | heatmap | slope
    output: str
    title: str | None = None


@dataclass
class Row:
    H: float
    stat: str
    value: float
    epsilon: float | None = None
    alpha: float | None = None
    n: int | None = None
    se: float | None = None


def _opt_float(s: str) -> float | None:
    return float(s) if s not in ("", None) else None


def read_rows(path: str) -> list[Row]:
    """Rows from either CSV schema, mapped onto the generic stat layout."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        records = list(reader)
    if not records:
        raise PlotError(f"no data rows in {path}")

    rows: list[Row] = []
    if header == WIDE_HEADER:
        for r in records:
            for stat in ("inv_spectral_norm", "ratio", "log2_ratio"):
                rows.append(Row(H=float(r["H"]), stat=stat,
                                value=float(r[stat]), n=int(r["n"])))
        return rows
    if header != GENERIC_HEADER:
        raise PlotError(f"unrecognized CSV header in {path}: {header}")
    for r in records:
        stat = r["stat"]
        if stat not in KNOWN_STATS:
            warnings.warn(f"skipping unknown stat {stat!r}")
            continue
        rows.append(Row(
            H=float(r["H"]),
            stat=stat,
            value=float(r["value"]),
            epsilon=_opt_float(r["epsilon"]),
            alpha=_opt_float(r["alpha"]),
            n=int(r["n"]) if r["n"] else None,
            se=_opt_float(r["se"]),
        ))
    return rows


def _new_figure():
    return plt.subplots(figsize=(6.4, 4.8), dpi=120)


def _save(fig, path: str) -> None:
    # pin the metadata so back-to-back renders produce identical bytes
    fig.savefig(path, metadata={"Software": "figure-plots"})
    plt.close(fig)


def plot_ratio_lines(spec: PlotSpec) -> None:
    """log2 of ||P^{-1}|| / n^beta against log2 n, one line per H."""
    rows = [r for r in read_rows(spec.input_csv)
            if r.stat == "log2_ratio" and r.n]
    if not rows:
        raise PlotError("no spectral-norm ratio rows to plot")
    fig, ax = _new_figure()
    for H in sorted({r.H for r in rows}):
        pts = sorted((r.n, r.value) for r in rows if r.H == H)
        ax.plot([math.log2(n) for n, _ in pts], [v for _, v in pts],
                marker="o", label=f"H = {H:g}")
    ax.set_xlabel("log2 n")
    ax.set_ylabel("log2 of inverse-norm / growth-bound ratio")
    ax.set_title(spec.title or "Spectral norm growth ratio")
    ax.legend()
    _save(fig, spec.output)


def plot_heatmap(spec: PlotSpec) -> None:
    """L2 error on the (alpha, epsilon) grid; smaller errors are darker."""
    rows = [r for r in read_rows(spec.input_csv)
            if r.stat == "l2_error" and r.alpha is not None
            and r.epsilon is not None]
    if not rows:
        raise PlotError("no heatmap rows to plot")
    hs = sorted({r.H for r in rows})
    if len(hs) > 1:
        raise PlotError(f"heatmap expects a single H per input, got {hs}")
    alphas = sorted({r.alpha for r in rows})
    epsilons = sorted({r.epsilon for r in rows}, reverse=True)
    grid = np.full((len(epsilons), len(alphas)), np.nan)
    for r in rows:
        grid[epsilons.index(r.epsilon), alphas.index(r.alpha)] = r.value

    fig, ax = _new_figure()
    masked = np.ma.masked_invalid(grid)
    # sequential dark-blue-to-warm map: low values map to the dark end
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad(color="lightgray", alpha=1.0)
    im = ax.imshow(masked, cmap=cmap, aspect="auto",
                   vmin=float(masked.min()), vmax=float(masked.max()))
    ax.set_xticks(range(len(alphas)), [f"{a:g}" for a in alphas])
    ax.set_yticks(range(len(epsilons)), [f"{e:g}" for e in epsilons])
    ax.set_xlabel("alpha")
    ax.set_ylabel("epsilon")
    ax.set_title(spec.title or f"L2 error of sigma2_hat (H = {hs[0]:g})")
    for i in range(len(epsilons)):
        for j in range(len(alphas)):
            if not np.isnan(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center",
                        fontsize=7, color="white")
    fig.colorbar(im, ax=ax, label="L2 error (darker = smaller)")
    _save(fig, spec.output)


def plot_slope(spec: PlotSpec) -> None:
    """Mean sup-error vs epsilon, log-log, with the fitted rate per H."""
    rows = read_rows(spec.input_csv)
    pts = [r for r in rows if r.stat == "mean_sup_error"
           and r.epsilon is not None]
    if not pts:
        raise PlotError("no homogenization rows to plot")
    slopes = {r.H: r.value for r in rows if r.stat == "loglog_slope"}
    fig, ax = _new_figure()
    for H in sorted({r.H for r in pts}):
        sel = sorted((r.epsilon, r.value) for r in pts if r.H == H)
        x = np.log([e for e, _ in sel])
        y = np.log([v for _, v in sel])
        slope = slopes.get(H, float(np.polyfit(x, y, 1)[0]))
        ax.plot(x, y, marker="o", label=f"H = {H:g} (slope {slope:.2f})")
    ax.set_xlabel("log epsilon")
    ax.set_ylabel("log mean sup-error")
    ax.set_title(spec.title or "Homogenization rate")
    ax.legend()
    _save(fig, spec.output)


_KINDS = {
    "ratio_lines": plot_ratio_lines,
    "heatmap": plot_heatmap,
    "slope": plot_slope,
}


def main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="figure-plots", description="render experiment CSVs as figures"
    )
    p.add_argument("--kind", choices=sorted(_KINDS), required=True)
    p.add_argument("--in", dest="input_csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--title", default=None)
    args = p.parse_args(argv)
    spec = PlotSpec(input_csv=args.input_csv, kind=args.kind,
                    output=args.out, title=args.title)
    try:
        _KINDS[spec.kind](spec)
    except (PlotError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
