"""Subsampling and the MLE of the limiting diffusion coefficient.

sigma2_hat = (1/N) dx^T P^{-1} dx on the vector of increments dx observed at
spacing delta, with P the fGN increment covariance for the known H.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import fgn
from .errors import AlignmentError
from .paths import MultiscaleParams, PathSample, sample_multiscale

__all__ = [
    "SubsampleSpec",
    "EstimateResult",
    "subsample",
    "increments",
    "mle_sigma2",
    "estimate_from_multiscale",
]


@dataclass(frozen=True)
class SubsampleSpec:
    """Observation rate delta = epsilon^alpha between the two time scales."""

    alpha: float
    epsilon: float
    delta: float
    N: int

    @classmethod
    def from_alpha(cls, alpha: float, epsilon: float, T: float) -> "SubsampleSpec":
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0.0 < epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        delta = epsilon**alpha
        N = math.floor(T / delta + 1e-12)
        if N < 2:
            raise ValueError(
                f"delta={delta} leaves fewer than 2 increments on [0, {T}]"
            )
        return cls(alpha=alpha, epsilon=epsilon, delta=delta, N=N)

    def is_valid(self, H: float) -> bool:
        """True inside the proven consistency region alpha < min{1, H/(1-H)}."""
        return self.alpha < min(1.0, H / (1.0 - H))


@dataclass(frozen=True)
class EstimateResult:
    sigma2_hat: float
    N_used: int
    H: float
    delta: float
    epsilon: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.sigma2_hat < 0:
            raise ValueError("sigma2_hat must be nonnegative")


# Read-mostly cache of covariance factors for repeated (N, delta, H) triples.
_COV_CACHE: dict[tuple[int, float, float], fgn.FgnCovariance] = {}
_COV_LOCK = threading.Lock()


def _covariance(N: int, delta: float, H: float) -> fgn.FgnCovariance:
    key = (N, delta, H)
    cov = _COV_CACHE.get(key)
    if cov is None:
        cov = fgn.build_covariance(fgn.GridSpec.from_delta(N, delta), H)
        with _COV_LOCK:
            _COV_CACHE.setdefault(key, cov)
            cov = _COV_CACHE[key]
    return cov


def clear_covariance_cache() -> None:
    with _COV_LOCK:
        _COV_CACHE.clear()


def subsample(path: PathSample, delta: float) -> np.ndarray:
    """Values of the path at spacing delta (must align with the path grid)."""
    h = path.step
    if h <= 0:
        raise AlignmentError("path has no usable grid")
    ratio = delta / h
    m = round(ratio)
    if m < 1 or abs(ratio - m) > 1e-9 * ratio:
        raise AlignmentError(
            f"delta={delta} is not an integer multiple of the path step {h}"
        )
    T = float(path.times[-1])
    count = math.floor(T / delta + 1e-9) + 1
    return path.values[:: m][:count]


def increments(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if len(v) < 2:
        raise ValueError("need at least two observations")
    return np.diff(v)


def mle_sigma2(dx: np.ndarray, delta: float, H) -> EstimateResult:
    """Maximum-likelihood estimate of sigma^2 from an increment vector."""
    dx = np.asarray(dx, dtype=float)
    N = len(dx)
    if N < 1:
        raise ValueError("empty increment vector")
    h = fgn._hurst(H)
    if h == 0.5:
        # P = delta*I, so the quadratic form collapses to sum(dx^2)/delta
        sigma2 = float(dx @ dx) / (N * delta)
    else:
        cov = _covariance(N, delta, h)
        sigma2 = fgn.quadratic_form_inverse(cov, dx) / N
    return EstimateResult(sigma2_hat=sigma2, N_used=N, H=h, delta=delta)


def estimate_from_multiscale(
    params: MultiscaleParams, spec: SubsampleSpec, seed: int
) -> EstimateResult:
    """Simulate the multiscale system, subsample the slow path, estimate."""
    paths = sample_multiscale(params, out_delta=spec.delta, seed=seed)
    obs = subsample(paths["slow"], spec.delta)
    dx = increments(obs)
    est = mle_sigma2(dx, spec.delta, params.H)
    return EstimateResult(
        sigma2_hat=est.sigma2_hat,
        N_used=est.N_used,
        H=est.H,
        delta=spec.delta,
        epsilon=spec.epsilon,
        alpha=spec.alpha,
    )
