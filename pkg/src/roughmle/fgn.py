"""Covariance matrix of discretized fractional Gaussian noise.

Builds the symmetric Toeplitz matrix P of fGN increments on a uniform grid,
factors it, and provides the smallest-eigenvalue / inverse-spectral-norm
machinery used to check the C*n^{max{1,2H}} growth bound.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, FactorizationFailure

__all__ = [
    "HurstParameter",
    "GridSpec",
    "FgnCovariance",
    "fgn_autocovariance",
    "fbm_covariance",
    "build_covariance",
    "quadratic_form_inverse",
    "smallest_eigenvalue",
    "inverse_spectral_norm",
    "spectral_bound_exponent",
    "bound_ratio",
]

# Dense symmetric eigensolve below this size; inverse power iteration above.
_EIG_DENSE_LIMIT = 2048


def _hurst(H) -> float:
    h = float(H)
    if not 0.0 < h < 1.0:
        raise ValueError(f"Hurst parameter must lie strictly in (0, 1), got {h}")
    return h


@dataclass(frozen=True)
class HurstParameter:
    """Hurst index, strictly inside (0, 1)."""

    H: float

    def __post_init__(self):
        object.__setattr__(self, "H", _hurst(self.H))

    def __float__(self) -> float:
        return self.H


@dataclass(frozen=True)
class GridSpec:
    """Uniform observation grid on [0, T] with N increments of width delta."""

    T: float
    N: int
    delta: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.T <= 0 or self.delta <= 0:
            raise ValueError("T and delta must be positive")
        # delta = T/N up to one rounding
        if not np.isclose(self.delta, self.T / self.N, rtol=4 * np.finfo(float).eps):
            raise ValueError(
                f"inconsistent grid: delta={self.delta} but T/N={self.T / self.N}"
            )

    @classmethod
    def from_T(cls, T: float, N: int) -> "GridSpec":
        return cls(T=T, N=N, delta=T / N)

    @classmethod
    def from_delta(cls, N: int, delta: float) -> "GridSpec":
        return cls(T=N * delta, N=N, delta=delta)


def fgn_autocovariance(n, delta: float, H) -> np.ndarray | float:
    """Autocovariance rho_H(n) of fGN increments at lag n with spacing delta.

    rho_H(0) = delta^{2H} and, for n >= 1,
    rho_H(n) = (1/2) delta^{2H} [(n+1)^{2H} + (n-1)^{2H} - 2 n^{2H}].

    Accepts scalar or array lags.  The second difference suffers heavy
    cancellation for large n, so moderate lags go through expm1/log1p
    identities and large lags through the even binomial series of
    (1+x)^{2H} + (1-x)^{2H} - 2 at x = 1/n, keeping full relative accuracy.
    """
    h = _hurst(H)
    if delta <= 0:
        raise ValueError("delta must be positive")
    lags = np.asarray(n)
    if np.any(lags < 0):
        raise ValueError("lag must be nonnegative")
    scalar = lags.ndim == 0
    lags = np.atleast_1d(lags).astype(float)

    out = np.empty_like(lags)
    zero = lags == 0
    out[zero] = 1.0
    if h == 0.5:
        # Brownian increments are independent; avoid 0*log(0) in the general form.
        out[~zero] = 0.0
    else:
        small = ~zero & (lags < 8)
        m = lags[small]
        with np.errstate(divide="ignore"):
            # (1 +- 1/n)^{2H} - 1, exact also at n = 1 where log1p(-1) = -inf
            up = np.expm1(2 * h * np.log1p(1.0 / m))
            down = np.expm1(2 * h * np.log1p(-1.0 / m))
        out[small] = 0.5 * m ** (2 * h) * (up + down)
        big = lags >= 8
        out[big] = _rho_series(lags[big], h)
    out *= delta ** (2 * h)
    return float(out[0]) if scalar else out


def _rho_series(m: np.ndarray, h: float) -> np.ndarray:
    """0.5*m^{2H}*[(1+1/m)^{2H} + (1-1/m)^{2H} - 2] by its even power series.

    The bracket equals 2*sum_{k>=1} binom(2H, 2k) m^{-2k}; successive terms
    shrink by at least m^{-2} <= 1/64, so 14 terms reach full precision.
    """
    x2 = m**-2.0
    a = 2.0 * h
    coeff = a * (a - 1.0) / 2.0  # binom(2H, 2)
    total = coeff * np.ones_like(m)
    power = np.ones_like(m)
    for k in range(2, 15):
        coeff *= (a - 2 * k + 2) * (a - 2 * k + 1) / ((2 * k - 1) * (2 * k))
        power *= x2
        total += coeff * power
    return m ** (a - 2.0) * total


def fbm_covariance(t: float, s: float, H) -> float:
    """Covariance of fractional Brownian motion: (t^{2H}+s^{2H}-|t-s|^{2H})/2."""
    h = _hurst(H)
    if t < 0 or s < 0:
        raise ValueError("times must be nonnegative")
    return 0.5 * (t ** (2 * h) + s ** (2 * h) - abs(t - s) ** (2 * h))


@dataclass
class FgnCovariance:
    """Toeplitz covariance matrix P of fGN increments with a cached factor.

    Immutable after construction; the Cholesky factor is computed once under
    a lock on first use and may then be shared across threads.
    """

    grid: GridSpec
    H: float
    first_row: np.ndarray

    _chol: np.ndarray | None = field(default=None, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def N(self) -> int:
        return self.grid.N

    def dense(self) -> np.ndarray:
        return scipy.linalg.toeplitz(self.first_row)

    @property
    def cholesky(self) -> np.ndarray:
        """Lower-triangular L with L L^T = P, computed lazily."""
        if self._chol is None:
            with self._lock:
                if self._chol is None:
                    try:
                        self._chol = scipy.linalg.cholesky(self.dense(), lower=True)
                    except np.linalg.LinAlgError as exc:
                        raise FactorizationFailure(
                            f"Cholesky failed for N={self.N}, H={self.H}: {exc}"
                        ) from exc
        return self._chol

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """P @ v without forming P densely (FFT Toeplitz multiply)."""
        v = np.asarray(v, dtype=float)
        return scipy.linalg.matmul_toeplitz(
            (self.first_row, self.first_row), v
        )

    def quadratic_form(self, u: np.ndarray, v: np.ndarray | None = None) -> float:
        """u^T P v (v defaults to u)."""
        u = np.asarray(u, dtype=float)
        v = u if v is None else np.asarray(v, dtype=float)
        return float(u @ self.matvec(v))

    def solve(self, v: np.ndarray) -> np.ndarray:
        """P^{-1} v via the cached Cholesky factor."""
        L = self.cholesky
        w = scipy.linalg.solve_triangular(L, np.asarray(v, dtype=float), lower=True)
        return scipy.linalg.solve_triangular(L, w, lower=True, trans="T")


def build_covariance(grid: GridSpec, H) -> FgnCovariance:
    """Covariance matrix of fGN increments on the given grid."""
    h = _hurst(H)
    first_row = np.atleast_1d(
        fgn_autocovariance(np.arange(grid.N), grid.delta, h)
    )
    return FgnCovariance(grid=grid, H=h, first_row=first_row)


def quadratic_form_inverse(cov: FgnCovariance, v: np.ndarray) -> float:
    """v^T P^{-1} v through one triangular solve against the cached factor."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != cov.N:
        raise ValueError(f"vector length {v.shape[0]} != N={cov.N}")
    w = scipy.linalg.solve_triangular(cov.cholesky, v, lower=True)
    return float(w @ w)


def smallest_eigenvalue(cov: FgnCovariance, dense_cutoff: int = _EIG_DENSE_LIMIT) -> float:
    """lambda_min of P to 1e-10 relative accuracy.

    Dense symmetric eigensolve up to N=dense_cutoff; inverse power iteration
    with the cached Cholesky factor beyond that.
    """
    if cov.H == 0.5:
        # P = delta * I exactly
        return cov.grid.delta
    if cov.N <= dense_cutoff:
        lam = scipy.linalg.eigh(
            cov.dense(), eigvals_only=True, subset_by_index=[0, 0]
        )[0]
        if lam <= 0:
            raise FactorizationFailure(
                f"numerically non-positive smallest eigenvalue {lam} "
                f"for N={cov.N}, H={cov.H}"
            )
        return float(lam)
    return _inverse_power_iteration(cov)


def _inverse_power_iteration(cov: FgnCovariance, tol: float = 1e-10) -> float:
    """Largest eigenvalue of P^{-1} by Lanczos on the shift-inverted operator."""
    import scipy.sparse.linalg as spla

    op = spla.LinearOperator(
        (cov.N, cov.N), matvec=cov.solve, dtype=float
    )
    v0 = np.random.default_rng(0).standard_normal(cov.N)
    try:
        theta = spla.eigsh(
            op, k=1, which="LM", tol=tol, v0=v0, return_eigenvectors=False
        )[0]
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceFailure(
            f"Lanczos failed to converge for N={cov.N}, H={cov.H}: {exc}",
            residual=float("nan"),
        ) from exc
    return 1.0 / float(theta)


def inverse_spectral_norm(cov: FgnCovariance) -> float:
    """||P^{-1}||_2 = 1 / lambda_min for symmetric positive definite P."""
    return 1.0 / smallest_eigenvalue(cov)


def spectral_bound_exponent(H) -> float:
    """Growth exponent beta = max{1, 2H} of ||P^{-1}||_2 in the grid size."""
    return max(1.0, 2.0 * _hurst(H))


def bound_ratio(n: int, H) -> float:
    """||(P^{(n)})^{-1}||_2 / n^beta on the unit-interval grid (T = 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cov = build_covariance(GridSpec.from_T(1.0, n), H)
    return inverse_spectral_norm(cov) / n ** spectral_bound_exponent(H)
