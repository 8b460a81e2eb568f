"""Null mean and variance of Mardia's kurtosis for i.i.d. and colored Gaussian data.

All colored formulas are expansions to order ``1/N`` in the record length. Lag
sums run over ``tau = 1 .. n-1``; covariance values beyond the supplied window
are taken as zero.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateCovariance, InsufficientLength, NonPositiveVariance
from .stats import LagCovarianceSeq, as_series, autocovariance, lag_covariance


class Model(str, Enum):
    IID = "iid"
    SCALAR_COLORED = "scalar-colored"
    BIVARIATE_COLORED = "bivariate-colored"
    EMBEDDED_BIVARIATE = "embedded-bivariate"


@dataclass(frozen=True)
class NullMoments:
    mean: float
    variance: float
    model: Model
    n: int

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class ScalarCovSeq:
    """Autocovariance ``S = S(0)`` and ``S(1), ..., S(L)`` of a scalar process."""

    s0: float
    s: np.ndarray

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.s, dtype=float)).copy()
        s.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "s0", float(self.s0))
        if not self.s0 > 0:
            raise NonPositiveVariance(f"S(0) must be positive, got {self.s0}")
        if s.size and np.max(np.abs(s)) > self.s0 * (1 + 1e-12):
            warnings.warn("|S(tau)| exceeds S(0); not a valid autocovariance", stacklevel=2)

    @classmethod
    def from_lags(cls, c) -> "ScalarCovSeq":
        c = np.asarray(c, dtype=float)
        return cls(c[0], c[1:])


@dataclass(frozen=True)
class EmbeddingCorrelation:
    """Correlation function ``C(0..L)`` of a scalar series embedded with stride ``delta``."""

    c: np.ndarray
    delta: int

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float)).copy()
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        if int(self.delta) != self.delta or self.delta < 1:
            raise ValueError(f"delta must be a positive integer, got {self.delta}")
        object.__setattr__(self, "delta", int(self.delta))
        if not c[0] > 0:
            raise NonPositiveVariance(f"C(0) must be positive, got {c[0]}")
        if np.max(np.abs(c[1:]), initial=0.0) > c[0] * (1 + 1e-12):
            warnings.warn("|C(j)| exceeds C(0); not a valid correlation function", stacklevel=2)

    def value(self, j) -> np.ndarray:
        """``C(j)`` for integer ``j`` (array-valued), zero beyond the window."""
        j = np.abs(np.asarray(j))
        out = np.zeros(j.shape)
        ok = j < self.c.size
        out[ok] = self.c[j[ok]]
        return out


def _check_n(n: int) -> None:
    if n < 2:
        raise InsufficientLength(f"sample size must be at least 2, got {n}")


def _lag_weights(n: int, available: int) -> tuple[np.ndarray, np.ndarray]:
    """Lags ``1 .. min(available, n-1)`` and their weights ``n - tau``."""
    tau = np.arange(1, min(available, n - 1) + 1)
    return tau, (n - tau).astype(float)


def iid_moments(p: int, n: int) -> NullMoments:
    """Exact null mean ``p(p+2)(n-1)/(n+1)`` and asymptotic variance ``8p(p+2)/n``."""
    _check_n(n)
    if p < 1:
        raise ValueError(f"dimension must be >= 1, got {p}")
    beta = p * (p + 2)
    return NullMoments(beta * (n - 1) / (n + 1), 8.0 * beta / n, Model.IID, n)


def scalar_colored_moments(cov: ScalarCovSeq, n: int) -> NullMoments:
    """Null moments of ``B_1`` for a colored scalar Gaussian process.

    mean = 3 - 6/n - (12/n^2) sum (n-tau) rho(tau)^2,
    var = (24/n) [1 + (2/n) sum (n-tau) rho(tau)^4], with rho = S(tau)/S.
    """
    _check_n(n)
    tau, w = _lag_weights(n, cov.s.size)
    rho = cov.s[: tau.size] / cov.s0
    mean = 3.0 - 6.0 / n - 12.0 / n**2 * np.sum(w * rho**2)
    var = 24.0 / n * (1.0 + 2.0 / n * np.sum(w * rho**4))
    return NullMoments(float(mean), float(var), Model.SCALAR_COLORED, n)


def _adjugate(s0: np.ndarray) -> tuple[np.ndarray, float]:
    s11, s22 = s0[0, 0], s0[1, 1]
    s12 = 0.5 * (s0[0, 1] + s0[1, 0])
    det = s11 * s22 - s12 * s12
    if not det > 0:
        raise DegenerateCovariance(f"S11*S22 - S12^2 must be positive, got {det}")
    return np.array([[s22, -s12], [-s12, s11]]), float(det)


def bivariate_q1(s0, c) -> np.ndarray:
    """Mean numerator ``Q1(tau)`` for ``p = 2``.

    With ``K = adj(S)`` and ``C = S(tau)``:
    ``Q1 = tr(K C K C^T) + tr(K C K C) + tr(K C)^2``.

    Parameters
    ----------
    s0 : (2, 2) array
        Zero-lag covariance.
    c : (..., 2, 2) array
        Lag covariances ``S(tau)``.
    """
    k, _ = _adjugate(np.asarray(s0, dtype=float))
    c = np.asarray(c, dtype=float)
    kc = k @ c
    kct = k @ np.swapaxes(c, -1, -2)
    return _trace(kc @ kct) + _trace(kc @ kc) + _trace(kc) ** 2


def _trace(m: np.ndarray) -> np.ndarray:
    return np.trace(m, axis1=-2, axis2=-1)


def bivariate_q2(s0, c) -> np.ndarray:
    """Variance numerator ``Q2(tau)`` for ``p = 2``.

    With ``K = adj(S)``, ``C = S(tau)`` and ``M = K C K C^T``:
    ``Q2 = tr(M)^2 + 2 tr(M^2)``.
    """
    k, _ = _adjugate(np.asarray(s0, dtype=float))
    c = np.asarray(c, dtype=float)
    m = k @ c @ k @ np.swapaxes(c, -1, -2)
    return _trace(m) ** 2 + 2.0 * _trace(m @ m)


def bivariate_colored_moments(cov: LagCovarianceSeq, n: int) -> NullMoments:
    """Null moments of ``B_2`` for a colored bivariate Gaussian process.

    mean = 8 - 16/n - (4/n^2) sum (n-tau) Q1(tau) / det^2,
    var = 64/n + (16/n^2) sum (n-tau) Q2(tau) / det^4,
    with ``det = S11 S22 - S12^2``; see :func:`bivariate_q1` and :func:`bivariate_q2`.
    """
    _check_n(n)
    if cov.p != 2:
        raise ValueError(f"bivariate moments need p = 2, got p = {cov.p}")
    _, det = _adjugate(cov.s0)
    tau, w = _lag_weights(n, cov.max_lag)
    c = cov.lags[1 : tau.size + 1]
    q1 = bivariate_q1(cov.s0, c) if tau.size else np.zeros(0)
    q2 = bivariate_q2(cov.s0, c) if tau.size else np.zeros(0)
    mean = 8.0 - 16.0 / n - 4.0 / n**2 * np.sum(w * q1) / det**2
    var = 64.0 / n + 16.0 / n**2 * np.sum(w * q2) / det**4
    return NullMoments(float(mean), float(var), Model.BIVARIATE_COLORED, n)


def embedding_q1(c0, c1, gm, g0, gp):
    """Mean numerator for the stride embedding, in terms of ``gamma_i = C(tau*delta + i)``."""
    s = gp + gm
    return (s**2 + 8 * g0**2) * c0**2 - 12 * c0 * c1 * g0 * s + (2 * s**2 + 4 * g0**2) * c1**2


def embedding_q2(c0, c1, gm, g0, gp):
    """Variance numerator for the stride embedding."""
    s = gp + gm
    pm = gp * gm
    return (
        (8 * (g0**2 - pm) ** 2 + 3 * (gp**2 - gm**2) ** 2 + 12 * g0**2 * s**2) * c0**4
        + 4 * (8 * g0**4 + 3 * (5 * g0**2 + pm) * s**2 - 4 * pm * (g0**2 + pm)) * c0**2 * c1**2
        + 8 * (g0**4 + 4 * g0**2 * pm + pm**2) * c1**4
        - 24 * c0 * c1 * g0 * s * ((2 * g0**2 + gp**2 + gm**2) * c0**2 + 2 * (g0**2 + pm) * c1**2)
    )


def embedding_gammas(corr: EmbeddingCorrelation, n: int):
    """``(C0, C1, gamma_-1, gamma_0, gamma_1)`` over ``tau = 1 .. n-1``."""
    tau = np.arange(1, n)
    d = corr.delta
    return (
        float(corr.c[0]),
        float(corr.value(1)),
        corr.value(tau * d - 1),
        corr.value(tau * d),
        corr.value(tau * d + 1),
    )


def embedded_moments_from_gammas(c0, c1, gm, g0, gp, n: int) -> NullMoments:
    """Embedding null moments from ``gamma`` arrays indexed by ``tau = 1, 2, ...``."""
    _check_n(n)
    det = c0 * c0 - c1 * c1
    if not det > 0:
        raise DegenerateCovariance(f"C0^2 - C1^2 must be positive, got {det}")
    m = min(n - 1, len(g0))
    w = (n - np.arange(1, m + 1)).astype(float)
    gm, g0, gp = (np.asarray(v, dtype=float)[:m] for v in (gm, g0, gp))
    q1 = embedding_q1(c0, c1, gm, g0, gp)
    q2 = embedding_q2(c0, c1, gm, g0, gp)
    mean = 8.0 - 16.0 / n - 4.0 / n**2 * np.sum(w * q1) / det**2
    var = 64.0 / n + 16.0 / n**2 * np.sum(w * q2) / det**4
    return NullMoments(float(mean), float(var), Model.EMBEDDED_BIVARIATE, n)


def embedded_bivariate_moments(corr: EmbeddingCorrelation, n: int) -> NullMoments:
    """Null moments of ``B_2`` for ``x(n) = (y(n delta + 1), y(n delta + 2))``.

    The embedded process has ``S_ab(tau) = C(tau delta + a - b)``, so the
    bivariate moments only depend on ``C0 = C(0)``, ``C1 = C(1)`` and
    ``gamma_i(tau) = C(tau delta + i)`` for ``i`` in ``{-1, 0, 1}``.
    """
    return embedded_moments_from_gammas(*embedding_gammas(corr, n), n)


def embedding_lag_covariance(corr: EmbeddingCorrelation, max_lag: int) -> LagCovarianceSeq:
    """Bivariate ``S_ab(tau) = C(tau delta + a - b)`` for ``tau = 0 .. max_lag``."""
    tau = np.arange(max_lag + 1)
    d = corr.delta
    lags = np.empty((max_lag + 1, 2, 2))
    lags[:, 0, 0] = lags[:, 1, 1] = corr.value(tau * d)
    lags[:, 0, 1] = corr.value(tau * d - 1)
    lags[:, 1, 0] = corr.value(tau * d + 1)
    return LagCovarianceSeq(lags)


def trace_form_moments(cov: LagCovarianceSeq, n: int) -> tuple[float, float]:
    """Colored null moments for any dimension, written with ``G = S^{-1}``.

    mean = p(p+2)(1 - 2/n) - (4/n^2) sum (n-tau) [tr(GCGC^T) + tr(GCGC) + tr(GC)^2],
    var = 8p(p+2)/n + (16/n^2) sum (n-tau) [tr(M)^2 + 2 tr(M^2)], M = GCGC^T.

    Reduces to the scalar and bivariate forms for ``p`` in ``{1, 2}``; kept as
    an independent route for cross-checks.
    """
    _check_n(n)
    p = cov.p
    g = np.linalg.inv(cov.s0)
    tau, w = _lag_weights(n, cov.max_lag)
    c = cov.lags[1 : tau.size + 1]
    gc = g @ c
    gct = g @ np.swapaxes(c, -1, -2)
    q1 = _trace(gc @ gct) + _trace(gc @ gc) + _trace(gc) ** 2
    m = gc @ gct
    q2 = _trace(m) ** 2 + 2.0 * _trace(m @ m)
    beta = p * (p + 2)
    mean = beta * (1.0 - 2.0 / n) - 4.0 / n**2 * np.sum(w * q1)
    var = 8.0 * beta / n + 16.0 / n**2 * np.sum(w * q2)
    return float(mean), float(var)


def auto_truncation(n: int) -> int:
    """Default plug-in window ``min(n - 1, ceil(10 sqrt(n)))``."""
    return min(n - 1, math.ceil(10.0 * math.sqrt(n)))


def plug_in_cov(x, truncation="auto", assume_zero_mean: bool = False):
    """Estimate the covariance sequence from the record itself.

    Returns a :class:`ScalarCovSeq` for scalar input and a
    :class:`LagCovarianceSeq` otherwise.
    """
    x = as_series(x)
    lag = auto_truncation(x.n_samples) if truncation == "auto" else int(truncation)
    cov = lag_covariance(x, lag, assume_zero_mean)
    if x.p == 1:
        return ScalarCovSeq.from_lags(cov.lags[:, 0, 0])
    return cov


def plug_in_embedding(y, delta: int, truncation="auto", assume_zero_mean: bool = False):
    """Estimate the correlation function of a scalar series before embedding."""
    y = as_series(y)
    lag = auto_truncation(y.n_samples) if truncation == "auto" else int(truncation)
    return EmbeddingCorrelation(autocovariance(y, lag, assume_zero_mean), delta)
