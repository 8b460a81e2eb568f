"""Standardize Mardia's kurtosis against its null moments and decide."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from statistics import NormalDist

import numpy as np

from .errors import DomainError, ModeDimensionMismatch
from .generators import embed
from .null_moments import (
    EmbeddingCorrelation,
    Model,
    NullMoments,
    ScalarCovSeq,
    auto_truncation,
    bivariate_colored_moments,
    embedded_bivariate_moments,
    embedded_moments_from_gammas,
    iid_moments,
    plug_in_cov,
    plug_in_embedding,
    scalar_colored_moments,
)
from .stats import LagCovarianceSeq, TimeSeries, as_series, mardia_statistic, sample_covariance

_SQRT2 = math.sqrt(2.0)
_STD = NormalDist()


def std_normal_cdf(z: float) -> float:
    """Standard normal cdf, ``0.5 erfc(-z / sqrt(2))``."""
    return 0.5 * math.erfc(-z / _SQRT2)


def std_normal_quantile(u: float) -> float:
    """Inverse of :func:`std_normal_cdf` on the open interval ``(0, 1)``."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"quantile needs 0 < u < 1, got {u}")
    return _STD.inv_cdf(u)


def two_sided_p_value(t: float) -> float:
    """``2 (1 - Phi(|t|))``, evaluated as ``erfc(|t| / sqrt(2))`` to keep tail accuracy."""
    return math.erfc(abs(t) / _SQRT2)


@dataclass(frozen=True)
class TestReport:
    """Outcome of one kurtosis test."""

    __test__ = False

    statistic: float
    null_mean: float
    null_std: float
    t: float
    p_value: float
    reject: bool
    alpha: float
    mode: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=False)

    def to_text(self) -> str:
        d = self.diagnostics
        rows = [
            ("mode", self.mode),
            ("statistic", f"{self.statistic:.6f}"),
            ("null mean", f"{self.null_mean:.6f}"),
            ("null std", f"{self.null_std:.6f}"),
            ("t", f"{self.t:.4f}"),
            ("p-value", f"{self.p_value:.4g}"),
            ("alpha", f"{self.alpha:g}"),
            ("decision", "reject normality" if self.reject else "do not reject"),
        ]
        for key in ("n_samples", "dimension", "truncation_lag", "condition_number", "covariance_source"):
            if key in d:
                value = d[key]
                rows.append((key, f"{value:.4g}" if isinstance(value, float) else str(value)))
        lines = [f"{k:<19}{v}" for k, v in rows]
        return "\n".join(lines)


def _as_model(mode) -> Model:
    if isinstance(mode, Model):
        return mode
    try:
        return Model(str(mode).lower().replace("_", "-"))
    except ValueError:
        raise ValueError(f"unknown mode {mode!r}; choose from {[m.value for m in Model]}") from None


def null_moments_for(x: TimeSeries, model: Model, *, max_lag="auto", known_cov=None,
                     assume_zero_mean: bool = False):
    """Select null moments for ``x``; returns ``(moments, diagnostics)``."""
    n = x.n_samples
    diag: dict = {"covariance_source": "none" if model is Model.IID else "plug-in"}
    if known_cov is not None:
        diag["covariance_source"] = "known"
    if model is Model.IID:
        return iid_moments(x.p, n), diag
    if model is Model.SCALAR_COLORED:
        if x.p != 1:
            raise ModeDimensionMismatch(f"mode {model.value} needs p = 1, got p = {x.p}")
        cov = known_cov if known_cov is not None else plug_in_cov(x, max_lag, assume_zero_mean)
        if isinstance(cov, LagCovarianceSeq):
            cov = ScalarCovSeq.from_lags(cov.lags[:, 0, 0])
        diag["truncation_lag"] = int(cov.s.size)
        diag["omega"] = float(cov.s0**2 + np.sum(cov.s**2))
        return scalar_colored_moments(cov, n), diag
    if x.p != 2:
        raise ModeDimensionMismatch(f"mode {model.value} needs p = 2, got p = {x.p}")
    if model is Model.BIVARIATE_COLORED:
        cov = known_cov if known_cov is not None else plug_in_cov(x, max_lag, assume_zero_mean)
        diag["truncation_lag"] = cov.max_lag
        diag["omega"] = cov.omega_diag.tolist()
        return bivariate_colored_moments(cov, n), diag
    # embedded bivariate on an already embedded record
    if isinstance(known_cov, EmbeddingCorrelation):
        diag["truncation_lag"] = int(known_cov.c.size - 1)
        return embedded_bivariate_moments(known_cov, n), diag
    cov = known_cov if known_cov is not None else plug_in_cov(x, max_lag, assume_zero_mean)
    s = cov.lags
    g0 = 0.5 * (s[1:, 0, 0] + s[1:, 1, 1])
    c0 = 0.5 * (s[0, 0, 0] + s[0, 1, 1])
    c1 = 0.5 * (s[0, 0, 1] + s[0, 1, 0])
    diag["truncation_lag"] = cov.max_lag
    diag["omega"] = cov.omega_diag.tolist()
    return embedded_moments_from_gammas(c0, c1, s[1:, 0, 1], g0, s[1:, 1, 0], n), diag


def run_test(x, mode="iid", alpha: float = 0.05, *, max_lag="auto", known_cov=None,
             delta: int | None = None, assume_zero_mean: bool = False) -> TestReport:
    """Run the two-sided kurtosis test on a record.

    Parameters
    ----------
    x : TimeSeries or array_like
        ``(p, N)`` record. In ``embedded-bivariate`` mode a scalar series is
        accepted together with ``delta`` and is embedded as
        ``(y(n delta + 1), y(n delta + 2))``.
    mode : {"iid", "scalar-colored", "bivariate-colored", "embedded-bivariate"}
    alpha : float
        Significance level in ``(0, 1)``.
    max_lag : int or "auto"
        Plug-in covariance window; ``"auto"`` uses ``min(N-1, ceil(10 sqrt(N)))``.
    known_cov : ScalarCovSeq, LagCovarianceSeq or EmbeddingCorrelation, optional
        Model covariance used instead of the plug-in estimate.
    delta : int, optional
        Embedding stride for scalar input in embedded mode.
    assume_zero_mean : bool
        Skip centering by the sample mean.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    model = _as_model(mode)
    x = as_series(x)
    if model is Model.EMBEDDED_BIVARIATE and x.p == 1:
        if delta is None:
            raise ModeDimensionMismatch("embedded mode on a scalar series needs delta")
        y = x
        x = embed(y.data[0], delta, 2)
        if known_cov is None:
            lag = auto_truncation(y.n_samples) if max_lag == "auto" else int(max_lag)
            known_cov = plug_in_embedding(y, delta, lag, assume_zero_mean)
            source = "plug-in"
        else:
            source = "known"
        moments, diag = null_moments_for(x, model, known_cov=known_cov)
        diag["covariance_source"] = source
    else:
        moments, diag = null_moments_for(x, model, max_lag=max_lag, known_cov=known_cov,
                                         assume_zero_mean=assume_zero_mean)
    stat = mardia_statistic(x, assume_zero_mean)
    return _report(stat, moments, alpha, x, diag, assume_zero_mean)


def _report(stat: float, moments: NullMoments, alpha: float, x: TimeSeries,
            diag: dict, assume_zero_mean: bool) -> TestReport:
    std = moments.std
    t = (stat - moments.mean) / std
    p_value = two_sided_p_value(t)
    diag = {
        "n_samples": x.n_samples,
        "dimension": x.p,
        "condition_number": float(np.linalg.cond(sample_covariance(x, assume_zero_mean))),
        **diag,
    }
    return TestReport(
        statistic=float(stat),
        null_mean=float(moments.mean),
        null_std=float(std),
        t=float(t),
        p_value=float(p_value),
        reject=bool(p_value < alpha),
        alpha=float(alpha),
        mode=moments.model.value,
        diagnostics=diag,
    )
