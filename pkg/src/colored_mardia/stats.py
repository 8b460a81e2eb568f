"""Sample statistics: covariances at lag, precision matrix and the Mardia kurtosis.

Conventions
-----------
A series is stored as a ``(p, N)`` array: one row per component, one column
per time step. All covariance estimates are normalized by ``1/N`` (also at
nonzero lag), so that the ``(N - tau)`` weights of the closed-form null moments
line up with the estimator.
"""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IndexOutOfRange,
    InsufficientLength,
    LagOutOfRange,
    NonFiniteError,
    SingularCovariance,
)

SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class TimeSeries:
    """A real ``p``-variate record of ``N`` time steps.

    Parameters
    ----------
    data : array_like
        Shape ``(p, N)``; a 1-D input is read as a scalar series (``p = 1``).
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a (p, N) array, got shape {np.shape(self.data)}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("time series contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def component(self, a: int) -> "TimeSeries":
        """Scalar series made of component ``a`` (0-based)."""
        return TimeSeries(self.data[a])

    def centered(self) -> "TimeSeries":
        return TimeSeries(self.data - self.data.mean(axis=1, keepdims=True))


def as_series(x) -> TimeSeries:
    return x if isinstance(x, TimeSeries) else TimeSeries(x)


@dataclass(frozen=True)
class LagCovarianceSeq:
    """Covariance matrices ``S(0), ..., S(L)`` of a stationary vector process.

    ``lags[t, a, b]`` holds ``S_ab(t) = E[x_a(n) x_b(n - t)]``; negative lags follow
    from ``S(-t) = S(t).T``.
    """

    lags: np.ndarray
    omega_diag: np.ndarray = field(init=False)

    def __post_init__(self):
        lags = np.array(self.lags, dtype=float)
        if lags.ndim == 1:
            lags = lags[:, None, None]
        if lags.ndim != 3 or lags.shape[1] != lags.shape[2] or lags.shape[0] < 1:
            raise ValueError(f"expected an (L+1, p, p) array, got shape {lags.shape}")
        if not np.all(np.isfinite(lags)):
            raise NonFiniteError("covariance sequence contains non-finite entries")
        lags.setflags(write=False)
        omega = np.sum(lags**2, axis=0)
        omega.setflags(write=False)
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "omega_diag", omega)

    @property
    def max_lag(self) -> int:
        return self.lags.shape[0] - 1

    @property
    def p(self) -> int:
        return self.lags.shape[1]

    @property
    def s0(self) -> np.ndarray:
        return self.lags[0]

    def at(self, tau: int) -> np.ndarray:
        """``S(tau)`` for any integer lag; lags beyond ``max_lag`` are zero."""
        t = abs(int(tau))
        if t > self.max_lag:
            return np.zeros((self.p, self.p))
        return self.lags[t] if tau >= 0 else self.lags[t].T

    def table(self, n: int) -> np.ndarray:
        """Dense ``(2n - 1, p, p)`` array of ``S(tau)`` for ``tau = -(n-1) .. n-1``.

        Lags beyond ``max_lag`` are zero-filled.
        """
        out = np.zeros((2 * n - 1, self.p, self.p))
        m = min(n - 1, self.max_lag)
        out[n - 1 : n + m] = self.lags[: m + 1]
        out[n - 1 - m : n - 1] = np.swapaxes(self.lags[m:0:-1], 1, 2)
        return out


@dataclass(frozen=True)
class PrecisionMatrix:
    """Inverse ``G = S^{-1}`` of a zero-lag covariance, with the inverted determinant."""

    g: np.ndarray
    source_det: float


def sample_covariance(x, assume_zero_mean: bool = False) -> np.ndarray:
    """Zero-lag sample covariance ``(1/N) sum_n x(n) x(n)^T``.

    Parameters
    ----------
    x : TimeSeries or array_like
    assume_zero_mean : bool
        If false (default) the series is centered by its sample mean first.
    """
    x = as_series(x)
    if not assume_zero_mean:
        if x.n_samples < 2:
            raise InsufficientLength("centering requires at least two samples")
        x = x.centered()
    d = x.data
    return d @ d.T / x.n_samples


def lag_covariance(x, max_lag: int, assume_zero_mean: bool = False) -> LagCovarianceSeq:
    """Sample lag covariances ``S(0..L)`` with ``1/N`` normalization.

    ``S_ab(t) = (1/N) sum_{n > t} x_a(n) x_b(n - t)``. ``S(0)`` is computed with
    the same expression as :func:`sample_covariance`.
    """
    x = as_series(x)
    n = x.n_samples
    if max_lag < 0 or max_lag >= n:
        raise LagOutOfRange(f"max_lag must satisfy 0 <= L < N={n}, got {max_lag}")
    if not assume_zero_mean:
        if n < 2:
            raise InsufficientLength("centering requires at least two samples")
        x = x.centered()
    d = x.data
    out = np.empty((max_lag + 1, x.p, x.p))
    out[0] = d @ d.T / n
    if max_lag > 0:
        out[1:] = _lag_products(d, max_lag)[1:]
    return LagCovarianceSeq(out)


def _lag_products(d: np.ndarray, max_lag: int) -> np.ndarray:
    """``(L+1, p, p)`` array of ``(1/N) sum_n d_a(n) d_b(n-t)``.

    Uses direct sums for short lag windows and zero-padded FFT correlation
    otherwise.
    """
    p, n = d.shape
    if max_lag * n <= 200_000:
        out = np.empty((max_lag + 1, p, p))
        for t in range(max_lag + 1):
            out[t] = d[:, t:] @ d[:, : n - t].T / n
        return out
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(d, nfft, axis=1)
    cross = np.fft.irfft(f[:, None, :] * np.conj(f[None, :, :]), nfft, axis=2)
    return np.moveaxis(cross[:, :, : max_lag + 1], 2, 0) / n


def autocovariance(y, max_lag: int, assume_zero_mean: bool = False) -> np.ndarray:
    """Scalar sample autocovariance ``C(0..L)`` with ``1/N`` normalization."""
    y = as_series(y)
    if y.p != 1:
        raise ValueError("autocovariance expects a scalar series")
    return lag_covariance(y, max_lag, assume_zero_mean).lags[:, 0, 0].copy()


def precision(s0) -> PrecisionMatrix:
    """Invert a symmetric zero-lag covariance.

    Closed-form cofactors are used for ``p <= 2`` and a linear solver beyond.

    Raises
    ------
    SingularCovariance
        If ``|det| < 1e-12 * scale**p`` with ``scale = max |entry|``.
    """
    s = np.atleast_2d(np.asarray(s0, dtype=float))
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise NonFiniteError("covariance contains non-finite entries")
    p = s.shape[0]
    scale = float(np.max(np.abs(s)))
    if p == 1:
        det = s[0, 0]
    elif p == 2:
        det = s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0]
    else:
        det = float(np.linalg.det(s))
    if scale == 0.0 or abs(det) < SINGULAR_RTOL * scale**p:
        raise SingularCovariance(f"covariance is singular (det={det:.3e}, scale={scale:.3e})")
    if p == 1:
        g = np.array([[1.0 / det]])
    elif p == 2:
        g = np.array([[s[1, 1], -s[0, 1]], [-s[1, 0], s[0, 0]]]) / det
    else:
        g = np.linalg.solve(s, np.eye(p))
        g = 0.5 * (g + g.T)
    return PrecisionMatrix(g, float(det))


def quadratic_form(x, g: PrecisionMatrix, i: int, j: int) -> float:
    """``A_ij = x(i)^T G x(j)`` for 0-based time indices ``i`` and ``j``."""
    x = as_series(x)
    n = x.n_samples
    for k in (i, j):
        if not 0 <= k < n:
            raise IndexOutOfRange(f"time index {k} outside [0, {n})")
    return float(x.data[:, i] @ g.g @ x.data[:, j])


def mardia_statistic(x, assume_zero_mean: bool = False) -> float:
    """Mardia's kurtosis ``B_p = (1/N) sum_n (x(n)^T S^{-1} x(n))^2``.

    ``S`` is the ``1/N`` sample covariance. By default the series is centered
    first; pass ``assume_zero_mean=True`` to use the raw data.
    """
    x = as_series(x)
    if x.n_samples < x.p + 1:
        raise InsufficientLength(f"need N >= p + 1 = {x.p + 1} samples, got {x.n_samples}")
    if not assume_zero_mean:
        x = x.centered()
    d = x.data
    g = precision(d @ d.T / x.n_samples).g
    q = np.einsum("an,ab,bn->n", d, g, d)
    return float(np.mean(q * q))


def read_csv(path) -> TimeSeries:
    """Read a CSV with one column per component and one row per time step.

    A non-numeric first row is treated as a header and skipped.
    """
    with open(path, newline="") as fh:
        return parse_csv(fh.read(), source=os.fspath(path))


def parse_csv(text: str, source: str = "<string>") -> TimeSeries:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{source}: no data rows")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]
    width = len(rows[0]) if rows else 0
    values = []
    for k, r in enumerate(rows):
        if len(r) != width:
            raise ValueError(f"{source}: row {k + 1} has {len(r)} columns, expected {width}")
        try:
            values.append([float(c) for c in r])
        except ValueError as exc:
            raise ValueError(f"{source}: row {k + 1}: {exc}") from None
    if not values:
        raise ValueError(f"{source}: no data rows")
    return TimeSeries(np.array(values).T)


def write_csv(x, path, header: bool = True) -> None:
    """Write a series in the CSV layout accepted by :func:`read_csv`.

    ``path`` may also be an open text stream.
    """
    x = as_series(x)
    if hasattr(path, "write"):
        _write_rows(x, path, header)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(x, fh, header)


def _write_rows(x: TimeSeries, fh, header: bool) -> None:
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow([f"x{a + 1}" for a in range(x.p)])
    for row in x.data.T:
        w.writerow([repr(float(v)) for v in row])
