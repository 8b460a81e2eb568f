"""Seeded generators: colored Gaussian marginals, copula coupling, embeddings and
the additive non-Gaussian detection scenario."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import lfilter
from scipy.special import log_ndtr, ndtri

from .errors import InsufficientLength, ParameterOutOfDomain
from .null_moments import EmbeddingCorrelation, embedding_lag_covariance
from .stats import LagCovarianceSeq, TimeSeries

DEFAULT_BURN_IN = 1000

# detection scenario: Gaussian AR(1) carrier plus a Laplace-driven AR(2) corruption
CARRIER_AR = 0.8
CORRUPTION_AR = (0.8, -0.5)
LAPLACE_VARIANCE = 2.0


class Family(str, Enum):
    IID_GAUSSIAN = "iid-gaussian"
    AR1_GAUSSIAN = "ar1-gaussian"
    GAUSSIAN_COPULA = "gaussian-copula"
    CLAYTON_COPULA = "clayton-copula"
    GUMBEL_COPULA = "gumbel-copula"
    DETECTION_MIXTURE = "detection-mixture"
    EMBEDDED = "embedded"


GAUSSIAN_FAMILIES = {Family.IID_GAUSSIAN, Family.AR1_GAUSSIAN, Family.GAUSSIAN_COPULA}
COPULA_FAMILIES = {Family.GAUSSIAN_COPULA, Family.CLAYTON_COPULA, Family.GUMBEL_COPULA}
COUPLINGS = ("conditional", "frailty")


@dataclass(frozen=True)
class SeededRng:
    """Random stream identified by a base seed and a replication index.

    Identical ``(seed, stream)`` pairs give identical generators regardless of
    the order in which streams are created.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.default_rng(ss)


@dataclass(frozen=True)
class ProcessSpec:
    """Declarative description of a generated process.

    Parameters
    ----------
    family : Family
    a : float
        AR(1) coefficient of the Gaussian marginals.
    r12 : float
        Gaussian copula correlation.
    theta : float, optional
        Archimedean parameter (Clayton or Gumbel).
    k, snr_db : float, optional
        Corruption amplitude of the detection scenario, given directly or as an SNR in dB.
    delta : int, optional
        Embedding stride.
    inner : ProcessSpec, optional
        Scalar process that is embedded.
    p : int
        Dimension of i.i.d. Gaussian data.
    burn_in : int
        Leading samples discarded by the recursive filters.
    coupling : {"conditional", "frailty"}
        How the copula couples the two colored uniform series.
    """

    family: Family
    a: float = 0.0
    r12: float = 0.0
    theta: float | None = None
    k: float | None = None
    snr_db: float | None = None
    delta: int | None = None
    inner: "ProcessSpec | None" = None
    p: int = 1
    burn_in: int = DEFAULT_BURN_IN
    coupling: str = "conditional"

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if isinstance(self.inner, dict):
            object.__setattr__(self, "inner", ProcessSpec.from_dict(self.inner))
        self.validate()

    def validate(self) -> None:
        f = self.family
        if not abs(self.a) < 1:
            raise ParameterOutOfDomain(f"AR coefficient must satisfy |a| < 1, got {self.a}")
        if self.burn_in < 0:
            raise ParameterOutOfDomain("burn_in must be nonnegative")
        if f is Family.GAUSSIAN_COPULA and not abs(self.r12) < 1:
            raise ParameterOutOfDomain(f"|R12| must be < 1, got {self.r12}")
        if f in (Family.CLAYTON_COPULA, Family.GUMBEL_COPULA):
            _check_theta(f, self.theta)
        if f in COPULA_FAMILIES and self.coupling not in COUPLINGS:
            raise ParameterOutOfDomain(f"coupling must be one of {COUPLINGS}, got {self.coupling!r}")
        if f is Family.IID_GAUSSIAN and self.p < 1:
            raise ParameterOutOfDomain("dimension must be >= 1")
        if f is Family.DETECTION_MIXTURE and (self.k is None) == (self.snr_db is None):
            raise ParameterOutOfDomain("detection mixture needs exactly one of k or snr_db")
        if f is Family.DETECTION_MIXTURE and self.k is not None and self.k < 0:
            raise ParameterOutOfDomain("amplitude k must be nonnegative")
        if f is Family.EMBEDDED:
            if self.delta is None or int(self.delta) != self.delta or self.delta < 1:
                raise ParameterOutOfDomain(f"delta must be a positive integer, got {self.delta}")
            if self.inner is None or self.inner.dimension != 1:
                raise ParameterOutOfDomain("embedding needs a scalar inner process")

    @property
    def dimension(self) -> int:
        f = self.family
        if f is Family.IID_GAUSSIAN:
            return self.p
        if f in COPULA_FAMILIES or f is Family.EMBEDDED:
            return 2
        return 1

    @property
    def is_gaussian(self) -> bool:
        if self.family is Family.EMBEDDED:
            return self.inner.is_gaussian
        if self.family is Family.DETECTION_MIXTURE:
            return self.amplitude() == 0.0
        return self.family in GAUSSIAN_FAMILIES

    def amplitude(self) -> float:
        """Corruption amplitude ``k`` of a detection-mixture spec."""
        if self.k is not None:
            return float(self.k)
        return amplitude_for_snr(self.snr_db)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.value
        if self.inner is not None:
            d["inner"] = self.inner.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProcessSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown process spec fields: {sorted(extra)}")
        d = dict(d)
        if d.get("inner") is not None:
            d["inner"] = cls.from_dict(d["inner"])
        return cls(**d)


def _check_theta(family: Family, theta) -> None:
    if theta is None or not math.isfinite(theta):
        raise ParameterOutOfDomain(f"{family.value} needs a finite theta")
    if family is Family.CLAYTON_COPULA and (theta < -1 or theta == 0):
        raise ParameterOutOfDomain(f"Clayton theta must lie in [-1, inf) without 0, got {theta}")
    if family is Family.GUMBEL_COPULA and theta < 1:
        raise ParameterOutOfDomain(f"Gumbel theta must be >= 1, got {theta}")


def _as_family(family) -> Family:
    return family if isinstance(family, Family) else Family(family)


def ar1(a: float, n: int, rng: np.random.Generator, burn_in: int = DEFAULT_BURN_IN,
        unit_variance: bool = True) -> np.ndarray:
    """AR(1) series ``y(t) = a y(t-1) + eta(t)`` with standard normal innovations.

    With ``unit_variance`` the output is scaled by ``sqrt(1 - a^2)``, so that
    ``E[y(n) y(n-k)] = a^|k|``. The first ``burn_in`` samples are dropped.
    """
    if not abs(a) < 1:
        raise ParameterOutOfDomain(f"AR coefficient must satisfy |a| < 1, got {a}")
    eta = rng.standard_normal(n + burn_in)
    y = lfilter([1.0], [1.0, -a], eta)[burn_in:]
    return y * math.sqrt(1.0 - a * a) if unit_variance else y


def laplace(size, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Laplace draws by inverting the cdf of uniform variates."""
    u = rng.random(size) - 0.5
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def ar2_stationary_variance(phi1: float, phi2: float, innovation_variance: float = 1.0) -> float:
    """Stationary variance of ``b(t) = phi1 b(t-1) + phi2 b(t-2) + e(t)``."""
    denom = (1 + phi2) * ((1 - phi2) ** 2 - phi1**2)
    if not (abs(phi2) < 1 and denom > 0):
        raise ParameterOutOfDomain(f"AR(2) coefficients ({phi1}, {phi2}) are not stationary")
    return innovation_variance * (1 - phi2) / denom


def carrier_variance() -> float:
    return 1.0 / (1.0 - CARRIER_AR**2)


def corruption_variance() -> float:
    return ar2_stationary_variance(*CORRUPTION_AR, LAPLACE_VARIANCE)


def amplitude_for_snr(snr_db: float) -> float:
    """Amplitude ``k`` with ``10 log10(k^2 E[b^2] / E[x^2]) = snr_db``."""
    return math.sqrt(10.0 ** (snr_db / 10.0) * carrier_variance() / corruption_variance())


def snr_for_amplitude(k: float) -> float:
    if k == 0:
        return -math.inf
    return 10.0 * math.log10(k * k * corruption_variance() / carrier_variance())


def detection_mixture(n: int, rng: np.random.Generator, k: float | None = None,
                      snr_db: float | None = None,
                      burn_in: int = DEFAULT_BURN_IN) -> tuple[np.ndarray, float]:
    """Gaussian AR(1) carrier plus an amplitude-scaled non-Gaussian AR(2) corruption.

    ``y = x + k b`` with ``x(t) = 0.8 x(t-1) + N(0, 1)`` and
    ``b(t) = 0.8 b(t-1) - 0.5 b(t-2) + Laplace(1)``.

    Returns
    -------
    y : ndarray
        Series of length ``n``.
    snr_db : float
        ``10 log10(k^2 E[b^2] / E[x^2])`` from the stationary variances.
    """
    if (k is None) == (snr_db is None):
        raise ValueError("give exactly one of k or snr_db")
    if n < 1:
        raise InsufficientLength("n must be >= 1")
    if k is None:
        k = amplitude_for_snr(snr_db)
    x = ar1(CARRIER_AR, n, rng, burn_in, unit_variance=False)
    e = laplace(n + burn_in, rng)
    b = lfilter([1.0], [1.0, -CORRUPTION_AR[0], -CORRUPTION_AR[1]], e)[burn_in:]
    return x + k * b, snr_for_amplitude(k)


def embed(y, delta: int, p: int, n: int | None = None) -> TimeSeries:
    """Stride embedding ``x_a(n) = y(n delta + a)`` for ``a = 1..p`` and ``n = 1..N``.

    Indices in the formula are 1-based. By default ``N`` is the largest count
    that fits in ``y``.
    """
    y = np.asarray(y, dtype=float).ravel()
    if delta < 1 or p < 1:
        raise ValueError("delta and p must be positive")
    avail = (y.size - p) // delta
    if n is None:
        n = avail
    if n < 1 or n > avail:
        raise InsufficientLength(f"series of length {y.size} cannot give {n} embedded samples "
                                 f"with delta={delta}, p={p}")
    start = delta + np.arange(p)[:, None]
    return TimeSeries(y[start + delta * np.arange(n)[None, :]])


def _norm_from_log_uniform(log_v: np.ndarray) -> np.ndarray:
    """``Phi^{-1}(v)`` from ``log v``, accurate in both tails."""
    out = np.empty_like(log_v)
    low = log_v < -math.log(2.0)
    out[low] = ndtri(np.exp(log_v[low]))
    out[~low] = -ndtri(-np.expm1(log_v[~low]))
    return out


def _clayton_log_inverse(log_w, log_u, theta: float) -> np.ndarray:
    t = np.expm1(-theta / (1.0 + theta) * log_w) * np.exp(-theta * log_u)
    return -np.log1p(t) / theta


def _gumbel_log_inverse(log_w, log_u, theta: float) -> np.ndarray:
    x = -log_u
    if theta == 1.0:
        return log_w
    r = log_w - x - (theta - 1.0) * np.log(x)
    # Newton on s = log A for -A + (1 - theta) log A = r; A >= x
    s = np.log(x)
    lo = s.copy()
    for _ in range(100):
        ea = np.exp(s)
        step = (-ea + (1.0 - theta) * s - r) / (-ea + (1.0 - theta))
        s = np.maximum(s - step, lo)
        if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(s))):
            break
    # polish D = A - x, where the log-domain iterate loses relative accuracy
    d = np.maximum(np.exp(s) - x, 0.0)
    for _ in range(4):
        phi = -d + (1.0 - theta) * np.log1p(d / x) - log_w
        dphi = -1.0 + (1.0 - theta) / (x + d)
        d = np.maximum(d - phi / dphi, 0.0)
    y = x * np.expm1(theta * np.log1p(d / x)) ** (1.0 / theta)
    return -y


def clayton_conditional_inverse(w, u, theta: float) -> np.ndarray:
    """Solve ``dC(u, v)/du = w`` for ``v`` under the Clayton copula."""
    _check_theta(Family.CLAYTON_COPULA, theta)
    u = np.asarray(u, dtype=float)
    if theta == -1:
        return 1.0 - u
    return np.exp(_clayton_log_inverse(np.log(w), np.log(u), theta))


def gumbel_conditional_inverse(w, u, theta: float) -> np.ndarray:
    """Solve ``dC(u, v)/du = w`` for ``v`` under the Gumbel copula."""
    _check_theta(Family.GUMBEL_COPULA, theta)
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    return np.exp(_gumbel_log_inverse(np.log(w), np.log(u), theta))


def positive_stable(alpha: float, size, rng: np.random.Generator) -> np.ndarray:
    """Positive stable draws with Laplace transform ``exp(-t^alpha)``, ``0 < alpha <= 1``.

    Chambers-Mallows-Stuck construction from a uniform angle and an exponential.
    """
    if alpha == 1.0:
        return np.ones(size)
    u = rng.uniform(0.0, math.pi, size)
    w = rng.exponential(1.0, size)
    return (np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)) * (
        np.sin((1.0 - alpha) * u) / w
    ) ** ((1.0 - alpha) / alpha)


def archimedean_pair(family, theta: float, size: int, rng: np.random.Generator,
                     u=None) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` pairs from a Clayton or Gumbel copula.

    Positive parameters use the frailty construction
    ``U_i = psi(E_i / V)`` with ``E_i = -log u_i``: a Gamma(1/theta) frailty and
    ``psi(t) = (1 + t)^(-1/theta)`` for Clayton, a positive stable(1/theta)
    frailty and ``psi(t) = exp(-t^(1/theta))`` for Gumbel. Negative Clayton
    parameters use conditional inversion.

    Parameters
    ----------
    u : (size, 2) array, optional
        Independent uniforms feeding the construction; drawn from ``rng`` if omitted.
    """
    family = _as_family(family)
    if family not in (Family.CLAYTON_COPULA, Family.GUMBEL_COPULA):
        raise ParameterOutOfDomain(f"{family.value} is not an Archimedean family")
    _check_theta(family, theta)
    if u is None:
        u = rng.random((size, 2))
    u = np.asarray(u, dtype=float)
    if family is Family.CLAYTON_COPULA and theta < 0:
        return u[:, 0], clayton_conditional_inverse(u[:, 1], u[:, 0], theta)
    e = -np.log(u)
    if family is Family.CLAYTON_COPULA:
        v = rng.gamma(1.0 / theta, 1.0, size)
        out = (1.0 + e / v[:, None]) ** (-1.0 / theta)
    else:
        v = positive_stable(1.0 / theta, size, rng)
        out = np.exp(-((e / v[:, None]) ** (1.0 / theta)))
    return out[:, 0], out[:, 1]


def colored_copula_process(family, param: float, a: float, n: int, rng: np.random.Generator,
                           burn_in: int = DEFAULT_BURN_IN,
                           coupling: str = "conditional") -> TimeSeries:
    """Bivariate process with colored standard Gaussian marginals and a copula link.

    Two independent unit-variance AR(1) series ``y1, y2`` give colored uniforms
    ``u = Phi(y1)``, ``w = Phi(y2)``. With the default ``"conditional"``
    coupling ``u`` is kept and ``v(n) = C^{-1}(w(n) | u(n))``, so both outputs
    stay AR(1) in time and every cross-section follows the copula. The
    ``"frailty"`` coupling instead passes ``(u, w)`` through the frailty
    construction of :func:`archimedean_pair`, which weakens the time coloring.
    Outputs are mapped back with ``Phi^{-1}``. For the Gaussian copula the link
    is written directly as ``x2 = R y1 + sqrt(1 - R^2) y2``.
    """
    family = _as_family(family)
    if family not in COPULA_FAMILIES:
        raise ParameterOutOfDomain(f"{family.value} is not a copula family")
    if coupling not in COUPLINGS:
        raise ParameterOutOfDomain(f"coupling must be one of {COUPLINGS}, got {coupling!r}")
    y1 = ar1(a, n, rng, burn_in)
    y2 = ar1(a, n, rng, burn_in)
    if family is Family.GAUSSIAN_COPULA:
        if not abs(param) < 1:
            raise ParameterOutOfDomain(f"|R12| must be < 1, got {param}")
        return TimeSeries(np.stack([y1, param * y1 + math.sqrt(1.0 - param * param) * y2]))
    _check_theta(family, param)
    log_u, log_w = log_ndtr(y1), log_ndtr(y2)
    if coupling == "frailty":
        u1, u2 = archimedean_pair(family, param, n, rng, u=np.exp(np.stack([log_u, log_w], 1)))
        return TimeSeries(np.stack([ndtri(u1), ndtri(u2)]))
    if family is Family.CLAYTON_COPULA:
        if param == -1:
            return TimeSeries(np.stack([y1, -y1]))
        log_v = _clayton_log_inverse(log_w, log_u, param)
    else:
        log_v = _gumbel_log_inverse(log_w, log_u, param)
    return TimeSeries(np.stack([y1, _norm_from_log_uniform(log_v)]))


def generate(spec: ProcessSpec, n: int, rng: np.random.Generator) -> TimeSeries:
    """Draw a record of ``n`` time steps from ``spec``."""
    f = spec.family
    if f is Family.IID_GAUSSIAN:
        return TimeSeries(rng.standard_normal((spec.p, n)))
    if f is Family.AR1_GAUSSIAN:
        return TimeSeries(ar1(spec.a, n, rng, spec.burn_in))
    if f is Family.GAUSSIAN_COPULA:
        return colored_copula_process(f, spec.r12, spec.a, n, rng, spec.burn_in, spec.coupling)
    if f in COPULA_FAMILIES:
        return colored_copula_process(f, spec.theta, spec.a, n, rng, spec.burn_in, spec.coupling)
    if f is Family.DETECTION_MIXTURE:
        y, _ = detection_mixture(n, rng, k=spec.amplitude(), burn_in=spec.burn_in)
        return TimeSeries(y)
    return embed(generate(spec.inner, embedded_source_length(spec, n), rng).data[0], spec.delta, 2, n)


def embedded_source_length(spec: ProcessSpec, n: int) -> int:
    """Length of the scalar series needed for ``n`` embedded samples."""
    return n * spec.delta + 2


def scalar_autocovariance(spec: ProcessSpec, max_lag: int) -> np.ndarray:
    """Model autocovariance ``C(0..max_lag)`` of a scalar Gaussian spec."""
    j = np.arange(max_lag + 1)
    f = spec.family
    if f is Family.IID_GAUSSIAN and spec.p == 1:
        return (j == 0).astype(float)
    if f is Family.AR1_GAUSSIAN:
        return spec.a ** j.astype(float)
    if f is Family.DETECTION_MIXTURE and spec.amplitude() == 0.0:
        return carrier_variance() * CARRIER_AR ** j.astype(float)
    raise ValueError(f"no analytic Gaussian covariance for {f.value}")


def model_covariance(spec: ProcessSpec, max_lag: int) -> LagCovarianceSeq:
    """Analytic ``S(0..max_lag)`` of a Gaussian spec (as generated)."""
    f = spec.family
    if f is Family.IID_GAUSSIAN:
        lags = np.zeros((max_lag + 1, spec.p, spec.p))
        lags[0] = np.eye(spec.p)
        return LagCovarianceSeq(lags)
    if f is Family.GAUSSIAN_COPULA:
        rho = spec.a ** np.arange(max_lag + 1, dtype=float)
        return LagCovarianceSeq(rho[:, None, None] * np.array([[1.0, spec.r12], [spec.r12, 1.0]]))
    if f is Family.EMBEDDED:
        c = scalar_autocovariance(spec.inner, max_lag * spec.delta + 1)
        return embedding_lag_covariance(EmbeddingCorrelation(c, spec.delta), max_lag)
    return LagCovarianceSeq(scalar_autocovariance(spec, max_lag))
