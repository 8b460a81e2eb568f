"""Brute-force ground truth for Gaussian moments and the kurtosis expansion.

Moments of a zero-mean stationary Gaussian vector process are expanded over
all perfect matchings of their index list (Isserlis/Wick). On top of that the
module evaluates expectations of products of quadratic forms
``A_ij = x(i)^T G x(j)``, assembles the four term families of the ``O(1/N)``
expansion of ``B_p`` into a mean, and estimates null moments by Monte Carlo.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from .errors import BudgetExceeded, OrderOverflow
from .generators import ProcessSpec, SeededRng, generate
from .stats import LagCovarianceSeq, PrecisionMatrix, mardia_statistic, precision

MAX_HALF_ORDER = 8
TERM_BUDGET = 10**9

Cov = Callable[[int, int, int], float]


class MetaIndex(NamedTuple):
    """A random variable ``x_space(time)``; ``space`` is a 0-based component index."""

    time: int
    space: int = 0


def count_pairings(r: int) -> int:
    """Number of perfect matchings of ``2r`` slots, ``(2r)! / (2^r r!)``."""
    if not 1 <= r <= MAX_HALF_ORDER:
        raise OrderOverflow(f"half-order must lie in [1, {MAX_HALF_ORDER}], got {r}")
    return math.factorial(2 * r) // (2**r * math.factorial(r))


def perfect_matchings(n_slots: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """All perfect matchings of ``range(n_slots)``.

    The smallest unpaired slot is paired with each remaining slot in turn, so
    the order is deterministic and each matching appears once.
    """
    if n_slots % 2:
        return

    def rec(free: tuple[int, ...]):
        if not free:
            yield ()
            return
        first = free[0]
        for k in range(1, len(free)):
            rest = free[1:k] + free[k + 1 :]
            for tail in rec(rest):
                yield ((first, free[k]),) + tail

    yield from rec(tuple(range(n_slots)))


@lru_cache(maxsize=8)
def _matchings_cached(n_slots: int) -> tuple:
    return tuple(perfect_matchings(n_slots))


def _matchings(n_slots: int):
    # order 14 and 16 are streamed to keep memory flat
    return _matchings_cached(n_slots) if n_slots <= 12 else perfect_matchings(n_slots)


@dataclass(frozen=True)
class PairingSet:
    """Perfect matchings of ``order`` labeled slots."""

    order: int

    def __post_init__(self):
        if self.order % 2 or self.order < 2:
            raise ValueError(f"order must be a positive even number, got {self.order}")
        count_pairings(self.order // 2)

    @property
    def count(self) -> int:
        return count_pairings(self.order // 2)

    def matchings(self) -> Iterator[tuple[tuple[int, int], ...]]:
        return perfect_matchings(self.order)


def cov_from_lags(cov) -> Cov:
    """Wrap a :class:`LagCovarianceSeq` (or ``(L+1, p, p)`` array) as ``(a, b, tau) -> S_ab(tau)``."""
    seq = cov if isinstance(cov, LagCovarianceSeq) else LagCovarianceSeq(cov)

    def f(a: int, b: int, tau: int) -> float:
        return float(seq.at(tau)[a, b])

    return f


def isserlis_moment(indices: Sequence, cov: Cov) -> float:
    """``E[prod_k x_{space_k}(time_k)]`` for a zero-mean stationary Gaussian process.

    Parameters
    ----------
    indices : sequence of MetaIndex or (time, space) pairs
    cov : callable
        ``cov(a, b, tau)`` returns ``S_ab(tau) = E[x_a(t) x_b(t - tau)]``.
    """
    idx = [MetaIndex(*i) if not isinstance(i, MetaIndex) else i for i in indices]
    m = len(idx)
    if m % 2:
        return 0.0
    if m == 0:
        return 1.0
    if m > 2 * MAX_HALF_ORDER:
        raise OrderOverflow(f"moment order {m} exceeds {2 * MAX_HALF_ORDER}")
    pair_cov = {}
    for s, t in itertools.combinations(range(m), 2):
        pair_cov[s, t] = cov(idx[s].space, idx[t].space, idx[s].time - idx[t].time)
    terms = (math.prod(pair_cov[s, t] for s, t in mt) for mt in _matchings(m))
    return math.fsum(terms)


def expected_A_product(pairs: Sequence[tuple[int, int]], cov: Cov, g) -> float:
    """``E[prod_l A_{alpha_l beta_l}]`` by summing over every space-index assignment.

    Cost is ``p^{2L} (2L-1)!!`` products; calls above ``1e9`` raise
    :class:`BudgetExceeded`.
    """
    gm = g.g if isinstance(g, PrecisionMatrix) else np.atleast_2d(np.asarray(g, dtype=float))
    p = gm.shape[0]
    n_l = len(pairs)
    if n_l > MAX_HALF_ORDER:
        raise OrderOverflow(f"at most {MAX_HALF_ORDER} factors, got {n_l}")
    budget = p ** (2 * n_l) * count_pairings(n_l)
    if budget > TERM_BUDGET:
        raise BudgetExceeded(f"{budget:.3e} terms exceeds the budget of {TERM_BUDGET:.0e}")
    times = [t for pair in pairs for t in pair]
    total = []
    for spaces in itertools.product(range(p), repeat=2 * n_l):
        w = math.prod(gm[spaces[2 * l], spaces[2 * l + 1]] for l in range(n_l))
        if w == 0.0:
            continue
        total.append(w * isserlis_moment(list(zip(times, spaces)), cov))
    return math.fsum(total)


def _cycles(matching, n_slots: int) -> list[list[tuple[int, int]]]:
    """Decompose G-edges ``(2l, 2l+1)`` plus matching edges into cycles of S-edges."""
    partner = [0] * n_slots
    for s, t in matching:
        partner[s], partner[t] = t, s
    seen = [False] * n_slots
    out = []
    for start in range(n_slots):
        if seen[start]:
            continue
        edges = []
        cur = start
        while True:
            seen[cur] = True
            a = cur ^ 1
            seen[a] = True
            b = partner[a]
            edges.append((a, b))
            cur = b
            if cur == start:
                break
        out.append(edges)
    return out


@lru_cache(maxsize=64)
def _cycle_structure(n_factors: int) -> tuple:
    n_slots = 2 * n_factors
    return tuple(tuple(map(tuple, _cycles(m, n_slots))) for m in _matchings(n_slots))


def contracted_expectation(pattern: Sequence[tuple[str, str]], times: dict, table: np.ndarray,
                           g: np.ndarray) -> np.ndarray:
    """Vectorized ``E[prod_l A_{alpha_l beta_l}]`` over arrays of time labels.

    Summing the space indices of one matching in closed form turns each cycle
    of G- and S-edges into ``tr(G S(tau_1) G S(tau_2) ...)``.

    Parameters
    ----------
    pattern : sequence of (label, label)
        Time labels of each factor, e.g. ``[("n", "n"), ("n", "i"), ("n", "i")]``.
    times : dict
        Label to integer array (all broadcastable to one shape).
    table : (2n-1, p, p) array
        ``S(tau)`` for ``tau = -(n-1) .. n-1``, see :meth:`LagCovarianceSeq.table`.
    g : (p, p) array
        Precision matrix.
    """
    slots = [lab for pair in pattern for lab in pair]
    arrays = np.broadcast_arrays(*[np.asarray(times[lab]) for lab in slots])
    shape = arrays[0].shape
    off = (table.shape[0] - 1) // 2
    p = g.shape[0]
    total = np.zeros(shape)
    cache = {}
    for cycles in _cycle_structure(len(pattern)):
        term = np.ones(shape)
        for edges in cycles:
            acc = np.broadcast_to(np.eye(p), shape + (p, p))
            for a, b in edges:
                key = (a, b)
                if key not in cache:
                    cache[key] = g @ table[arrays[a] - arrays[b] + off]
                acc = acc @ cache[key]
            term = term * np.trace(acc, axis1=-2, axis2=-1)
        total += term
    return total


def _pair_offsets(n: int):
    d = np.arange(-(n - 1), n)
    return d, (n - np.abs(d)).astype(float)


def _triple_offsets(n: int):
    d1, d2 = np.meshgrid(np.arange(-(n - 1), n), np.arange(-(n - 1), n), indexing="ij")
    span = np.maximum(np.maximum(d1, d2), 0) - np.minimum(np.minimum(d1, d2), 0)
    mult = n - span
    ok = mult > 0
    return d1[ok], d2[ok], mult[ok].astype(float)


@dataclass(frozen=True)
class AssembledMean:
    """Expectation of the ``O(1/N)`` kurtosis expansion split by term family."""

    n: int
    squares: float  # E[A_nn^2]
    cross: float  # sum_{n,i} E[A_nn A_ni^2]
    quartic: float  # sum_{n,i,j} E[A_ni^2 A_nj^2]
    chain: float  # sum_{n,j,k} E[A_nn A_nj A_jk A_kn]

    @property
    def mean(self) -> float:
        n = self.n
        return math.fsum([
            6.0 * self.squares,
            -8.0 / n**2 * self.cross,
            self.quartic / n**3,
            2.0 / n**3 * self.chain,
        ])


def assembled_mean(cov, n: int) -> AssembledMean:
    """Assemble ``E[B_p]`` from Gaussian expectations of the four A-product families.

    ``(6/N) sum E[A_nn^2] - (8/N^2) sum E[A_nn A_ni^2] + (1/N^3) sum E[A_ni^2 A_nj^2]
    + (2/N^3) sum E[A_nn A_nj A_jk A_kn]``, with time sums reduced to sums over
    lag offsets weighted by their multiplicity.
    """
    seq = cov if isinstance(cov, LagCovarianceSeq) else LagCovarianceSeq(cov)
    table = seq.table(n)
    g = precision(seq.s0).g
    zero = np.zeros(1, dtype=int)
    sq = contracted_expectation([("n", "n"), ("n", "n")], {"n": zero}, table, g)[0]
    d, w = _pair_offsets(n)
    cross = contracted_expectation([("n", "n"), ("n", "i"), ("n", "i")],
                                   {"n": np.zeros_like(d), "i": -d}, table, g)
    d1, d2, w3 = _triple_offsets(n)
    base = np.zeros_like(d1)
    quartic = contracted_expectation([("n", "i"), ("n", "i"), ("n", "j"), ("n", "j")],
                                     {"n": base, "i": -d1, "j": -d2}, table, g)
    chain = contracted_expectation([("n", "n"), ("n", "j"), ("j", "k"), ("k", "n")],
                                   {"n": base, "j": -d1, "k": -d2}, table, g)
    return AssembledMean(
        n=n,
        squares=float(sq),
        cross=math.fsum(w * cross),
        quartic=math.fsum(w3 * quartic),
        chain=math.fsum(w3 * chain),
    )


def var1_lag_covariance(phi, noise_cov, max_lag: int) -> LagCovarianceSeq:
    """``S(tau) = Phi^tau S(0)`` of a stable VAR(1) ``x(n) = Phi x(n-1) + e(n)``."""
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    s0 = solve_discrete_lyapunov(phi, np.atleast_2d(noise_cov))
    s0 = 0.5 * (s0 + s0.T)
    lags = [s0]
    for _ in range(max_lag):
        lags.append(phi @ lags[-1])
    return LagCovarianceSeq(np.array(lags))


def random_geometric_covariance(p: int, rng: np.random.Generator, max_lag: int,
                                radius: tuple[float, float] = (0.1, 0.6)) -> LagCovarianceSeq:
    """Random VAR(1) lag covariances with spectral radius drawn from ``radius``."""
    phi = rng.standard_normal((p, p))
    rad = np.max(np.abs(np.linalg.eigvals(phi)))
    phi *= rng.uniform(*radius) / rad
    b = rng.standard_normal((p, p))
    noise = b @ b.T + 0.5 * np.eye(p)
    return var1_lag_covariance(phi, noise, max_lag)


# Product types are multisets of label pairs; for p = 1 every S-factor is
# identified by its two time labels.
Monomial = tuple[tuple[str, str], ...]


def group_coefficients(labels: str | Sequence[str]) -> Counter:
    """Exact grouping of Isserlis terms for ``p = 1`` by product type.

    ``group_coefficients("nnnnjjkk")`` maps each monomial such as
    ``(("j", "k"), ("j", "k"), ("n", "n"), ("n", "n"))`` to its integer count.
    """
    labels = list(labels)
    if len(labels) % 2:
        return Counter()
    out: Counter = Counter()
    for mt in _matchings(len(labels)):
        mono = tuple(sorted(tuple(sorted((labels[s], labels[t]))) for s, t in mt))
        out[mono] += 1
    return out


def monomial(text: str) -> Monomial:
    """Parse ``"ii*jj*ij^2"`` into a canonical :data:`Monomial`."""
    factors = []
    for part in text.split("*"):
        base, _, power = part.partition("^")
        pair = tuple(sorted(base.strip()))
        factors.extend([pair] * (int(power) if power else 1))
    return tuple(sorted(factors))


def format_monomial(m: Monomial) -> str:
    c = Counter(m)
    return " ".join(f"S_{a}{b}" + (f"^{k}" if k > 1 else "") for (a, b), k in sorted(c.items()))


# Reference expansions for p = 1, written as {product type: count}.
REFERENCE_EXPANSIONS: dict[str, dict[str, int]] = {
    "iiij": {"ii*ij": 3},
    "iijj": {"ii*jj": 1, "ij^2": 2},
    "iiiijj": {"ii^2*jj": 3, "ii*ij^2": 12},
    "iiijjj": {"ii*ij*jj": 9, "ij^3": 6},
    "iijjkk": {"ii*jj*kk": 1, "ii*jk^2": 2, "jj*ik^2": 2, "kk*ij^2": 2, "ij*ik*jk": 8},
    "nnnnjjkk": {"nn^2*jj*kk": 3, "nn^2*jk^2": 6, "nn*nj^2*kk": 12, "nn*nk^2*jj": 12,
                 "nj^2*nk^2": 24, "nn*nj*nk*jk": 48},
    "iiiijjjj": {"ii^2*jj^2": 9, "ii*jj*ij^2": 72, "ij^4": 24},
    "iiiiiijj": {"ii^3*jj": 15, "ii^2*ij^2": 90},
    "iiiiijjj": {"ii*ij^3": 60, "ii^2*ij*jj": 45},
    "iiiiiijk": {"ii^3*jk": 15, "ii^2*ij*ik": 90},
    "iiiijjjk": {"ii^2*jj*jk": 9, "ii*ij*ik*jj": 36, "ij^3*ik": 24, "ii*ij^2*jk": 36},
    "iiiiiiiijj": {"ii^4*jj": 105, "ii^3*ij^2": 840},
    "iiiiiiijjk": {"ii^3*ij*jk": 210, "ii^2*ij^2*ik": 630, "ii^3*jj*ik": 105},
    "iiiiijjjjj": {"ij^5": 120, "ii^2*jj^2*ij": 225, "ii*jj*ij^3": 600},
    "iiiiiiiijjjj": {"ii^2*ij^4": 5040, "ii^4*jj^2": 315, "ii^3*ij^2*jj": 5040},
    "iiiiiiiijjkk": {"ii^4*jj*kk": 105, "ii^4*jk^2": 210, "ii^3*ij^2*kk": 840, "ii^3*ik^2*jj": 840,
                     "ii^2*ij^2*ik^2": 5040, "ii^3*ij*ik*jk": 3360},
    "iiiiiijjjjjj": {"ij^6": 720, "ii^3*jj^3": 225, "ii*jj*ij^4": 5400, "ii^2*jj^2*ij^2": 4050},
}


def check_reference_expansion(labels: str) -> tuple[bool, Counter, Counter]:
    """Compare the oracle grouping of ``labels`` with its reference expansion."""
    expected = Counter({monomial(k): v for k, v in REFERENCE_EXPANSIONS[labels].items()})
    got = group_coefficients(labels)
    return got == expected, got, expected


@dataclass(frozen=True)
class MCMoments:
    """Monte Carlo estimate of the null mean and variance of ``B_p``."""

    mean: float
    variance: float
    mean_se: float
    variance_se: float
    replications: int
    failures: int = 0


def jackknife_variance_se(values: np.ndarray) -> float:
    """Leave-one-out jackknife standard error of the sample variance."""
    b = np.asarray(values, dtype=float)
    m = b.size
    if m < 3:
        return math.nan
    b = b - b.mean()
    s1, s2 = b.sum(), np.sum(b * b)
    loo = (s2 - b * b - (s1 - b) ** 2 / (m - 1)) / (m - 2)
    return float(math.sqrt((m - 1) / m * np.sum((loo - loo.mean()) ** 2)))


def mc_statistics(spec: ProcessSpec, n: int, replications: int, seed: int,
                  assume_zero_mean: bool = False) -> np.ndarray:
    """``B_p`` on ``replications`` independent records, one RNG stream each."""
    out = np.empty(replications)
    for r in range(replications):
        x = generate(spec, n, SeededRng(seed, r).generator())
        out[r] = mardia_statistic(x, assume_zero_mean)
    return out


def mc_null_moments(spec: ProcessSpec, n: int, replications: int, seed: int,
                    assume_zero_mean: bool = False) -> MCMoments:
    """Monte Carlo mean and variance of ``B_p`` for a Gaussian process spec."""
    if not spec.is_gaussian:
        raise ValueError(f"{spec.family.value} is not a Gaussian null process")
    b = mc_statistics(spec, n, replications, seed, assume_zero_mean)
    return MCMoments(
        mean=float(b.mean()),
        variance=float(b.var(ddof=1)),
        mean_se=float(b.std(ddof=1) / math.sqrt(replications)),
        variance_se=jackknife_variance_se(b),
        replications=replications,
    )


@dataclass(frozen=True)
class RemainderCheck:
    """Scaled gaps ``C[s, k] = n_k^{3/2} |closed - assembled|`` for each random sequence ``s``."""

    p: int
    ns: tuple
    closed: np.ndarray
    assembled: np.ndarray

    @property
    def scaled_gap(self) -> np.ndarray:
        n = np.asarray(self.ns, dtype=float)
        return n**1.5 * np.abs(self.closed - self.assembled)

    @property
    def passed(self) -> bool:
        """True when every sequence's scaled gap does not grow past its smallest-n value."""
        c = self.scaled_gap
        return bool(np.all(c[:, 1:] <= c[:, :1] * (1 + 1e-9)))


def mean_remainder_check(p: int, ns=(20, 30, 40), sequences: int = 20, seed: int = 0,
                         max_lag: int = 60) -> RemainderCheck:
    """Compare closed-form null means with the assembled expansion on random VAR(1) sequences."""
    from .null_moments import ScalarCovSeq, bivariate_colored_moments, scalar_colored_moments

    if p not in (1, 2):
        raise ValueError("closed forms exist for p = 1 and p = 2 only")
    rng = np.random.default_rng(seed)
    closed = np.empty((sequences, len(ns)))
    assembled = np.empty_like(closed)
    for s in range(sequences):
        cov = random_geometric_covariance(p, rng, max_lag)
        for k, n in enumerate(ns):
            if p == 1:
                closed[s, k] = scalar_colored_moments(ScalarCovSeq.from_lags(cov.lags[:, 0, 0]), n).mean
            else:
                closed[s, k] = bivariate_colored_moments(cov, n).mean
            assembled[s, k] = assembled_mean(cov, n).mean
    return RemainderCheck(p, tuple(ns), closed, assembled)
