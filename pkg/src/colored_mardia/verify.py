"""Self-checks of the moment oracle and the closed-form null moments."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .null_moments import (
    EmbeddingCorrelation,
    bivariate_colored_moments,
    embedded_bivariate_moments,
    embedding_lag_covariance,
)
from .oracle import (
    MAX_HALF_ORDER,
    REFERENCE_EXPANSIONS,
    check_reference_expansion,
    count_pairings,
    cov_from_lags,
    expected_A_product,
    format_monomial,
    group_coefficients,
    mean_remainder_check,
    monomial,
    perfect_matchings,
    var1_lag_covariance,
)

# Enumerating more than this many matchings is slow; larger counts are checked by formula only.
ENUMERATION_LIMIT = 200_000


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def check_pairing_counts(max_half_order: int = MAX_HALF_ORDER) -> list[CheckResult]:
    """``count_pairings`` against the double factorial and, where cheap, full enumeration."""
    out = []
    for r in range(1, max_half_order + 1):
        c = count_pairings(r)
        ok = c == math.prod(range(1, 2 * r, 2))
        how = "double factorial"
        if c <= ENUMERATION_LIMIT:
            ok = ok and sum(1 for _ in perfect_matchings(2 * r)) == c
            how = "enumerated"
        out.append(CheckResult(f"pairings order {2 * r}", ok, f"{c} ({how})"))
    return out


def _scalar_product_check(rng: np.random.Generator) -> CheckResult:
    phi = rng.uniform(0.3, 0.8)
    cov = var1_lag_covariance(np.array([[phi]]), np.array([[1.0]]), 12)
    s0 = cov.lags[0, 0, 0]
    rho = lambda tau: cov.at(tau)[0, 0] / s0  # noqa: E731
    n, i, j = 0, 2, 5
    oracle = expected_A_product([(n, i), (n, i), (n, j), (n, j)], cov_from_lags(cov), [[1.0 / s0]])
    closed = (3 + 6 * rho(i - j) ** 2 + 12 * rho(n - i) ** 2 + 12 * rho(n - j) ** 2
              + 24 * rho(n - i) ** 2 * rho(n - j) ** 2 + 48 * rho(n - i) * rho(n - j) * rho(i - j))
    ok = math.isclose(oracle, closed, rel_tol=1e-12)
    return CheckResult("E[A_ni^2 A_nj^2] weights", ok, f"oracle {oracle:.15g} vs weighted sum {closed:.15g}")


def check_a2_coefficients(seed: int = 0) -> list[CheckResult]:
    """Grouping of the eighth-order moment ``x_n^4 x_j^2 x_k^2`` into its six product types."""
    got = group_coefficients("nnnnjjkk")
    weights = sorted(got.values())
    ok = weights == [3, 6, 12, 12, 24, 48] and sum(weights) == count_pairings(4)
    detail = ", ".join(f"{v} {format_monomial(m)}" for m, v in sorted(got.items(), key=lambda kv: kv[1]))
    return [CheckResult("grouping n^4 j^2 k^2", ok, f"{detail} (sum {sum(weights)})"),
            _scalar_product_check(np.random.default_rng(seed))]


def check_a3_catalog(max_order: int = 2 * MAX_HALF_ORDER) -> list[CheckResult]:
    """Every stored reference expansion up to ``max_order`` against the oracle grouping."""
    out = []
    for labels in REFERENCE_EXPANSIONS:
        if len(labels) > max_order:
            continue
        ok, got, expected = check_reference_expansion(labels)
        if ok:
            detail = f"{len(got)} product types, {sum(got.values())} terms"
        else:
            diff = {format_monomial(m): got[m] - expected[m] for m in set(got) | set(expected)
                    if got[m] != expected[m]}
            detail = f"mismatch {diff}"
        out.append(CheckResult(f"expansion {labels}", ok, detail))
    return out


def check_mean_oracle(p: int, seed: int = 0, sequences: int = 20) -> list[CheckResult]:
    """Closed-form mean against the assembled expansion; scaled gap must not grow with n."""
    res = mean_remainder_check(p, sequences=sequences, seed=seed)
    c = res.scaled_gap
    worst = np.max(c[:, 1:] / c[:, :1])
    cols = ", ".join(f"n={n}: max C={c[:, k].max():.4g}" for k, n in enumerate(res.ns))
    return [CheckResult(f"p={p} mean remainder", res.passed,
                        f"{cols}; worst C_n/C_{res.ns[0]} = {worst:.3f}")]


def random_embedding_correlation(rng: np.random.Generator, delta: int, length: int = 40):
    """Autocovariance of a random stable AR(2) process as an :class:`EmbeddingCorrelation`."""
    r1, r2 = rng.uniform(-0.8, 0.8, 2)
    phi1, phi2 = r1 + r2, -r1 * r2
    c = np.empty(length)
    c[0] = 1.0
    c[1] = phi1 / (1 - phi2)
    for k in range(2, length):
        c[k] = phi1 * c[k - 1] + phi2 * c[k - 2]
    return EmbeddingCorrelation(c * rng.uniform(0.5, 2.0), delta)


def check_embedding_consistency(seed: int = 0, sequences: int = 50, n: int = 200) -> list[CheckResult]:
    """Embedding polynomials against the bivariate trace form under ``S_ab(tau) = C(tau delta + a - b)``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(sequences):
        corr = random_embedding_correlation(rng, int(rng.integers(1, 4)))
        emb = embedded_bivariate_moments(corr, n)
        cov = embedding_lag_covariance(corr, n - 1)
        biv = bivariate_colored_moments(cov, n)
        worst = max(worst, abs(emb.mean - biv.mean) / max(1.0, abs(biv.mean)),
                    abs(emb.variance - biv.variance) / max(1.0, abs(biv.variance)))
    return [CheckResult("embedding vs bivariate", worst <= 1e-10, f"max deviation {worst:.3e} over {sequences} sequences")]


CASES: dict[str, Callable[..., list[CheckResult]]] = {
    "pairing-counts": lambda order, seed: check_pairing_counts(order),
    "a2-coefficients": lambda order, seed: check_a2_coefficients(seed),
    "a3-catalog": lambda order, seed: check_a3_catalog(2 * order),
    "scalar-mean-oracle": lambda order, seed: check_mean_oracle(1, seed),
    "bivariate-mean-oracle": lambda order, seed: check_mean_oracle(2, seed),
    "embedding-consistency": lambda order, seed: check_embedding_consistency(seed),
}


def run_checks(case: str = "all", order: int = MAX_HALF_ORDER, seed: int = 0) -> list[CheckResult]:
    """Run one named case or all of them."""
    names = list(CASES) if case == "all" else [case]
    out = []
    for name in names:
        if name not in CASES:
            raise ValueError(f"unknown case {name!r}; choose from {['all', *CASES]}")
        out.extend(CASES[name](order, seed))
    return out


__all__ = ["CASES", "CheckResult", "run_checks", "monomial"]
