"""Reproducible Monte Carlo experiments: rejection rates and detection curves."""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from .engine import run_test
from .errors import MardiaError, ReplicationFailure
from .generators import (
    Family,
    ProcessSpec,
    SeededRng,
    embed,
    embedded_source_length,
    generate,
    model_covariance,
    scalar_autocovariance,
)
from .null_moments import EmbeddingCorrelation, Model, ScalarCovSeq

STATISTICS = ("B1_iid", "B1_colored", "B2")
COVARIANCE_SOURCES = ("plug-in", "known")
CSV_COLUMNS = ("scenario", "statistic", "alpha", "rate", "se", "M", "N", "seed")
MAX_FAILURE_FRACTION = 0.01


def _version() -> str:
    from . import __version__

    return __version__


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    Parameters
    ----------
    spec : ProcessSpec
        Process generated in every replication.
    M, N : int
        Replications and record length (embedded samples for embedded specs).
    alphas : tuple of float
        Significance levels tallied.
    statistics : tuple of str
        Subset of ``("B1_iid", "B1_colored", "B2")``, all evaluated on the same record.
    seed : int
        Base seed; replication ``r`` uses stream ``stream_offset + r``.
    covariance : {"plug-in", "known"}
        Null moments from the record itself or from the analytic model (Gaussian specs).
    marginal : int
        Component used by the scalar statistics (negative counts from the end).
    """

    spec: ProcessSpec
    M: int = 500
    N: int = 1000
    alphas: tuple = (0.05, 0.10)
    statistics: tuple = STATISTICS
    seed: int = 0
    scenario: str = ""
    covariance: str = "plug-in"
    max_lag: object = "auto"
    marginal: int = -1
    stream_offset: int = 0
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "statistics", tuple(self.statistics))
        if isinstance(self.spec, dict):
            object.__setattr__(self, "spec", ProcessSpec.from_dict(self.spec))
        if self.M < 1 or self.N < 2:
            raise ValueError("need M >= 1 and N >= 2")
        if not all(0 < a < 1 for a in self.alphas):
            raise ValueError(f"alphas must lie in (0, 1), got {self.alphas}")
        unknown = set(self.statistics) - set(STATISTICS)
        if unknown:
            raise ValueError(f"unknown statistics {sorted(unknown)}; choose from {STATISTICS}")
        if self.covariance not in COVARIANCE_SOURCES:
            raise ValueError(f"covariance must be one of {COVARIANCE_SOURCES}")
        if self.covariance == "known" and not self.spec.is_gaussian:
            raise ValueError("a known covariance model needs a Gaussian process spec")
        if "B2" in self.statistics and self.spec.dimension != 2:
            raise ValueError("B2 needs a bivariate process")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spec"] = self.spec.to_dict()
        d["alphas"] = list(self.alphas)
        d["statistics"] = list(self.statistics)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise ValueError(f"unknown experiment config fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _known_models(cfg: ExperimentConfig):
    """Analytic covariance models for the scalar and bivariate statistics."""
    spec, n = cfg.spec, cfg.N
    if spec.family is Family.EMBEDDED:
        c = scalar_autocovariance(spec.inner, (n - 1) * spec.delta + 1)
        corr = EmbeddingCorrelation(c, spec.delta)
        scalar = ScalarCovSeq.from_lags(c[:: spec.delta])
        return scalar, corr
    cov = model_covariance(spec, n - 1)
    a = cfg.marginal % spec.dimension
    scalar = ScalarCovSeq.from_lags(cov.lags[:, a, a])
    return scalar, (cov if spec.dimension == 2 else None)


def replicate(cfg: ExperimentConfig, r: int, models=None) -> dict | None:
    """Run every requested statistic on replication ``r``.

    Returns ``{statistic: (t, p_value)}``, or ``None`` if the record is degenerate.
    """
    rng = SeededRng(cfg.seed, cfg.stream_offset + r).generator()
    spec = cfg.spec
    y = None
    try:
        if spec.family is Family.EMBEDDED:
            y = generate(spec.inner, embedded_source_length(spec, cfg.N), rng).data[0]
            x = embed(y, spec.delta, 2, cfg.N)
        else:
            x = generate(spec, cfg.N, rng)
        z = x.component(cfg.marginal % x.p)
        scalar_model, joint_model = models if models is not None else (None, None)
        out = {}
        for stat in cfg.statistics:
            if stat == "B1_iid":
                rep = run_test(z, Model.IID)
            elif stat == "B1_colored":
                rep = run_test(z, Model.SCALAR_COLORED, max_lag=cfg.max_lag, known_cov=scalar_model)
            elif y is not None:
                rep = run_test(y, Model.EMBEDDED_BIVARIATE, max_lag=cfg.max_lag,
                               known_cov=joint_model, delta=spec.delta)
            else:
                rep = run_test(x, Model.BIVARIATE_COLORED, max_lag=cfg.max_lag, known_cov=joint_model)
            out[stat] = (rep.t, rep.p_value)
        return out
    except MardiaError:
        return None


def _replicate_range(cfg: ExperimentConfig, bounds: tuple[int, int]) -> list:
    models = _known_models(cfg) if cfg.covariance == "known" else None
    return [replicate(cfg, r, models) for r in range(*bounds)]


@dataclass(frozen=True)
class ReplicationResults:
    """Per-replication standardized statistics and p-values of one experiment."""

    config: ExperimentConfig
    t: dict
    p_values: dict
    failures: int


def run_replications(cfg: ExperimentConfig) -> ReplicationResults:
    """Run all replications, in parallel when ``cfg.workers > 1``.

    Every replication draws from its own stream, so the outcome does not depend
    on the worker count.
    """
    if cfg.workers > 1:
        step = math.ceil(cfg.M / (4 * cfg.workers))
        chunks = [(s, min(s + step, cfg.M)) for s in range(0, cfg.M, step)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(partial(_replicate_range, cfg), chunks))
        results = [r for part in parts for r in part]
    else:
        results = _replicate_range(cfg, (0, cfg.M))
    ok = [r for r in results if r is not None]
    failures = len(results) - len(ok)
    if failures > MAX_FAILURE_FRACTION * cfg.M:
        raise ReplicationFailure(f"{failures} of {cfg.M} replications failed "
                                 f"(limit {MAX_FAILURE_FRACTION:.0%})")
    t = {s: np.array([r[s][0] for r in ok]) for s in cfg.statistics}
    p = {s: np.array([r[s][1] for r in ok]) for s in cfg.statistics}
    return ReplicationResults(cfg, t, p, failures)


@dataclass(frozen=True)
class RejectionRow:
    scenario: str
    statistic: str
    alpha: float
    rate: float
    se: float
    M: int
    N: int
    seed: int
    snr_db: float | None = None


def _rows_from(res: ReplicationResults, snr_db: float | None = None) -> list[RejectionRow]:
    cfg = res.config
    rows = []
    for stat in cfg.statistics:
        p = res.p_values[stat]
        m = p.size
        for a in cfg.alphas:
            rate = float(np.count_nonzero(p < a)) / m
            rows.append(RejectionRow(cfg.scenario, stat, a, rate, math.sqrt(rate * (1 - rate) / m),
                                     m, cfg.N, cfg.seed, snr_db))
    return rows


@dataclass(frozen=True)
class RejectionTable:
    """Empirical rejection rates with binomial standard errors."""

    rows: tuple
    config: dict = field(default_factory=dict)
    seed: int = 0
    failures: dict = field(default_factory=dict)

    def rate(self, scenario: str, statistic: str, alpha: float) -> float:
        return self.row(scenario, statistic, alpha).rate

    def row(self, scenario: str, statistic: str, alpha: float) -> RejectionRow:
        for r in self.rows:
            if r.scenario == scenario and r.statistic == statistic and math.isclose(r.alpha, alpha):
                return r
        raise KeyError((scenario, statistic, alpha))

    def records(self) -> list[dict]:
        keys = CSV_COLUMNS + (("snr_db",) if any(r.snr_db is not None for r in self.rows) else ())
        return [{k: getattr(r, k) for k in keys} for r in self.rows]

    def format(self) -> str:
        """Plain-text table: one line per scenario and statistic."""
        alphas = sorted({r.alpha for r in self.rows})
        head = f"{'scenario':<24}{'statistic':<12}" + "".join(f"a={a:<10g}" for a in alphas)
        lines = [head]
        seen = []
        for r in self.rows:
            key = (r.scenario, r.statistic)
            if key in seen:
                continue
            seen.append(key)
            cells = "".join(f"{self.rate(r.scenario, r.statistic, a):<12.4f}" for a in alphas)
            lines.append(f"{r.scenario:<24}{r.statistic:<12}{cells}")
        return "\n".join(lines)


def run_rejection_experiment(cfg: ExperimentConfig) -> RejectionTable:
    """Tally ``p < alpha`` over ``cfg.M`` replications for each statistic and level."""
    res = run_replications(cfg)
    return RejectionTable(tuple(_rows_from(res)), {"experiments": [cfg.to_dict()]}, cfg.seed,
                          {cfg.scenario: res.failures})


def table1_specs(coupling: str = "conditional", a: float = 0.8) -> dict[str, ProcessSpec]:
    """Gaussian, Clayton and Gumbel copula scenarios with AR(1) marginals."""
    return {
        "gaussian-r12=0.8": ProcessSpec(Family.GAUSSIAN_COPULA, a=a, r12=0.8, coupling=coupling),
        "clayton-theta=2": ProcessSpec(Family.CLAYTON_COPULA, a=a, theta=2.0, coupling=coupling),
        "gumbel-theta=5": ProcessSpec(Family.GUMBEL_COPULA, a=a, theta=5.0, coupling=coupling),
    }


def run_table1(M: int = 500, N: int = 1000, seed: int = 0, alphas=(0.05, 0.10), *,
               coupling: str = "conditional", covariance: str = "plug-in",
               max_lag="auto", workers: int = 1) -> RejectionTable:
    """Rejection rates of the three statistics on the three copula scenarios."""
    rows, configs, failures = [], [], {}
    for i, (name, spec) in enumerate(table1_specs(coupling).items()):
        cov = covariance if spec.is_gaussian else "plug-in"
        cfg = ExperimentConfig(spec, M, N, tuple(alphas), STATISTICS, seed, name, cov, max_lag,
                               stream_offset=i * M, workers=workers)
        res = run_replications(cfg)
        rows.extend(_rows_from(res))
        configs.append(cfg.to_dict())
        failures[name] = res.failures
    return RejectionTable(tuple(rows), {"experiments": configs}, seed, failures)


@dataclass(frozen=True)
class DetectionCurve(RejectionTable):
    """Rejection rate versus SNR for the detection scenario."""

    def series(self, statistic: str, alpha: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.rows if r.statistic == statistic
                and (alpha is None or math.isclose(r.alpha, alpha))]
        rows.sort(key=lambda r: r.snr_db)
        return np.array([r.snr_db for r in rows]), np.array([r.rate for r in rows])

    def half_power_snr(self, statistic: str, alpha: float | None = None) -> float:
        """SNR at which the curve first reaches 0.5 (linear interpolation), ``inf`` if never."""
        snr, rate = self.series(statistic, alpha)
        above = np.nonzero(rate >= 0.5)[0]
        if above.size == 0:
            return math.inf
        k = above[0]
        if k == 0:
            return float(snr[0])
        x0, x1, r0, r1 = snr[k - 1], snr[k], rate[k - 1], rate[k]
        return float(x0 + (0.5 - r0) * (x1 - x0) / (r1 - r0))


def detection_spec(snr_db: float, delta: int = 2) -> ProcessSpec:
    inner = ProcessSpec(Family.DETECTION_MIXTURE, snr_db=float(snr_db))
    return ProcessSpec(Family.EMBEDDED, delta=delta, inner=inner)


def run_detection_curve(snr_grid, replications: int = 200, alpha: float = 0.05, N: int = 1000,
                        seed: int = 0, *, delta: int = 2, max_lag="auto",
                        workers: int = 1) -> DetectionCurve:
    """Rejection rates of all three statistics across an SNR grid.

    Each grid point uses its own block of replication streams.
    """
    grid = [float(s) for s in snr_grid]
    if not grid:
        raise ValueError("SNR grid is empty")
    rows, configs, failures = [], [], {}
    for g, snr in enumerate(grid):
        name = f"snr={snr:.3f}dB"
        cfg = ExperimentConfig(detection_spec(snr, delta), replications, N, (alpha,), STATISTICS,
                               seed, name, "plug-in", max_lag, stream_offset=g * replications,
                               workers=workers)
        res = run_replications(cfg)
        rows.extend(_rows_from(res, snr))
        configs.append(cfg.to_dict())
        failures[name] = res.failures
    return DetectionCurve(tuple(rows), {"experiments": configs}, seed, failures)


def write_results(table: RejectionTable, path, fmt: str | None = None) -> None:
    """Write a rejection table or detection curve as CSV or JSON.

    The format defaults to the file extension. Output depends only on the
    table contents, so reruns with the same configuration are byte-identical.
    """
    fmt = (fmt or os.path.splitext(os.fspath(path))[1].lstrip(".") or "csv").lower()
    try:
        if fmt == "csv":
            records = table.records()
            with open(path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(records[0]), lineterminator="\n")
                w.writeheader()
                for rec in records:
                    w.writerow({k: _csv_value(v) for k, v in rec.items()})
        elif fmt == "json":
            doc = {
                "config": table.config,
                "results": table.records(),
                "seed": table.seed,
                "version": _version(),
            }
            with open(path, "w") as fh:
                fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        else:
            raise ValueError(f"unknown output format {fmt!r}; use csv or json")
    except OSError as exc:
        raise OSError(f"cannot write results to {os.fspath(path)!r}: {exc}") from exc


def _csv_value(v):
    return repr(v) if isinstance(v, float) else v


def read_results(path, fmt: str | None = None) -> RejectionTable:
    """Read back a table written by :func:`write_results`."""
    fmt = (fmt or os.path.splitext(os.fspath(path))[1].lstrip(".") or "csv").lower()
    if fmt == "json":
        with open(path) as fh:
            doc = json.load(fh)
        records, config, seed = doc["results"], doc["config"], doc["seed"]
    else:
        with open(path, newline="") as fh:
            records = list(csv.DictReader(fh))
        config, seed = {}, int(records[0]["seed"]) if records else 0
    rows = tuple(
        RejectionRow(
            scenario=str(r["scenario"]),
            statistic=str(r["statistic"]),
            alpha=float(r["alpha"]),
            rate=float(r["rate"]),
            se=float(r["se"]),
            M=int(r["M"]),
            N=int(r["N"]),
            seed=int(r["seed"]),
            snr_db=float(r["snr_db"]) if r.get("snr_db") not in (None, "") else None,
        )
        for r in records
    )
    cls = DetectionCurve if any(r.snr_db is not None for r in rows) else RejectionTable
    return cls(rows, config, seed)

