"""
Replicated censoring experiments: scenario sampling, the per-replication
pipeline, the parallel driver, record files and stratified summaries.
"""

from __future__ import annotations

import hashlib
import os
import sys
import warnings
from collections.abc import Callable
from pathlib import Path
from typing import Any, TypeAlias, TypedDict

import numpy as np
import orjson
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from scipy.stats import spearmanr

import censornet

from .censoring import CensorScheme, Fractional, Hard, censor
from .config import RANDOMIZED, ExperimentConfig, ParameterRange, StrataConfig
from .errors import CensornetError, InvalidConfigError, InvalidInputError
from .inference import (
    build_design,
    covered,
    deflate_delta,
    fit_ols,
    t_quantile,
    t_statistic,
)
from .netgen import (
    GenParams,
    Sociomatrix,
    TraitVector,
    generate_network,
    sample_gregariousness,
    sample_traits,
)
from .trait_process import EvolveParams, ModelSpec, evolve, expected_trait
from .util import (
    COEFFICIENTS,
    SEED_LIMIT,
    derive_stream,
    draw_seed,
    stage_streams,
    thread_count,
)

# attempts at redrawing (r_in, r_out) before giving up on r_in**2 + r_out**2 < 1
MAX_RESAMPLE = 1000

COVERAGE_LEVELS = (0.5, 0.95, 0.99)
HISTOGRAM_BINS = 81
HISTOGRAM_RANGE = (-8.0, 8.0)

# estimates this close to the truth count as exact recovery
EXACT_TOLERANCE = 1e-10

SCENARIO_COLUMNS = [
    "replication_id",
    "seed",
    "status",
    "error_code",
    "scheme",
    "model",
    "n",
    "target_mean_outdegree",
    "sigma_h",
    "h",
    "r_in",
    "r_out",
    "mu",
    "gamma",
    "beta",
    "delta",
    "sigma_eps",
]
REALIZED_COLUMNS = [
    "omega",
    "mean_outdeg_true",
    "mean_outdeg_censored",
    "zero_namers",
    "intercept_target",
    "regime",
]
FIT_COLUMNS = (
    [f"{c}_hat" for c in COEFFICIENTS]
    + [f"{c}_se" for c in COEFFICIENTS]
    + [f"{c}_identifiable" for c in COEFFICIENTS]
    + ["rank", "residual_df", "sigma_hat", "max_leverage"]
)
TEST_COLUMNS = [f"{c}_t" for c in COEFFICIENTS] + [
    f"{c}_covered_95" for c in COEFFICIENTS
]
RECORD_COLUMNS = [
    *SCENARIO_COLUMNS,
    *REALIZED_COLUMNS,
    *FIT_COLUMNS,
    *TEST_COLUMNS,
    "deflated_delta",
]

# One row of the records file, keyed by RECORD_COLUMNS; None marks an absent
# value.
ReplicationRecord: TypeAlias = dict[str, Any]


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    gen: GenParams
    evolve: EvolveParams
    spec: ModelSpec
    scheme: CensorScheme
    seed: int = Field(ge=0, lt=SEED_LIMIT)


def _draw_parameter(
    rng: np.random.Generator, value_range: ParameterRange, zero_probability: float
) -> float:
    if rng.random() < zero_probability:
        return 0.0
    return float(rng.uniform(value_range.low, value_range.high))


def sample_scenario(config: ExperimentConfig, rng: np.random.Generator) -> Scenario:
    """
    Draws one scenario: each randomized parameter is zero with its configured
    probability (one half by default) and otherwise uniform on its range;
    (r_in, r_out) are redrawn together until r_in**2 + r_out**2 < 1. The node
    count and the censoring scheme are drawn uniformly from the configured
    lists.
    """
    ranges = config.parameters
    values = {
        name: _draw_parameter(rng, getattr(ranges, name), config.zero_chance(name))
        for name in RANDOMIZED
    }
    for _ in range(MAX_RESAMPLE):
        if values["r_in"] ** 2 + values["r_out"] ** 2 < 1:
            break
        for name in ("r_in", "r_out"):
            values[name] = _draw_parameter(
                rng, getattr(ranges, name), config.zero_chance(name)
            )
    else:
        raise InvalidConfigError(
            f"Could not draw r_in, r_out with r_in**2 + r_out**2 < 1 in "
            f"{MAX_RESAMPLE} attempts"
        )

    n = int(config.node_counts[rng.integers(len(config.node_counts))])
    scheme = config.schemes[rng.integers(len(config.schemes))]
    return Scenario(
        gen=GenParams(
            n=n,
            sigma_h=values["sigma_h"],
            h=values["h"],
            r_in=values["r_in"],
            r_out=values["r_out"],
            target_mean_outdegree=config.target_mean_outdegree,
        ),
        evolve=EvolveParams(
            mu=config.mu,
            gamma=values["gamma"],
            beta=values["beta"],
            delta=values["delta"],
            sigma_eps=config.sigma_eps,
        ),
        spec=config.model,
        scheme=scheme,
        seed=draw_seed(rng),
    )


def _scenario_fields(s: Scenario, replication_id: int) -> ReplicationRecord:
    record: ReplicationRecord = dict.fromkeys(RECORD_COLUMNS)
    record.update(
        replication_id=replication_id,
        seed=s.seed,
        status="ok",
        scheme=s.scheme.label,
        model=s.spec.label,
        n=s.gen.n,
        target_mean_outdegree=s.gen.target_mean_outdegree,
        sigma_h=s.gen.sigma_h,
        h=s.gen.h,
        r_in=s.gen.r_in,
        r_out=s.gen.r_out,
        mu=s.evolve.mu,
        gamma=s.evolve.gamma,
        beta=s.evolve.beta,
        delta=s.evolve.delta,
        sigma_eps=s.evolve.sigma_eps,
    )
    return record


def _error_code(e: Exception) -> str:
    if isinstance(e, CensornetError):
        return e.code
    if isinstance(e, ValidationError):
        return InvalidInputError.code
    return "numeric"


def strict_regime(delta_identifiable: bool, zero_namers: int) -> str:
    """
    Outcome family under a hard naming limit: the outdegree column collapses
    (unidentifiable), one or two egos naming nobody carry the outdegree
    effect (dominated), or the outdegree column has broader support
    (balanced).
    """
    if not delta_identifiable:
        return "unidentifiable"
    return "dominated" if 1 <= zero_namers <= 2 else "balanced"


def realize_networks(
    s: Scenario, streams: dict[str, np.random.Generator] | None = None
) -> tuple[TraitVector, Sociomatrix, float, Sociomatrix]:
    """
    Prior traits, true network, threshold and censored network of scenario
    ``s``, exactly as :func:`run_replication` draws them.
    """
    streams = streams or stage_streams(s.seed)
    y0 = sample_traits(s.gen.n, streams["traits"])
    alpha = sample_gregariousness(s.gen.n, s.gen.sigma_h, streams["gregariousness"])
    w, omega = generate_network(y0, alpha, s.gen, streams["network"])
    x = censor(w, s.scheme, y0, streams["censor"])
    return y0, w, omega, x


def run_replication(s: Scenario, replication_id: int = 0) -> ReplicationRecord:
    """
    Runs one replication: traits, gregariousness, true network, evolution,
    censoring and the apparent-model fit. Fully determined by ``s.seed``;
    each stage draws from its own stream, so the same seed under a different
    scheme censors the same true network.

    Errors from any stage produce a row with ``status="failed"`` and an
    ``error_code`` rather than an exception.
    """
    record = _scenario_fields(s, replication_id)
    streams = stage_streams(s.seed)
    try:
        y0, w, omega, x = realize_networks(s, streams)
        y1 = evolve(y0, w, s.evolve, s.spec, streams["evolve"])
        fit = fit_ols(build_design(y0, x), y1)
        intercept_target = float(expected_trait(y0, w, s.evolve, s.spec).mean())
    except (
        CensornetError,
        ValidationError,
        np.linalg.LinAlgError,
        FloatingPointError,
    ) as e:
        record.update(status="failed", error_code=_error_code(e))
        return record

    zero_namers = int((x.outdegree == 0).sum())
    record.update(
        omega=omega,
        mean_outdeg_true=w.mean_outdegree,
        mean_outdeg_censored=x.mean_outdegree,
        zero_namers=zero_namers,
        intercept_target=intercept_target,
        rank=fit.rank,
        residual_df=fit.residual_df,
        sigma_hat=fit.sigma_hat,
        max_leverage=fit.max_leverage,
    )
    if isinstance(s.scheme, Hard):
        record["regime"] = strict_regime(fit.is_identifiable("delta"), zero_namers)

    truths = {
        "mu": intercept_target,
        "gamma": s.evolve.gamma,
        "beta": s.evolve.beta,
        "delta": s.evolve.delta,
    }
    for c in COEFFICIENTS:
        record[f"{c}_identifiable"] = int(fit.is_identifiable(c))
        if not fit.is_identifiable(c):
            continue
        estimate, se = fit.estimate(c), fit.std_error(c)
        record[f"{c}_hat"] = estimate
        record[f"{c}_se"] = se
        if abs(estimate - truths[c]) <= EXACT_TOLERANCE * max(1.0, abs(truths[c])):
            # noise-free fits recover the truth to rounding error
            record[f"{c}_t"] = 0.0
            record[f"{c}_covered_95"] = 1
        elif se > 0:
            record[f"{c}_t"] = t_statistic(estimate, truths[c], se)
            record[f"{c}_covered_95"] = int(
                covered(estimate, truths[c], se, fit.residual_df, 0.95)
            )

    if isinstance(s.scheme, Fractional) and fit.is_identifiable("delta"):
        record["deflated_delta"] = deflate_delta(
            fit.estimate("delta"), x.mean_outdegree, w.mean_outdegree
        )
    return record


def replication_scenario(config: ExperimentConfig, replication_id: int) -> Scenario:
    "Scenario of replication ``replication_id``, from its own derived stream"
    return sample_scenario(config, derive_stream(config.master_seed, replication_id))


def _replicate(config: ExperimentConfig, replication_id: int) -> ReplicationRecord:
    try:
        s = replication_scenario(config, replication_id)
    except (CensornetError, ValidationError) as e:
        # no scenario could be drawn, so only the identity and error are known
        record: ReplicationRecord = dict.fromkeys(RECORD_COLUMNS)
        record.update(
            replication_id=replication_id, status="failed", error_code=_error_code(e)
        )
        return record
    return run_replication(s, replication_id)


def records_frame(records: list[ReplicationRecord]) -> pd.DataFrame:
    "Records as a table in the fixed column order, sorted by replication_id"
    frame = pd.DataFrame.from_records(records, columns=RECORD_COLUMNS)
    return frame.sort_values("replication_id", kind="stable").reset_index(drop=True)


def run_experiment(
    config: ExperimentConfig,
    n_jobs: int | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> pd.DataFrame:
    """
    Runs ``config.replications`` replications.

    Replication r draws its scenario from a stream derived from
    (master_seed, r), so the output does not depend on the number of workers
    or on the order replications finish in.

    Parameters
    ----------
    config: ExperimentConfig
        Experiment definition.
    n_jobs: int, optional
        Worker processes; defaults to CENSORNET_THREADS (or 1).
    progress: callable, optional
        Called as ``progress(done, total)`` after each replication.

    Returns
    -------
    pd.DataFrame
        One row per replication in RECORD_COLUMNS order.
    """
    n_jobs = n_jobs or thread_count()
    total = config.replications
    results = Parallel(n_jobs=n_jobs, return_as="generator")(
        delayed(_replicate)(config, r) for r in range(total)
    )
    records = []
    for record in results:
        records.append(record)
        if progress is not None:
            progress(len(records), total)

    frame = records_frame(records)
    failed = int((frame["status"] != "ok").sum())
    if failed:
        codes = frame.loc[frame["status"] != "ok", "error_code"].value_counts()
        warnings.warn(
            f"{failed} of {total} replications failed: {codes.to_dict()}",
            UserWarning,
            stacklevel=2,
        )
    return frame


# records files -------------------------------------------------------------


class RecordsMetadata(TypedDict):
    N: int
    generator: str
    master_seed: int
    checksum: str


def checksum(file: str | Path) -> str:
    "Calculate the SHA-256 checksum of a file"
    h = hashlib.sha256()
    with open(file, "rb") as fp:
        while True:
            data = fp.read(4096)
            if len(data) == 0:
                break
            h.update(data)
    return h.hexdigest()


def write_records(frame: pd.DataFrame, path: str | Path):
    """
    Writes the records CSV. Output goes to ``<path>.partial`` first and is
    renamed once complete, so a leftover ``.partial`` file marks an
    interrupted write.
    """
    path = Path(path)
    partial = path.with_name(path.name + ".partial")
    frame.to_csv(
        partial,
        index=False,
        float_format="%.17g",
        na_rep="",
        lineterminator="\n",
        encoding="utf-8",
    )
    os.replace(partial, path)


def generate_metadata(records_path: str | Path, frame: pd.DataFrame, master_seed: int):
    return RecordsMetadata(
        N=len(frame),
        generator=f"censornet/{censornet.__version__}",
        master_seed=master_seed,
        checksum=checksum(records_path),
    )


def write_metadata(metadata: RecordsMetadata, metadata_path: Path):
    metadata_text = f"""[metadata]
N = {metadata['N']}
generator = "{metadata['generator']}"
master_seed = {metadata['master_seed']}
checksum = "{metadata['checksum']}"
"""
    metadata_path.write_text(metadata_text, encoding="utf-8")


def read_records(path: str | Path) -> pd.DataFrame:
    """
    Reads a records CSV.

    Raises
    ------
    OSError
        The file cannot be read.
    InvalidInputError
        The file has no records or lacks required columns.
    """
    try:
        # only empty fields are missing values; scheme labels such as "none"
        # stay strings
        frame = pd.read_csv(
            path,
            dtype={"scheme": str, "model": str, "regime": str},
            keep_default_na=False,
            na_values=[""],
            float_precision="round_trip",
        )
    except pd.errors.EmptyDataError as e:
        raise InvalidInputError(f"{path} is empty") from e
    missing = [c for c in RECORD_COLUMNS if c not in frame.columns]
    if missing:
        raise InvalidInputError(f"{path} is missing columns {missing}")
    if frame.empty:
        raise InvalidInputError(f"{path} contains no records")
    return frame


# summaries ---------------------------------------------------------------


class CoefficientSummary(TypedDict):
    count: int
    unidentifiable: int
    mean: float | None
    mean_se: float | None
    bias: float | None
    sd: float | None
    slope_through_origin: float | None
    slope: float | None
    intercept: float | None
    coverage: dict[str, float | None]
    abs_rank_correlation: dict[str, float | None]
    t_histogram: dict[str, list]


class StratumSummary(TypedDict):
    count: int
    coefficients: dict[str, CoefficientSummary]
    regimes: dict[str, int]
    sign_quadrants: dict[str, int]


class Summary(TypedDict):
    total: int
    failed: int
    strata: dict[str, StratumSummary]


def heterogeneity_band(sigma_h: pd.Series, strata: StrataConfig) -> pd.Series:
    bands = np.where(
        sigma_h == 0, "zero", np.where(sigma_h < strata.het_high, "low", "high")
    )
    return pd.Series(bands, index=sigma_h.index)


def homophily_band(h: pd.Series) -> pd.Series:
    bands = np.where(h < 0, "negative", np.where(h > 0, "positive", "zero"))
    return pd.Series(bands, index=h.index)


def stratum_key(scheme: str, het: str, hom: str) -> str:
    return f"scheme={scheme}|het={het}|hom={hom}"


def _none_if_nan(value) -> float | None:
    value = float(value)
    return None if np.isnan(value) else value


def inflation_slopes(
    truth: np.ndarray, estimate: np.ndarray
) -> tuple[float | None, float | None, float | None]:
    """
    Least-squares slope of estimate on truth, through the origin and with an
    intercept. Returns (slope_through_origin, slope, intercept); a slope is
    None when the truths give it no support.
    """
    origin = slope = intercept = None
    ss = float(truth @ truth)
    if ss > 0:
        origin = float(truth @ estimate) / ss
    if truth.size >= 2 and np.ptp(truth) > 0:
        g = np.column_stack([np.ones(truth.size), truth])
        (intercept, slope), *_ = np.linalg.lstsq(g, estimate, rcond=None)
        intercept, slope = float(intercept), float(slope)
    return origin, slope, intercept


def empirical_coverage(
    t_stats: np.ndarray, df: np.ndarray, levels=COVERAGE_LEVELS
) -> dict[str, float | None]:
    "Fraction of |t| within the two-sided t critical value, per level"
    if t_stats.size == 0:
        return {f"{level:g}": None for level in levels}
    df = df.astype(int)
    coverage = {}
    for level in levels:
        critical = np.array([t_quantile(level, int(d)) for d in df])
        coverage[f"{level:g}"] = float(np.mean(np.abs(t_stats) <= critical))
    return coverage


def abs_rank_correlation(
    truth: np.ndarray, estimate: np.ndarray
) -> dict[str, float | None]:
    """
    Spearman correlation of |truth| and |estimate| with a one-sided p-value.
    A positive value with estimates centered on zero is the "cone" pattern.
    """
    x, y = np.abs(truth), np.abs(estimate)
    if x.size < 3 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return {"rho": None, "p_value": None}
    result = spearmanr(x, y, alternative="greater")
    return {
        "rho": _none_if_nan(result.statistic),
        "p_value": _none_if_nan(result.pvalue),
    }


def t_histogram(t_stats: np.ndarray) -> dict[str, list]:
    counts, edges = np.histogram(t_stats, bins=HISTOGRAM_BINS, range=HISTOGRAM_RANGE)
    return {"bin_edges": edges.tolist(), "counts": counts.tolist()}


def _empty_coefficient(unidentifiable: int = 0) -> CoefficientSummary:
    return CoefficientSummary(
        count=0,
        unidentifiable=unidentifiable,
        mean=None,
        mean_se=None,
        bias=None,
        sd=None,
        slope_through_origin=None,
        slope=None,
        intercept=None,
        coverage={f"{level:g}": None for level in COVERAGE_LEVELS},
        abs_rank_correlation={"rho": None, "p_value": None},
        t_histogram=t_histogram(np.empty(0)),
    )


def summarize_coefficient(
    truth: np.ndarray,
    estimate: np.ndarray,
    t_stats: np.ndarray | None = None,
    df: np.ndarray | None = None,
    unidentifiable: int = 0,
) -> CoefficientSummary:
    """
    Statistics for one coefficient over the identified records of a stratum:
    mean estimate, bias and its sd, inflation slopes, coverage, the "cone"
    rank correlation and the t-statistic histogram.
    """
    if estimate.size == 0:
        return _empty_coefficient(unidentifiable)
    error = estimate - truth
    sd = float(np.std(error, ddof=1)) if error.size > 1 else None
    origin, slope, intercept = inflation_slopes(truth, estimate)
    if t_stats is not None:
        finite = np.isfinite(t_stats)
        coverage = empirical_coverage(t_stats[finite], df[finite])
        histogram = t_histogram(t_stats[finite])
    else:
        coverage = {f"{level:g}": None for level in COVERAGE_LEVELS}
        histogram = t_histogram(np.empty(0))
    return CoefficientSummary(
        count=int(estimate.size),
        unidentifiable=unidentifiable,
        mean=float(estimate.mean()),
        mean_se=(
            float(np.std(estimate, ddof=1) / np.sqrt(estimate.size))
            if estimate.size > 1
            else None
        ),
        bias=float(error.mean()),
        sd=sd,
        slope_through_origin=origin,
        slope=slope,
        intercept=intercept,
        coverage=coverage,
        abs_rank_correlation=abs_rank_correlation(truth, estimate),
        t_histogram=histogram,
    )


def _sign_quadrants(group: pd.DataFrame) -> dict[str, int]:
    both = group[(group["gamma_identifiable"] == 1) & (group["beta_identifiable"] == 1)]
    gamma_sign = np.where(both["gamma_hat"] < 0, "-", "+")
    beta_sign = np.where(both["beta_hat"] < 0, "-", "+")
    labels = pd.Series(
        [g + b for g, b in zip(gamma_sign, beta_sign, strict=True)], dtype=object
    )
    counts = labels.value_counts()
    return {q: int(counts.get(q, 0)) for q in ("--", "-+", "+-", "++")}


def summarize_stratum(group: pd.DataFrame) -> StratumSummary:
    coefficients: dict[str, CoefficientSummary] = {}
    for c in COEFFICIENTS:
        identified = group[group[f"{c}_identifiable"] == 1]
        truth_column = "intercept_target" if c == "mu" else c
        coefficients[c] = summarize_coefficient(
            identified[truth_column].to_numpy(dtype=float),
            identified[f"{c}_hat"].to_numpy(dtype=float),
            identified[f"{c}_t"].to_numpy(dtype=float),
            identified["residual_df"].to_numpy(dtype=float),
            unidentifiable=len(group) - len(identified),
        )
    deflated = group[group["deflated_delta"].notna()]
    if not deflated.empty:
        coefficients["delta_deflated"] = summarize_coefficient(
            deflated["delta"].to_numpy(dtype=float),
            deflated["deflated_delta"].to_numpy(dtype=float),
        )
    regimes = group["regime"].dropna().value_counts()
    return StratumSummary(
        count=len(group),
        coefficients=coefficients,
        regimes={str(k): int(v) for k, v in regimes.items()},
        sign_quadrants=_sign_quadrants(group),
    )


def _empty_stratum() -> StratumSummary:
    return StratumSummary(
        count=0,
        coefficients={c: _empty_coefficient() for c in COEFFICIENTS},
        regimes={},
        sign_quadrants={q: 0 for q in ("--", "-+", "+-", "++")},
    )


def summarize(
    records: pd.DataFrame, strata: StrataConfig | None = None
) -> Summary:
    """
    Summarizes records per stratum (scheme x heterogeneity band x homophily
    band). Failed replications are counted once overall and left out of the
    strata; every combination of the schemes present and the bands is
    reported, with zero counts and absent statistics where empty.

    Parameters
    ----------
    records: pd.DataFrame
        Records as produced by :func:`run_experiment` or :func:`read_records`.
    strata: StrataConfig, optional
        Heterogeneity band threshold.

    Returns
    -------
    Summary
    """
    strata = strata or StrataConfig()
    ok = records[records["status"] == "ok"]
    if ok.empty:
        raise InvalidInputError("No successful replications to summarize")

    het = heterogeneity_band(ok["sigma_h"], strata)
    hom = homophily_band(ok["h"])
    keys = [
        stratum_key(s, a, b)
        for s, a, b in zip(ok["scheme"], het, hom, strict=True)
    ]
    grouped = dict(list(ok.groupby(pd.Series(keys, index=ok.index), sort=True)))

    result: dict[str, StratumSummary] = {}
    empty = 0
    for scheme in sorted(records["scheme"].dropna().astype(str).unique()):
        for a in ("zero", "low", "high"):
            for b in ("negative", "zero", "positive"):
                key = stratum_key(scheme, a, b)
                group = grouped.get(key)
                if group is None:
                    result[key] = _empty_stratum()
                    empty += 1
                else:
                    result[key] = summarize_stratum(group)
    if empty:
        warnings.warn(
            f"{empty} of {len(result)} strata have no successful replications",
            UserWarning,
            stacklevel=2,
        )
    return Summary(total=len(records), failed=len(records) - len(ok), strata=result)


def write_summary(summary: Summary, path: str | Path):
    "Writes the summary as JSON; ``-`` writes to standard output"
    data = orjson.dumps(
        summary,
        option=orjson.OPT_INDENT_2
        | orjson.OPT_SORT_KEYS
        | orjson.OPT_SERIALIZE_NUMPY
        | orjson.OPT_APPEND_NEWLINE,
    )
    if str(path) == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(path).write_bytes(data)
