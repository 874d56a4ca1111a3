"""
Self-checks comparing the estimators and samplers against independent
reference computations. Each check draws from its own fixed stream, so a
build either passes or fails the suite deterministically.
"""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy.stats import norm

from .censoring import NamingPreference, censor_hard
from .inference import DesignMatrix, fit_ols
from .netgen import (
    GenParams,
    Sociomatrix,
    TraitVector,
    edge_probability,
    generate_network,
    latent_edge_means,
    sample_gregariousness,
    sample_traits,
)
from .trait_process import EvolveParams, PivotContagion, evolve, reparameterize_pivot
from .util import derive_stream

ORACLE_SEED = 20100101

OLS_TOLERANCE = 1e-8
MC_STANDARD_ERRORS = 3.0


class CheckResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    passed: bool
    detail: str


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def check_ols(rng: np.random.Generator, instances: int = 100) -> CheckResult:
    """
    Least squares against a direct normal-equations solve on random
    full-rank designs with 10 to 50 rows.
    """
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(10, 51))
        g = np.column_stack([np.ones(n), rng.standard_normal((n, 3))])
        y = rng.standard_normal(n)
        fit = fit_ols(DesignMatrix(values=g), TraitVector(values=y))

        gram = g.T @ g
        coef = np.linalg.solve(gram, g.T @ y)
        resid = y - g @ coef
        sigma2 = resid @ resid / (n - g.shape[1])
        se = np.sqrt(sigma2 * np.diag(np.linalg.inv(gram)))
        worst = max(
            worst,
            _relative_error(fit.estimates, coef),
            _relative_error(fit.std_errors, se),
        )
    return CheckResult(
        name="ols-normal-equations",
        passed=bool(worst <= OLS_TOLERANCE),
        detail=f"max relative error {worst:.3g} over {instances} fits",
    )


def check_edge_probability(
    rng: np.random.Generator, draws: int = 10_000
) -> CheckResult:
    """
    Frequency of Z_ij >= omega in repeated latent draws on a fixed 5-node
    instance against the normal tail probability, pair by pair. The worst
    pair must lie within the per-pair limit that keeps the chance of any of
    the 20 pairs failing at the two-sided 3-SE level.
    """
    p = GenParams(n=5, sigma_h=1.0, h=0.5, r_in=0.3, r_out=0.2, target_mean_outdegree=2)
    y0 = sample_traits(p.n, rng)
    alpha = sample_gregariousness(p.n, p.sigma_h, rng)
    omega = 0.5

    means = latent_edge_means(y0, alpha, p)
    z = means[None, :, :] + p.latent_sd * rng.standard_normal((draws, p.n, p.n))
    off = ~np.eye(p.n, dtype=bool)
    pairs = list(zip(*np.nonzero(off), strict=True))
    frequencies = (z[:, off] >= omega).mean(axis=0)

    probs = np.array(
        [
            edge_probability(alpha.values[i], y0.values[i], y0.values[j], p, omega)
            for i, j in pairs
        ]
    )
    se = np.sqrt(probs * (1 - probs) / draws)
    z_scores = np.abs(frequencies - probs) / se
    limit = float(norm.isf(norm.sf(MC_STANDARD_ERRORS) / len(pairs)))
    worst = int(np.argmax(z_scores))
    i, j = pairs[worst]
    return CheckResult(
        name="edge-probability",
        passed=bool(z_scores[worst] <= limit),
        detail=(
            f"worst pair ({i}, {j}) {frequencies[worst]:.4f} vs "
            f"{probs[worst]:.4f} ({z_scores[worst]:.2f} SE, limit {limit:.2f})"
        ),
    )


def check_pivot(rng: np.random.Generator) -> CheckResult:
    """
    A pivot-3 contagion run and its zero-pivot reparameterization give equal
    outputs, both without noise and with a shared noise stream.
    """
    p = GenParams(n=10, target_mean_outdegree=3)
    y0 = sample_traits(p.n, rng)
    alpha = sample_gregariousness(p.n, 0.0, rng)
    w, _ = generate_network(y0, alpha, p, rng)

    d = 3.0
    mu, beta, delta = reparameterize_pivot(1.0, 2.0, 0.5, d)
    identical = True
    for sigma_eps in (0.0, 1.0):
        pivot = EvolveParams(
            mu=1.0, gamma=0.4, beta=2.0, delta=0.5, sigma_eps=sigma_eps
        )
        zero = EvolveParams(
            mu=mu, gamma=0.4, beta=beta, delta=delta, sigma_eps=sigma_eps
        )
        noise_seed = int(rng.integers(0, 2**63))
        a = evolve(y0, w, pivot, PivotContagion(d=d), derive_stream(noise_seed))
        b = evolve(y0, w, zero, PivotContagion(d=0.0), derive_stream(noise_seed))
        identical = identical and bool(np.array_equal(a.values, b.values))
    return CheckResult(
        name="pivot-equivalence",
        passed=identical,
        detail="outputs identical" if identical else "outputs differ",
    )


def check_inclusion(
    rng: np.random.Generator,
    draws: int = 100_000,
    alters: int = 5,
    k: int = 2,
    block: int = 200,
) -> CheckResult:
    """
    Under uniform naming each of an ego's alters is kept with probability
    k / alters. Egos are simulated ``block`` at a time as disjoint stars.
    """
    size = alters + 1
    star = np.zeros((size, size), dtype=np.int8)
    star[0, 1:] = 1
    w = Sociomatrix(entries=np.kron(np.eye(block, dtype=np.int8), star))
    y0 = TraitVector(values=np.zeros(w.n))
    egos = np.arange(block) * size
    columns = egos[:, None] + np.arange(1, size)[None, :]

    rounds = math.ceil(draws / block)
    counts = np.zeros(alters, dtype=np.int64)
    for _ in range(rounds):
        x = censor_hard(w, k, NamingPreference(), y0, rng)
        counts += x.entries[egos[:, None], columns].sum(axis=0)

    total = rounds * block
    expected = k / alters
    se = math.sqrt(expected * (1 - expected) / total)
    z_scores = (counts / total - expected) / se
    worst = float(np.max(np.abs(z_scores)))
    return CheckResult(
        name="inclusion-probability",
        passed=bool(worst <= MC_STANDARD_ERRORS),
        detail=f"worst alter {worst:.2f} SE from {expected:g} over {total} egos",
    )


CHECKS: dict[str, Callable[[np.random.Generator], CheckResult]] = {
    "ols-normal-equations": check_ols,
    "edge-probability": check_edge_probability,
    "pivot-equivalence": check_pivot,
    "inclusion-probability": check_inclusion,
}


def run_oracles(seed: int = ORACLE_SEED) -> list[CheckResult]:
    "Runs every check, each on the stream derived from (seed, check index)"
    return [
        check(derive_stream(seed, i)) for i, check in enumerate(CHECKS.values())
    ]


def format_results(results: list[CheckResult]) -> str:
    table = pd.DataFrame(
        {
            "check": [r.name for r in results],
            "result": ["pass" if r.passed else "FAIL" for r in results],
            "detail": [r.detail for r in results],
        }
    )
    return table.to_string(index=False)
