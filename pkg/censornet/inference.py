"""
Least-squares estimation of the apparent evolution model on the observed
network X:

    Y1_i = mu + gamma (Y0_i - mean(Y0)) + beta c_i + delta (sum_j X_ij - mean)

where c_i is sum_j X_ij (Y0_j - mean(Y0)) centered across egos. Every
non-intercept column sums to zero, so with X = W and a correctly specified
centered model the slopes are exactly (gamma, beta, delta) and the intercept
is the mean of the noise-free Y1.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.stats import t as tdist

from .errors import DegenerateFitError, InvalidInputError
from .netgen import Sociomatrix, TraitVector
from .util import COEFFICIENTS

# a column is dependent when projection onto the retained columns removes all
# but this fraction of its norm
RANK_TOLERANCE = 1e-10


class DesignMatrix(BaseModel):
    """Columns: intercept, autocorr, contagion, outdeg."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, values):
        values = np.array(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(COEFFICIENTS):
            raise ValueError(
                f"a design matrix has {len(COEFFICIENTS)} columns, got shape "
                f"{values.shape}"
            )
        values.setflags(write=False)
        return values

    @property
    def n(self) -> int:
        return self.values.shape[0]


class FitResult(BaseModel):
    """
    OLS output. Coefficients that could not be identified have NaN estimates
    and standard errors and ``identifiable`` False.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    estimates: np.ndarray
    std_errors: np.ndarray
    identifiable: np.ndarray
    residual_df: int
    sigma_hat: float
    rank: int
    max_leverage: float

    def estimate(self, name: str) -> float:
        return float(self.estimates[COEFFICIENTS.index(name)])

    def std_error(self, name: str) -> float:
        return float(self.std_errors[COEFFICIENTS.index(name)])

    def is_identifiable(self, name: str) -> bool:
        return bool(self.identifiable[COEFFICIENTS.index(name)])


def build_design(y0: TraitVector, x: Sociomatrix) -> DesignMatrix:
    """Design matrix of the apparent equation on the observed network ``x``."""
    if x.n != y0.n:
        raise InvalidInputError(
            f"Network has {x.n} nodes but the trait vector has {y0.n}"
        )
    deviation = y0.values - y0.values.mean()
    contagion = x.entries @ deviation
    contagion = contagion - contagion.mean()
    degree = x.outdegree.astype(float)
    degree = degree - degree.mean()
    return DesignMatrix(
        values=np.column_stack([np.ones(x.n), deviation, contagion, degree])
    )


def independent_columns(g: np.ndarray, tol: float = RANK_TOLERANCE) -> list[int]:
    """
    Indices of the columns kept for fitting, scanning left to right. A column
    is dropped when it is numerically zero or when its residual after
    projection onto the columns already kept is below ``tol`` times its norm.
    The order is fixed, so the outdegree column is the one dropped when it
    collapses onto the intercept.
    """
    n = g.shape[0]
    kept: list[int] = []
    basis = np.empty((n, 0))
    for j in range(g.shape[1]):
        col = g[:, j]
        norm = np.linalg.norm(col)
        if norm <= tol * np.sqrt(n):
            continue
        resid = col - basis @ (basis.T @ col)
        resid = resid - basis @ (basis.T @ resid)  # second Gram-Schmidt pass
        resid_norm = np.linalg.norm(resid)
        if resid_norm <= tol * norm:
            continue
        basis = np.column_stack([basis, resid / resid_norm])
        kept.append(j)
    return kept


def fit_ols(d: DesignMatrix, y1: TraitVector) -> FitResult:
    """
    Fits the design by least squares with classical homoskedastic standard
    errors.

    Parameters
    ----------
    d: DesignMatrix
        Apparent-model design.
    y1: TraitVector
        Response.

    Returns
    -------
    FitResult
        Estimates and standard errors on retained columns; dropped columns are
        flagged as not identifiable. Residual degrees of freedom are
        n - rank.
    """
    g, y = d.values, y1.values
    if y.size != d.n:
        raise InvalidInputError(f"Design has {d.n} rows but the response has {y.size}")
    if not (np.isfinite(g).all() and np.isfinite(y).all()):
        raise InvalidInputError("Design and response must be finite")

    kept = independent_columns(g)
    rank = len(kept)
    if d.n <= rank:
        raise DegenerateFitError(
            f"{d.n} observations leave no residual degrees of freedom for "
            f"{rank} columns"
        )

    q, r = scipy.linalg.qr(g[:, kept], mode="economic")
    coef = scipy.linalg.solve_triangular(r, q.T @ y)
    resid = y - g[:, kept] @ coef
    df = d.n - rank
    sigma2 = float(resid @ resid) / df
    r_inv = scipy.linalg.solve_triangular(r, np.eye(rank))
    se = np.sqrt(sigma2 * (r_inv**2).sum(axis=1))

    p = g.shape[1]
    estimates = np.full(p, np.nan)
    std_errors = np.full(p, np.nan)
    identifiable = np.zeros(p, dtype=bool)
    estimates[kept] = coef
    std_errors[kept] = se
    identifiable[kept] = True
    return FitResult(
        estimates=estimates,
        std_errors=std_errors,
        identifiable=identifiable,
        residual_df=df,
        sigma_hat=float(np.sqrt(sigma2)),
        rank=rank,
        max_leverage=float((q**2).sum(axis=1).max()),
    )


def t_statistic(estimate: float, true_value: float, std_error: float) -> float:
    if not std_error > 0:
        raise InvalidInputError(f"Standard error must be positive, got {std_error}")
    return (estimate - true_value) / std_error


@lru_cache(maxsize=4096)
def t_quantile(level: float, df: int) -> float:
    "Two-sided critical value of Student's t for a ``level`` interval"
    if not 0 < level < 1:
        raise InvalidInputError(f"Confidence level must be in (0, 1), got {level}")
    if df < 1:
        raise InvalidInputError(f"Degrees of freedom must be at least 1, got {df}")
    return float(tdist.ppf(1 - (1 - level) / 2, df))


def covered(
    estimate: float, true_value: float, std_error: float, df: int, level: float
) -> bool:
    "Whether the ``level`` t-interval around ``estimate`` contains the truth"
    critical = t_quantile(level, int(df))
    return abs(t_statistic(estimate, true_value, std_error)) <= critical


def deflate_delta(
    delta_hat: float, mean_outdeg_censored: float, mean_outdeg_true: float
) -> float:
    """
    Scales the outdegree effect by the fraction of ties retained,
    undoing the inflation caused by naming only part of each ego's friends.
    """
    if not mean_outdeg_true > 0:
        raise InvalidInputError(
            f"True mean outdegree must be positive, got {mean_outdeg_true}"
        )
    return delta_hat * mean_outdeg_censored / mean_outdeg_true
