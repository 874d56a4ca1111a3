"""
Node traits, gregariousness and the true directed network.

Each ordered pair (i, j), i != j, gets a latent edge value

    Z_ij ~ N(alpha_i + r_in * Y0_j + r_out * Y0_i - h * |Y0_i - Y0_j|,
             1 - r_in**2 - r_out**2)

and the arc i -> j exists when Z_ij is among the round(n * target_mean_outdegree)
largest off-diagonal values. The threshold omega is the smallest selected
value, so the realised density is fixed exactly for every network.

The latent variance is not adjusted for the homophily term; a non-zero h
also shifts the marginal density, which is absorbed by omega.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)
from scipy.stats import norm

from .errors import InvalidConfigError, InvalidInputError


class TraitVector(BaseModel):
    """Per-node trait values (Y0 or Y1)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, values):
        values = np.array(values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("a trait vector needs at least two nodes")
        if not np.isfinite(values).all():
            raise ValueError("trait values must be finite")
        values.setflags(write=False)
        return values

    @property
    def n(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(self.values.mean())


class GregVector(BaseModel):
    """Latent gregariousness alpha_i, one per node."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, values):
        values = np.array(values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("gregariousness must be a non-empty vector")
        if not np.isfinite(values).all():
            raise ValueError("gregariousness values must be finite")
        values.setflags(write=False)
        return values

    @property
    def n(self) -> int:
        return self.values.size


class GenParams(BaseModel):
    """Parameters of the latent-Gaussian network generator."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(gt=0)
    sigma_h: float = Field(default=0.0, ge=0, allow_inf_nan=False)
    h: float = Field(default=0.0, allow_inf_nan=False)
    r_in: float = Field(default=0.0, allow_inf_nan=False)
    r_out: float = Field(default=0.0, allow_inf_nan=False)
    target_mean_outdegree: float = Field(default=10.0, gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def check_constraints(self):
        if self.r_in**2 + self.r_out**2 >= 1:
            raise ValueError(
                f"r_in**2 + r_out**2 must be below 1, got "
                f"{self.r_in**2 + self.r_out**2:.4g}"
            )
        if self.target_mean_outdegree > self.n - 1:
            raise ValueError(
                f"target_mean_outdegree {self.target_mean_outdegree} exceeds "
                f"n - 1 = {self.n - 1}"
            )
        return self

    @property
    def latent_sd(self) -> float:
        return math.sqrt(1.0 - (self.r_in**2 + self.r_out**2))

    @property
    def arc_count(self) -> int:
        "Number of arcs every generated network has"
        return int(round(self.n * self.target_mean_outdegree))


class Sociomatrix(BaseModel):
    """
    Binary directed adjacency matrix with an all-zero diagonal. Row i lists
    the alters ego i names; the row sum is the outdegree D_i.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def validate_entries(cls, entries):
        entries = np.array(entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("a sociomatrix must be square")
        if not np.isin(entries, (0, 1)).all():
            raise ValueError("sociomatrix entries must be 0 or 1")
        entries = entries.astype(np.int8)
        if np.diagonal(entries).any():
            raise ValueError("self-edges are not allowed")
        entries.setflags(write=False)
        return entries

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def outdegree(self) -> np.ndarray:
        return self.entries.sum(axis=1, dtype=np.int64)

    @property
    def arc_count(self) -> int:
        return int(self.entries.sum(dtype=np.int64))

    @property
    def mean_outdegree(self) -> float:
        return self.arc_count / self.n

    def alters(self, i: int) -> np.ndarray:
        "Indices j with an arc i -> j"
        return np.flatnonzero(self.entries[i])

    def edges(self) -> np.ndarray:
        "Arcs as an (A, 2) array sorted by (i, j)"
        return np.argwhere(self.entries == 1)


def sample_traits(n: int, rng: np.random.Generator) -> TraitVector:
    """Draws n independent standard normal prior traits."""
    if n < 2:
        raise InvalidConfigError(f"At least two nodes are needed, got n={n}")
    return TraitVector(values=rng.standard_normal(n))


def sample_gregariousness(
    n: int, sigma_h: float, rng: np.random.Generator
) -> GregVector:
    """Draws n gregariousness terms from N(0, sigma_h**2)."""
    if sigma_h < 0:
        raise InvalidConfigError(f"sigma_h must be non-negative, got {sigma_h}")
    if n < 1:
        raise InvalidConfigError(f"At least one node is needed, got n={n}")
    if sigma_h == 0:
        return GregVector(values=np.zeros(n))
    return GregVector(values=rng.normal(0.0, sigma_h, size=n))


def latent_edge_mean(
    alpha_i: float, y0_i: float, y0_j: float, p: GenParams
) -> float:
    "Mean of the latent edge value Z_ij"
    return alpha_i + p.r_in * y0_j + p.r_out * y0_i - p.h * abs(y0_i - y0_j)


def latent_edge_means(y0: TraitVector, alpha: GregVector, p: GenParams) -> np.ndarray:
    """
    Matrix of latent means for every ordered pair; element [i, j] equals
    ``latent_edge_mean(alpha[i], y0[i], y0[j], p)``. The diagonal is NaN.
    """
    _check_lengths(y0, alpha, p)
    y = y0.values
    means = (
        alpha.values[:, None]
        + p.r_in * y[None, :]
        + p.r_out * y[:, None]
        - p.h * np.abs(y[:, None] - y[None, :])
    )
    np.fill_diagonal(means, np.nan)
    return means


def draw_latent(
    y0: TraitVector, alpha: GregVector, p: GenParams, rng: np.random.Generator
) -> np.ndarray:
    """Draws the latent edge values Z; the diagonal is NaN."""
    means = latent_edge_means(y0, alpha, p)
    noise = rng.standard_normal(means.shape)
    return means + p.latent_sd * noise


def threshold_network(z: np.ndarray, omega: float) -> Sociomatrix:
    """W_ij = 1 when Z_ij >= omega, with no self-edges."""
    entries = np.zeros(z.shape, dtype=np.int8)
    off = ~np.eye(z.shape[0], dtype=bool)
    entries[off] = z[off] >= omega
    return Sociomatrix(entries=entries)


def select_arcs(z: np.ndarray, arcs: int) -> tuple[Sociomatrix, float]:
    """
    Keeps exactly ``arcs`` off-diagonal cells with the largest Z. Ties are
    broken in (i, j) order. Returns the network and the realised threshold,
    the smallest selected Z value.
    """
    n = z.shape[0]
    if arcs <= 0:
        raise InvalidConfigError("A network needs at least one arc")
    if arcs > n * (n - 1):
        raise InvalidConfigError(
            f"{arcs} arcs requested but only {n * (n - 1)} ordered pairs exist"
        )
    off = ~np.eye(n, dtype=bool)
    values = z[off]  # row-major, so index order is lexicographic (i, j)
    order = np.argsort(-values, kind="stable")
    chosen = order[:arcs]
    selected = np.zeros(values.size, dtype=np.int8)
    selected[chosen] = 1
    entries = np.zeros((n, n), dtype=np.int8)
    entries[off] = selected
    return Sociomatrix(entries=entries), float(values[chosen[-1]])


def generate_network(
    y0: TraitVector, alpha: GregVector, p: GenParams, rng: np.random.Generator
) -> tuple[Sociomatrix, float]:
    """
    Generates the true network with exactly ``round(n * target_mean_outdegree)``
    arcs.

    Parameters
    ----------
    y0: TraitVector
        Prior traits, one per node.
    alpha: GregVector
        Gregariousness, one per node.
    p: GenParams
        Generator parameters.
    rng: np.random.Generator
        Stream used for the latent edge noise.

    Returns
    -------
    tuple[Sociomatrix, float]
        The network W and the realised threshold omega.
    """
    z = draw_latent(y0, alpha, p, rng)
    return select_arcs(z, p.arc_count)


def edge_probability(
    alpha_i: float, y0_i: float, y0_j: float, p: GenParams, omega: float
) -> float:
    "P(Z_ij >= omega) for a fixed threshold"
    mean = latent_edge_mean(alpha_i, y0_i, y0_j, p)
    return float(norm.sf(omega, loc=mean, scale=p.latent_sd))


def _check_lengths(y0: TraitVector, alpha: GregVector, p: GenParams):
    if y0.n != p.n or alpha.n != p.n:
        raise InvalidInputError(
            f"Expected {p.n} nodes, got {y0.n} traits and {alpha.n} "
            "gregariousness values"
        )


def write_edge_list(
    w: Sociomatrix, omega: float, path: str | Path, censored: str | None = None
):
    """
    Writes the arcs of ``w`` as ``i,j`` lines (0-indexed, sorted by (i, j))
    under a ``# n=<n> omega=<omega>`` header. Censored networks also carry a
    ``# censored=<scheme>`` line.
    """
    header = f"# n={w.n} omega={omega:.17g}\n"
    if censored is not None:
        header += f"# censored={censored}\n"
    edges = pd.DataFrame(w.edges(), columns=["i", "j"])
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header)
        edges.to_csv(f, header=False, index=False, lineterminator="\n")


def read_edge_list(path: str | Path) -> tuple[Sociomatrix, float, str | None]:
    """
    Reads a file written by :func:`write_edge_list`.

    Returns
    -------
    tuple[Sociomatrix, float, str | None]
        The network, the omega from the header and the censoring label, if any.
    """
    meta: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            for item in line.lstrip("#").split():
                key, _, value = item.partition("=")
                meta[key] = value
    if "n" not in meta or "omega" not in meta:
        raise InvalidInputError(f"{path} is missing the '# n=... omega=...' header")

    n = int(meta["n"])
    try:
        edges = pd.read_csv(path, comment="#", header=None, names=["i", "j"])
    except pd.errors.EmptyDataError:
        # every ego isolated, e.g. after heavy censoring
        edges = pd.DataFrame({"i": [], "j": []}, dtype=int)
    entries = np.zeros((n, n), dtype=np.int8)
    entries[edges["i"].to_numpy(), edges["j"].to_numpy()] = 1
    return Sociomatrix(entries=entries), float(meta["omega"]), meta.get("censored")
