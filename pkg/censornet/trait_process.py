"""
One-step evolution of the node trait on a network.

The general model is

    Y1_i = mu + gamma (Y0_i - mean(Y0)) + beta sum_j W_ij (Y0_j - mean(Y0))
           + delta (D_i - mean(D)) + eps_i,        eps_i ~ N(0, sigma_eps**2)

Two alternative contagion forms replace the peer term:

* ``PivotContagion(d)``: beta sum_j W_ij (Y0_j - d), with the uncentered
  outdegree term delta D_i.
* ``HomophilyDrive``: beta sum_j W_ij (Y0_j - Y0_i), a pull toward the
  values of one's alters.

Expanding the pivot form gives beta sum_j W_ij Y0_j + (delta - beta d) D_i,
so fitting a zero pivot leaves mu unchanged and shifts delta by -beta d.
The narrative version of this argument quotes mu - beta d and delta - beta,
which does not follow from the displayed equation; the exact expansion is
what :func:`reparameterize_pivot` returns.
"""

from __future__ import annotations

from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import InvalidInputError
from .netgen import Sociomatrix, TraitVector


class EvolveParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mu: float = Field(default=0.0, allow_inf_nan=False)
    gamma: float = Field(default=0.0, allow_inf_nan=False)
    beta: float = Field(default=0.0, allow_inf_nan=False)
    delta: float = Field(default=0.0, allow_inf_nan=False)
    sigma_eps: float = Field(default=1.0, ge=0, allow_inf_nan=False)


class CenteredGeneral(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    form: Literal["centered"] = "centered"

    @property
    def label(self) -> str:
        return "centered"


class PivotContagion(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    form: Literal["pivot"] = "pivot"
    d: float = Field(default=0.0, allow_inf_nan=False)

    @property
    def label(self) -> str:
        return f"pivot(d={self.d:g})"


class HomophilyDrive(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    form: Literal["homophily_drive"] = "homophily_drive"

    @property
    def label(self) -> str:
        return "homophily_drive"


ModelSpec = Annotated[
    Union[CenteredGeneral, PivotContagion, HomophilyDrive],
    Field(discriminator="form"),
]


def _check_dimensions(w: Sociomatrix, y0: TraitVector):
    if w.n != y0.n:
        raise InvalidInputError(
            f"Network has {w.n} nodes but the trait vector has {y0.n}"
        )


def contagion_covariate(
    w: Sociomatrix, y0: TraitVector, spec: ModelSpec
) -> np.ndarray:
    """
    Per-node peer term before multiplying by beta, without centering across
    egos: sum_j W_ij Y0_j for the centered model, sum_j W_ij (Y0_j - d) for a
    pivot d, and sum_j W_ij (Y0_j - Y0_i) for the homophily drive.
    """
    _check_dimensions(w, y0)
    raw = w.entries @ y0.values
    if isinstance(spec, PivotContagion):
        return raw - spec.d * w.outdegree
    if isinstance(spec, HomophilyDrive):
        return raw - w.outdegree * y0.values
    return raw


def reparameterize_pivot(
    mu: float, beta: float, delta: float, d: float
) -> tuple[float, float, float]:
    """
    Zero-pivot parameters equivalent to the pivot-d contagion form:
    beta sum_j W_ij (Y0_j - d) + delta D_i == beta sum_j W_ij Y0_j
    + (delta - beta d) D_i.
    """
    return mu, beta, delta - beta * d


def expected_trait(
    y0: TraitVector, w: Sociomatrix, ep: EvolveParams, spec: ModelSpec
) -> np.ndarray:
    "The noise-free part of :func:`evolve`"
    _check_dimensions(w, y0)
    y = y0.values
    degree = w.outdegree
    autocorr = ep.gamma * (y - y.mean())

    if isinstance(spec, PivotContagion):
        # computed through the zero-pivot expansion, so that a pivot d and its
        # reparameterized zero pivot give bit-identical outputs
        mu, beta, delta = reparameterize_pivot(ep.mu, ep.beta, ep.delta, spec.d)
        return mu + autocorr + beta * (w.entries @ y) + delta * degree

    if isinstance(spec, HomophilyDrive):
        peer = contagion_covariate(w, y0, spec)
    else:
        peer = w.entries @ (y - y.mean())
    return ep.mu + autocorr + ep.beta * peer + ep.delta * (degree - degree.mean())


def evolve(
    y0: TraitVector,
    w: Sociomatrix,
    ep: EvolveParams,
    spec: ModelSpec,
    rng: np.random.Generator,
) -> TraitVector:
    """
    Moves the trait one step forward in time.

    Parameters
    ----------
    y0: TraitVector
        Prior trait values.
    w: Sociomatrix
        True network.
    ep: EvolveParams
        Intercept, autocorrelation, contagion, outdegree effect and noise sd.
    spec: ModelSpec
        Contagion form.
    rng: np.random.Generator
        Stream for the noise term; not used when ``sigma_eps`` is zero.

    Returns
    -------
    TraitVector
        The trait at the next time step.
    """
    y1 = expected_trait(y0, w, ep, spec)
    if ep.sigma_eps > 0:
        y1 = y1 + rng.normal(0.0, ep.sigma_eps, size=y1.size)
    return TraitVector(values=y1)
