"""
Naming mechanisms that turn the true network W into the observed network X.

Every mechanism keeps a subset of each ego's true alters, so X <= W
elementwise; only the number kept per ego differs:

* hard: min(D_i, k)
* flexible: min(D_i, K_i), with K_i ~ Poisson(k) or Binomial(m, p), m p = k
* fractional: round_half_away(f D_i), clamped to [0, D_i]

Which alters are kept is a weighted draw without replacement with weights
exp(lambda_attr Y0_j - lambda_sim |Y0_i - Y0_j|). This exponential form is a
modelling choice of this package; (0, 0) gives uniform naming.
"""

from __future__ import annotations

import math
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import InvalidConfigError, InvalidInputError
from .netgen import Sociomatrix, TraitVector
from .util import derive_stream, draw_seed, round_half_away


def _is_number(value) -> bool:
    return isinstance(value, int | float) and not isinstance(value, bool)


def binomial_parameters(
    k: float, m: int | None = None, p: float | None = None
) -> tuple[int, float]:
    """
    Completes a binomial cap with mean ``k``. Missing trials default to
    ceil(2k) (p = 1/2) or, when ``p`` is given, to round(k / p); a missing
    ``p`` is k / m.
    """
    if m is not None and m < 1:
        raise InvalidConfigError(f"binomial cap needs m >= 1, got m={m}")
    if p is not None and not 0 < p <= 1:
        raise InvalidConfigError(f"binomial cap needs 0 < p <= 1, got p={p}")
    if m is None:
        m = max(1, math.ceil(2 * k)) if p is None else max(1, round(k / p))
    if p is None:
        p = k / m
    if not 0 < p <= 1 or abs(m * p - k) > 1e-9 * max(1.0, k):
        raise InvalidConfigError(
            f"binomial cap needs m * p == k with 0 < p <= 1, got m={m}, p={p}, k={k}"
        )
    return int(m), float(p)


class NamingPreference(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    lambda_attr: float = Field(default=0.0, allow_inf_nan=False)
    lambda_sim: float = Field(default=0.0, allow_inf_nan=False)

    @property
    def uniform(self) -> bool:
        return self.lambda_attr == 0 and self.lambda_sim == 0

    @property
    def label(self) -> str:
        return f"naming(attr={self.lambda_attr:g},sim={self.lambda_sim:g})"


class _Scheme(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    naming: NamingPreference = NamingPreference()

    def _with_naming(self, label: str) -> str:
        return label if self.naming.uniform else f"{label}+{self.naming.label}"


class NoCensoring(_Scheme):
    kind: Literal["none"] = "none"

    @property
    def label(self) -> str:
        return self._with_naming("none")


class Hard(_Scheme):
    kind: Literal["hard"] = "hard"
    k: int = Field(ge=1)

    @property
    def label(self) -> str:
        return self._with_naming(f"hard(k={self.k})")


class Flexible(_Scheme):
    kind: Literal["flexible"] = "flexible"
    k: float = Field(gt=0, allow_inf_nan=False)
    dist: Literal["poisson", "binomial"] = "poisson"
    m: int | None = Field(default=None, ge=1)
    p: float | None = Field(default=None, gt=0, le=1)

    @model_validator(mode="before")
    @classmethod
    def fill_binomial(cls, data):
        if not isinstance(data, dict) or data.get("dist") != "binomial":
            return data
        k, m, p = data.get("k"), data.get("m"), data.get("p")
        if not _is_number(k) or k <= 0:
            return data  # field validation reports it
        if not (m is None or _is_number(m)) or not (p is None or _is_number(p)):
            return data
        if m is not None and p is not None:
            return data  # checked after field validation
        data = dict(data)
        data["m"], data["p"] = binomial_parameters(k, m, p)
        return data

    @model_validator(mode="after")
    def check_cap(self):
        if self.dist == "poisson":
            if self.m is not None or self.p is not None:
                raise ValueError("m and p only apply to the binomial cap")
        elif abs(self.m * self.p - self.k) > 1e-9 * max(1.0, self.k):
            raise ValueError(
                f"binomial cap needs m * p == k, got m={self.m}, p={self.p}"
            )
        return self

    @property
    def label(self) -> str:
        if self.dist == "poisson":
            return self._with_naming(f"flexible(k={self.k:g},poisson)")
        return self._with_naming(
            f"flexible(k={self.k:g},binomial(m={self.m},p={self.p:g}))"
        )


class Fractional(_Scheme):
    kind: Literal["fractional"] = "fractional"
    f: float = Field(gt=0, le=1)

    @property
    def label(self) -> str:
        return self._with_naming(f"fractional(f={self.f:g})")


CensorScheme = Annotated[
    Union[NoCensoring, Hard, Flexible, Fractional], Field(discriminator="kind")
]


def _log_weights(i: int, alters: np.ndarray, y: np.ndarray, pref: NamingPreference):
    return pref.lambda_attr * y[alters] - pref.lambda_sim * np.abs(y[i] - y[alters])


def naming_weights(
    i: int, alters: np.ndarray, y0: TraitVector, pref: NamingPreference
) -> np.ndarray:
    "Relative chance of each of ego i's alters being named"
    alters = np.asarray(alters, dtype=int)
    return np.exp(_log_weights(i, alters, y0.values, pref))


def name_alters(
    w: Sociomatrix,
    counts: np.ndarray,
    pref: NamingPreference,
    y0: TraitVector,
    rng: np.random.Generator,
) -> Sociomatrix:
    """
    Keeps ``counts[i]`` of ego i's true alters, drawn without replacement in
    proportion to :func:`naming_weights`.

    Rows whose count covers all of their alters are copied unchanged. Every
    other row draws from its own stream keyed by (base seed, row index), so
    the result does not depend on the order rows are processed in.
    """
    if y0.n != w.n:
        raise InvalidInputError(
            f"Network has {w.n} nodes but the trait vector has {y0.n}"
        )
    degree = w.outdegree
    counts = np.clip(np.asarray(counts, dtype=np.int64), 0, degree)
    base = draw_seed(rng)

    entries = w.entries.copy()
    for i in np.flatnonzero(counts < degree):
        alters = w.alters(i)
        entries[i, alters] = 0
        if counts[i] == 0:
            continue
        row_rng = derive_stream(base, int(i))
        # exponential race: the c smallest E_j / w_j form a weighted sample
        # without replacement
        keys = np.log(row_rng.standard_exponential(alters.size))
        keys -= _log_weights(i, alters, y0.values, pref)
        keep = alters[np.argsort(keys, kind="stable")[: counts[i]]]
        entries[i, keep] = 1
    return Sociomatrix(entries=entries)


def censor_hard(
    w: Sociomatrix,
    k: int,
    pref: NamingPreference,
    y0: TraitVector,
    rng: np.random.Generator,
) -> Sociomatrix:
    """Each ego names at most k of its alters ("name k friends")."""
    if k < 1:
        raise InvalidConfigError(f"Hard limit k must be at least 1, got {k}")
    return name_alters(w, np.minimum(w.outdegree, k), pref, y0, rng)


def draw_caps(
    n: int,
    k: float,
    dist: str,
    rng: np.random.Generator,
    m: int | None = None,
    p: float | None = None,
) -> np.ndarray:
    "Per-ego naming caps with mean k"
    if dist == "poisson":
        return rng.poisson(k, size=n)
    if dist == "binomial":
        m, p = binomial_parameters(k, m, p)
        return rng.binomial(m, p, size=n)
    raise InvalidConfigError(f"Unknown cap distribution {dist!r}")


def censor_flexible(
    w: Sociomatrix,
    k: float,
    dist: str,
    pref: NamingPreference,
    y0: TraitVector,
    rng: np.random.Generator,
    m: int | None = None,
    p: float | None = None,
) -> Sociomatrix:
    """
    Each ego draws its own cap K_i with mean k ("name about k friends") and
    names min(D_i, K_i) alters. Caps are independent of traits and of W.
    """
    if not k > 0:
        raise InvalidConfigError(f"Flexible limit k must be positive, got {k}")
    caps = draw_caps(w.n, k, dist, rng, m=m, p=p)
    return name_alters(w, np.minimum(w.outdegree, caps), pref, y0, rng)


def censor_fractional(
    w: Sociomatrix,
    f: float,
    pref: NamingPreference,
    y0: TraitVector,
    rng: np.random.Generator,
) -> Sociomatrix:
    """
    Each ego names round_half_away(f D_i) of its alters, so egos with fewer
    than 1 / (2f) friends name nobody.
    """
    if not 0 < f <= 1:
        raise InvalidConfigError(f"Fraction f must be in (0, 1], got {f}")
    counts = round_half_away(f * w.outdegree).astype(np.int64)
    return name_alters(w, counts, pref, y0, rng)


def censor(
    w: Sociomatrix, scheme: CensorScheme, y0: TraitVector, rng: np.random.Generator
) -> Sociomatrix:
    "Applies ``scheme`` to the true network"
    match scheme:
        case NoCensoring():
            return w
        case Hard():
            return censor_hard(w, scheme.k, scheme.naming, y0, rng)
        case Flexible():
            return censor_flexible(
                w, scheme.k, scheme.dist, scheme.naming, y0, rng, m=scheme.m,
                p=scheme.p,
            )
        case Fractional():
            return censor_fractional(w, scheme.f, scheme.naming, y0, rng)
    raise TypeError(f"Unknown censoring scheme {scheme!r}")
