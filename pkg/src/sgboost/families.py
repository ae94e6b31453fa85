"""Outcome families: loss, negative gradient, offset and inverse link."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, ValidationError


def _pair(y, f):
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if y.shape != f.shape:
        raise DimensionMismatch(f"y has shape {y.shape} but f has shape {f.shape}")
    return y, f


@dataclass(frozen=True)
class Gaussian:
    """Squared error ``0.5 * ||y - f||^2``."""

    name = "gaussian"

    def loss(self, y, f) -> float:
        y, f = _pair(y, f)
        r = y - f
        return 0.5 * float(r @ r)

    def pointwise_loss(self, y, f) -> np.ndarray:
        y, f = _pair(y, f)
        return 0.5 * (y - f) ** 2

    def negative_gradient(self, y, f) -> np.ndarray:
        y, f = _pair(y, f)
        return y - f

    def offset(self, y) -> float:
        return float(np.mean(y))

    def response(self, f) -> np.ndarray:
        return np.asarray(f, dtype=float)

    def check_outcome(self, y) -> None:
        if not np.all(np.isfinite(y)):
            raise ValidationError("outcome contains non-finite values")


@dataclass(frozen=True)
class Binomial:
    """Logistic loss on the half log-odds scale with ``y`` coded in {-1, +1}.

    ``loss = sum log(1 + exp(-2 y f))`` so that ``P(y = 1) = expit(2 f)``.
    """

    name = "binomial"

    def pointwise_loss(self, y, f) -> np.ndarray:
        y, f = _pair(y, f)
        return np.logaddexp(0.0, -2.0 * y * f)

    def loss(self, y, f) -> float:
        return float(np.sum(self.pointwise_loss(y, f)))

    def negative_gradient(self, y, f) -> np.ndarray:
        y, f = _pair(y, f)
        return 2.0 * y * expit(-2.0 * y * f)

    def offset(self, y) -> float:
        p = float(np.mean(np.asarray(y) > 0))
        p = min(max(p, 1e-10), 1 - 1e-10)
        return 0.5 * np.log(p / (1.0 - p))

    def response(self, f) -> np.ndarray:
        return expit(2.0 * np.asarray(f, dtype=float))

    def check_outcome(self, y) -> None:
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValidationError("binomial outcome must be coded in {-1, +1}")


FAMILIES = {"gaussian": Gaussian, "binomial": Binomial}


def get_family(name) -> Gaussian | Binomial:
    if isinstance(name, (Gaussian, Binomial)):
        return name
    try:
        return FAMILIES[str(name).lower()]()
    except KeyError:
        raise ValidationError(
            f"unknown family {name!r}; expected one of {sorted(FAMILIES)}") from None


def loss(family, y, f) -> float:
    return get_family(family).loss(y, f)


def negative_gradient(family, y, f) -> np.ndarray:
    return get_family(family).negative_gradient(y, f)
