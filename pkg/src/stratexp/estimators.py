"""The four point estimators of the grand y-mean and the samples they act on.

All four scale the stratified sample mean ybar_st by an exponential factor
built from the known auxiliary grand mean:

    z   = (Xbar - xbar_st) / (Xbar + xbar_st)
    T1S = ybar_st * exp(z)              ratio type
    T2S = ybar_st * exp(-z)             product type
    T3S = ybar_st * exp(alpha * z)      tunable exponent
    T4S = theta * T1S + (1 - theta) * T2S

so T3S(1) == T1S, T3S(-1) == T2S, T3S(0) == ybar_st, and T4S interpolates
the first two literally (no algebraic simplification).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DegenerateAuxiliaryError, PopulationError
from .population import StratifiedPopulation


class EstimatorKind(enum.Enum):
    T1S = "t1s"
    T2S = "t2s"
    T3S = "t3s"
    T4S = "t4s"

    @property
    def parameter_name(self) -> str | None:
        if self is EstimatorKind.T3S:
            return "alpha"
        if self is EstimatorKind.T4S:
            return "theta"
        return None


@dataclass(frozen=True)
class EstimatorSpec:
    """An estimator kind plus its tuning constant where one is required."""

    kind: EstimatorKind
    alpha: float | None = None
    theta: float | None = None

    def __post_init__(self) -> None:
        if self.kind is EstimatorKind.T3S:
            if self.alpha is None or self.theta is not None:
                raise ValueError("T3S takes alpha and only alpha")
        elif self.kind is EstimatorKind.T4S:
            if self.theta is None or self.alpha is not None:
                raise ValueError("T4S takes theta and only theta")
        elif self.alpha is not None or self.theta is not None:
            raise ValueError(f"{self.kind.value} takes no tuning parameter")

    @property
    def parameter(self) -> float | None:
        return self.alpha if self.kind is EstimatorKind.T3S else self.theta

    def label(self) -> str:
        if self.parameter is None:
            return self.kind.value
        return f"{self.kind.value}({self.kind.parameter_name}={self.parameter:g})"


def t1s() -> EstimatorSpec:
    return EstimatorSpec(EstimatorKind.T1S)


def t2s() -> EstimatorSpec:
    return EstimatorSpec(EstimatorKind.T2S)


def t3s(alpha: float) -> EstimatorSpec:
    return EstimatorSpec(EstimatorKind.T3S, alpha=float(alpha))


def t4s(theta: float) -> EstimatorSpec:
    return EstimatorSpec(EstimatorKind.T4S, theta=float(theta))


@dataclass(frozen=True)
class StratifiedSample:
    """A drawn sample: per-stratum index sets plus the derived means.

    ``index_sets[h]`` holds ``n_h`` distinct unit indices into stratum h.
    ``ybar``/``xbar`` are the weighted stratified means, with the weights
    taken from the population the sample was drawn from.
    """

    index_sets: tuple[tuple[int, ...], ...]
    ybar_strata: tuple[float, ...]
    xbar_strata: tuple[float, ...]
    ybar: float
    xbar: float

    @classmethod
    def from_indices(
        cls, pop: StratifiedPopulation, index_sets: tuple[tuple[int, ...], ...]
    ) -> "StratifiedSample":
        if len(index_sets) != len(pop.strata):
            raise PopulationError(
                f"expected {len(pop.strata)} index sets, got {len(index_sets)}"
            )
        ybar_strata = []
        xbar_strata = []
        for s, idx in zip(pop.strata, index_sets):
            if len(set(idx)) != s.small_n:
                raise PopulationError(
                    f"stratum {s.id!r}: need {s.small_n} distinct indices, got {idx!r}"
                )
            if any(i < 0 or i >= s.capital_n for i in idx):
                raise PopulationError(
                    f"stratum {s.id!r}: index out of range in {idx!r}"
                )
            ybar_strata.append(sum(s.units[i][1] for i in idx) / s.small_n)
            xbar_strata.append(sum(s.units[i][0] for i in idx) / s.small_n)
        weights = pop.weights
        return cls(
            index_sets=tuple(tuple(i) for i in index_sets),
            ybar_strata=tuple(ybar_strata),
            xbar_strata=tuple(xbar_strata),
            ybar=math.fsum(w * yb for w, yb in zip(weights, ybar_strata)),
            xbar=math.fsum(w * xb for w, xb in zip(weights, xbar_strata)),
        )


def estimate(spec: EstimatorSpec, sample: StratifiedSample, xbar_pop: float) -> float:
    """Evaluate one estimator on a drawn sample, given the known grand x-mean."""
    denom = xbar_pop + sample.xbar
    if denom == 0.0:
        raise DegenerateAuxiliaryError(
            "degenerate auxiliary configuration: Xbar + xbar_st = 0"
        )
    z = (xbar_pop - sample.xbar) / denom
    kind = spec.kind
    if kind is EstimatorKind.T1S:
        return sample.ybar * math.exp(z)
    if kind is EstimatorKind.T2S:
        return sample.ybar * math.exp(-z)
    if kind is EstimatorKind.T3S:
        return sample.ybar * math.exp(spec.alpha * z)
    # T4S: the literal mixture of the two exponential branches
    theta = spec.theta
    return theta * sample.ybar * math.exp(z) + (1.0 - theta) * sample.ybar * math.exp(-z)
