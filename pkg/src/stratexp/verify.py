"""Independent oracles: exhaustive SRSWOR enumeration and seeded Monte Carlo.

The enumeration oracle realizes the design expectation exactly: strata are
sampled independently, so the joint sample space is the Cartesian product
of the per-stratum combinations, each joint sample equally likely.  It is
what every analytic moment and approximation in this package is certified
against.

The Monte Carlo oracle is stochastic but fully reproducible: replicate r
draws from a Philox4x64 counter-based generator keyed by (seed, r), so a
replicate's sample depends on nothing but the seed and its own index.
Results are therefore bit-identical for any worker count: per-replicate
values land in an array slot indexed by r and every reduction runs over
that array in index order with exactly-rounded summation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Iterator

import numpy as np

from .errors import ComputationError, EnumerationLimitError
from .estimators import EstimatorSpec, StratifiedSample, estimate
from .population import StratifiedPopulation

DEFAULT_ENUM_LIMIT = 10**7


class _CompensatedSum:
    """Neumaier compensated accumulator: O(1) memory, order-stable."""

    __slots__ = ("total", "compensation")

    def __init__(self) -> None:
        self.total = 0.0
        self.compensation = 0.0

    def add(self, value: float) -> None:
        t = self.total + value
        if abs(self.total) >= abs(value):
            self.compensation += (self.total - t) + value
        else:
            self.compensation += (value - t) + self.total
        self.total = t

    def value(self) -> float:
        return self.total + self.compensation


@dataclass(frozen=True)
class ExactDesignDistribution:
    """The full joint SRSWOR sample space of a stratified population."""

    population: StratifiedPopulation
    limit: int = DEFAULT_ENUM_LIMIT

    def __post_init__(self) -> None:
        if self.size > self.limit:
            raise EnumerationLimitError(
                f"joint sample space has {self.size} samples, exceeding the "
                f"limit of {self.limit}; use the Monte Carlo oracle instead"
            )

    @property
    def stratum_space_sizes(self) -> tuple[int, ...]:
        return tuple(
            math.comb(s.capital_n, s.small_n) for s in self.population.strata
        )

    @property
    def size(self) -> int:
        return math.prod(self.stratum_space_sizes)

    def __iter__(self) -> Iterator[StratifiedSample]:
        """Yield every joint sample once, lexicographically per stratum."""
        pop = self.population
        weights = pop.weights
        per_stratum: list[list[tuple[tuple[int, ...], float, float]]] = []
        for s in pop.strata:
            combos = []
            for idx in combinations(range(s.capital_n), s.small_n):
                ybar = sum(s.units[i][1] for i in idx) / s.small_n
                xbar = sum(s.units[i][0] for i in idx) / s.small_n
                combos.append((idx, ybar, xbar))
            per_stratum.append(combos)
        for picks in product(*per_stratum):
            ybar_strata = tuple(p[1] for p in picks)
            xbar_strata = tuple(p[2] for p in picks)
            yield StratifiedSample(
                index_sets=tuple(p[0] for p in picks),
                ybar_strata=ybar_strata,
                xbar_strata=xbar_strata,
                ybar=math.fsum(w * yb for w, yb in zip(weights, ybar_strata)),
                xbar=math.fsum(w * xb for w, xb in zip(weights, xbar_strata)),
            )


def exact_expectation(
    pop: StratifiedPopulation,
    statistic: Callable[[StratifiedSample], float],
    limit: int = DEFAULT_ENUM_LIMIT,
) -> float:
    """Exact design expectation of a statistic over every joint sample."""
    dist = ExactDesignDistribution(pop, limit)
    acc = _CompensatedSum()
    for sample in dist:
        acc.add(statistic(sample))
    return acc.value() / dist.size


def exact_bias_mse(
    pop: StratifiedPopulation,
    spec: EstimatorSpec,
    limit: int = DEFAULT_ENUM_LIMIT,
) -> tuple[float, float]:
    """Exact bias and MSE of one estimator under the design.

    Accumulates t - Ybar directly to avoid cancellation in the bias.
    Aborts, naming the sample, if the estimator fails anywhere on the
    sample space: exactness certifies, it does not skip.
    """
    dist = ExactDesignDistribution(pop, limit)
    ybar = pop.grand_y_mean
    xbar = pop.grand_x_mean
    acc_d = _CompensatedSum()
    acc_d2 = _CompensatedSum()
    for sample in dist:
        try:
            t = estimate(spec, sample, xbar)
        except ComputationError as exc:
            raise ComputationError(
                f"estimator {spec.label()} failed on sample with index sets "
                f"{sample.index_sets}: {exc}"
            ) from exc
        d = t - ybar
        acc_d.add(d)
        acc_d2.add(d * d)
    return acc_d.value() / dist.size, acc_d2.value() / dist.size


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo estimate with its sampling uncertainty."""

    mean: float
    variance: float
    replicates: int
    seed: int
    standard_error: float


@dataclass(frozen=True)
class MonteCarloResult:
    bias: McEstimate
    mse: McEstimate
    skipped: int


_MASK64 = (1 << 64) - 1


def draw_sample(
    pop: StratifiedPopulation, seed: int, rep: int
) -> StratifiedSample:
    """Draw the stratified SRSWOR sample for replicate ``rep``.

    The draw identity is frozen: Philox4x64 keyed (seed, rep) supplies one
    64-bit word per selection step of a partial Fisher-Yates shuffle, in
    stratum order; step i of stratum h swaps position i with
    i + raw mod (N_h - i) and the first n_h positions are the sample.
    """
    total = sum(s.small_n for s in pop.strata)
    bg = np.random.Philox(key=np.array([seed & _MASK64, rep], dtype=np.uint64))
    raw = bg.random_raw(total)
    cursor = 0
    index_sets = []
    ybar_strata = []
    xbar_strata = []
    for s in pop.strata:
        n_cap, n = s.capital_n, s.small_n
        idx = list(range(n_cap))
        for i in range(n):
            j = i + int(raw[cursor] % (n_cap - i))
            cursor += 1
            idx[i], idx[j] = idx[j], idx[i]
        sel = idx[:n]
        index_sets.append(tuple(sel))
        ybar_strata.append(sum(s.units[k][1] for k in sel) / n)
        xbar_strata.append(sum(s.units[k][0] for k in sel) / n)
    weights = pop.weights
    return StratifiedSample(
        index_sets=tuple(index_sets),
        ybar_strata=tuple(ybar_strata),
        xbar_strata=tuple(xbar_strata),
        ybar=math.fsum(w * yb for w, yb in zip(weights, ybar_strata)),
        xbar=math.fsum(w * xb for w, xb in zip(weights, xbar_strata)),
    )


def _replicate_deviation(
    pop: StratifiedPopulation,
    spec: EstimatorSpec,
    xbar_pop: float,
    ybar_pop: float,
    seed: int,
    rep: int,
) -> float:
    """t - Ybar for replicate ``rep``; NaN when the estimator is undefined."""
    sample = draw_sample(pop, seed, rep)
    try:
        t = estimate(spec, sample, xbar_pop)
    except ComputationError:
        return math.nan
    return t - ybar_pop


def monte_carlo(
    pop: StratifiedPopulation,
    spec: EstimatorSpec,
    replicates: int,
    seed: int,
    workers: int = 1,
) -> MonteCarloResult:
    """Seeded Monte Carlo bias and MSE with standard errors.

    Replicates whose estimator is undefined are skipped and counted; the
    estimates use the remaining replicates.  Output is bit-identical for a
    given (population, spec, replicates, seed) regardless of ``workers``.
    """
    if replicates < 2:
        raise ValueError(f"need at least 2 replicates, got {replicates}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    xbar_pop = pop.grand_x_mean
    ybar_pop = pop.grand_y_mean

    deviations = np.empty(replicates, dtype=np.float64)

    def run_block(lo: int, hi: int) -> None:
        for r in range(lo, hi):
            deviations[r] = _replicate_deviation(
                pop, spec, xbar_pop, ybar_pop, seed, r
            )

    if workers <= 1:
        run_block(0, replicates)
    else:
        block = -(-replicates // workers)
        bounds = [
            (lo, min(lo + block, replicates)) for lo in range(0, replicates, block)
        ]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for future in [pool.submit(run_block, lo, hi) for lo, hi in bounds]:
                future.result()

    valid = [d for d in deviations.tolist() if not math.isnan(d)]
    skipped = replicates - len(valid)
    if len(valid) < 2:
        raise ComputationError(
            f"only {len(valid)} usable replicates out of {replicates}"
        )
    n = len(valid)

    def summarize(values: list[float]) -> McEstimate:
        mean = math.fsum(values) / n
        var = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
        return McEstimate(
            mean=mean,
            variance=var,
            replicates=n,
            seed=seed,
            standard_error=math.sqrt(var / n),
        )

    return MonteCarloResult(
        bias=summarize(valid),
        mse=summarize([d * d for d in valid]),
        skipped=skipped,
    )
