"""Stratified finite populations: loading, validation, per-stratum summaries.

A population is a list of strata; each stratum carries its full unit list
of (x, y) pairs, its size ``N_h`` and its planned SRSWOR sample size
``n_h``.  Stratum weights are ``W_h = N_h / N`` so that the stratified
sample mean is design-unbiased for the grand mean.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable, Mapping

from .errors import PopulationError

CSV_HEADER = ("stratum", "x", "y")

# central moments are produced up to this total order
MAX_MOMENT_ORDER = 4


@dataclass(frozen=True)
class StratumPopulation:
    """One stratum: its full unit list and planned sample size.

    ``units`` holds (x, y) pairs in input order.  ``small_n`` is the SRSWOR
    sample size n_h; it must satisfy 1 <= n_h < N_h.
    """

    id: str
    units: tuple[tuple[float, float], ...]
    small_n: int

    def __post_init__(self) -> None:
        if not self.units:
            raise PopulationError(f"stratum {self.id!r} has no units")
        if not (1 <= self.small_n < len(self.units)):
            raise PopulationError(
                f"stratum {self.id!r}: sample size n={self.small_n} must satisfy "
                f"1 <= n < N={len(self.units)}"
            )
        for x, y in self.units:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise PopulationError(f"stratum {self.id!r} contains non-finite values")

    @property
    def capital_n(self) -> int:
        """Stratum size N_h (always equals the number of unit records)."""
        return len(self.units)

    @property
    def xs(self) -> tuple[float, ...]:
        return tuple(u[0] for u in self.units)

    @property
    def ys(self) -> tuple[float, ...]:
        return tuple(u[1] for u in self.units)

    @property
    def x_mean(self) -> float:
        return math.fsum(self.xs) / self.capital_n

    @property
    def y_mean(self) -> float:
        return math.fsum(self.ys) / self.capital_n


@dataclass(frozen=True)
class StratifiedPopulation:
    """A validated stratified population with derived weights and grand means."""

    strata: tuple[StratumPopulation, ...]

    def __post_init__(self) -> None:
        if not self.strata:
            raise PopulationError("population has no strata")
        labels = [s.id for s in self.strata]
        if len(set(labels)) != len(labels):
            raise PopulationError(f"duplicate stratum labels: {labels}")

    @property
    def total_n(self) -> int:
        return sum(s.capital_n for s in self.strata)

    @cached_property
    def weights(self) -> tuple[float, ...]:
        """Stratum weights W_h = N_h / N; they sum to one."""
        n = self.total_n
        return tuple(s.capital_n / n for s in self.strata)

    @cached_property
    def grand_x_mean(self) -> float:
        return math.fsum(w * s.x_mean for w, s in zip(self.weights, self.strata))

    @cached_property
    def grand_y_mean(self) -> float:
        return math.fsum(w * s.y_mean for w, s in zip(self.weights, self.strata))

    @property
    def sample_sizes(self) -> tuple[int, ...]:
        return tuple(s.small_n for s in self.strata)

    def stratum(self, label: str) -> StratumPopulation:
        for s in self.strata:
            if s.id == label:
                return s
        raise KeyError(label)

    def require_positive_auxiliary(self) -> None:
        """Reject populations with any x <= 0.

        The exponential estimators assume a positive auxiliary variable;
        mixed-sign x can put a sample mean on the exponent's pole.
        """
        for s in self.strata:
            for x, _ in s.units:
                if x <= 0:
                    raise PopulationError(
                        f"stratum {s.id!r} contains x <= 0; exponential "
                        "ratio/product estimators require a positive auxiliary"
                    )


@dataclass(frozen=True)
class StratumSummary:
    """Per-stratum means, variances and central moments.

    ``central_moments`` maps (a, b) to C_ab, the mean over the stratum of
    (y - y_mean)^a (x - x_mean)^b with divisor N_h, for a + b <= 4.  The
    S-quantities use divisor N_h - 1.
    """

    x_mean: float
    y_mean: float
    s2_y: float
    s2_x: float
    s_xy: float
    central_moments: Mapping[tuple[int, int], float] = field(repr=False)

    def c(self, a: int, b: int) -> float:
        return self.central_moments[(a, b)]


def summarize_stratum(stratum: StratumPopulation) -> StratumSummary:
    """Compute means, (co)variances and central moments up to total order 4."""
    n = stratum.capital_n
    if n < 2:
        raise PopulationError(f"stratum {stratum.id!r}: need at least 2 units, got {n}")
    x_mean = stratum.x_mean
    y_mean = stratum.y_mean
    dx = [x - x_mean for x in stratum.xs]
    dy = [y - y_mean for y in stratum.ys]

    central: dict[tuple[int, int], float] = {}
    for a in range(MAX_MOMENT_ORDER + 1):
        for b in range(MAX_MOMENT_ORDER + 1 - a):
            if a + b == 0:
                central[(a, b)] = 1.0
            elif a + b == 1:
                # first central moments vanish identically
                central[(a, b)] = 0.0
            else:
                central[(a, b)] = math.fsum(
                    dyi**a * dxi**b for dyi, dxi in zip(dy, dx)
                ) / n

    bessel = n / (n - 1)
    return StratumSummary(
        x_mean=x_mean,
        y_mean=y_mean,
        s2_y=central[(2, 0)] * bessel,
        s2_x=central[(0, 2)] * bessel,
        s_xy=central[(1, 1)] * bessel,
        central_moments=central,
    )


def load_population(
    source: IO[str] | Iterable[str], design: Mapping[str, int]
) -> StratifiedPopulation:
    """Read a ``stratum,x,y`` CSV stream and attach the sampling design.

    ``design`` maps every stratum label appearing in the stream to its
    planned sample size n_h.  Unit order within a stratum is preserved.
    Raises :class:`PopulationError` on malformed rows (with line numbers),
    on design/label mismatches, and on n_h >= N_h.
    """
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise PopulationError("empty population stream") from None
    if [h.strip().lower() for h in header] != list(CSV_HEADER):
        raise PopulationError(
            f"line 1: expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}"
        )

    units_by_label: dict[str, list[tuple[float, float]]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # blank line
        if len(row) != 3:
            raise PopulationError(f"line {lineno}: expected 3 fields, got {len(row)}")
        label = row[0].strip()
        if not label:
            raise PopulationError(f"line {lineno}: empty stratum label")
        try:
            x = float(row[1])
            y = float(row[2])
        except ValueError:
            raise PopulationError(
                f"line {lineno}: cannot parse x={row[1]!r}, y={row[2]!r} as numbers"
            ) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise PopulationError(f"line {lineno}: non-finite value")
        units_by_label.setdefault(label, []).append((x, y))

    if not units_by_label:
        raise PopulationError("population stream has no data rows")

    unknown = sorted(set(design) - set(units_by_label))
    if unknown:
        raise PopulationError(f"design names unknown strata: {unknown}")
    missing = [label for label in units_by_label if label not in design]
    if missing:
        raise PopulationError(f"design is missing sample sizes for strata: {missing}")

    strata = []
    for label, units in units_by_label.items():
        n_h = design[label]
        if not isinstance(n_h, int) or isinstance(n_h, bool):
            raise PopulationError(f"stratum {label!r}: sample size must be an integer")
        if n_h >= len(units):
            raise PopulationError(
                f"stratum {label!r}: sample size n={n_h} must be smaller than N={len(units)}"
            )
        strata.append(StratumPopulation(id=label, units=tuple(units), small_n=n_h))
    return StratifiedPopulation(strata=tuple(strata))


def load_population_file(path: str, design: Mapping[str, int]) -> StratifiedPopulation:
    """Open ``path`` as UTF-8 CSV and delegate to :func:`load_population`."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return load_population(fh, design)
    except OSError as exc:
        raise PopulationError(f"cannot read population file {path!r}: {exc}") from exc
