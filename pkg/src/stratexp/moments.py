"""Exact SRSWOR design moments of the stratified relative errors.

With e0 = (ybar_st - Ybar)/Ybar and e1 = (xbar_st - Xbar)/Xbar, the table
entry V_ab is the exact design expectation E[e0^a e1^b] up to total order
four.  Within a stratum the moments of the sample mean under sampling
without replacement are

    E[(xbar_h - Xbar_h)^2] = gamma_h * S_xh^2
    E[(xbar_h - Xbar_h)^3] = k1_h * C_03(h)
    E[(xbar_h - Xbar_h)^4] = k2_h * C_04(h) + 3 * k3_h * C_02(h)^2

and their mixed (y, x) counterparts follow by polarization: a fourth-order
mixed moment is k2 times the matching mixed central moment plus k3 times
the sum over pairings of products of second central moments.

The coefficients, exact for any 1 <= n_h < N_h (k1 needs N_h >= 3, k2 and
k3 need N_h >= 4), are

    gamma_h = (1 - f_h) / n_h,            f_h = n_h / N_h
    k1_h = (N-n)(N-2n) / [n^2 (N-1)(N-2)]
    k2_h = (N-n)[N(N+1) - 6n(N-n)] / [n^3 (N-1)(N-2)(N-3)]
    k3_h = N(N-n)(N-n-1)(n-1) / [n^3 (N-1)(N-2)(N-3)]

(k2's numerator grouping was fixed by exhaustively enumerating all samples
for (N, n) in {(5,2), (6,2), (6,3), (7,3)} and solving for the grouping
that reproduces the exact fourth moment; the test suite repeats that
adjudication.)

Because strata are sampled independently, total-order-four entries also
pick up cross-stratum products of second-moment contributions; those terms
are included here so every entry is exact, not merely first-termwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .errors import InsufficientStratumError, MomentNormalizationError
from .population import StratifiedPopulation, StratumSummary, summarize_stratum

# (a, b) = (power of e0, power of e1), every entry the table carries
VTABLE_KEYS: tuple[tuple[int, int], ...] = (
    (2, 0), (0, 2), (1, 1),
    (3, 0), (2, 1), (1, 2), (0, 3),
    (2, 2), (1, 3), (0, 4),
)


def vkey_name(key: tuple[int, int]) -> str:
    return f"V{key[0]}{key[1]}"


@dataclass(frozen=True)
class DesignCoefficients:
    """Per-stratum SRSWOR moment coefficients, in population stratum order.

    Entries of ``k1``/``k2``/``k3`` are None when the requested maximum
    order did not need them.
    """

    gamma: tuple[float, ...]
    f: tuple[float, ...]
    k1: tuple[float | None, ...]
    k2: tuple[float | None, ...]
    k3: tuple[float | None, ...]


def _k1(n_cap: int, n: int) -> float:
    return ((n_cap - n) * (n_cap - 2 * n)) / (n * n * (n_cap - 1) * (n_cap - 2))


def _k2(n_cap: int, n: int) -> float:
    num = (n_cap - n) * (n_cap * (n_cap + 1) - 6 * n * (n_cap - n))
    return num / (n**3 * (n_cap - 1) * (n_cap - 2) * (n_cap - 3))


def _k3(n_cap: int, n: int) -> float:
    num = n_cap * (n_cap - n) * (n_cap - n - 1) * (n - 1)
    return num / (n**3 * (n_cap - 1) * (n_cap - 2) * (n_cap - 3))


def design_coefficients(
    pop: StratifiedPopulation, max_order: int = 4
) -> DesignCoefficients:
    """Compute gamma, f and the k-coefficients needed up to ``max_order``.

    Raises :class:`InsufficientStratumError` when a stratum is too small
    for the requested order (N_h >= 3 for third, N_h >= 4 for fourth).
    """
    if max_order not in (2, 3, 4):
        raise ValueError(f"max_order must be 2, 3 or 4, got {max_order}")
    gammas, fs, k1s, k2s, k3s = [], [], [], [], []
    for s in pop.strata:
        n_cap, n = s.capital_n, s.small_n
        f = n / n_cap
        gammas.append((1.0 - f) / n)
        fs.append(f)
        if max_order >= 3:
            if n_cap < 3:
                raise InsufficientStratumError(
                    f"stratum {s.id!r}: N={n_cap} < 3, third-order coefficient undefined"
                )
            k1s.append(_k1(n_cap, n))
        else:
            k1s.append(None)
        if max_order >= 4:
            if n_cap < 4:
                raise InsufficientStratumError(
                    f"stratum {s.id!r}: insufficient stratum size for k2/k3 "
                    f"(N={n_cap} < 4)"
                )
            k2s.append(_k2(n_cap, n))
            k3s.append(_k3(n_cap, n))
        else:
            k2s.append(None)
            k3s.append(None)
    return DesignCoefficients(
        gamma=tuple(gammas), f=tuple(fs), k1=tuple(k1s), k2=tuple(k2s), k3=tuple(k3s)
    )


@dataclass(frozen=True)
class VTable:
    """Normalized design moments E[e0^a e1^b] plus the normalizing means."""

    entries: Mapping[tuple[int, int], float]
    ybar: float
    xbar: float

    def __getitem__(self, key: tuple[int, int]) -> float:
        return self.entries[key]

    def as_json_dict(self) -> dict[str, float]:
        return {vkey_name(k): self.entries[k] for k in VTABLE_KEYS}

    def replace_entries(self, **named: float) -> "VTable":
        """Return a copy with entries overridden by name ('V21', ...)."""
        by_name = {vkey_name(k): k for k in VTABLE_KEYS}
        new = dict(self.entries)
        for name, value in named.items():
            new[by_name[name]] = value
        return VTable(entries=new, ybar=self.ybar, xbar=self.xbar)


def v_table(pop: StratifiedPopulation) -> VTable:
    """Assemble the full exact moment table for a population.

    Per-stratum terms are accumulated with exact (fsum) summation; the
    order-four entries include the cross-stratum pairing products required
    for E[e0^a e1^b] to be exact when there is more than one stratum.
    """
    ybar = pop.grand_y_mean
    xbar = pop.grand_x_mean
    if ybar == 0.0 or xbar == 0.0:
        raise MomentNormalizationError(
            f"relative moments undefined: grand means ybar={ybar}, xbar={xbar}"
        )
    coeffs = design_coefficients(pop, max_order=4)
    summaries = [summarize_stratum(s) for s in pop.strata]
    weights = pop.weights

    # per-stratum second-moment contributions (the building blocks of the
    # order-2 entries and of all cross-stratum products)
    ty: list[float] = []   # -> V20
    tx: list[float] = []   # -> V02
    txy: list[float] = []  # -> V11
    for w, g, sm in zip(weights, coeffs.gamma, summaries):
        ty.append(w * w * g * sm.s2_y / (ybar * ybar))
        tx.append(w * w * g * sm.s2_x / (xbar * xbar))
        txy.append(w * w * g * sm.s_xy / (xbar * ybar))

    def order3(a: int, b: int) -> float:
        scale = ybar**a * xbar**b
        return math.fsum(
            w**3 * k1 * sm.c(a, b) / scale
            for w, k1, sm in zip(weights, coeffs.k1, summaries)
        )

    def within4(a: int, b: int) -> float:
        """Within-stratum fourth moment of (e0^a e1^b), a + b = 4."""
        scale = ybar**a * xbar**b
        terms = []
        for w, k2, k3, sm in zip(weights, coeffs.k2, coeffs.k3, summaries):
            if (a, b) == (0, 4):
                pair = 3.0 * sm.c(0, 2) ** 2
            elif (a, b) == (1, 3):
                pair = 3.0 * sm.c(1, 1) * sm.c(0, 2)
            else:  # (2, 2)
                pair = sm.c(2, 0) * sm.c(0, 2) + 2.0 * sm.c(1, 1) ** 2
            terms.append(w**4 * (k2 * sm.c(a, b) + k3 * pair) / scale)
        return math.fsum(terms)

    def cross(u: list[float], v: list[float]) -> float:
        """sum over h != g of u_h * v_g, via totals minus the diagonal."""
        return math.fsum(u) * math.fsum(v) - math.fsum(a * b for a, b in zip(u, v))

    entries: dict[tuple[int, int], float] = {
        (2, 0): math.fsum(ty),
        (0, 2): math.fsum(tx),
        (1, 1): math.fsum(txy),
        (3, 0): order3(3, 0),
        (2, 1): order3(2, 1),
        (1, 2): order3(1, 2),
        (0, 3): order3(0, 3),
        (0, 4): within4(0, 4) + 3.0 * cross(tx, tx),
        (1, 3): within4(1, 3) + 3.0 * cross(txy, tx),
        (2, 2): within4(2, 2) + cross(ty, tx) + 2.0 * cross(txy, txy),
    }
    return VTable(entries=entries, ybar=ybar, xbar=xbar)
