"""The committed reference population used by the acceptance suite.

Two strata of integer data, sizes N = (6, 7) with planned samples
n = (3, 3).  Both variables have coefficients of variation below 0.15 and
the x-y correlation is positive in each stratum, so the series
approximations are solidly inside their comfort zone while every design
moment is still nonzero.  The joint sample space has C(6,3) * C(7,3) = 700
samples, small enough to enumerate instantly.

Run ``python -m stratexp.datasets`` to print the CSV's path for CLI use.
"""

from __future__ import annotations

from importlib import resources

from .population import StratifiedPopulation, load_population

SYNTHETIC_SAMPLE_SIZES: dict[str, int] = {"A": 3, "B": 3}


def synthetic_csv_text() -> str:
    return (
        resources.files("stratexp").joinpath("data/synthetic.csv").read_text("utf-8")
    )


def synthetic_csv_path() -> str:
    """Filesystem path of the committed CSV (valid for normal installs)."""
    return str(resources.files("stratexp").joinpath("data/synthetic.csv"))


def synthetic_population() -> StratifiedPopulation:
    return load_population(
        synthetic_csv_text().splitlines(), SYNTHETIC_SAMPLE_SIZES
    )


if __name__ == "__main__":
    print(synthetic_csv_path())
