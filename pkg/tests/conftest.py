import sys
from pathlib import Path

import numpy as np
import pytest

from explainkit import Dataset, dataset_from_rows, fit_ols, load_csv

DATA_DIR = Path(__file__).parent / "data"
FIXTURE_DIR = Path(__file__).parent / "fixtures"
GOLDEN_DIR = Path(__file__).parent / "golden"

WINE_CSV = DATA_DIR / "winequality_red.csv"


def fixture_command(name: str, *args: str) -> list[str]:
    """Invoke a scorer fixture portably through the current interpreter."""
    return [sys.executable, str(FIXTURE_DIR / name), *args]


def make_regression(
    p: int,
    n: int,
    seed: int,
    coefficients=None,
    intercept: float = 0.5,
    noise: float = 0.0,
) -> Dataset:
    """Seeded numeric dataset with response y = intercept + X @ coefficients."""
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.uniform(-2.0, 2.0, size=(n, p))
    if coefficients is None:
        coefficients = rng.uniform(-3.0, 3.0, size=p)
    coefficients = np.asarray(coefficients, dtype=float)
    y = intercept + x @ coefficients
    if noise:
        y = y + rng.normal(0.0, noise, size=n)
    names = [f"x{i + 1}" for i in range(p)] + ["y"]
    rows = [tuple(x[i]) + (y[i],) for i in range(n)]
    return dataset_from_rows(names, ["numeric"] * (p + 1), rows, response_name="y")


@pytest.fixture(scope="session")
def wine():
    return load_csv(str(WINE_CSV), response_name="quality")


@pytest.fixture(scope="session")
def wine_ols(wine):
    return fit_ols(wine, wine.response_index)
