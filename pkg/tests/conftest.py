import numpy as np
import pytest

from sgboost.model import Dataset, GroupStructure, standardize_columns


def make_dataset(n=40, p=6, seed=0, groups=((0, 1, 2), (3, 4), (5,)), noise=1.0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:2] = [1.5, -1.0]
    y = x @ beta + noise * rng.standard_normal(n)
    names = tuple(f"v{j + 1}" for j in range(p))
    xs, center, scale = standardize_columns(x, names)
    ds = Dataset(xs, y, names, center, scale)
    pairs = [(names[c], f"g{g + 1}") for g, cols in enumerate(groups) for c in cols if c < p]
    return ds, GroupStructure.from_pairs(ds, pairs)


@pytest.fixture
def small():
    return make_dataset()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
