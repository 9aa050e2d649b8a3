import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import maxentkit as mk
from maxentkit.slater import find_polynomial_slater


@pytest.fixture(scope="session")
def unit_interval():
    return mk.SupportInterval(0.0, 1.0)


@pytest.fixture(scope="session")
def benchmark_problem(unit_interval):
    """Density-estimation benchmark: M=3 moments of the reciprocal density
    on [0,1], uncertainty radius 0.01."""
    y = mk.reciprocal_density_moments(3)
    return mk.MomentProblem(
        support=unit_interval, order=3, observed=y, uncertainty=np.full(3, 0.01)
    )


@pytest.fixture(scope="session")
def benchmark_rule(unit_interval):
    return mk.composite_rule(unit_interval, 2049)


@pytest.fixture(scope="session")
def benchmark_slater(benchmark_problem):
    density, slater = find_polynomial_slater(benchmark_problem, r=5)
    return density, slater
