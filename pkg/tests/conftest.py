"""Shared fixtures: baseline constants, small grids and a seeded generator."""

import numpy as np
import pytest

from dcmd.fields import Orientation, PhysicalParams
from dcmd.grid import Grid, make_grid


@pytest.fixture(scope="session")
def baseline_params() -> PhysicalParams:
    """Coefficients of the baseline closed-loop example."""
    return PhysicalParams.baseline()


@pytest.fixture(scope="session")
def advected_params() -> PhysicalParams:
    """Baseline coefficients with beta/(2 alpha) = 0.1 on both components."""
    return PhysicalParams(alpha_f=3.0, alpha_p=3.5, gamma_f=0.2, gamma_p=0.1, beta_f=0.6, beta_p=0.7)


@pytest.fixture(scope="session")
def cocurrent_params() -> PhysicalParams:
    return PhysicalParams(
        alpha_f=3.0,
        alpha_p=3.5,
        gamma_f=0.2,
        gamma_p=0.1,
        beta_f=0.6,
        beta_p=0.7,
        orientation=Orientation.CO_CURRENT,
    )


@pytest.fixture(scope="session")
def tiny_grid() -> Grid:
    """5x9 nodes on the baseline height, h = 1/4 in both directions."""
    return make_grid(5, 9, 2.0)


@pytest.fixture(scope="session")
def small_grid() -> Grid:
    return make_grid(11, 21, 2.0)


@pytest.fixture(scope="session")
def ci_grid() -> Grid:
    """Coarse variant of the baseline grid, h = 1/25."""
    return make_grid(26, 51, 2.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
