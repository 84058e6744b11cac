"""Shared fixtures: the first-derivative half-line problem and small grids."""
import numpy as np
import pytest

from pinn_spectral import KernelSpec
from pinn_spectral.gpr import ProblemData
from pinn_spectral.operators import LinearDiffOp, interval_grid

G0 = 2.5


def zero_source(x):
    return 0.0


def toy_boundary(x):
    return G0


@pytest.fixture(scope="session")
def toy_problem():
    """f' = 0 on the half line with a single boundary value g(0) = 2.5."""
    return ProblemData(
        source=zero_source,
        boundary=toy_boundary,
        operator=LinearDiffOp((((1,), 1.0),)),
        kernel=KernelSpec(family="CosineFeature", l=1.0),
    )


@pytest.fixture(scope="session")
def toy_grid():
    """61-node even-extension grid on [0, 12], boundary node at 0."""
    return interval_grid(0.0, 12.0, 61, (0.0,), even_extension=True)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
