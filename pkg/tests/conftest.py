import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from smoothbackfit import Dataset, Domain, KernelSpec, Scenario, generate, make_uniform_grid

settings.register_profile("default", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def uniform_problem(n=200, d=2, h=0.2, grid_size=41, seed=0, rho=0.0, sigma=0.3):
    """Noisy additive data on the unit cube with its kernel spec and grids."""
    comps = ("sine", "quadratic", "cubic", "linear")[:d] if d <= 4 else ("sine",) * d
    design = "copula" if rho else "uniform"
    s = Scenario(d=d, n=n, components=comps, design=design, rho=rho, sigma=sigma, seed=seed)
    data = generate(s)
    return data, KernelSpec(np.full(d, h)), make_uniform_grid(s.domain, grid_size)


@pytest.fixture
def problem():
    return uniform_problem()


@pytest.fixture
def unit2():
    return Domain.unit(2)


def dataset(X, Y, bounds=None):
    X = np.atleast_2d(np.asarray(X, float))
    bounds = bounds or ((0.0, 1.0),) * X.shape[1]
    return Dataset(X, Y, Domain(bounds))
