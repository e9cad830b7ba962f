import numpy as np
import pytest

from smoothbackfit import FitConfig, fit
from smoothbackfit import _accel
from smoothbackfit.kernel import weight_matrix

from conftest import uniform_problem

needs_numba = pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not installed")


@pytest.mark.parametrize("value,expected", [("0", "numpy"), ("false", "numpy"), ("OFF", "numpy"),
                                            ("no", "numpy")])
def test_env_flag_forces_numpy(monkeypatch, value, expected):
    monkeypatch.setenv(_accel.ENV_FLAG, value)
    assert _accel.default_backend() == expected


@needs_numba
def test_numba_is_the_default(monkeypatch):
    monkeypatch.delenv(_accel.ENV_FLAG, raising=False)
    assert _accel.default_backend() == "numba"


def test_unknown_backend_is_rejected():
    with pytest.raises(ValueError):
        _accel._resolve("cuda")


@needs_numba
def test_weight_matrices_agree():
    data, spec, grids = uniform_problem(n=300, d=1, h=0.13)
    a = weight_matrix(data.X[:, 0], grids[0], 0.13, backend="numpy")
    b = weight_matrix(data.X[:, 0], grids[0], 0.13, backend="numba")
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


@needs_numba
def test_fits_agree_across_backends():
    data, spec, grids = uniform_problem(n=200, d=3, h=0.25, grid_size=31, rho=0.5)
    a, da = fit(data, spec, grids, FitConfig(1e-10), backend="numpy")
    b, db = fit(data, spec, grids, FitConfig(1e-10), backend="numba")
    assert da.sweeps == db.sweeps
    np.testing.assert_allclose(da.errors, db.errors, rtol=1e-8, atol=1e-14)
    assert a.element.sup_distance(b.element) < 1e-11
