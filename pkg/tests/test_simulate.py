import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtri

from smoothbackfit import HarnessError, IdentifiabilityError, InvalidArgumentError, Scenario, generate, monte_carlo
from smoothbackfit import simulate
from smoothbackfit.simulate import COMPONENTS, default_eval_points, load_scenario, save_scenario


def test_constant_model_without_noise():
    s = Scenario(d=2, n=50, components=("zero", "zero"), m0=1.0, sigma=0.0)
    assert np.all(generate(s).Y == 1.0)


def test_same_seed_gives_identical_data():
    s = Scenario(d=3, n=100, components=("sine", "quadratic", "cubic"), design="copula", rho=0.3, seed=5)
    a, b = generate(s), generate(s)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.Y, b.Y)
    assert not np.array_equal(a.Y, generate(s.with_(seed=6)).Y)


def test_copula_correlation():
    s = Scenario(d=2, n=10_000, components=("zero", "zero"), design="copula", rho=0.5, sigma=0.0, seed=1)
    data = generate(s)
    Z = ndtri(data.X)
    assert abs(np.corrcoef(Z.T)[0, 1] - 0.5) < 0.03
    assert np.all(s.domain.contains(data.X))


@pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
def test_correlation_outside_open_interval_is_rejected(rho):
    with pytest.raises(InvalidArgumentError):
        Scenario(d=2, n=10, components=("zero", "zero"), design="copula", rho=rho)


def test_equicorrelation_must_be_positive_definite():
    s = Scenario(d=3, n=10, components=("zero",) * 3, design="copula", rho=-0.6)
    with pytest.raises(InvalidArgumentError):
        generate(s)


@pytest.mark.parametrize("name", sorted(COMPONENTS))
@pytest.mark.parametrize("interval", [(0.0, 1.0), (-2.0, 3.0)])
def test_components_are_centred_with_correct_derivatives(name, interval):
    a, b = interval
    m, m1, m2, m2_mean = COMPONENTS[name].on(a, b)
    assert abs(quad(m, a, b)[0] / (b - a)) < 1e-8
    assert m2_mean == pytest.approx(quad(m2, a, b)[0] / (b - a), abs=1e-8)
    x = np.linspace(a + 0.1, b - 0.1, 7)
    eps = 1e-5
    np.testing.assert_allclose(m1(x), (m(x + eps) - m(x - eps)) / (2 * eps), atol=1e-5)
    np.testing.assert_allclose(m2(x), (m1(x + eps) - m1(x - eps)) / (2 * eps), atol=1e-4)


def test_linear_truth_without_noise_is_unbiased():
    s = Scenario(d=2, n=300, components=("linear", "linear"), sigma=0.0, seed=2)
    summary = monte_carlo(s, 3)
    assert np.abs(summary.column("mean_error_recentered")).max() <= 1e-7
    np.testing.assert_array_equal(summary.column("pred_bias"), 0.0)


def test_quadratic_truth_has_vanishing_centred_bias():
    s = Scenario(d=2, n=1000, components=("quadratic", "sine"), sigma=0.0, seed=3)
    summary = monte_carlo(s, 100)
    err = summary.column("mean_error_recentered", axis=0)
    np.testing.assert_array_equal(summary.column("pred_bias", axis=0), 0.0)
    assert np.abs(err).max() <= 5e-4
    # what remains is the boundary part of the centring constant, predicted in full form
    np.testing.assert_allclose(err, summary.column("pred_bias_full", axis=0), atol=1.5e-4)


def test_summary_is_reproducible_serial_and_parallel(tmp_path):
    s = Scenario(d=2, n=200, components=("sine", "cubic"), sigma=0.3, seed=9)
    a = monte_carlo(s, 6)
    b = monte_carlo(s, 6, workers=2)
    assert a.rows == b.rows
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert all(r["var_error"] >= 0 for r in a.rows) and a.reps == 6


def test_variance_shrinks_at_the_rate_of_one_over_nh():
    s = Scenario(d=1, n=400, components=("sine",), sigma=0.5, seed=11)
    pts = np.array([[0.4, 0.45, 0.5, 0.55, 0.6]])
    small = monte_carlo(s, 400, pts)
    large = monte_carlo(s.with_(n=800, seed=12), 400, pts)
    ratio = large.column("var_error") / small.column("var_error")
    target = 2 ** (-4 / 5)
    assert np.all(np.abs(ratio / target - 1) <= 0.25), ratio


def test_eval_points_must_be_interior():
    s = Scenario(d=1, n=100, components=("sine",))
    h = s.bandwidth
    with pytest.raises(InvalidArgumentError):
        monte_carlo(s, 2, [2 * h - 0.01])
    pts = default_eval_points(s)
    assert np.all(pts > 2 * h) and np.all(pts < 1 - 2 * h)


def test_failures_are_recorded_then_fatal(monkeypatch):
    s = Scenario(d=1, n=100, components=("sine",), sigma=0.1)
    real_fit = simulate.fit
    calls = {"n": 0}

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] % limit == 0:
            raise IdentifiabilityError("injected")
        return real_fit(*args, **kwargs)

    monkeypatch.setattr(simulate, "fit", flaky, raising=False)
    limit = 40
    summary = monte_carlo(s, 40)
    assert summary.failures == 1 and summary.reps == 39
    assert "injected" in summary.failure_messages[0][1]
    calls["n"] = 0
    limit = 10
    with pytest.raises(HarnessError):
        monte_carlo(s, 40)


def test_summary_csv_and_traces(tmp_path):
    s = Scenario(d=1, n=150, components=("cubic",), sigma=0.2, seed=4)
    summary = monte_carlo(s, 2)
    summary.to_csv(tmp_path / "s.csv")
    summary.traces_to_csv(tmp_path / "t.csv")
    header = (tmp_path / "s.csv").read_text().splitlines()[0].split(",")
    assert header[:7] == ["axis", "x", "reps", "mean_error", "var_error", "se_mean", "se_var"]
    trace = (tmp_path / "t.csv").read_text().splitlines()
    assert trace[0] == "rep,sweep,error" and len(trace) > 3


def test_config_round_trip(tmp_path):
    s = Scenario(d=2, n=123, components=("sine", "cubic"), design="copula", rho=0.25,
                 sigma=0.7, c_h=0.4, m0=1.5, seed=17, grid_size=51)
    path = tmp_path / "s.cfg"
    save_scenario(s, path, eval_points=[0.4, 0.5])
    loaded, pts = load_scenario(path)
    assert loaded == s
    np.testing.assert_array_equal(pts, [0.4, 0.5])


def test_config_without_section_header(tmp_path):
    path = tmp_path / "flat.cfg"
    path.write_text("d = 1\nn = 80\ncomponents = quadratic\nsigma = 0\n")
    s, pts = load_scenario(path)
    assert s.n == 80 and s.components == ("quadratic",) and pts is None


@pytest.mark.parametrize("text", ["n = 10\n", "d = 1\nn = 10\ncolour = red\n", "d = one\nn = 5\n",
                                  "d = 1\nn = 10\ncomponents = wave\n"])
def test_bad_configs_are_rejected(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(InvalidArgumentError):
        load_scenario(path)
