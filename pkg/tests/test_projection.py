import numpy as np
import pytest
from hypothesis import given, strategies as st

from smoothbackfit import (
    AdditiveElement,
    Domain,
    IdentifiabilityError,
    KernelSpec,
    compute_marginals,
    make_uniform_grid,
    project_P0,
    project_Pk,
    project_Pkprime,
    project_response,
)
from smoothbackfit.projection import (
    project_component,
    project_Pk_full,
    residual_seminorm,
    seminorm,
    seminorm_inner,
)

from _bruteforce import DenseProblem, direct_seminorm, kernel_weights, trapezoid


def setup(n=40, d=2, h=0.3, G=15, seed=0, rho=0.5):
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, d))
    if d > 1:
        Z[:, 1] = rho * Z[:, 0] + np.sqrt(1 - rho**2) * Z[:, 1]
    from scipy.special import ndtr
    X = ndtr(Z)
    Y = np.sin(2 * np.pi * X[:, 0]) + X[:, -1] ** 2 + 0.2 * rng.standard_normal(n)
    dom = Domain.unit(d)
    grids = make_uniform_grid(dom, G)
    tables = compute_marginals(X, KernelSpec(np.full(d, h)), grids)
    dense = DenseProblem(X, Y, dom.bounds, h, G)
    return X, Y, tables, dense


def random_element(rng, d, G, tables=None):
    m = AdditiveElement(rng.normal(), rng.normal(size=(d, G)), rng.normal(size=(d, G)))
    return m.centered(tables) if tables is not None else m


@pytest.fixture(scope="module")
def small():
    return setup()


def theta(dense, m):
    return dense.pack(m.f0, m.levels, m.derivs)


def test_P0_examples(small):
    _, _, t, _ = small
    d, G = t.p.shape
    assert project_P0(AdditiveElement.constant(2.5, d, G), t) == 2.5
    m = AdditiveElement.zeros(d, G)
    m.levels[1] = np.linspace(-1, 1, G)
    assert abs(project_P0(m.centered(t), t) - m.centered(t).f0) < 1e-12
    m = AdditiveElement.zeros(d, G)
    m.derivs[0] = 1.0
    assert project_P0(m, t) == pytest.approx(t.ps[0] @ t.qw[0])


def test_identity_on_own_subspace(small):
    _, _, t, _ = small
    rng = np.random.default_rng(1)
    d, G = t.p.shape
    for k in range(d):
        m = AdditiveElement.zeros(d, G)
        m.levels[k] = rng.normal(size=G)
        m = m.centered(t)
        m.f0 = 0.0
        np.testing.assert_allclose(project_Pk(m, k, t), m.levels[k], atol=1e-10)
        m = AdditiveElement.zeros(d, G)
        m.derivs[k] = rng.normal(size=G)
        np.testing.assert_allclose(project_Pkprime(m, k, t), m.derivs[k], atol=1e-10)


def test_zero_maps_to_zero(small):
    _, _, t, _ = small
    z = AdditiveElement.zeros(*t.p.shape)
    for k in range(2):
        assert np.all(project_Pk(z, k, t) == 0)
        assert np.all(project_Pkprime(z, k, t) == 0)


def test_constant_projects_onto_slopes_as_table_ratio(small):
    _, _, t, dense = small
    m = AdditiveElement.constant(1.0, *t.p.shape)
    for k in range(2):
        np.testing.assert_allclose(project_Pkprime(m, k, t), t.ps[k] / t.pss[k], rtol=1e-12)
        brute = dense.project(theta(dense, m), 3 + k)[dense.deriv_slice(k)]
        np.testing.assert_allclose(project_Pkprime(m, k, t), brute, atol=1e-8)


def test_all_projections_match_brute_force_least_squares(small):
    _, _, t, dense = small
    rng = np.random.default_rng(2)
    d, G = t.p.shape
    for _ in range(5):
        m = random_element(rng, d, G, t)
        th = theta(dense, m)
        for c in range(2 * d + 1):
            brute = dense.project(th, c)
            got = theta(dense, project_component(m, c, t))
            np.testing.assert_allclose(got, brute, atol=1e-8, err_msg=f"component {c}")


def test_cross_term_from_other_axis_only(small):
    _, _, t, dense = small
    rng = np.random.default_rng(4)
    d, G = t.p.shape
    m = AdditiveElement.zeros(d, G)
    m.levels[1] = rng.normal(size=G)
    m = m.centered(t)
    m.f0 = 0.0
    expected = (t.qw[1] * m.levels[1]) @ t.p2[1, 0] / t.p[0]
    np.testing.assert_allclose(project_Pk(m, 0, t), expected - expected @ (t.p[0] * t.qw[0]), atol=1e-12)
    np.testing.assert_allclose(project_Pk(m, 0, t), dense.project(theta(dense, m), 1)[dense.level_slice(0)],
                               atol=1e-8)


def test_Pk_equals_full_projection_minus_P0(small):
    _, _, t, dense = small
    rng = np.random.default_rng(5)
    d, G = t.p.shape
    for _ in range(5):
        m = random_element(rng, d, G, t)
        for k in range(d):
            full = project_Pk_full(m, k, t)
            brute_full = dense.project_onto_constants_and_axis(theta(dense, m), k)
            np.testing.assert_allclose(full, brute_full, atol=1e-8)
            np.testing.assert_allclose(project_Pk(m, k, t), full - project_P0(m, t), atol=1e-9)


def test_idempotent_self_adjoint_and_contracting(small):
    _, _, t, _ = small
    rng = np.random.default_rng(6)
    d, G = t.p.shape
    for _ in range(10):
        f = random_element(rng, d, G, t)
        g = random_element(rng, d, G, t)
        for c in range(2 * d + 1):
            Pf = project_component(f, c, t)
            assert project_component(Pf, c, t).sup_distance(Pf) < 1e-9
            lhs = seminorm_inner(Pf, g, t)
            rhs = seminorm_inner(f, project_component(g, c, t), t)
            assert lhs == pytest.approx(rhs, abs=1e-8 * (1 + abs(lhs)))
            assert seminorm(Pf, t) <= seminorm(f, t) + 1e-9


def test_projection_on_vanishing_density_raises():
    X = np.r_[np.linspace(0, 0.3, 10), np.linspace(0.7, 1, 10)][:, None]
    grids = make_uniform_grid(Domain.unit(1), 51)
    t = compute_marginals(X, KernelSpec([0.1]), grids)
    m = AdditiveElement.zeros(1, 51)
    with pytest.raises(IdentifiabilityError):
        project_Pk(m, 0, t)
    with pytest.raises(IdentifiabilityError):
        project_response(np.ones(20), t)


def test_response_projections_trivial_cases(small):
    X, Y, t, dense = small
    z = project_response(np.zeros(t.n), t)
    assert z.f0 == 0 and np.all(z.levels == 0) and np.all(z.derivs == 0)
    c = project_response(np.full(t.n, 3.0), t)
    assert c.f0 == pytest.approx(3.0)
    np.testing.assert_allclose(c.levels, 0.0, atol=1e-12)
    assert project_response(Y, t, 0) == pytest.approx(Y.mean())


def test_response_projections_match_brute_force(small):
    X, Y, t, dense = small
    targets = project_response(Y, t)
    d = t.d
    # projection of the raw response onto each subspace, solved densely
    for c in range(1, 2 * d + 1):
        idx = dense.level_slice(c - 1) if c <= d else dense.deriv_slice(c - 1 - d)
        Q = dense.M[idx, idx]
        b = dense.r[idx]
        if c <= d:
            C = dense.centering_rows([c - 1])[:, idx]
            K = np.block([[Q, C.T], [C, np.zeros((1, 1))]])
            sol = np.linalg.solve(K, np.r_[b, 0.0])[:-1]
        else:
            sol = np.linalg.solve(Q, b)
        np.testing.assert_allclose(targets.component(c).levels[c - 1] if c <= d
                                   else targets.derivs[c - 1 - d], sol, atol=1e-8)
        single = project_response(Y, t, c)
        np.testing.assert_allclose(single, sol, atol=1e-8)


def test_response_projection_d1_matches_direct_local_sums():
    rng = np.random.default_rng(7)
    n, G, h = 60, 26, 0.2
    x = rng.random(n)
    y = np.cos(3 * x) + 0.1 * rng.standard_normal(n)
    pts = np.linspace(0, 1, G)
    qw = trapezoid(pts)
    W = kernel_weights(x, pts, qw, h)
    level = ((y - y.mean()) @ W) / W.sum(axis=0)
    dist = x[:, None] - pts[None, :]
    slope = (y @ (W * dist)) / (W * dist**2).sum(axis=0)
    t = compute_marginals(x[:, None], KernelSpec([h]), make_uniform_grid(Domain.unit(1), G))
    got = project_response(y, t)
    np.testing.assert_allclose(got.levels[0], level, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(got.derivs[0], slope, rtol=1e-10, atol=1e-12)


def test_seminorm_examples():
    X, Y, t, dense = setup(n=5, d=2, h=0.45, G=21, seed=8)
    d, G = t.p.shape
    c = AdditiveElement.constant(1.7, d, G)
    assert seminorm_inner(c, c, t) == pytest.approx(1.7**2, rel=1e-12)
    rng = np.random.default_rng(9)
    g = AdditiveElement.zeros(d, G)
    g.levels[0] = rng.normal(size=G)
    g = g.centered(t)
    g.f0 = 0.0
    assert abs(seminorm_inner(c, g, t)) < 1e-8
    for _ in range(3):
        f = random_element(rng, d, G)
        direct = direct_seminorm(f.f0, f.levels, f.derivs, X, Domain.unit(2).bounds, 0.45, G)
        assert seminorm_inner(f, f, t) == pytest.approx(direct, rel=1e-6)
        assert seminorm_inner(f, f, t) == pytest.approx(dense.norm2(theta(dense, f)), rel=1e-9)


@given(st.integers(0, 1000))
def test_inner_product_symmetric_and_residual_norm_consistent(seed):
    X, Y, t, dense = setup(n=12, d=2, h=0.4, G=11, seed=seed % 7)
    rng = np.random.default_rng(seed)
    f = random_element(rng, 2, 11)
    g = random_element(rng, 2, 11)
    assert seminorm_inner(f, g, t) == pytest.approx(seminorm_inner(g, f, t), abs=1e-10)
    assert residual_seminorm(Y, f, t) ** 2 == pytest.approx(dense.criterion(theta(dense, f)), rel=1e-9)
