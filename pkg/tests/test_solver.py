import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hopflab.closedform import ConeHarmonic, parse_angle
from hopflab.coeffs import Checkerboard, ConstantMatrix, Identity, Rotating
from hopflab.errors import ConfigError, NonMonotoneStencil, NoConvergence
from hopflab.geometry import Annulus, Ball, Box, Cone, rasterize
from hopflab.solver import (OFFSETS, ScalarField, boundary_data, check_max_principle, compare,
                            discretize, solve_dirichlet, stencil_weights)

SQUARE = rasterize(Box((-1.0, -1.0), (1.0, 1.0)), 2.0**-5)
FIELDS = [Identity(), Checkerboard(), Rotating(4.0, "swirl"), Rotating(2.0, "wave"),
          ConstantMatrix(1.5, 0.4, 0.8)]


def affine(p):
    return 0.7 - 1.3 * p[..., 0] + 2.1 * p[..., 1]


@given(st.floats(0.3, 3.0), st.floats(-1.0, 1.0), st.floats(0.3, 3.0),
       st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_stencil_exact_on_quadratics(a11, a12, a22, c11, c12, c22):
    h = 0.1
    w = stencil_weights(a11, a12, a22, h)
    q = lambda x, y: c11 * x * x + 2 * c12 * x * y + c22 * y * y + 0.3 * x - 0.2 * y + 1.0
    x0, y0 = 0.37, -0.21
    lhs = sum(wk * q(x0 + di * h, y0 + dj * h) for wk, (di, dj) in zip(w, OFFSETS))
    exact = 2 * (a11 * c11 + 2 * a12 * c12 + a22 * c22)
    assert lhs == pytest.approx(exact, abs=1e-8 * (1 + abs(exact)) / h**0)


@given(st.floats(0.3, 3.0), st.floats(-3.0, 3.0), st.floats(0.3, 3.0))
def test_stencil_monotone_iff_mixed_term_small(a11, a12, a22):
    w = stencil_weights(a11, a12, a22, 0.1)
    monotone = bool(np.all(w[1:] >= 0))
    assert monotone == (abs(a12) <= min(a11, a22))
    assert w.sum() == pytest.approx(0.0, abs=1e-9 * abs(w[0]))


def test_identity_weights():
    w = stencil_weights(1.0, 0.0, 1.0, 0.5)
    assert list(w) == [-16.0, 4.0, 4.0, 4.0, 4.0, 0.0, 0.0, 0.0, 0.0]


def test_non_monotone_rejected():
    fld = ConstantMatrix(2.0, 0.8, 0.7)
    with pytest.raises(NonMonotoneStencil):
        discretize(fld, SQUARE, require_monotone=True)
    st_ = discretize(fld, SQUARE)
    with pytest.raises(NonMonotoneStencil):
        solve_dirichlet(st_, boundary_data(SQUARE, affine))


@pytest.mark.parametrize("fld", FIELDS, ids=lambda f: f.kind + getattr(f, "angle", ""))
@pytest.mark.parametrize("body", [Box((-1.0, -1.0), (1.0, 1.0)), Ball((0.0, 0.2), 0.9),
                                  Annulus((0.0, 0.0), 0.3, 1.0), Cone(1.0, 1.0)],
                         ids=["box", "ball", "annulus", "cone"])
def test_affine_data_reproduced(fld, body):
    dom = rasterize(body, 2.0**-5)
    u = solve_dirichlet(discretize(fld, dom, require_monotone=True),
                        boundary_data(dom, affine, gamma_zero=False))
    exact = affine(np.stack(dom.coords(), -1))
    err = np.nanmax(np.abs(u.values - exact)[dom.closed])
    assert err <= 1e-10 * np.max(np.abs(exact[dom.closed]))


@pytest.mark.parametrize("method", ["direct", "amg", "ssor"])
def test_methods_agree(method):
    dom = rasterize(Ball((0.0, 0.0), 1.0), 2.0**-4)
    st_ = discretize(Checkerboard(), dom)
    g = boundary_data(dom, lambda p: np.sin(3 * p[:, 0]) + p[:, 1] ** 2)
    ref = solve_dirichlet(st_, g, method="direct", rel_tol=1e-13)
    u = solve_dirichlet(st_, g, method=method, rel_tol=1e-12)
    assert u.method == method
    assert np.nanmax(np.abs(u.values - ref.values)) < 1e-9


def test_ssor_is_deterministic():
    dom = rasterize(Ball((0.0, 0.0), 1.0), 2.0**-4)
    st_ = discretize(Rotating(), dom)
    g = boundary_data(dom, lambda p: np.cos(2 * p[:, 0]) * p[:, 1])
    a = solve_dirichlet(st_, g, method="ssor")
    b = solve_dirichlet(st_, g, method="ssor")
    assert a.iterations == b.iterations
    assert np.array_equal(a.values, b.values, equal_nan=True)


def test_ssor_budget():
    dom = rasterize(Ball((0.0, 0.0), 1.0), 2.0**-4)
    st_ = discretize(Identity(), dom)
    with pytest.raises(NoConvergence):
        solve_dirichlet(st_, boundary_data(dom, affine), method="ssor", max_iter=5)


def test_quadratic_harmonic_on_square():
    dom = rasterize(Box((-1.0, -1.0), (1.0, 1.0)), 2.0**-6)
    f = lambda p: p[..., 0] ** 2 - p[..., 1] ** 2
    u = solve_dirichlet(discretize(Identity(), dom), boundary_data(dom, f))
    assert np.nanmax(np.abs(u.values - f(np.stack(dom.coords(), -1)))) <= 1e-8


def test_reflex_cone_refinement_converges():
    ch = ConeHarmonic(parse_angle("3pi/4"))
    errs = []
    for k in range(4, 9):
        dom = rasterize(ch.body(1.0), 2.0**-k)
        u = solve_dirichlet(discretize(Identity(), dom), boundary_data(dom, ch.value, False))
        exact = ch.value(np.stack(dom.coords(), -1))
        errs.append(float(np.max(np.abs(u.values - exact)[dom.interior])))
    assert all(b < a for a, b in zip(errs, errs[1:]))


@given(st.integers(0, 2**31 - 1), st.sampled_from(FIELDS))
def test_maximum_principle_random_data(seed, fld):
    rng = np.random.default_rng(seed)
    dom = rasterize(Ball((0.0, 0.0), 1.0), 2.0**-4)
    vals = np.full(dom.shape, np.nan)
    vals[dom.boundary] = rng.normal(size=int(dom.boundary.sum()))
    u = solve_dirichlet(discretize(fld, dom), ScalarField(dom, vals))
    assert check_max_principle(u).holds


@given(st.integers(0, 2**31 - 1))
def test_comparison_of_ordered_data(seed):
    rng = np.random.default_rng(seed)
    dom = rasterize(Ball((0.0, 0.0), 1.0), 2.0**-4)
    st_ = discretize(Checkerboard(), dom)
    lo = np.full(dom.shape, np.nan)
    lo[dom.boundary] = rng.normal(size=int(dom.boundary.sum()))
    hi = lo.copy()
    hi[dom.boundary] += rng.uniform(0, 1, size=int(dom.boundary.sum()))
    u1 = solve_dirichlet(st_, ScalarField(dom, lo))
    u2 = solve_dirichlet(st_, ScalarField(dom, hi))
    rep = compare(u1, u2, st_)
    assert rep.premise_holds and rep.conclusion_holds and rep.holds


def test_compare_reports_premise_failure():
    dom = rasterize(Ball((0.0, 0.0), 1.0), 2.0**-4)
    st_ = discretize(Identity(), dom)
    one = ScalarField.from_function(dom, lambda p: np.ones(p.shape[:-1]))
    zero = one.scale(0.0)
    rep = compare(one, zero, st_)
    assert not rep.premise_holds and rep.premise_witness is not None
    assert not rep.conclusion_holds and rep.holds


def test_field_io(tmp_path):
    dom = rasterize(Ball((0.0, 0.0), 0.5), 2.0**-3)
    u = ScalarField.from_function(dom, lambda p: p[..., 0] + 0.1)
    u.to_csv(tmp_path / "u.csv")
    rows = (tmp_path / "u.csv").read_text().strip().split("\n")
    assert rows[0] == "i,j,x,y,u" and len(rows) == dom.closed.sum() + 1
    i, j, x, y, v = rows[1].split(",")
    assert float(v) == float(x) + 0.1
    u.save(tmp_path / "u.npz")
    back = ScalarField.load(tmp_path / "u.npz")
    assert np.array_equal(back.values, u.values, equal_nan=True)
    u.to_gnuplot(tmp_path / "u.dat")
    text = (tmp_path / "u.dat").read_text()
    assert text.startswith("# x y u") and "np." not in text


def test_interpolate_and_restrict():
    dom = rasterize(Ball((0.0, 0.0), 1.0), 2.0**-4)
    u = ScalarField.from_function(dom, lambda p: 2 * p[..., 0] - p[..., 1])
    pts = np.array([[0.1, 0.2], [-0.33, 0.41]])
    assert np.allclose(u.interpolate(pts), 2 * pts[:, 0] - pts[:, 1])
    sub = rasterize(Annulus((0.0, 0.0), 0.5, 0.9), 2.0**-4)
    r = u.restrict(sub)
    assert np.allclose(r.values[sub.closed], (2 * sub.coords()[0] - sub.coords()[1])[sub.closed])
    with pytest.raises(ConfigError):
        u.restrict(rasterize(Ball((0.0, 0.0), 2.0), 2.0**-4))


def test_missing_boundary_data():
    vals = np.full(SQUARE.shape, np.nan)
    with pytest.raises(ConfigError):
        solve_dirichlet(discretize(Identity(), SQUARE), ScalarField(SQUARE, vals))
