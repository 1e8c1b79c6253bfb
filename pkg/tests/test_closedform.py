import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hopflab.closedform import (BarrierSpec, ConeHarmonic, LogPair, barrier_lambda,
                                eval_barrier, eval_cone_harmonic, fd_derivatives, parse_angle,
                                supersolution_residual)
from hopflab.coeffs import Checkerboard, ConstantMatrix, Identity, Rotating
from hopflab.errors import ConfigError, OutOfDomain, SingularPoint

RNG = np.random.default_rng(7)


def annulus_points(lo, hi, n=1000, center=(0.0, 0.0)):
    rho = RNG.uniform(lo, hi, n)
    t = RNG.uniform(-math.pi, math.pi, n)
    return np.stack([rho * np.cos(t), rho * np.sin(t)], -1) + np.asarray(center)


@pytest.mark.parametrize("n,nu,lam", [(2, 1.0, 1.0), (2, 0.5, 6.0), (3, 1.0, 1.0),
                                      (3, 0.5, 10.0), (2, 0.25, 30.0)])
def test_barrier_lambda(n, nu, lam):
    assert barrier_lambda(n, nu) == lam
    assert barrier_lambda(n, nu) + 2 >= n / nu**2


def test_interior_barrier_levels():
    spec = BarrierSpec.interior((0.5, -0.2), 2.0, 3.0, level=1.7)
    c = np.array([0.5, -0.2])
    assert eval_barrier(spec, c + [1.0, 0.0]) == pytest.approx(1.7, rel=1e-14)
    assert eval_barrier(spec, c + [0.0, 2.0]) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(OutOfDomain):
        eval_barrier(spec, c + [0.1, 0.0])


def test_exterior_barrier_vanishes_inside():
    spec = BarrierSpec.exterior((0.0, 0.0), 1.0, 2.0, 6.0, c2=2.0)
    assert eval_barrier(spec, [1.0, 0.0]) == 0.0
    assert eval_barrier(spec, [0.0, 2.0]) == pytest.approx(2.0 * (1 - 2.0**-6))
    assert spec.inward_slope() == pytest.approx(12.0)


@pytest.mark.parametrize("fld", [Identity(), Checkerboard(), Rotating(4.0), Rotating(2.0, "wave"),
                                 ConstantMatrix(1.5, 0.4, 0.8)], ids=lambda f: f.kind)
@pytest.mark.parametrize("orientation", ["interior", "exterior"])
def test_barrier_signs(fld, orientation):
    lam = barrier_lambda(2, fld.nu)
    if orientation == "interior":
        spec = BarrierSpec.interior((0.0, 0.0), 1.0, lam)
    else:
        spec = BarrierSpec.exterior((0.0, 0.0), 1.0, 2.0, lam)
    res = supersolution_residual(spec, fld, annulus_points(*spec.radii))
    assert res.passed and res.n_points == 1000


def test_barrier_sign_fails_with_small_exponent():
    # lam below the threshold: the anisotropic field breaks the sign somewhere
    spec = BarrierSpec.interior((0.0, 0.0), 1.0, 0.5)
    res = supersolution_residual(spec, ConstantMatrix(0.5, 0.0, 2.0), annulus_points(0.5, 1.0))
    assert not res.passed


@pytest.mark.parametrize("text,val", [("pi/2", math.pi / 2), ("3pi/4", 3 * math.pi / 4),
                                      ("0.25*pi", math.pi / 4), ("-pi/6", -math.pi / 6),
                                      ("1.2", 1.2), (0.5, 0.5)])
def test_parse_angle(text, val):
    assert parse_angle(text) == pytest.approx(val)


def test_parse_angle_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_angle("half")


@pytest.mark.parametrize("theta", ["pi/4", "pi/3", "pi/2", "2pi/3", "3pi/4"])
def test_cone_harmonic(theta):
    ch = ConeHarmonic(parse_angle(theta))
    rho = RNG.uniform(0.05, 1.0, 1000)
    phi = RNG.uniform(-ch.theta, ch.theta, 1000)
    pts = np.stack([rho * np.sin(phi), rho * np.cos(phi)], -1)
    assert supersolution_residual(ch, Identity(), pts).passed
    edge = np.array([math.sin(ch.theta), math.cos(ch.theta)])
    assert abs(eval_cone_harmonic(ch, 0.7 * edge)) < 1e-14
    assert np.all(eval_cone_harmonic(ch, pts) > 0)
    with pytest.raises(OutOfDomain):
        eval_cone_harmonic(ch, [0.0, -1.0])


def test_cone_harmonic_exponents():
    assert ConeHarmonic(math.pi / 4).gamma == pytest.approx(2.0)
    assert ConeHarmonic(3 * math.pi / 4).gamma == pytest.approx(2.0 / 3.0)
    assert ConeHarmonic(math.pi / 4).slope == pytest.approx(1.0)
    assert ConeHarmonic(3 * math.pi / 4).slope == pytest.approx(-1.0)


@pytest.mark.parametrize("which", [1, 2])
def test_logpair_gradient_matches_fd(which):
    lp = LogPair(which)
    pts = np.stack([RNG.uniform(-0.2, 0.2, 200), RNG.uniform(0.01, 0.3, 200)], -1)
    eta = 1e-4 * np.linalg.norm(pts, axis=-1)
    grad, uxx, _, uyy = fd_derivatives(lp.value, pts, eta)
    assert np.allclose(grad, lp.gradient(pts), rtol=1e-7, atol=1e-9)
    assert np.allclose(uxx + uyy, lp.laplacian(pts), rtol=1e-4, atol=1e-6)


@pytest.mark.parametrize("which", [1, 2])
def test_logpair_drift_identity(which):
    lp = LogPair(which)
    rho = RNG.uniform(0.01, 0.25, 1000)
    t = RNG.uniform(0.02, math.pi - 0.02, 1000)
    pts = np.stack([rho * np.cos(t), rho * np.sin(t)], -1)
    assert supersolution_residual(lp, Identity(), pts).passed
    b = lp.drift(pts)
    lap = lp.laplacian(pts)
    assert np.allclose(lap + np.sum(b * lp.gradient(pts), axis=-1), 0, atol=1e-10 * np.abs(lap).max())


def test_logpair_drift_majorant():
    # |b| |x| |ln |x|| stays bounded on a shrinking half-disk
    pts = np.stack([RNG.uniform(-0.1, 0.1, 2000), RNG.uniform(1e-4, 0.1, 2000)], -1)
    pts = pts[np.linalg.norm(pts, axis=-1) < 0.1]
    for which in (1, 2):
        C0 = LogPair(which).drift_field().bound_constant(pts)
        assert np.isfinite(C0) and C0 < 20


def test_logpair_singular_gradient():
    lp = LogPair(2)
    with pytest.raises(SingularPoint):
        lp.drift(np.array([[0.0, math.exp(-1.0)]]))
    with pytest.raises(SingularPoint):
        supersolution_residual(lp, Identity(), np.array([[0.0, 0.0]]))


@given(st.floats(0.5, 5.0), st.floats(0.5, 2.0))
def test_barrier_scale_invariance(level, r0):
    a = BarrierSpec.interior((0.0, 0.0), r0, 2.0, level)
    b = BarrierSpec.interior((0.0, 0.0), r0, 2.0, 2 * level)
    x = np.array([0.7 * r0, 0.0])
    assert eval_barrier(b, x) == pytest.approx(2 * eval_barrier(a, x), rel=1e-12)
