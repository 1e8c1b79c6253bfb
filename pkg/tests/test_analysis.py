import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopflab import analysis as an
from hopflab import scenarios as sc
from hopflab.closedform import ConeHarmonic, parse_angle
from hopflab.coeffs import Identity
from hopflab.errors import ConfigError, DisconnectedShrunkenSet, InsufficientResolution
from hopflab.geometry import Ball, GraphFunction, LipschitzGraph, Union, rasterize, shrink
from hopflab.solver import ScalarField, boundary_data, discretize, solve_dirichlet


@pytest.fixture(scope="module")
def cusp_field():
    return sc.run(sc.by_id("T1.9-cusp"), keep_field=True).reports["_field"]


@pytest.fixture(scope="module")
def poisson_disk():
    dom = rasterize(Ball((0.0, 0.0), 1.0), 2.0**-7)
    g = sc.build_data({"kind": "bump", "angle": 0.0, "width": 0.02})
    return solve_dirichlet(discretize(Identity(), dom), boundary_data(dom, g, False))


# --- verdict rules --------------------------------------------------------------

T = 1e-3 * an.PROBE_RATIO ** np.arange(14)


@pytest.mark.parametrize("power,verdict", [(0.0, an.POSITIVE_LIMINF), (0.05, an.POSITIVE_LIMINF),
                                           (0.5, an.DECAYS), (1.0, an.DECAYS),
                                           (-0.5, an.BLOWS_UP), (0.15, an.INCONCLUSIVE)])
def test_hopf_verdict_power_laws(power, verdict):
    slope, v = an.hopf_verdict(T, 3.0 * T**power)
    assert v == verdict
    assert slope == pytest.approx(power, abs=1e-9)


def test_hopf_verdict_non_monotone_is_inconclusive():
    q = T * (1 + 0.5 * np.sin(40 * np.log(T)))
    assert an.hopf_verdict(T, q)[1] == an.INCONCLUSIVE


def test_hopf_verdict_nonpositive():
    assert an.hopf_verdict(T, -T)[1] == an.INCONCLUSIVE


@pytest.mark.parametrize("M,verdict", [([1, 0.5, 0.25, 0.1], an.DECAYS),
                                       ([1, 2, 4, 8], an.UNBOUNDED),
                                       ([1, 1.2, 0.9, 1.1], an.BOUNDED),
                                       ([1, 10, 0.5, 3], an.INCONCLUSIVE)])
def test_m_verdict(M, verdict):
    assert an.m_verdict(np.array(M, dtype=float))[1] == verdict


# --- closed forms -----------------------------------------------------------------


def test_cone_harmonic_slope_quadratic_exponent():
    probe = an.hopf_quotient(ConeHarmonic(math.pi / 4))
    assert probe.loglog_slope == pytest.approx(1.0, abs=0.05)
    assert probe.verdict == an.DECAYS


def test_cone_harmonic_reflex_growth_ratio():
    rep = an.m_ratio(ConeHarmonic(3 * math.pi / 4), 1.0)
    assert np.allclose(rep.ratios, 4 ** (1 / 3), rtol=0.05)
    assert rep.verdict == an.UNBOUNDED
    assert an.hopf_quotient(ConeHarmonic(3 * math.pi / 4)).verdict == an.BLOWS_UP


def test_half_plane_flat():
    ch = ConeHarmonic(math.pi / 2)
    assert an.hopf_quotient(ch).verdict == an.POSITIVE_LIMINF
    assert an.m_ratio(ch, 1.0).verdict == an.BOUNDED


@pytest.mark.parametrize("theta", ["pi/3", "2pi/5", "3pi/5", "2pi/3"])
def test_hopf_slope_matches_exponent(theta):
    ch = ConeHarmonic(parse_angle(theta))
    assert an.hopf_quotient(ch).loglog_slope == pytest.approx(ch.gamma - 1, abs=1e-3)


def test_probe_direction_must_enter():
    with pytest.raises(ConfigError):
        an.hopf_quotient(ConeHarmonic(math.pi / 4), l=(1.0, 0.0))


# --- grid fields --------------------------------------------------------------------


def test_grid_probe_skips_nodes_near_boundary(cusp_field):
    probe = an.hopf_quotient(cusp_field)
    assert probe.t_list[0] == pytest.approx(4 * cusp_field.domain.h)
    assert probe.decade[1] <= 10 * probe.decade[0] * (1 + 1e-12)
    header, rows = probe.rows()
    assert header == ("t", "q", "valid", "in_decade") and len(rows) == probe.t_list.size


def test_m_ratio_needs_resolution(cusp_field):
    with pytest.raises(InsufficientResolution):
        an.m_ratio(cusp_field, 0.1)


@settings(max_examples=10)
@given(st.floats(1e-3, 1e3))
def test_scale_invariance(cusp_field, c):
    u = cusp_field
    v = u.scale(c)
    assert an.hopf_quotient(v).verdict == an.hopf_quotient(u).verdict
    assert an.m_ratio(v, 2.0).verdict == an.m_ratio(u, 2.0).verdict
    a, b = an.harnack_ratio(u, 0.25), an.harnack_ratio(v, 0.25)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-12)


def test_harnack_ratio_non_increasing_in_delta(poisson_disk):
    ratios = [an.harnack_ratio(poisson_disk, d).ratio for d in np.linspace(0.1, 0.8, 15)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(ratios, ratios[1:]))


def test_poisson_disk_two_sided_bound(poisson_disk):
    # sup/inf over |x| < 1/2 for a positive harmonic function is at most 9
    rep = an.harnack_ratio(poisson_disk, 0.5)
    assert 1 < rep.ratio <= 9 * 1.05


def test_poisson_disk_center_bound(poisson_disk):
    # each value on |x| < 1/2 lies within a factor 3 of the centre value
    u0 = float(poisson_disk.interpolate(np.array([[0.0, 0.0]]))[0])
    vals = poisson_disk.values[shrink(poisson_disk.domain, 0.5).mask]
    assert vals.max() / u0 <= 3 * 1.05
    assert u0 / vals.min() <= 3 * 1.05


def test_harnack_rejects_disconnected():
    body = Union((Ball((-1.0, 0.0), 0.6), Ball((1.0, 0.0), 0.6)))
    dom = rasterize(body, 2.0**-5)
    u = ScalarField.from_function(dom, lambda p: np.ones(p.shape[:-1]))
    with pytest.raises(DisconnectedShrunkenSet):
        an.harnack_ratio(u, 0.2)


def test_lower_bound_scales_with_floor():
    dom = rasterize(Ball((0.0, 0.0), 1.0), 2.0**-6)
    st_ = discretize(Identity(), dom)
    out = []
    for mu in (1.0, 3.0):
        g = sc.build_data({"kind": "arc", "mu": mu})
        u = solve_dirichlet(st_, boundary_data(dom, g, False))
        out.append(an.harnack_ratio(u, 0.25, mu=mu).lower.c)
    assert out[0] > 0 and out[1] == pytest.approx(out[0], rel=1e-9)


def test_bauman_identical_fields():
    body = LipschitzGraph(GraphFunction("flat"), 0.0, 1.0)
    dom = rasterize(body, 2.0**-5)
    u = ScalarField.from_function(dom, lambda p: p[..., 1])
    rep = an.bauman_quotient(u, u, 0.5)
    assert rep.C_upper == pytest.approx(1.0) and rep.C_lower == pytest.approx(1.0)


@pytest.mark.parametrize("sid", ["T2.4-bauman", "C2.7-bauman"])
def test_bauman_product_at_least_one(sid):
    rep = sc.run(sc.by_id(sid), 2.0**-6).reports["bauman"]
    assert rep.C_upper >= 1 and rep.C_upper * rep.C_lower >= 1


def test_bauman_rejects_steep_graph():
    body = LipschitzGraph(GraphFunction("vee", 2.0), 2.0, 1.0)
    dom = rasterize(body, 2.0**-5)
    u = ScalarField.from_function(dom, lambda p: p[..., 1] + 1.0)
    with pytest.raises(ConfigError):
        an.bauman_quotient(u, u, 0.5, K=1.0)


def test_report_csv(cusp_field):
    text = an.m_ratio(cusp_field, 2.0).csv_text()
    assert text.splitlines()[0] == "r,M,ratio_to_previous"
