import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hopflab.errors import ConfigError, EmptyShrunkenSet, ResolutionTooCoarse
from hopflab.geometry import (EXTERIOR, GAMMA, INTERIOR, OTHER, Annulus, Ball, Box, Cone,
                              Cylinder, ExteriorQStar, InteriorQ, LipschitzGraph, GraphFunction,
                              Pose, Union, distance_to_complement, fitted_cone, rasterize,
                              shrink)
from hopflab.profile import PsiProfile, cone_fit


def test_cylinder_classification():
    dom = rasterize(Cylinder(1.0), 0.25)
    X, Y = dom.coords()
    inside = (np.abs(X) < 1) & (Y > 0) & (Y < 1)
    assert np.array_equal(dom.interior, inside)
    # bottom edge nodes strictly between the corners are the vanishing portion
    bottom = (Y == 0) & (np.abs(X) < 1)
    assert np.all(dom.node_class[bottom] == GAMMA)
    assert np.all(dom.node_class[(Y == 1) & (np.abs(X) < 1)] == OTHER)


def test_interior_q_zero_is_cylinder():
    a = rasterize(InteriorQ(PsiProfile.zero(1.0)), 2.0**-5)
    b = rasterize(Cylinder(1.0), 2.0**-5)
    assert a.shape == b.shape and a.index0 == b.index0
    assert np.array_equal(a.interior, b.interior)
    assert np.array_equal(a.boundary, b.boundary)


@pytest.mark.parametrize("h", [2.0**-5, 2.0**-6, 2.0**-7])
def test_ball_area(h):
    dom = rasterize(Ball((0.3, -0.2), 0.8), h)
    assert dom.interior.sum() * h * h == pytest.approx(math.pi * 0.64, rel=8 * h)


def test_box_counts_exact():
    dom = rasterize(Box((0.0, 0.0), (1.0, 1.0)), 0.125)
    c = dom.counts()
    assert c["interior"] == 49
    assert c["boundary_gamma"] + c["boundary_other"] == 4 * 8


def test_annulus_gamma_on_inner_circle():
    dom = rasterize(Annulus((0.0, 0.0), 0.5, 1.0), 2.0**-6)
    rho = np.hypot(*dom.coords())
    assert np.all(rho[dom.gamma] < 0.75)
    assert np.all(rho[dom.node_class == OTHER] > 0.75)


def test_pose_round_trip():
    pose = Pose((0.3, -1.0), 0.7)
    x = np.random.default_rng(0).normal(size=(50, 2))
    assert np.allclose(pose.to_world(pose.to_canonical(x)), x)


def test_rotated_body_membership():
    body = Cylinder(1.0, Pose((0.0, 0.0), math.pi / 2))
    assert Cylinder(1.0).contains(np.array([0.0, 0.5]))
    assert body.contains(body.pose.to_world(np.array([0.0, 0.5])))


def test_union_of_disjoint_balls_disconnects():
    body = Union((Ball((-1.0, 0.0), 0.6), Ball((1.0, 0.0), 0.6)))
    ss = shrink(rasterize(body, 2.0**-5), 0.2)
    assert not ss.connected and ss.n_components == 2


def test_shrink_rejects_small_delta_and_empty():
    dom = rasterize(Ball((0.0, 0.0), 0.5), 2.0**-5)
    with pytest.raises(ConfigError):
        shrink(dom, dom.h)
    with pytest.raises(EmptyShrunkenSet):
        shrink(dom, 0.6)


def test_shrink_disk():
    h = 2.0**-6
    dom = rasterize(Ball((0.0, 0.0), 1.0), h)
    ss = shrink(dom, 0.5)
    rho = np.hypot(*dom.coords())
    assert np.all(rho[ss.mask] < 0.5 + 2 * h)
    assert np.all(ss.mask[rho < 0.5 - 2 * h])


def test_unresolved_cusp_raises():
    with pytest.raises(ResolutionTooCoarse):
        rasterize(Cone(0.02, 0.05), 2.0**-3)


def test_thin_nodes_dropped_near_cusp():
    body = ExteriorQStar(PsiProfile.power(0.25, 1.5, 2.0))
    dom = rasterize(body, 2.0**-6)
    assert dom.n_dropped >= 0
    # no interior node on the cusp axis below its resolvable height
    X, Y = dom.coords()
    assert not dom.interior[(X == 0) & (Y == 0)].any()


def test_mask_exports(tmp_path):
    dom = rasterize(Box((0.0, 0.0), (0.5, 0.25)), 0.125)
    dom.to_pgm(tmp_path / "m.pgm")
    dom.to_csv(tmp_path / "m.csv")
    lines = (tmp_path / "m.pgm").read_text().split("\n")
    nx, ny = dom.shape
    assert lines[0] == "P2" and lines[1] == f"{nx} {ny}" and lines[2] == "3"
    assert len(lines) == 3 + ny + 1
    rows = (tmp_path / "m.csv").read_text().strip().split("\n")
    assert rows[0] == "i,j,class" and len(rows) == nx * ny + 1


def test_fitted_cone_inside_interior_q():
    prof = PsiProfile.power(1.0, 1.5, 1.0)
    fit = cone_fit(prof, 1.0)
    rng = np.random.default_rng(1)
    rho = fit.R0 * np.sqrt(rng.uniform(0, 1, 10_000))
    half = math.atan(1.0 / fit.K0)
    phi = rng.uniform(-half, half, 10_000)
    pts = np.stack([rho * np.sin(phi), rho * np.cos(phi)], -1)
    pts = pts[fitted_cone(fit).contains(pts)]
    assert len(pts) > 9000
    assert np.all(InteriorQ(prof).contains(pts))


bodies = st.one_of(
    st.builds(lambda r: Ball((0.1, 0.2), r), st.floats(0.3, 1.0)),
    st.builds(lambda K: Cone(K, 1.0), st.floats(0.3, 3.0)),
    st.builds(lambda c, p: InteriorQ(PsiProfile.power(c, p, 1.0)), st.floats(0.1, 1.0),
              st.floats(1.2, 2.5)),
    st.builds(lambda c, p: ExteriorQStar(PsiProfile.power(c, p, 1.0)), st.floats(0.1, 1.0),
              st.floats(1.2, 2.5)),
    st.builds(lambda s: LipschitzGraph(GraphFunction("vee", s), max(s, 0.0), 0.5),
              st.floats(0.0, 1.5)),
)


@given(bodies, st.sampled_from([2.0**-4, 2.0**-5]))
def test_rasterization_classes(body, h):
    dom = rasterize(body, h)
    pts_in = dom.points(dom.interior)
    assert np.all(body.contains(pts_in))
    assert set(np.unique(dom.node_class)) <= {EXTERIOR, INTERIOR, GAMMA, OTHER}
    # boundary nodes are 8-neighbours of interior nodes and not interior
    bnd = dom.boundary
    assert not np.any(bnd & dom.interior)
    I, J = np.nonzero(bnd)
    pad = np.pad(dom.interior, 1)
    neigh = np.zeros(len(I), dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            neigh |= pad[I + 1 + di, J + 1 + dj]
    assert neigh.all()


@given(bodies, st.sampled_from([2.0**-4, 2.0**-5]))
def test_boundary_nodes_close_to_interior(body, h):
    dom = rasterize(body, h)
    d = distance_to_complement(dom)
    assert np.all(d[dom.interior] >= h * (1 - 1e-12))
    assert np.all(d[~dom.interior] == 0)


@given(bodies, st.sampled_from([2.0**-4, 2.0**-5]))
def test_gamma_nodes_near_vanishing_surface(body, h):
    from scipy.spatial import cKDTree

    dom = rasterize(body, h)
    gam = [p for p, g in body.surfaces(h / 8) if g]
    if not gam or not dom.gamma.any():
        return
    d = cKDTree(np.vstack(gam)).query(dom.points(dom.gamma))[0]
    assert np.all(d <= math.sqrt(2) * h + h / 8)
