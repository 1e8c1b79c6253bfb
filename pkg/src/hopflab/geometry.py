"""Bodies, membership tests, grid rasterization and shrunken sets.

Bodies are open sets described in canonical coordinates (boundary point at
the origin, inner normal along the last axis) and placed in the world by a
rigid :class:`Pose`.  Membership accepts arrays of points of shape
``(..., n)``; rasterization is two-dimensional.

Node classes on a :class:`GridDomain`::

    EXTERIOR = 0   INTERIOR = 1   GAMMA = 2 (vanishing portion)   OTHER = 3
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import ConfigError, EmptyShrunkenSet, ResolutionTooCoarse
from .profile import ConeFit, PsiProfile

EXTERIOR, INTERIOR, GAMMA, OTHER = 0, 1, 2, 3
CLASS_NAMES = {EXTERIOR: "exterior", INTERIOR: "interior", GAMMA: "boundary_gamma",
               OTHER: "boundary_other"}


@dataclass(frozen=True)
class Pose:
    """Rigid placement: world = origin + R(angle) @ canonical (2-D rotation)."""

    origin: tuple = (0.0, 0.0)
    angle: float = 0.0

    def _rot(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def to_canonical(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        o = np.zeros(n)
        o[: len(self.origin)] = self.origin[:n]
        y = x - o
        if self.angle == 0.0:
            return y
        if n != 2:
            raise ConfigError("rotated poses are only supported in two dimensions")
        return y @ self._rot()

    def to_world(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        n = y.shape[-1]
        if self.angle != 0.0:
            y = y @ self._rot().T
        o = np.zeros(n)
        o[: len(self.origin)] = self.origin[:n]
        return y + o

    def axis(self) -> np.ndarray:
        """World direction of the canonical last axis (2-D)."""
        return self._rot()[:, 1].copy()


def _radial(y: np.ndarray):
    return np.linalg.norm(y[..., :-1], axis=-1), y[..., -1]


def _densify(pts: np.ndarray, spacing: float) -> np.ndarray:
    """Insert points so consecutive samples are at most ``spacing`` apart."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2:
        return pts
    seg = np.diff(pts, axis=0)
    n = np.maximum(1, np.ceil(np.linalg.norm(seg, axis=1) / spacing).astype(int))
    starts = np.repeat(pts[:-1], n, axis=0)
    steps = np.repeat(seg / n[:, None], n, axis=0)
    k = np.concatenate([np.arange(m) for m in n])[:, None]
    return np.vstack([starts + k * steps, pts[-1:]])


def _segment(a, b, spacing):
    return _densify(np.array([a, b], dtype=float), spacing)


def _graph_polyline(f: Callable, r0: float, spacing: float, jumps=(), sign=1.0,
                    shift=0.0) -> np.ndarray:
    """Samples of x_n = sign*f(|x'|) + shift for x' in [-r0, r0], with vertical
    segments at jump radii."""
    m = max(2, int(math.ceil(r0 / spacing)) + 1)
    r = np.linspace(0.0, r0, m)
    jr = [j[0] for j in jumps]
    r = np.unique(np.concatenate([r, jr]))
    half = []
    jump_map = {j[0]: j for j in jumps}
    for ri, yi in zip(r, f(r)):
        if ri in jump_map:
            half.append((ri, sign * jump_map[ri][1] + shift))
        half.append((ri, sign * yi + shift))
    half = np.array(half)
    left = half[::-1].copy()
    left[:, 0] *= -1.0
    return _densify(np.vstack([left, half[1:]]), spacing)


def _arc(center, radius, t0, t1, spacing):
    m = max(8, int(math.ceil(abs(t1 - t0) * radius / spacing)) + 1)
    t = np.linspace(t0, t1, m)
    return np.stack([center[0] + radius * np.sin(t), center[1] + radius * np.cos(t)], axis=1)


class Body:
    """Base class for open bodies.

    Subclasses implement ``_contains`` on canonical coordinates and
    ``_surfaces`` returning ``[(points, is_gamma), ...]`` in canonical 2-D
    coordinates.
    """

    pose: Pose

    def contains(self, x) -> np.ndarray:
        """Exact membership of world points ``x`` (shape ``(..., n)``)."""
        return self._contains(self.pose.to_canonical(np.asarray(x, dtype=float)))

    def surfaces(self, spacing: float) -> list[tuple[np.ndarray, bool]]:
        return [(self.pose.to_world(p), g) for p, g in self._surfaces(spacing)]

    def bbox(self) -> tuple[float, float, float, float]:
        pts = np.vstack([p for p, _ in self.surfaces(self._scale() / 512.0)])
        return (float(pts[:, 0].min()), float(pts[:, 0].max()),
                float(pts[:, 1].min()), float(pts[:, 1].max()))

    def tips(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Cusp or corner tips ``(vertex, axis)`` of bodies that pinch to a point."""
        return []

    def _scale(self) -> float:
        raise NotImplementedError

    def _contains(self, y):
        raise NotImplementedError

    def _surfaces(self, spacing):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class InteriorQ(Body):
    """{|x'| < r0, 0 < x_n - psi(|x'|) < r0} with psi's upper endpoint."""

    profile: PsiProfile
    pose: Pose = Pose()

    def _contains(self, y):
        r, xn = _radial(y)
        inside = r < self.profile.r0
        d = xn - self.profile.upper(np.where(inside, r, 0.0))
        return inside & (d > 0) & (d < self.profile.r0)

    def _surfaces(self, s):
        p, r0 = self.profile, self.profile.r0
        top_r = p.upper(r0)
        return [
            (_graph_polyline(p.upper, r0, s, p.jumps()), True),
            (_graph_polyline(p.upper, r0, s, p.jumps(), shift=r0), False),
            (_segment((r0, top_r), (r0, top_r + r0), s), False),
            (_segment((-r0, top_r), (-r0, top_r + r0), s), False),
        ]

    def _scale(self):
        return self.profile.r0

    def tips(self):
        if self.profile.is_zero:
            return []
        return [(self.pose.to_world(np.zeros(2)), self.pose.axis())]


@dataclass(frozen=True, eq=False)
class ExteriorQStar(Body):
    """{|x'| < r0, -psi(|x'|) < x_n < r0}."""

    profile: PsiProfile
    pose: Pose = Pose()

    def _contains(self, y):
        r, xn = _radial(y)
        inside = r < self.profile.r0
        lo = -self.profile.upper(np.where(inside, r, 0.0))
        return inside & (xn > lo) & (xn < self.profile.r0)

    def _surfaces(self, s):
        p, r0 = self.profile, self.profile.r0
        bot = -p.upper(r0)
        return [
            (_graph_polyline(p.upper, r0, s, p.jumps(), sign=-1.0), True),
            (_segment((-r0, r0), (r0, r0), s), False),
            (_segment((r0, bot), (r0, r0), s), False),
            (_segment((-r0, bot), (-r0, r0), s), False),
        ]

    def _scale(self):
        return self.profile.r0


@dataclass(frozen=True, eq=False)
class Cone(Body):
    """{|x| < r0, x_n > K |x'|}; K < 0 gives the reflex (non-convex) cone."""

    K: float
    r0: float = 1.0
    pose: Pose = Pose()

    def __post_init__(self):
        if not self.r0 > 0:
            raise ConfigError("cone radius must be positive")

    @property
    def aperture(self) -> float:
        """Half-opening angle measured from the axis."""
        return math.atan2(1.0, self.K)

    def _contains(self, y):
        r, xn = _radial(y)
        return (np.linalg.norm(y, axis=-1) < self.r0) & (xn > self.K * r)

    def _surfaces(self, s):
        a = self.aperture
        ray = np.array([math.sin(a), math.cos(a)]) * self.r0
        left = ray * np.array([-1.0, 1.0])
        return [
            (_densify(np.array([left, (0.0, 0.0), ray]), s), True),
            (_arc((0.0, 0.0), self.r0, -a, a, s), False),
        ]

    def _scale(self):
        return self.r0

    def tips(self):
        if self.K <= 0:
            return []
        return [(self.pose.to_world(np.zeros(2)), self.pose.axis())]


@dataclass(frozen=True, eq=False)
class Cylinder(Body):
    """C_r = {|x'| < r, 0 < x_n < r}; the flat bottom is the vanishing portion."""

    r: float
    pose: Pose = Pose()

    def _contains(self, y):
        rr, xn = _radial(y)
        return (rr < self.r) & (xn > 0) & (xn < self.r)

    def _surfaces(self, s):
        r = self.r
        return [
            (_segment((-r, 0.0), (r, 0.0), s), True),
            (_segment((-r, r), (r, r), s), False),
            (_segment((r, 0.0), (r, r), s), False),
            (_segment((-r, 0.0), (-r, r), s), False),
        ]

    def _scale(self):
        return self.r


@dataclass(frozen=True)
class GraphFunction:
    """Lipschitz graph phi with phi(0) = 0.

    ``flat``: 0; ``vee``: slope*|x|; ``wave``: slope/freq * (1 - cos(freq*x)).
    """

    kind: str = "flat"
    slope: float = 0.0
    freq: float = 1.0

    def __post_init__(self):
        if self.kind not in ("flat", "vee", "wave"):
            raise ConfigError(f"unknown graph kind {self.kind!r}")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "flat":
            return np.zeros_like(x)
        if self.kind == "vee":
            return self.slope * np.abs(x)
        return self.slope / self.freq * (1.0 - np.cos(self.freq * x))

    @property
    def lipschitz(self) -> float:
        return 0.0 if self.kind == "flat" else abs(self.slope)


@dataclass(frozen=True, eq=False)
class LipschitzGraph(Body):
    """Omega_r = {|x'| < r, 0 < x_n - phi(x') < r} for a graph with constant K."""

    phi: GraphFunction
    K: float
    r: float
    pose: Pose = Pose()

    def __post_init__(self):
        if self.phi.lipschitz > self.K * (1 + 1e-12):
            raise ConfigError(f"graph has Lipschitz constant {self.phi.lipschitz} > K={self.K}")

    def _contains(self, y):
        x1, xn = y[..., 0], y[..., -1]
        d = xn - self.phi(x1)
        return (np.abs(x1) < self.r) & (d > 0) & (d < self.r)

    def _surfaces(self, s):
        r = self.r
        x = _densify(np.stack([np.linspace(-r, r, 2049), np.zeros(2049)], 1), s)[:, 0]
        bottom = np.stack([x, self.phi(x)], 1)
        pr, pl = float(self.phi(r)), float(self.phi(-r))
        return [
            (_densify(bottom, s), True),
            (_densify(bottom + np.array([0.0, r]), s), False),
            (_segment((r, pr), (r, pr + r), s), False),
            (_segment((-r, pl), (-r, pl + r), s), False),
        ]

    def _scale(self):
        return self.r


@dataclass(frozen=True, eq=False)
class Ball(Body):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    gamma: bool = False
    pose: Pose = Pose()

    def _contains(self, y):
        return np.linalg.norm(y - np.asarray(self.center, dtype=float), axis=-1) < self.radius

    def _surfaces(self, s):
        return [(_arc(self.center, self.radius, -math.pi, math.pi, s), self.gamma)]

    def _scale(self):
        return self.radius


@dataclass(frozen=True, eq=False)
class Annulus(Body):
    """{r_in < |x - center| < r_out}; the inner circle is the vanishing portion."""

    center: tuple = (0.0, 0.0)
    r_in: float = 0.5
    r_out: float = 1.0
    pose: Pose = Pose()

    def __post_init__(self):
        if not 0 < self.r_in < self.r_out:
            raise ConfigError("annulus needs 0 < r_in < r_out")

    def _contains(self, y):
        d = np.linalg.norm(y - np.asarray(self.center, dtype=float), axis=-1)
        return (d > self.r_in) & (d < self.r_out)

    def _surfaces(self, s):
        return [
            (_arc(self.center, self.r_in, -math.pi, math.pi, s), True),
            (_arc(self.center, self.r_out, -math.pi, math.pi, s), False),
        ]

    def _scale(self):
        return self.r_out


@dataclass(frozen=True, eq=False)
class Box(Body):
    """Axis-aligned open rectangle; ``gamma_bottom`` marks the lower edge."""

    lo: tuple = (0.0, 0.0)
    hi: tuple = (1.0, 1.0)
    gamma_bottom: bool = False
    pose: Pose = Pose()

    def _contains(self, y):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        return np.all((y > lo) & (y < hi), axis=-1)

    def _surfaces(self, s):
        (a, b), (c, d) = self.lo, self.hi
        return [
            (_segment((a, b), (c, b), s), self.gamma_bottom),
            (_segment((a, d), (c, d), s), False),
            (_segment((a, b), (a, d), s), False),
            (_segment((c, b), (c, d), s), False),
        ]

    def _scale(self):
        return max(self.hi[0] - self.lo[0], self.hi[1] - self.lo[1])


@dataclass(frozen=True, eq=False)
class Union(Body):
    parts: tuple
    pose: Pose = Pose()

    def contains(self, x):
        x = self.pose.to_canonical(np.asarray(x, dtype=float))
        out = np.zeros(x.shape[:-1], dtype=bool)
        for b in self.parts:
            out |= b.contains(x)
        return out

    def surfaces(self, s):
        out = []
        for k, b in enumerate(self.parts):
            for pts, g in b.surfaces(s):
                keep = np.ones(len(pts), dtype=bool)
                for m, other in enumerate(self.parts):
                    if m != k:
                        keep &= ~other.contains(pts)
                if keep.any():
                    out.append((self.pose.to_world(pts[keep]), g))
        return out

    def tips(self):
        return [(self.pose.to_world(v), a) for b in self.parts for v, a in b.tips()]

    def _scale(self):
        return max(b._scale() for b in self.parts)


@dataclass(frozen=True, eq=False)
class Intersection(Union):
    def contains(self, x):
        x = self.pose.to_canonical(np.asarray(x, dtype=float))
        out = np.ones(x.shape[:-1], dtype=bool)
        for b in self.parts:
            out &= b.contains(x)
        return out

    def surfaces(self, s):
        out = []
        for k, b in enumerate(self.parts):
            for pts, g in b.surfaces(s):
                keep = np.ones(len(pts), dtype=bool)
                for m, other in enumerate(self.parts):
                    if m != k:
                        keep &= other.contains(pts)
                if keep.any():
                    out.append((self.pose.to_world(pts[keep]), g))
        return out


def fitted_cone(fit: ConeFit, pose: Pose = Pose()) -> Cone:
    """The cone {|x| < R0, x_n > K0|x'|} of a profile cone fit."""
    return Cone(fit.K0, fit.R0, pose)


def contains(body: Body, x) -> np.ndarray | bool:
    """Membership of a single point or an array of points."""
    out = body.contains(x)
    return bool(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Rasterized closed domain on a uniform node lattice.

    ``node_class[i, j]`` labels the node at ``(x0 + i*h, y0 + j*h)``.
    """

    h: float
    index0: tuple[int, int]
    node_class: np.ndarray
    body: Body | None = None
    n_dropped: int = 0
    dim: int = 2
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.node_class.shape

    @property
    def origin(self) -> tuple[float, float]:
        return (self.index0[0] * self.h, self.index0[1] * self.h)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        nx, ny = self.shape
        return (x0, x0 + (nx - 1) * self.h, y0, y0 + (ny - 1) * self.h)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.shape
        return ((self.index0[0] + np.arange(nx)) * self.h,
                (self.index0[1] + np.arange(ny)) * self.h)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        ax, ay = self.axes()
        return np.meshgrid(ax, ay, indexing="ij")

    def points(self, mask=None) -> np.ndarray:
        X, Y = self.coords()
        if mask is None:
            return np.stack([X, Y], axis=-1)
        return np.stack([X[mask], Y[mask]], axis=-1)

    @property
    def interior(self) -> np.ndarray:
        return self.node_class == INTERIOR

    @property
    def boundary(self) -> np.ndarray:
        return (self.node_class == GAMMA) | (self.node_class == OTHER)

    @property
    def gamma(self) -> np.ndarray:
        return self.node_class == GAMMA

    @property
    def closed(self) -> np.ndarray:
        return self.node_class != EXTERIOR

    def counts(self) -> dict[str, int]:
        return {CLASS_NAMES[c]: int(np.sum(self.node_class == c)) for c in CLASS_NAMES}

    def to_pgm(self, path) -> None:
        """ASCII graymap, one class digit per node, top row (largest y) first."""
        nx, ny = self.shape
        rows = [" ".join(str(int(v)) for v in self.node_class[:, j]) for j in range(ny - 1, -1, -1)]
        text = f"P2\n{nx} {ny}\n3\n" + "\n".join(rows) + "\n"
        Path(path).write_text(text)

    def to_csv(self, path) -> None:
        """Rows ``i,j,class`` for every node, i fastest-varying last."""
        nx, ny = self.shape
        ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        lines = ["i,j,class"]
        lines += [f"{i},{j},{c}" for i, j, c in zip(ii.ravel(), jj.ravel(), self.node_class.ravel())]
        Path(path).write_text("\n".join(lines) + "\n")


def _lattice(lo: float, hi: float, h: float) -> tuple[int, int]:
    return int(math.floor(lo / h + 1e-9)) - 1, int(math.ceil(hi / h - 1e-9)) + 1


def rasterize(body: Body, h: float, drop_thin: bool = True,
              bbox: Sequence[float] | None = None) -> GridDomain:
    """Classify lattice nodes ``x = h*(i, j)`` against ``body``.

    Interior nodes are the lattice points inside the open body (optionally
    minus nodes where the body is thinner than ``h`` along an axis); boundary
    nodes are the remaining 8-neighbours of interior nodes, labelled as the
    vanishing portion when their nearest body surface sample is one.

    Raises
    ------
    ResolutionTooCoarse
        A cusp tip has no interior node on its axis within 4h of the axis
        and above height 4h.
    """
    if not h > 0:
        raise ConfigError("grid spacing must be positive")
    bx = body.bbox() if bbox is None else tuple(bbox)
    i0, i1 = _lattice(bx[0], bx[1], h)
    j0, j1 = _lattice(bx[2], bx[3], h)
    ax = np.arange(i0, i1 + 1) * h
    ay = np.arange(j0, j1 + 1) * h
    X, Y = np.meshgrid(ax, ay, indexing="ij")
    P = np.stack([X, Y], axis=-1)
    inside = body.contains(P)
    n_dropped = 0
    if drop_thin and inside.any():
        idx = np.nonzero(inside)
        pts = P[idx]
        half = 0.5 * h
        thin = np.zeros(len(pts), dtype=bool)
        for e in (np.array([half, 0.0]), np.array([0.0, half])):
            thin |= ~body.contains(pts + e) & ~body.contains(pts - e)
        n_dropped = int(thin.sum())
        inside[idx[0][thin], idx[1][thin]] = False
    if not inside.any():
        raise ResolutionTooCoarse(f"no interior nodes at h={h:g}")
    near = ndimage.binary_dilation(inside, structure=np.ones((3, 3), dtype=bool))
    bnd = near & ~inside
    cls = np.zeros(inside.shape, dtype=np.int8)
    cls[inside] = INTERIOR
    cls[bnd] = OTHER
    if bnd.any():
        gam, oth = [], []
        for pts, g in body.surfaces(h / 4.0):
            (gam if g else oth).append(pts)
        bpts = P[bnd]
        dg = cKDTree(np.vstack(gam)).query(bpts)[0] if gam else np.full(len(bpts), np.inf)
        do = cKDTree(np.vstack(oth)).query(bpts)[0] if oth else np.full(len(bpts), np.inf)
        lab = np.where(dg <= do, GAMMA, OTHER).astype(np.int8)
        cls[bnd] = lab
    for vertex, axis in body.tips():
        rel = P[inside] - vertex
        along = rel @ axis
        across = np.abs(rel @ np.array([axis[1], -axis[0]]))
        if not np.any((across < 4 * h) & (along > 4 * h)):
            raise ResolutionTooCoarse(f"cusp tip at {tuple(vertex)} unresolved at h={h:g}")
    cls.setflags(write=False)
    return GridDomain(h=float(h), index0=(i0, j0), node_class=cls, body=body,
                      n_dropped=n_dropped)


@dataclass(frozen=True, eq=False)
class ShrunkenSet:
    """Interior nodes farther than ``delta`` from every non-interior node."""

    delta: float
    mask: np.ndarray
    connected: bool
    n_components: int


def distance_to_complement(domain: GridDomain) -> np.ndarray:
    """Euclidean distance from each node to the nearest non-interior node center."""
    inner = np.pad(domain.interior, 1, constant_values=False)
    return ndimage.distance_transform_edt(inner)[1:-1, 1:-1] * domain.h


def shrink(domain: GridDomain, delta: float) -> ShrunkenSet:
    """Omega^delta on the grid, with face-adjacency connectivity.

    Raises
    ------
    EmptyShrunkenSet
        No interior node is farther than ``delta`` from the complement.
    """
    if delta < 2 * domain.h * (1 - 1e-12):
        raise ConfigError(f"delta={delta:g} below 2h={2 * domain.h:g}")
    mask = distance_to_complement(domain) > delta
    if not mask.any():
        raise EmptyShrunkenSet(f"no node farther than {delta:g} from the boundary")
    _, ncomp = ndimage.label(mask)
    mask.setflags(write=False)
    return ShrunkenSet(float(delta), mask, ncomp == 1, int(ncomp))
