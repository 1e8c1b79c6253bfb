"""Measurable coefficient fields, ellipticity checks and mollification.

Fields are evaluated on arrays of 2-D points and return the three
independent entries ``(a11, a12, a22)`` of a symmetric matrix.  The
ellipticity constant ``nu`` is the declared bound

    nu |xi|^2 <= a(x) xi . xi <= |xi|^2 / nu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve

from .errors import ConfigError, EllipticityViolation


def _eig2(a11, a12, a22):
    mean = 0.5 * (a11 + a22)
    rad = np.hypot(0.5 * (a11 - a22), a12)
    return mean - rad, mean + rad


def honest_nu(a11, a12, a22) -> float:
    """Largest nu satisfied by the given matrices."""
    lo, hi = _eig2(np.asarray(a11), np.asarray(a12), np.asarray(a22))
    return float(min(np.min(lo), 1.0 / np.max(hi)))


class CoefficientField:
    """Base class; subclasses implement :meth:`components`."""

    nu: float
    kind: str = "field"

    def components(self, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        raise NotImplementedError

    def matrices(self, points) -> np.ndarray:
        a11, a12, a22 = self.components(points)
        out = np.empty(np.shape(a11) + (2, 2))
        out[..., 0, 0] = a11
        out[..., 0, 1] = a12
        out[..., 1, 0] = a12
        out[..., 1, 1] = a22
        return out

    def to_csv(self, points, path) -> None:
        """Write rows ``x,y,a11,a12,a22``."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        a11, a12, a22 = self.components(pts)
        lines = ["x,y,a11,a12,a22"]
        lines += [",".join(repr(float(v)) for v in row)
                  for row in zip(pts[:, 0], pts[:, 1], a11, a12, a22)]
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class Identity(CoefficientField):
    nu: float = 1.0
    kind: str = "identity"

    def components(self, points):
        shape = np.shape(points)[:-1]
        return np.ones(shape), np.zeros(shape), np.ones(shape)


@dataclass(frozen=True)
class ConstantMatrix(CoefficientField):
    a11: float
    a12: float
    a22: float
    nu: float | None = None
    kind: str = "constant_matrix"

    def __post_init__(self):
        if self.nu is None:
            object.__setattr__(self, "nu", honest_nu(self.a11, self.a12, self.a22))

    def components(self, points):
        shape = np.shape(points)[:-1]
        return (np.full(shape, float(self.a11)), np.full(shape, float(self.a12)),
                np.full(shape, float(self.a22)))


ANGLE_FUNCTIONS: dict[str, Callable] = {
    "swirl": lambda x, y: np.arctan2(y, x),
    "wave": lambda x, y: 0.5 * math.pi * np.sin(3.0 * x) * np.cos(2.0 * y),
    "constant": lambda x, y: np.full_like(x, math.pi / 6),
}


@dataclass(frozen=True)
class Rotating(CoefficientField):
    """Eigenvalues ``(1/sqrt(ratio), sqrt(ratio))`` along axes rotated by
    ``angle(x, y)``.  Monotone for the 9-point scheme when ratio < 3 + 2*sqrt(2)."""

    ratio: float = 4.0
    angle: str = "swirl"
    kind: str = "rotating"

    def __post_init__(self):
        if self.ratio < 1:
            raise ConfigError("anisotropy ratio must be >= 1")
        if self.angle not in ANGLE_FUNCTIONS:
            raise ConfigError(f"unknown angle function {self.angle!r}")

    @property
    def nu(self) -> float:
        return 1.0 / math.sqrt(self.ratio)

    def components(self, points):
        p = np.asarray(points, dtype=float)
        th = ANGLE_FUNCTIONS[self.angle](p[..., 0], p[..., 1])
        lo, hi = 1.0 / math.sqrt(self.ratio), math.sqrt(self.ratio)
        c, s = np.cos(th), np.sin(th)
        return lo * c * c + hi * s * s, (hi - lo) * s * c, lo * s * s + hi * c * c


@dataclass(frozen=True)
class Checkerboard(CoefficientField):
    """Piecewise-constant field alternating two matrices on square cells.

    A node belongs to the cell ``floor((x - offset)/cell)``; the default
    offset keeps cell interfaces off dyadic lattices.
    """

    cell: float = 0.25
    even: tuple = (0.5, 0.0, 2.0)
    odd: tuple = (2.0, 0.0, 0.5)
    nu: float = 0.5
    offset: tuple = (2.0**-9, 2.0**-9)
    kind: str = "checkerboard"

    def parity(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        i = np.floor((p[..., 0] - self.offset[0]) / self.cell)
        j = np.floor((p[..., 1] - self.offset[1]) / self.cell)
        return ((i + j) % 2).astype(int)

    def components(self, points):
        odd = self.parity(points) == 1
        return tuple(np.where(odd, o, e) for e, o in zip(self.even, self.odd))


@dataclass(frozen=True, eq=False)
class Sampled(CoefficientField):
    """Field tabulated on a tensor lattice, bilinear in between."""

    ax: np.ndarray
    ay: np.ndarray
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    nu: float
    kind: str = "sampled"

    def components(self, points):
        p = np.asarray(points, dtype=float)
        out = []
        for a in (self.a11, self.a12, self.a22):
            f = RegularGridInterpolator((self.ax, self.ay), a, method="linear",
                                        bounds_error=False, fill_value=None)
            out.append(f(p.reshape(-1, 2)).reshape(p.shape[:-1]))
        return tuple(out)


@dataclass(frozen=True, eq=False)
class DriftField:
    """Vector field b(x) with the majorant ``C0 / (|x| |ln|x||)``."""

    b: Callable[[np.ndarray], np.ndarray]
    name: str = "drift"

    def __call__(self, points) -> np.ndarray:
        return self.b(np.asarray(points, dtype=float))

    @staticmethod
    def bound_profile(points, C0: float = 1.0) -> np.ndarray:
        rho = np.linalg.norm(np.asarray(points, dtype=float), axis=-1)
        return C0 / (rho * np.abs(np.log(rho)))

    def bound_constant(self, points) -> float:
        """Measured C0 = max |b(x)| |x| |ln|x|| over the points."""
        p = np.asarray(points, dtype=float)
        rho = np.linalg.norm(p, axis=-1)
        return float(np.max(np.linalg.norm(self(p), axis=-1) * rho * np.abs(np.log(rho))))


@dataclass(frozen=True)
class EllipticityReport:
    nu_hat: float
    lam_min: float
    lam_max: float
    valid: bool
    n_points: int


def _sample_points(where) -> np.ndarray:
    from .geometry import GridDomain

    if isinstance(where, GridDomain):
        return where.points(where.closed)
    return np.asarray(where, dtype=float).reshape(-1, 2)


def ellipticity_check(fld: CoefficientField, where, nu: float | None = None,
                      strict: bool = True) -> EllipticityReport:
    """Measure extreme eigenvalues on a grid's closed domain (or a point set).

    Raises
    ------
    EllipticityViolation
        When ``strict`` and the declared (or given) ``nu`` fails somewhere.
    """
    nu = fld.nu if nu is None else nu
    if not 0 < nu <= 1:
        raise ConfigError(f"nu must lie in (0, 1], got {nu}")
    pts = _sample_points(where)
    a11, a12, a22 = fld.components(pts)
    m = fld.matrices(pts[:1])
    if m.size and not np.array_equal(m[..., 0, 1], m[..., 1, 0]):
        raise ConfigError("coefficient matrix is not symmetric")
    lo, hi = _eig2(a11, a12, a22)
    tol = 1e-12
    bad = (lo < nu * (1 - tol)) | (hi > (1 + tol) / nu)
    valid = not bool(bad.any())
    if not valid and strict:
        k = int(np.argmax(bad))
        raise EllipticityViolation(pts[k], lo[k], hi[k], nu)
    nu_hat = float(min(np.min(lo), 1.0 / np.max(hi)))
    return EllipticityReport(nu_hat, float(np.min(lo)), float(np.max(hi)), valid, len(pts))


@dataclass(frozen=True)
class MollifierSpec:
    """Bump kernel exp(-1/(1 - |x/eps|^2)) on a lattice ``oversample`` times
    finer than the target grid, normalized to unit discrete mass."""

    epsilon: float
    oversample: int = 4

    def kernel(self, spacing: float) -> np.ndarray:
        m = int(math.floor(self.epsilon / spacing))
        k = np.arange(-m, m + 1) * spacing
        X, Y = np.meshgrid(k, k, indexing="ij")
        s = (X**2 + Y**2) / self.epsilon**2
        w = np.zeros_like(s)
        inside = s < 1
        w[inside] = np.exp(-1.0 / (1.0 - s[inside]))
        return w / w.sum()


def mollify(fld: CoefficientField, spec: MollifierSpec, grid) -> Sampled:
    """Convolve each entry with the bump kernel and sample on ``grid``'s nodes.

    ``grid`` is a :class:`~hopflab.geometry.GridDomain` (or anything with
    ``h`` and ``axes()``).  Convolution runs on a lattice ``oversample``
    times finer that contains every grid node.
    """
    h = grid.h
    hf = h / spec.oversample
    if spec.epsilon <= 2 * hf:
        raise ConfigError(f"epsilon={spec.epsilon:g} must exceed twice the sample spacing {hf:g}")
    ax, ay = grid.axes()
    ker = spec.kernel(hf)
    m = ker.shape[0] // 2
    fx = ax[0] + (np.arange(-m, (ax.size - 1) * spec.oversample + m + 1)) * hf
    fy = ay[0] + (np.arange(-m, (ay.size - 1) * spec.oversample + m + 1)) * hf
    FX, FY = np.meshgrid(fx, fy, indexing="ij")
    comps = fld.components(np.stack([FX, FY], axis=-1))
    out = []
    for a in comps:
        c = fftconvolve(a, ker, mode="valid")
        out.append(np.ascontiguousarray(c[:: spec.oversample, :: spec.oversample]))
    return Sampled(ax.copy(), ay.copy(), out[0], out[1], out[2], nu=fld.nu)
