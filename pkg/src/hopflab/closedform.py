"""Exact barriers and reference solutions.

* power barriers ``|x - y0|**-lam`` on annuli (interior and exterior
  orientation) with the exponent ``lam = max(1, n/nu**2 - 2)``;
* cone harmonics ``rho**g cos(g*phi)`` in two dimensions, where
  ``x1 = rho sin(phi)``, ``x2 = rho cos(phi)`` and ``g = pi/(2*theta)``;
* the logarithmic pair ``x_n/|ln|x||`` and ``x_n |ln|x||`` with the drift
  that makes each of them a solution.

Residuals of the defining differential inequalities are checked with
fourth-order finite differences at sample points.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .coeffs import CoefficientField, DriftField, Identity
from .errors import ConfigError, OutOfDomain, SingularPoint
from .geometry import Cone


def barrier_lambda(n: int, nu: float) -> float:
    """Exponent making |x|**-lam a subsolution-type barrier for every
    operator with ellipticity ``nu`` in dimension ``n``."""
    if n < 2:
        raise ConfigError("dimension must be >= 2")
    if not 0 < nu <= 1:
        raise ConfigError(f"nu must lie in (0, 1], got {nu}")
    return max(1.0, n / nu**2 - 2.0)


@dataclass(frozen=True)
class BarrierSpec:
    """Radial barrier on an annulus around ``center``.

    interior: ``c*(|x-y0|**-lam - r0**-lam)`` on r0/2 <= |x-y0| <= r0,
    vanishing on the outer sphere and equal to the target level on the
    inner one.  exterior: ``c*(r0**-lam - |x-y0|**-lam)`` on
    r0 <= |x-y0| <= R0, vanishing on the inner sphere.
    """

    orientation: str
    lam: float
    center: tuple
    r0: float
    R0: float
    c: float

    def __post_init__(self):
        if self.orientation not in ("interior", "exterior"):
            raise ConfigError(f"unknown barrier orientation {self.orientation!r}")
        if not self.lam > 0:
            raise ConfigError("barrier exponent must be positive")

    @classmethod
    def interior(cls, center, r0: float, lam: float, level: float = 1.0) -> "BarrierSpec":
        """Barrier equal to ``level`` on |x-y0| = r0/2 and 0 on |x-y0| = r0."""
        c1 = r0**lam * level / (2.0**lam - 1.0)
        return cls("interior", float(lam), tuple(map(float, center)), float(r0), 0.5 * r0, c1)

    @classmethod
    def exterior(cls, center, r0: float, R0: float, lam: float, c2: float = 1.0) -> "BarrierSpec":
        if not R0 > r0:
            raise ConfigError("exterior barrier needs R0 > r0")
        return cls("exterior", float(lam), tuple(map(float, center)), float(r0), float(R0), float(c2))

    @property
    def radii(self) -> tuple[float, float]:
        return (min(self.r0, self.R0), max(self.r0, self.R0))

    @property
    def sign(self) -> int:
        """Expected sign of the operator applied to the barrier."""
        return 1 if self.orientation == "interior" else -1

    def value(self, x) -> np.ndarray:
        """Formula value without a domain check (usable as an extension)."""
        x = np.asarray(x, dtype=float)
        d = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        t = d ** (-self.lam) - self.r0 ** (-self.lam)
        return self.c * t if self.orientation == "interior" else -self.c * t

    def singular_distance(self, x) -> np.ndarray:
        return np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(self.center), axis=-1)

    def inward_slope(self) -> float:
        """Derivative at the vanishing sphere along the direction into the annulus."""
        return self.lam * self.c * self.r0 ** (-self.lam - 1.0)


def eval_barrier(spec: BarrierSpec, x) -> np.ndarray | float:
    """Barrier value at points of its closed annulus.

    Raises
    ------
    OutOfDomain
        A point lies outside the annulus.
    """
    x = np.asarray(x, dtype=float)
    d = spec.singular_distance(x)
    lo, hi = spec.radii
    tol = 1e-12 * hi
    if np.any((d < lo - tol) | (d > hi + tol)):
        raise OutOfDomain(f"point outside the annulus {lo:g} <= |x - y0| <= {hi:g}")
    v = spec.value(x)
    return float(v) if np.ndim(v) == 0 else v


_ANGLE = re.compile(r"^\s*([-+]?[0-9.]*)\s*\*?\s*pi\s*(?:/\s*([0-9.]+))?\s*$")


def parse_angle(text) -> float:
    """Read ``"3pi/4"``, ``"pi/2"``, ``"0.25*pi"`` or a plain float."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _ANGLE.match(str(text))
    if m:
        num = float(m.group(1)) if m.group(1) not in ("", "+", "-") else (-1.0 if m.group(1) == "-" else 1.0)
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot read angle {text!r}") from None


@dataclass(frozen=True)
class ConeHarmonic:
    """rho**g cos(g*phi) on the sector |phi| < theta, with g = pi/(2 theta)."""

    theta: float

    def __post_init__(self):
        if not 0 < self.theta < math.pi:
            raise ConfigError("aperture must lie in (0, pi)")

    @property
    def gamma(self) -> float:
        return math.pi / (2.0 * self.theta)

    @property
    def slope(self) -> float:
        """K with the sector equal to {x2 > K|x1|}."""
        return math.cos(self.theta) / math.sin(self.theta)

    def body(self, r0: float = 1.0) -> Cone:
        return Cone(self.slope, r0)

    def angle(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.arctan2(x[..., 0], x[..., 1])

    def in_domain(self, x) -> np.ndarray:
        return np.abs(self.angle(x)) < self.theta

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rho = np.linalg.norm(x, axis=-1)
        return rho**self.gamma * np.cos(self.gamma * self.angle(x))

    def singular_distance(self, x) -> np.ndarray:
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)


def eval_cone_harmonic(ch: ConeHarmonic, x) -> np.ndarray | float:
    """Cone harmonic on the closed sector.

    Raises
    ------
    OutOfDomain
        A point lies outside the closed sector.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(ch.angle(x)) > ch.theta * (1 + 1e-12) + 1e-15):
        raise OutOfDomain(f"point outside the sector |phi| <= {ch.theta:g}")
    v = ch.value(x)
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class LogPair:
    """``x_n/L`` (which=1) or ``x_n*L`` (which=2), L = |ln|x||, on the
    cylinder {|x'| < 1/2, 0 < x_n < 1/2}."""

    which: int = 1
    n: int = 2

    def __post_init__(self):
        if self.which not in (1, 2):
            raise ConfigError("LogPair.which must be 1 or 2")

    def in_domain(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xp = np.linalg.norm(x[..., :-1], axis=-1)
        return (xp < 0.5) & (x[..., -1] > 0) & (x[..., -1] < 0.5)

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rho = np.linalg.norm(x, axis=-1)
        xn = x[..., -1]
        with np.errstate(divide="ignore", invalid="ignore"):
            L = -np.log(rho)
            v = xn / L if self.which == 1 else xn * L
        return np.where(xn == 0, 0.0, v)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rho2 = np.sum(x * x, axis=-1)
        L = -0.5 * np.log(rho2)
        xn = x[..., -1]
        en = np.zeros_like(x)
        en[..., -1] = 1.0
        if self.which == 1:
            return en / L[..., None] + (xn / (rho2 * L * L))[..., None] * x
        return en * L[..., None] - (xn / rho2)[..., None] * x

    def laplacian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rho2 = np.sum(x * x, axis=-1)
        L = -0.5 * np.log(rho2)
        xn = x[..., -1]
        if self.which == 1:
            return xn * (self.n + 2.0 / L) / (rho2 * L * L)
        return -self.n * xn / rho2

    def drift(self, x, guard: float = 1e-12) -> np.ndarray:
        """b = -Lap(u) Du / |Du|^2.

        Raises
        ------
        SingularPoint
            |Du| falls below ``guard`` times the local scale |u|/|x| + 1.
        """
        x = np.asarray(x, dtype=float)
        g = self.gradient(x)
        g2 = np.sum(g * g, axis=-1)
        scale = np.abs(self.value(x)) / np.linalg.norm(x, axis=-1) + 1.0
        bad = ~(np.sqrt(g2) >= guard * scale)
        if np.any(bad):
            k = int(np.argmax(bad.ravel()))
            raise SingularPoint(f"Du vanishes near x={tuple(x.reshape(-1, x.shape[-1])[k])}")
        return -(self.laplacian(x) / g2)[..., None] * g

    def drift_field(self) -> DriftField:
        return DriftField(self.drift, name=f"logpair{self.which}")

    def singular_distance(self, x) -> np.ndarray:
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)


# ---------------------------------------------------------------------------
# finite-difference residuals

_C1 = {-2: 1.0 / 12.0, -1: -8.0 / 12.0, 1: 8.0 / 12.0, 2: -1.0 / 12.0}
_C2 = {-2: -1.0 / 12.0, -1: 16.0 / 12.0, 0: -30.0 / 12.0, 1: 16.0 / 12.0, 2: -1.0 / 12.0}


def fd_derivatives(f, x: np.ndarray, eta: np.ndarray):
    """Fourth-order central differences: gradient and (uxx, uxy, uyy)."""
    x = np.asarray(x, dtype=float)
    e = eta[:, None]
    ex = np.array([1.0, 0.0]) * e
    ey = np.array([0.0, 1.0]) * e
    gx = sum(c * f(x + k * ex) for k, c in _C1.items()) / eta
    gy = sum(c * f(x + k * ey) for k, c in _C1.items()) / eta
    uxx = sum(c * f(x + k * ex) for k, c in _C2.items()) / eta**2
    uyy = sum(c * f(x + k * ey) for k, c in _C2.items()) / eta**2
    uxy = sum(ca * cb * f(x + a * ex + b * ey)
              for a, ca in _C1.items() for b, cb in _C1.items()) / eta**2
    return np.stack([gx, gy], -1), uxx, uxy, uyy


@dataclass(frozen=True)
class ResidualStats:
    """Signed residuals r and local scales s at the sample points.

    ``expected`` is ``+1`` (r >= 0), ``-1`` (r <= 0) or ``0`` (r = 0); a
    point passes when the residual violates the expectation by at most
    ``tol * s``.
    """

    residual: np.ndarray
    scale: np.ndarray
    expected: int
    tol: float

    @property
    def relative(self) -> np.ndarray:
        return self.residual / self.scale

    @property
    def worst(self) -> float:
        r = self.relative
        if self.expected > 0:
            return float(max(0.0, -r.min()))
        if self.expected < 0:
            return float(max(0.0, r.max()))
        return float(np.abs(r).max())

    @property
    def passed(self) -> bool:
        return self.worst <= self.tol

    @property
    def n_points(self) -> int:
        return int(self.residual.size)


def supersolution_residual(form, fld: CoefficientField | None = None, points=None,
                           eta_rel: float = 1e-3, tol: float = 1e-6) -> ResidualStats:
    """Finite-difference residual of the identity or inequality ``form`` obeys.

    The local scale at x is the sum of the absolute operator terms plus
    tr(a) (|u|/d**2 + |Du|/d), d the distance to the singular locus.

    Barriers: sum a_ij D_ij u has the barrier's sign; cone harmonics: the
    Laplacian vanishes (for the given field, expected 0); log pairs:
    sum a_ij D_ij u + b . Du = 0 with the pair's own drift.

    Raises
    ------
    SingularPoint
        A sample point sits on the singular locus of the form.
    """
    fld = Identity() if fld is None else fld
    x = np.asarray(points, dtype=float).reshape(-1, 2)
    dist = form.singular_distance(x)
    if np.any(dist <= 1e-9):
        raise SingularPoint("sample point at the singular center")
    eta = eta_rel * dist
    grad, uxx, uxy, uyy = fd_derivatives(form.value, x, eta)
    a11, a12, a22 = fld.components(x)
    terms = [a11 * uxx, 2.0 * a12 * uxy, a22 * uyy]
    if isinstance(form, LogPair):
        b = form.drift(x)
        terms.append(np.sum(b * grad, axis=-1))
        expected = 0
    elif isinstance(form, BarrierSpec):
        expected = form.sign
    else:
        expected = 0
    res = sum(terms)
    # local scale: the operator's terms plus the natural size of second
    # derivatives at distance ``dist`` from the singular locus
    u = np.abs(form.value(x))
    du = np.linalg.norm(grad, axis=-1)
    scale = sum(np.abs(t) for t in terms) + (a11 + a22) * (u / dist**2 + du / dist)
    scale = np.where(scale > 0, scale, 1.0)
    return ResidualStats(res, scale, expected, tol)
