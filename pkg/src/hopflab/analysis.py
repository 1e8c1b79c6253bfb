"""Boundary quantities measured on grid solutions or closed forms.

* Hopf quotient q(t) = u(t*l)/t along a direction l with verdicts
  from a log-log slope fit over the smallest resolvable decade;
* M over dyadic shells, sup of u(x)/|x| for r_{k+1} <= |x| < r_k;
* interior Harnack ratio sup/inf on the shrunken set, with the lower
  bound constant c = inf/mu when a boundary floor mu is given;
* Bauman quotients of two positive solutions on a Lipschitz box.

Every report offers ``rows()`` (CSV header + rows) and ``summary()``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .errors import (ConfigError, DegenerateReference, DisconnectedShrunkenSet,
                     InsufficientResolution)
from .geometry import GridDomain, LipschitzGraph, GraphFunction, shrink
from .solver import ScalarField

POSITIVE_LIMINF = "PositiveLiminf"
DECAYS = "DecaysToZero"
BLOWS_UP = "BlowsUp"
INCONCLUSIVE = "Inconclusive"
BOUNDED = "Bounded"
UNBOUNDED = "Unbounded"

HOPF_VERDICTS = (POSITIVE_LIMINF, DECAYS, BLOWS_UP, INCONCLUSIVE)
M_VERDICTS = (BOUNDED, DECAYS, UNBOUNDED, INCONCLUSIVE)

PROBE_RATIO = 2.0**0.25
MIN_PROBES = 8
FLAT_SLOPE = 0.1
STEEP_SLOPE = 0.2
BOUNDED_SPREAD = 4.0
DECAY_RATIO = 0.6
GROWTH_RATIO = 1.5
CLOSED_FORM_T_MIN = 1e-4


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class _Report:
    def csv_text(self) -> str:
        header, rows = self.rows()
        lines = [",".join(header)] + [",".join(_fmt(v) for v in r) for r in rows]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# field adapters


class _GridSampler:
    def __init__(self, u: ScalarField, guard: float):
        self.u = u
        d = u.domain
        self.h = d.h
        pts = d.points(~d.interior)
        self.tree = cKDTree(pts) if len(pts) else None
        self.guard = guard

    def valid(self, p: np.ndarray) -> np.ndarray:
        vals = self.u.interpolate(p)
        ok = np.isfinite(vals)
        if self.tree is not None:
            dist = self.tree.query(p)[0]
            ok &= dist >= self.guard * (1 - 1e-12)
        return ok

    def __call__(self, p):
        return self.u.interpolate(p)


class _FormSampler:
    def __init__(self, form):
        self.form = form

    def valid(self, p):
        return self.form.in_domain(p)

    def __call__(self, p):
        return self.form.value(p)


def _sampler(u, guard=4.0):
    if isinstance(u, ScalarField):
        return _GridSampler(u, guard * u.domain.h)
    if hasattr(u, "value") and hasattr(u, "in_domain"):
        return _FormSampler(u)
    raise ConfigError(f"cannot sample {type(u).__name__}")


# ---------------------------------------------------------------------------
# Hopf quotient


@dataclass(frozen=True, eq=False)
class HopfProbe(_Report):
    """Quotients u(t l)/t at heights t (ascending) and the fitted verdict.

    ``decade`` holds the heights used for the verdict; ``slope`` is the
    least-squares slope of ln q against ln t on that decade.
    """

    direction: tuple
    t_list: np.ndarray
    q_list: np.ndarray
    valid: np.ndarray
    decade: tuple
    loglog_slope: float
    q_band: tuple
    verdict: str

    def rows(self):
        lo, hi = self.decade
        rows = [(t, q, int(ok), int(ok and lo <= t <= hi))
                for t, q, ok in zip(self.t_list, self.q_list, self.valid)]
        return ("t", "q", "valid", "in_decade"), rows

    def summary(self, key: str = "") -> str:
        return (f"{key} hopf l=({self.direction[0]:.4g},{self.direction[1]:.4g}) "
                f"slope={self.loglog_slope:.4f} band=[{self.q_band[0]:.6g},{self.q_band[1]:.6g}] "
                f"verdict={self.verdict}").strip()


def _monotone(q: np.ndarray, increasing: bool, slack: float) -> bool:
    d = np.diff(q)
    tol = slack * np.max(np.abs(q))
    return bool(np.all(d >= -tol)) if increasing else bool(np.all(d <= tol))


def hopf_verdict(t: np.ndarray, q: np.ndarray, slack: float = 1e-6) -> tuple[float, str]:
    """Slope of ln q versus ln t and the banded verdict (t ascending)."""
    if np.any(q <= 0) or not np.all(np.isfinite(q)):
        return float("nan"), INCONCLUSIVE
    slope = float(np.polyfit(np.log(t), np.log(q), 1)[0])
    if -FLAT_SLOPE < slope < FLAT_SLOPE:
        return slope, POSITIVE_LIMINF
    if slope >= STEEP_SLOPE and _monotone(q, True, slack):
        return slope, DECAYS
    if slope <= -STEEP_SLOPE and _monotone(q, False, slack):
        return slope, BLOWS_UP
    return slope, INCONCLUSIVE


def hopf_quotient(u, l=(0.0, 1.0), decades: int = 2, t_min: float | None = None,
                  origin=(0.0, 0.0), slack: float = 1e-6) -> HopfProbe:
    """Probe u(origin + t l)/t on heights t_min * 2**(j/4).

    For grid fields ``t_min`` defaults to 4h and probes closer than 4h to a
    non-interior node are discarded; closed forms start at 1e-4.  The
    verdict uses the first decade above the smallest valid height.

    Raises
    ------
    InsufficientResolution
        Fewer than 8 valid probes in the verdict decade.
    """
    l = np.asarray(l, dtype=float)
    if l[-1] <= 0:
        raise ConfigError("probe direction must point into the domain (l_n > 0)")
    l = l / np.linalg.norm(l)
    samp = _sampler(u)
    if t_min is None:
        t_min = 4.0 * u.domain.h if isinstance(u, ScalarField) else CLOSED_FORM_T_MIN
    n = int(math.floor(decades * math.log(10.0) / math.log(PROBE_RATIO) + 1e-9)) + 1
    t = t_min * PROBE_RATIO ** np.arange(n)
    p = np.asarray(origin, dtype=float) + t[:, None] * l
    ok = samp.valid(p)
    q = np.full(n, np.nan)
    q[ok] = samp(p[ok]) / t[ok]
    if not ok.any():
        raise InsufficientResolution("no valid probe point")
    t0 = t[ok][0]
    sel = ok & (t <= 10.0 * t0 * (1 + 1e-12))
    if sel.sum() < MIN_PROBES:
        raise InsufficientResolution(f"only {int(sel.sum())} valid probes in the first decade")
    slope, verdict = hopf_verdict(t[sel], q[sel], slack)
    band = (float(np.min(q[sel])), float(np.max(q[sel])))
    return HopfProbe(tuple(float(v) for v in l), t, q, ok, (float(t0), float(t[sel][-1])),
                     slope, band, verdict)


# ---------------------------------------------------------------------------
# M over dyadic shells


@dataclass(frozen=True, eq=False)
class MrReport(_Report):
    """M_k = sup of u(x)/|x| over the shell r_{k+1} <= |x| < r_k."""

    radii: np.ndarray
    M_values: np.ndarray
    ratios: np.ndarray
    verdict: str

    def rows(self):
        ratios = np.concatenate([[np.nan], self.ratios])
        return ("r", "M", "ratio_to_previous"), list(zip(self.radii, self.M_values, ratios))

    def summary(self, key: str = "") -> str:
        tail = ",".join(f"{r:.4f}" for r in self.ratios[-3:])
        return f"{key} M ratios=[{tail}] verdict={self.verdict}".strip()


def m_verdict(M: np.ndarray) -> tuple[np.ndarray, str]:
    """Verdict over the last four shell values."""
    last = M[-4:]
    ratios = last[1:] / last[:-1]
    if np.all(ratios <= DECAY_RATIO):
        return ratios, DECAYS
    if np.all(ratios >= GROWTH_RATIO):
        return ratios, UNBOUNDED
    if last.max() / last.min() <= BOUNDED_SPREAD:
        return ratios, BOUNDED
    return ratios, INCONCLUSIVE


def _shell_sup_grid(u: ScalarField, center, r0: float, k_max):
    d = u.domain
    pts = d.points(d.interior) - np.asarray(center, dtype=float)
    vals = u.values[d.interior]
    rho = np.linalg.norm(pts, axis=-1)
    gam = d.points(d.gamma) - np.asarray(center, dtype=float)
    near = np.linalg.norm(gam, axis=-1) < r0
    scale = max(float(np.nanmax(np.abs(u.values))), 1e-300)
    if np.any(np.abs(u.values[d.gamma][near]) > 1e-12 * scale):
        raise ConfigError("field does not vanish on the vanishing portion near the origin")
    radii, M = [], []
    k = 0
    while True:
        r_hi = r0 * 4.0**-k
        if r_hi < 4.0 * d.h or (k_max is not None and k > k_max):
            break
        shell = (rho >= r_hi / 4.0) & (rho < r_hi)
        if not shell.any():
            break
        radii.append(r_hi)
        M.append(float(np.max(vals[shell] / rho[shell])))
        k += 1
    return np.array(radii), np.array(M)


def _shell_sup_form(form, center, r0: float, k_max):
    k_max = 6 if k_max is None else k_max
    phi = np.linspace(-math.pi, math.pi, 2049)
    radii, M = [], []
    for k in range(k_max + 1):
        r_hi = r0 * 4.0**-k
        rho = np.geomspace(r_hi / 4.0, r_hi, 97)[:-1]
        R, P = np.meshgrid(rho, phi, indexing="ij")
        pts = np.stack([R * np.sin(P), R * np.cos(P)], -1) + np.asarray(center, dtype=float)
        ok = form.in_domain(pts)
        radii.append(r_hi)
        M.append(float(np.max(form.value(pts[ok]) / R[ok])))
    return np.array(radii), np.array(M)


def m_ratio(u, r0: float, k_max: int | None = None, center=(0.0, 0.0)) -> MrReport:
    """Shell sups of u/|x| at radii r0 * 4**-k.

    Grid fields use interior nodes and stop once r_k < 4h; closed forms are
    sampled on polar grids (default k_max 6).

    Raises
    ------
    InsufficientResolution
        Fewer than four shells are resolvable.
    """
    if isinstance(u, ScalarField):
        radii, M = _shell_sup_grid(u, center, r0, k_max)
    else:
        radii, M = _shell_sup_form(u, center, r0, k_max)
    if len(M) < 4:
        raise InsufficientResolution(f"only {len(M)} resolvable dyadic shells below r0={r0:g}")
    ratios, verdict = m_verdict(M)
    return MrReport(radii, M, M[1:] / M[:-1], verdict)


# ---------------------------------------------------------------------------
# interior Harnack


@dataclass(frozen=True)
class LowerBoundReport:
    mu: float
    c: float


@dataclass(frozen=True)
class HarnackReport(_Report):
    delta: float
    sup_val: float
    inf_val: float
    ratio: float
    n_nodes: int
    lower: LowerBoundReport | None = None

    def rows(self):
        row = (self.delta, self.sup_val, self.inf_val, self.ratio, self.n_nodes,
               self.lower.mu if self.lower else float("nan"),
               self.lower.c if self.lower else float("nan"))
        return ("delta", "sup", "inf", "ratio", "nodes", "mu", "c"), [row]

    def summary(self, key: str = "") -> str:
        s = f"{key} harnack delta={self.delta:g} ratio={self.ratio:.6g}"
        if self.lower:
            s += f" c={self.lower.c:.6g}"
        return s.strip()


def harnack_ratio(u: ScalarField, delta: float, mu: float | None = None) -> HarnackReport:
    """sup/inf of u over the shrunken set at distance ``delta``.

    Raises
    ------
    DisconnectedShrunkenSet
        The shrunken set splits into several components.
    """
    ss = shrink(u.domain, delta)
    if not ss.connected:
        raise DisconnectedShrunkenSet(f"shrunken set has {ss.n_components} components")
    vals = u.values[ss.mask]
    if np.any(vals <= 0):
        raise ConfigError("field must be positive on the shrunken set")
    sup_v, inf_v = float(vals.max()), float(vals.min())
    lower = None
    if mu is not None:
        if not mu > 0:
            raise ConfigError("boundary floor mu must be positive")
        lower = LowerBoundReport(float(mu), inf_v / mu)
    return HarnackReport(float(delta), sup_v, inf_v, sup_v / inf_v, int(vals.size), lower)


# ---------------------------------------------------------------------------
# Bauman quotient


@dataclass(frozen=True)
class BaumanReport(_Report):
    r: float
    sup_quotient: float
    inf_quotient: float
    ref_quotient: float
    C_upper: float
    C_lower: float
    n_nodes: int

    def rows(self):
        return (("r", "sup_quotient", "inf_quotient", "ref_quotient", "C_upper", "C_lower",
                 "nodes"),
                [(self.r, self.sup_quotient, self.inf_quotient, self.ref_quotient,
                  self.C_upper, self.C_lower, self.n_nodes)])

    def summary(self, key: str = "") -> str:
        return (f"{key} bauman r={self.r:g} C_upper={self.C_upper:.6g} "
                f"C_lower={self.C_lower:.6g}").strip()


def _values_at(v, domain: GridDomain, mask, points):
    if isinstance(v, ScalarField):
        if v.domain.shape != domain.shape:
            raise ConfigError("fields live on different grids")
        return v.values[mask], v.interpolate(points)
    pts = domain.points(mask)
    return np.asarray(v(pts), dtype=float), np.asarray(v(points), dtype=float)


def bauman_quotient(u: ScalarField, v, r: float, K: float | None = None,
                    phi: GraphFunction | Callable | None = None) -> BaumanReport:
    """sup and inf of u/v over {|x1| <= r, 0 < x2 - phi(x1) <= r}, relative
    to the quotient at the reference point (0, phi(0) + r).

    ``v`` is a grid field on the same domain or a callable of points.
    ``phi`` defaults to the graph of the domain's Lipschitz body, else flat.

    Raises
    ------
    DegenerateReference
        |v| at the reference point is below 1e-14 of its scale.
    """
    d = u.domain
    if phi is None:
        phi = d.body.phi if isinstance(d.body, LipschitzGraph) else GraphFunction("flat")
    if K is not None and isinstance(phi, GraphFunction) and phi.lipschitz > K * (1 + 1e-12):
        raise ConfigError(f"graph Lipschitz constant exceeds K={K}")
    X, Y = d.coords()
    gap = Y - phi(X)
    tol = 1e-12 * r
    mask = d.interior & (np.abs(X) <= r + tol) & (gap > 0) & (gap <= r + tol)
    if not mask.any():
        raise InsufficientResolution("no interior nodes in the Bauman box")
    ref_pt = np.array([[0.0, float(phi(np.array([0.0]))[0]) + r]])
    vv, v_ref = _values_at(v, d, mask, ref_pt)
    uu = u.values[mask]
    u_ref = u.interpolate(ref_pt)
    v_ref = float(np.ravel(v_ref)[0])
    u_ref = float(np.ravel(u_ref)[0])
    if not np.isfinite(v_ref) or abs(v_ref) < 1e-14 * max(float(np.max(np.abs(vv))), 1e-300):
        raise DegenerateReference(f"v at the reference point is {v_ref:g}")
    if np.any(vv <= 0) or np.any(uu <= 0):
        raise ConfigError("u and v must be positive in the Bauman box")
    q = uu / vv
    ref = u_ref / v_ref
    sup_q, inf_q = float(q.max()), float(q.min())
    return BaumanReport(float(r), sup_q, inf_q, ref, sup_q / ref, ref / inf_q, int(q.size))
