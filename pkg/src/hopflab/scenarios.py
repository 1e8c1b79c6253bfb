"""Pre-registered experiments and their runner.

A :class:`Scenario` is plain data: nested mappings of the same shape as the
CLI config sections (``profile``, ``body``, ``coeffs``, ``data``,
``probes``, ``expect``).  :func:`run` builds the objects, performs the
solves and measurements, and compares verdicts with the expectations.

Scenario ids are stable public identifiers.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

from . import analysis as an
from .closedform import (BarrierSpec, ConeHarmonic, LogPair, barrier_lambda, parse_angle,
                         supersolution_residual)
from .coeffs import (Checkerboard, ConstantMatrix, Identity, MollifierSpec, Rotating,
                     ellipticity_check, mollify)
from .errors import ConfigError
from .geometry import (Annulus, Ball, Box, Cone, Cylinder, ExteriorQStar, GraphFunction,
                       InteriorQ, LipschitzGraph, Pose, rasterize, shrink)
from .profile import CONVERGENT, DIVERGENT, PsiProfile, dini_integral
from .solver import (ScalarField, boundary_data, check_max_principle, compare, discretize,
                     solve_dirichlet)

SOLVE_KINDS = ("solve", "closedform", "harnack", "lower_bound", "bauman", "mollify", "residual")

ALLOWED_BY_STATUS = {
    CONVERGENT: {an.POSITIVE_LIMINF, an.BOUNDED},
    DIVERGENT: {an.DECAYS, an.BLOWS_UP, an.UNBOUNDED},
}


# ---------------------------------------------------------------------------
# builders from plain mappings


def _vec(v, n=2) -> tuple:
    if isinstance(v, str):
        v = [float(t) for t in v.split(",")]
    v = tuple(float(t) for t in v)
    if len(v) != n:
        raise ConfigError(f"expected {n} components, got {v}")
    return v


def build_profile(spec: Mapping | None) -> PsiProfile | None:
    if not spec:
        return None
    kind = spec.get("kind", "power")
    r0 = float(spec.get("r0", 1.0))
    if kind == "zero":
        return PsiProfile.zero(r0)
    if kind == "cone":
        return PsiProfile.cone(float(spec.get("K", 1.0)), r0)
    if kind == "power":
        return PsiProfile.power(float(spec.get("c", 1.0)), float(spec.get("p", 1.5)), r0)
    if kind == "powerlog":
        return PsiProfile.powerlog(float(spec.get("c", 1.0)), float(spec.get("p", 1.0)),
                                   float(spec.get("q", 2.0)), r0)
    if kind == "tabulated":
        if "table" not in spec:
            raise ConfigError("tabulated profile needs profile.table (CSV path)")
        return PsiProfile.from_csv(spec["table"], spec.get("r0"))
    raise ConfigError(f"unknown profile kind {kind!r}")


def build_body(spec: Mapping, profile: PsiProfile | None):
    shape = spec.get("shape")
    pose = Pose(_vec(spec.get("origin", (0.0, 0.0))), float(spec.get("angle", 0.0)))
    if shape in ("interior_q", "exterior_qstar"):
        if profile is None:
            raise ConfigError(f"{shape} needs a profile section")
        cls = InteriorQ if shape == "interior_q" else ExteriorQStar
        return cls(profile, pose)
    if shape == "cone":
        if "theta" in spec:
            return ConeHarmonic(parse_angle(spec["theta"])).body(float(spec.get("r0", 1.0)))
        return Cone(float(spec.get("K", 1.0)), float(spec.get("r0", 1.0)), pose)
    if shape == "cylinder":
        return Cylinder(float(spec.get("r", 1.0)), pose)
    if shape == "lipschitz_graph":
        g = GraphFunction(spec.get("graph", "flat"), float(spec.get("slope", 0.0)),
                          float(spec.get("freq", 1.0)))
        return LipschitzGraph(g, float(spec.get("K", g.lipschitz)), float(spec.get("r", 1.0)), pose)
    if shape == "ball":
        return Ball(_vec(spec.get("center", (0.0, 0.0))), float(spec.get("radius", 1.0)),
                    bool(spec.get("gamma", False)), pose)
    if shape == "annulus":
        return Annulus(_vec(spec.get("center", (0.0, 0.0))), float(spec.get("r_in", 0.5)),
                       float(spec.get("r_out", 1.0)), pose)
    if shape == "box":
        return Box(_vec(spec.get("lo", (0.0, 0.0))), _vec(spec.get("hi", (1.0, 1.0))),
                   bool(spec.get("gamma", False)), pose)
    raise ConfigError(f"unknown body shape {shape!r}")


def build_coeffs(spec: Mapping | None):
    spec = spec or {}
    kind = spec.get("kind", "identity")
    if kind == "identity":
        return Identity()
    if kind == "constant_matrix":
        nu = spec.get("nu")
        return ConstantMatrix(float(spec.get("a11", 1.0)), float(spec.get("a12", 0.0)),
                              float(spec.get("a22", 1.0)), None if nu is None else float(nu))
    if kind == "rotating":
        return Rotating(float(spec.get("ratio", 4.0)), spec.get("angle", "swirl"))
    if kind == "checkerboard":
        ev = _vec(spec.get("even", (0.5, 0.0, 2.0)), 3)
        od = _vec(spec.get("odd", (2.0, 0.0, 0.5)), 3)
        return Checkerboard(float(spec.get("cell", 0.25)), ev, od, float(spec.get("nu", 0.5)),
                            _vec(spec.get("offset", (2.0**-9, 2.0**-9))))
    raise ConfigError(f"unknown coefficient kind {kind!r}")


def _field_on(spec: Mapping | None, domain):
    fld = build_coeffs(spec)
    eps = (spec or {}).get("epsilon")
    if eps:
        fld = mollify(fld, MollifierSpec(float(eps)), domain)
    return fld


DATA_KINDS = ("xn_plus", "xn_squared", "affine", "quadratic", "bump", "arc", "graph_gap",
              "constant")


def build_data(spec: Mapping | None):
    """Boundary function g(points) described by ``spec``."""
    spec = spec or {}
    kind = spec.get("kind", "xn_plus")
    if kind == "xn_plus":
        return lambda p: np.maximum(p[:, 1], 0.0)
    if kind == "xn_squared":
        return lambda p: p[:, 1] ** 2
    if kind == "affine":
        a = float(spec.get("alpha", 0.0))
        bx, by = _vec(spec.get("beta", (0.0, 1.0)))
        return lambda p: a + bx * p[:, 0] + by * p[:, 1]
    if kind == "quadratic":
        return lambda p: p[:, 0] ** 2 - p[:, 1] ** 2
    if kind == "constant":
        v = float(spec.get("value", 1.0))
        return lambda p: np.full(len(p), v)
    if kind == "bump":
        # narrow Gaussian in the polar angle around ``angle``
        c = _vec(spec.get("center", (0.0, 0.0)))
        a0 = parse_angle(spec.get("angle", 0.0))
        w = float(spec.get("width", 0.05))

        def bump(p):
            ang = np.arctan2(p[:, 1] - c[1], p[:, 0] - c[0])
            d = np.angle(np.exp(1j * (ang - a0)))
            return np.exp(-0.5 * (d / w) ** 2)
        return bump
    if kind == "arc":
        c = _vec(spec.get("center", (0.0, 0.0)))
        a0 = parse_angle(spec.get("angle", "-pi/2"))
        half = parse_angle(spec.get("half_width", "pi/6"))
        mu = float(spec.get("mu", 1.0))

        def arc(p):
            ang = np.arctan2(p[:, 1] - c[1], p[:, 0] - c[0])
            return np.where(np.abs(np.angle(np.exp(1j * (ang - a0)))) <= half, mu, 0.0)
        return arc
    if kind == "graph_gap":
        # (x2 - phi(x1)) * (1 + tilt*sin(3 x1)): vanishes on the graph, positive above
        g = GraphFunction(spec.get("graph", "flat"), float(spec.get("slope", 0.0)),
                          float(spec.get("freq", 1.0)))
        tilt = float(spec.get("tilt", 0.3))
        return lambda p: np.maximum(p[:, 1] - g(p[:, 0]), 0.0) * (1.0 + tilt * np.sin(3.0 * p[:, 0]))
    raise ConfigError(f"unknown data kind {kind!r}")


def build_form(spec: Mapping):
    form = spec.get("form", "cone_harmonic")
    if form == "cone_harmonic":
        return ConeHarmonic(parse_angle(spec.get("theta", "pi/4")))
    if form == "logpair":
        return LogPair(int(spec.get("which", 1)))
    raise ConfigError(f"unknown closed form {form!r}")


# ---------------------------------------------------------------------------
# scenario data


@dataclass(frozen=True)
class Scenario:
    """A pre-registered experiment; all sections are plain mappings."""

    id: str
    kind: str
    title: str = ""
    h: float = 2.0**-7
    profile: Mapping = field(default_factory=dict)
    body: Mapping = field(default_factory=dict)
    coeffs: Mapping = field(default_factory=dict)
    data: Mapping = field(default_factory=dict)
    probes: Mapping = field(default_factory=dict)
    expect: Mapping = field(default_factory=dict)
    levels: tuple = ()
    statement_level: bool = False

    def __post_init__(self):
        if self.kind not in SOLVE_KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        if not self.h > 0:
            raise ConfigError("h must be positive")

    def with_(self, **kw) -> "Scenario":
        return replace(self, **kw)

    def dini_status(self) -> str | None:
        prof = build_profile(self.profile)
        return None if prof is None else dini_integral(prof).status

    def verdict_expectations(self) -> dict[str, str]:
        return {k: v for k, v in self.expect.items() if k in ("hopf", "m")}

    def consistency_problems(self) -> list[str]:
        """Expected verdicts incompatible with the profile's Dini status."""
        status = self.dini_status()
        if status is None:
            return []
        allowed = ALLOWED_BY_STATUS[status]
        return [f"{k}={v} not allowed for {status} profile"
                for k, v in self.verdict_expectations().items() if v not in allowed]


@dataclass(frozen=True)
class Check:
    name: str
    expected: Any
    observed: Any
    passed: bool


@dataclass
class ReportBundle:
    """All reports of one run plus pass/fail checks and metadata."""

    scenario: str
    h: float
    coeffs: str
    checks: list = field(default_factory=list)
    reports: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, expected, observed, passed) -> None:
        self.checks.append(Check(name, expected, observed, bool(passed)))

    def summary_lines(self) -> list[str]:
        key = self.scenario
        lines = [r.summary(key) for r in self.reports.values() if hasattr(r, "summary")]
        for c in self.checks:
            lines.append(f"{key} check {c.name}: expected={c.expected} observed={c.observed} "
                         f"{'PASS' if c.passed else 'FAIL'}")
        return lines

    def verdict_line(self) -> str:
        return f"{self.scenario} h={self.h:g} coeffs={self.coeffs} {'PASS' if self.passed else 'FAIL'}"


# ---------------------------------------------------------------------------
# runner pieces


def _solve(domain, fld, g, gamma_zero=True, rel_tol=1e-10):
    st = discretize(fld, domain, require_monotone=True)
    u = solve_dirichlet(st, boundary_data(domain, g, gamma_zero), rel_tol=rel_tol)
    return st, u


def _record_solve(b: ReportBundle, tag: str, u: ScalarField) -> None:
    mp = check_max_principle(u)
    b.add(f"max_principle{tag}", "extrema on boundary",
          f"[{mp.interior_min:.6g},{mp.interior_max:.6g}] in [{mp.boundary_min:.6g},"
          f"{mp.boundary_max:.6g}]", mp.holds)
    b.metadata.setdefault("solves", []).append(
        {"tag": tag, "unknowns": int(u.domain.interior.sum()), "method": u.method,
         "residual": u.residual_norm, "dropped_thin": u.domain.n_dropped})


def _verdict_checks(b: ReportBundle, sc: Scenario) -> None:
    for key, want in sc.verdict_expectations().items():
        reps = [r for name, r in b.reports.items() if name.startswith(key)]
        for name in [n for n in b.reports if n.startswith(key)]:
            r = b.reports[name]
            b.add(f"verdict {name}", want, r.verdict, r.verdict == want)
        if not reps:
            b.add(f"verdict {key}", want, "missing", False)


def _probe_hopf(b, sc, u, origin=(0.0, 0.0)):
    dirs = sc.probes.get("hopf")
    if not dirs:
        return
    if isinstance(dirs, str):
        dirs = [_vec(d) for d in dirs.split(";")]
    kw = {"decades": int(sc.probes.get("decades", 2))}
    if "t_min" in sc.probes:
        kw["t_min"] = float(sc.probes["t_min"])
    for k, l in enumerate(dirs):
        name = "hopf" if k == 0 else f"hopf{k}"
        b.reports[name] = an.hopf_quotient(u, l, origin=origin, **kw)


def _probe_m(b, sc, u):
    if "m_r0" in sc.probes:
        kmax = sc.probes.get("m_kmax")
        b.reports["m"] = an.m_ratio(u, float(sc.probes["m_r0"]),
                                    None if kmax is None else int(kmax))


def _interior_barrier_check(b, sc, u, fld, h):
    """Grid re-run of the interior sphere argument: a radial barrier on the
    annulus r/2 < |x - y0| < r stays below the solution."""
    y0 = _vec(sc.probes["barrier_center"])
    r = float(sc.probes["barrier_r0"])
    ann = rasterize(Annulus(y0, 0.5 * r, r), h)
    sub = u.restrict(ann)
    lam = barrier_lambda(2, fld.nu)
    inner = ann.gamma
    pts = ann.points(inner)
    shape = np.linalg.norm(pts - np.asarray(y0), axis=-1) ** -lam - r**-lam
    level = float(np.min(sub.values[inner] / shape))
    spec = BarrierSpec("interior", lam, y0, r, 0.5 * r, level)
    w = ScalarField.from_function(ann, spec.value)
    st = discretize(fld, ann, require_monotone=True)
    rep = compare(w, sub, st)
    b.reports["compare_interior"] = rep
    b.add("compare interior barrier", "premise and conclusion",
          f"premise={rep.premise_holds} conclusion={rep.conclusion_holds} margin={rep.margin:.3e}",
          rep.premise_holds and rep.conclusion_holds)
    b.metadata["barrier_interior"] = {"lambda": lam, "c1": level,
                                      "inward_slope": spec.inward_slope()}


def _exterior_barrier_check(b, sc, u, st, fld):
    """Grid re-run of the exterior sphere argument: the solution stays below
    c2 (r_v^-lam - |x - y0|^-lam) on the whole annulus."""
    y0 = np.asarray(_vec(sc.probes["barrier_center"]))
    d = u.domain
    lam = barrier_lambda(2, fld.nu)
    rho_g = np.linalg.norm(d.points(d.gamma) - y0, axis=-1)
    r_v = float(rho_g.min())
    other = d.node_class == 3
    rho_o = np.linalg.norm(d.points(other) - y0, axis=-1)
    shape_o = r_v**-lam - rho_o**-lam
    c2 = float(np.max(u.values[other] / shape_o))
    spec = BarrierSpec("exterior", lam, tuple(y0), r_v, float(rho_o.max()), c2)
    w = ScalarField.from_function(d, spec.value)
    rep = compare(u, w, st)
    b.reports["compare_exterior"] = rep
    b.add("compare exterior barrier", "premise and conclusion",
          f"premise={rep.premise_holds} conclusion={rep.conclusion_holds} margin={rep.margin:.3e}",
          rep.premise_holds and rep.conclusion_holds)
    b.metadata["barrier_exterior"] = {"lambda": lam, "c2": c2, "vanishing_radius": r_v}


def _run_solve(sc: Scenario, b: ReportBundle, h: float):
    prof = build_profile(sc.profile)
    body = build_body(sc.body, prof)
    dom = rasterize(body, h)
    fld = _field_on(sc.coeffs, dom)
    g = build_data(sc.data)
    st, u = _solve(dom, fld, g)
    _record_solve(b, "", u)
    b.metadata["domain"] = dom.counts()
    if prof is not None:
        b.metadata["profile"] = prof.describe()
        b.metadata["dini"] = dini_integral(prof).summary()
        b.metadata["value_cap"] = prof.satisfies_value_cap
    _probe_hopf(b, sc, u)
    _probe_m(b, sc, u)
    cmp = sc.probes.get("compare")
    if cmp == "interior_barrier":
        _interior_barrier_check(b, sc, u, fld, h)
    elif cmp == "exterior_barrier":
        _exterior_barrier_check(b, sc, u, st, fld)
    b.reports["_field"] = u


def _run_closedform(sc: Scenario, b: ReportBundle, h: float):
    form = build_form(sc.probes)
    _probe_hopf(b, sc, form)
    _probe_m(b, sc, form)
    n = int(sc.probes.get("samples", 1000))
    rng = np.random.default_rng(int(sc.probes.get("seed", 0)))
    if isinstance(form, ConeHarmonic):
        rho = rng.uniform(0.05, 1.0, n)
        phi = rng.uniform(-form.theta, form.theta, n)
        pts = np.stack([rho * np.sin(phi), rho * np.cos(phi)], -1)
        ray = np.linspace(0.0, 1.0, n)[:, None] * np.array([math.sin(form.theta),
                                                             math.cos(form.theta)])
        edge = float(np.max(np.abs(form.value(ray)) / np.maximum(ray[:, 0] ** 2 + ray[:, 1] ** 2, 1e-300) ** (form.gamma / 2)))
        b.add("vanishes on rays", "<= 1e-12", f"{edge:.2e}", edge <= 1e-12)
        res = supersolution_residual(form, Identity(), pts)
        b.reports["residual"] = res
        b.add("harmonic residual", f"<= {res.tol:g}", f"{res.worst:.2e}", res.passed)


def _poisson_disk(sc, b, h, fld_spec=None):
    body = build_body(sc.body, None)
    dom = rasterize(body, h)
    fld = _field_on(fld_spec if fld_spec is not None else sc.coeffs, dom)
    st, u = _solve(dom, fld, build_data(sc.data), gamma_zero=False)
    return dom, fld, u


def _run_harnack(sc: Scenario, b: ReportBundle, h: float):
    delta = float(sc.probes.get("delta", 0.5))
    dom, fld, u = _poisson_disk(sc, b, h)
    _record_solve(b, "", u)
    rep = an.harnack_ratio(u, delta)
    b.reports["harnack"] = rep
    u0 = float(u.interpolate(np.array([[0.0, 0.0]]))[0])
    ss_vals = u.values[shrink(dom, delta).mask]
    one_sided = float(ss_vals.max() / u0), float(u0 / ss_vals.min())
    b.metadata["harnack_center_ratios"] = one_sided
    bound = float(sc.expect.get("harnack_max", 9.0 * 1.05))
    b.add("harnack ratio", f"<= {bound:g}", f"{rep.ratio:.6g}", rep.ratio <= bound)
    ratios = {"none": rep.ratio}
    for eps in sc.probes.get("epsilons", ()):
        spec = dict(sc.coeffs, epsilon=float(eps))
        _, _, ue = _poisson_disk(sc, b, h, spec)
        _record_solve(b, f"@eps={eps:g}", ue)
        ratios[f"{eps:g}"] = an.harnack_ratio(ue, delta).ratio
    if len(ratios) > 1:
        vals = np.array(list(ratios.values()))
        var = float(vals.max() / vals.min() - 1.0)
        b.metadata["harnack_sweep"] = ratios
        b.add("harnack sweep variation", "<= 0.25", f"{var:.4f}", var <= 0.25)


def _run_lower_bound(sc: Scenario, b: ReportBundle, h: float):
    delta = float(sc.probes.get("delta", 0.25))
    mu = float(sc.data.get("mu", 1.0))
    dom, fld, u = _poisson_disk(sc, b, h)
    _record_solve(b, "", u)
    rep = an.harnack_ratio(u, delta, mu=mu)
    b.reports["lower_bound"] = rep
    b.add("lower bound c > 0", "> 0", f"{rep.lower.c:.6g}", rep.lower.c > 0)


def _run_bauman(sc: Scenario, b: ReportBundle, h: float):
    body = build_body(sc.body, None)
    dom = rasterize(body, h)
    fld = _field_on(sc.coeffs, dom)
    _, u = _solve(dom, fld, build_data(sc.data))
    _record_solve(b, "", u)
    vspec = sc.probes.get("v", "xn")
    if vspec == "xn":
        v = lambda p: p[..., 1]
    else:
        _, v = _solve(dom, fld, build_data({"kind": "affine", "alpha": 1.0, "beta": (0.0, 1.0)}),
                      gamma_zero=False)
        _record_solve(b, "-v", v)
    rep = an.bauman_quotient(u, v, float(sc.probes.get("r", 0.5)),
                             K=float(sc.body.get("K", 0.0)))
    b.reports["bauman"] = rep
    b.add("C_upper finite", "finite >= 1", f"{rep.C_upper:.6g}",
          math.isfinite(rep.C_upper) and rep.C_upper >= 1 - 1e-12)
    b.add("C_upper*C_lower >= 1", ">= 1", f"{rep.C_upper * rep.C_lower:.6g}",
          rep.C_upper * rep.C_lower >= 1 - 1e-12)


def _run_mollify(sc: Scenario, b: ReportBundle, h: float):
    body = build_body(sc.body, None)
    dom = rasterize(body, h)
    g = build_data(sc.data)
    base = build_coeffs(sc.coeffs)
    _, u = _solve(dom, base, g, gamma_zero=False)
    _record_solve(b, "", u)
    diffs = {}
    nu_hat = ellipticity_check(base, dom).nu_hat
    for eps in sc.probes.get("epsilons", ()):
        fe = mollify(base, MollifierSpec(float(eps)), dom)
        rep = ellipticity_check(fe, dom)
        b.add(f"nu preserved eps={eps:g}", f">= {nu_hat - 1e-12:.12g}", f"{rep.nu_hat:.15g}",
              rep.nu_hat >= nu_hat - 1e-12)
        _, ue = _solve(dom, fe, g, gamma_zero=False)
        _record_solve(b, f"@eps={eps:g}", ue)
        diffs[float(eps)] = float(np.nanmax(np.abs(ue.values - u.values)))
    b.metadata["sup_diff"] = diffs
    vals = [diffs[e] for e in sorted(diffs, reverse=True)]
    up = [vals[i + 1] > vals[i] for i in range(len(vals) - 1)]
    big = [vals[i + 1] > 1.1 * vals[i] for i in range(len(vals) - 1)]
    ok = sum(up) <= 1 and not any(big)
    b.add("sup|u_eps - u| decreasing", "<= one non-monotone step within 10%",
          ",".join(f"{v:.4e}" for v in vals), ok)
    b.reports["mollify"] = _SweepReport(sorted(diffs, reverse=True), vals)


@dataclass(frozen=True)
class _SweepReport(an._Report):
    epsilons: list
    sup_diff: list

    def rows(self):
        return ("epsilon", "sup_abs_diff"), list(zip(self.epsilons, self.sup_diff))

    def summary(self, key=""):
        return f"{key} mollify sweep " + " ".join(f"{e:g}:{d:.3e}" for e, d in zip(self.epsilons, self.sup_diff))


def _run_residual(sc: Scenario, b: ReportBundle, h: float):
    n = int(sc.probes.get("samples", 1000))
    rng = np.random.default_rng(int(sc.probes.get("seed", 0)))
    which = sc.probes.get("target", "barrier")
    tol = float(sc.probes.get("tol", 1e-6))
    if which == "barrier":
        for cname in ("identity", "checkerboard", "rotating"):
            fld = build_coeffs({"kind": cname})
            lam = barrier_lambda(2, fld.nu)
            for orient in ("interior", "exterior"):
                if orient == "interior":
                    spec = BarrierSpec.interior((0.0, 0.0), 1.0, lam)
                else:
                    spec = BarrierSpec.exterior((0.0, 0.0), 1.0, 2.0, lam)
                lo, hi = spec.radii
                rho = rng.uniform(lo, hi, n)
                t = rng.uniform(-math.pi, math.pi, n)
                pts = np.stack([rho * np.cos(t), rho * np.sin(t)], -1)
                res = supersolution_residual(spec, fld, pts, tol=tol)
                b.reports[f"residual_{orient}_{cname}"] = res
                b.add(f"barrier sign {orient} {cname} (lambda={lam:g})",
                      "+" if spec.sign > 0 else "-", f"worst={res.worst:.2e}", res.passed)
    elif which == "logpair":
        for k in (1, 2):
            lp = LogPair(k)
            rho = rng.uniform(0.01, 0.25, n)
            t = rng.uniform(0.02, math.pi - 0.02, n)
            pts = np.stack([rho * np.cos(t), rho * np.sin(t)], -1)
            res = supersolution_residual(lp, Identity(), pts, tol=tol)
            b.reports[f"residual_logpair{k}"] = res
            b.add(f"drift identity u{k}", "0", f"worst={res.worst:.2e}", res.passed)
            C0 = lp.drift_field().bound_constant(pts)
            b.metadata[f"drift_bound_C0_u{k}"] = C0
            b.add(f"drift majorant u{k}", "finite C0", f"{C0:.6g}", math.isfinite(C0))
    else:
        raise ConfigError(f"unknown residual target {which!r}")


_RUNNERS = {
    "solve": _run_solve,
    "closedform": _run_closedform,
    "harnack": _run_harnack,
    "lower_bound": _run_lower_bound,
    "bauman": _run_bauman,
    "mollify": _run_mollify,
    "residual": _run_residual,
}


def run(sc: Scenario, h: float | None = None, coeffs: Mapping | None = None,
        keep_field: bool = False) -> ReportBundle:
    """Execute ``sc`` (optionally at another spacing or coefficient field).

    Raises
    ------
    HopfLabError
        Module errors propagate with the scenario id prepended.
    """
    if coeffs is not None:
        sc = sc.with_(coeffs=dict(coeffs))
    h = sc.h if h is None else float(h)
    b = ReportBundle(sc.id, h, sc.coeffs.get("kind", "identity") if sc.coeffs else "identity")
    t0 = time.perf_counter()
    problems = sc.consistency_problems()
    b.add("expectations match Dini status", "consistent", "; ".join(problems) or "consistent",
          not problems)
    try:
        _RUNNERS[sc.kind](sc, b, h)
    except Exception as exc:
        if hasattr(exc, "args") and exc.args and isinstance(exc.args[0], str):
            exc.args = (f"[{sc.id}] {exc.args[0]}",) + exc.args[1:]
        raise
    _verdict_checks(b, sc)
    if sc.statement_level:
        b.metadata["label"] = "statement-level verification"
    b.metadata["elapsed_s"] = round(time.perf_counter() - t0, 3)
    if not keep_field:
        b.reports.pop("_field", None)
    return b


def worker_count() -> int:
    """Workers for catalog runs, capped by HOPFLAB_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("HOPFLAB_THREADS", "1")))
    except ValueError:
        return 1


def run_many(scenarios, h=None) -> list[ReportBundle]:
    """Run scenarios independently; order of results follows the input."""
    scenarios = list(scenarios)
    n = worker_count()
    if n == 1:
        return [run(s, h) for s in scenarios]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(lambda s: run(s, h), scenarios))


# ---------------------------------------------------------------------------
# catalog

CHECKER = {"kind": "checkerboard", "cell": 0.25, "nu": 0.5}
REGIME_LEVELS = (2.0**-7, 2.0**-8)


def catalog() -> list[Scenario]:
    """Built-in scenarios in a fixed order."""
    power = {"kind": "power", "c": 0.25, "p": 1.5, "r0": 2.0}
    cone2 = {"kind": "cone", "K": 2.0, "r0": 2.0}
    log_conv = {"kind": "powerlog", "c": 0.5, "p": 1.0, "q": 2.0, "r0": 0.5}
    log_int = {"kind": "powerlog", "c": 2.0, "p": 1.0, "q": 1.0, "r0": 0.5}
    log_ext = {"kind": "powerlog", "c": 4.0, "p": 1.0, "q": 1.0, "r0": 0.5}
    return [
        Scenario("T1.8-sphere", "solve", "interior ball touching the origin; Hopf and the "
                 "interior barrier comparison", h=2.0**-7,
                 profile={"kind": "power", "c": 1.0, "p": 2.0, "r0": 0.5},
                 body={"shape": "ball", "center": (0.0, 1.0), "radius": 1.0},
                 data={"kind": "xn_squared"},
                 probes={"hopf": [(0.0, 1.0), (0.6, 0.8)], "compare": "interior_barrier",
                         "barrier_center": (0.0, 1.0), "barrier_r0": 1.0},
                 expect={"hopf": an.POSITIVE_LIMINF}, levels=(2.0**-6, 2.0**-7)),
        Scenario("L1.2-exterior-sphere", "solve", "annulus outside a ball touching the "
                 "origin; bounded M and the exterior barrier comparison", h=2.0**-7,
                 profile={"kind": "power", "c": 1.0, "p": 2.0, "r0": 0.5},
                 body={"shape": "annulus", "center": (0.0, -1.0), "r_in": 1.0, "r_out": 2.0},
                 data={"kind": "affine", "alpha": 3.0, "beta": (0.0, 1.0)},
                 probes={"m_r0": 2.0, "compare": "exterior_barrier",
                         "barrier_center": (0.0, -1.0)},
                 expect={"m": an.BOUNDED}, levels=(2.0**-7, 2.0**-8)),
        Scenario("T1.10-cone", "closedform", "convex cone of aperture pi/4, exact harmonic",
                 profile={"kind": "cone", "K": 1.0, "r0": 1.0},
                 probes={"form": "cone_harmonic", "theta": "pi/4", "hopf": [(0.0, 1.0)],
                         "m_r0": 1.0},
                 expect={"hopf": an.DECAYS, "m": an.DECAYS}, statement_level=True),
        Scenario("E1.6-half-plane", "closedform", "aperture pi/2: the flat case u = x_n",
                 profile={"kind": "zero", "r0": 1.0},
                 probes={"form": "cone_harmonic", "theta": "pi/2", "hopf": [(0.0, 1.0)],
                         "m_r0": 1.0},
                 expect={"hopf": an.POSITIVE_LIMINF, "m": an.BOUNDED}),
        Scenario("E1.6-reflex-cone", "closedform", "reflex cone of aperture 3pi/4, exact "
                 "harmonic", profile={"kind": "cone", "K": 1.0, "r0": 1.0},
                 probes={"form": "cone_harmonic", "theta": "3pi/4", "hopf": [(0.0, 1.0)],
                         "m_r0": 1.0},
                 expect={"hopf": an.BLOWS_UP, "m": an.UNBOUNDED}),
        Scenario("T1.8-dini", "solve", "interior Q with psi = r^1.5/4", h=2.0**-7,
                 profile=power, body={"shape": "interior_q"}, data={"kind": "xn_plus"},
                 probes={"hopf": [(0.0, 1.0)]}, expect={"hopf": an.POSITIVE_LIMINF},
                 levels=REGIME_LEVELS),
        Scenario("T1.9-cusp", "solve", "exterior Q* with psi = r^1.5/4, checkerboard field",
                 h=2.0**-7, profile=power, body={"shape": "exterior_qstar"}, coeffs=CHECKER,
                 data={"kind": "xn_plus"}, probes={"m_r0": 2.0, "hopf": [(0.0, 1.0)]},
                 expect={"m": an.BOUNDED}, levels=REGIME_LEVELS),
        Scenario("T1.10-cone-solved", "solve", "interior Q with the cone profile 2r",
                 h=2.0**-7, profile=cone2, body={"shape": "interior_q"},
                 data={"kind": "xn_plus"}, probes={"m_r0": 2.0, "hopf": [(0.0, 1.0)]},
                 expect={"hopf": an.DECAYS, "m": an.DECAYS}, levels=REGIME_LEVELS,
                 statement_level=True),
        Scenario("T1.11-exterior-cone", "solve", "exterior Q* with the cone profile 2r",
                 h=2.0**-7, profile=cone2, body={"shape": "exterior_qstar"},
                 data={"kind": "xn_plus"}, probes={"hopf": [(0.0, 1.0)], "m_r0": 2.0},
                 expect={"hopf": an.BLOWS_UP}, levels=REGIME_LEVELS, statement_level=True),
        Scenario("T1.8-log", "solve", "interior Q with psi = r/(2 ln^2 r)", h=2.0**-8,
                 profile=log_conv, body={"shape": "interior_q"}, data={"kind": "xn_plus"},
                 probes={"hopf": [(0.0, 1.0)]}, expect={"hopf": an.POSITIVE_LIMINF},
                 levels=(2.0**-8, 2.0**-9)),
        Scenario("T1.9-log", "solve", "exterior Q* with psi = r/(2 ln^2 r)", h=2.0**-9,
                 profile=log_conv, body={"shape": "exterior_qstar"}, data={"kind": "xn_plus"},
                 probes={"m_r0": 0.5, "hopf": [(0.0, 1.0)]}, expect={"m": an.BOUNDED},
                 levels=(2.0**-9,)),
        Scenario("T1.10-log", "solve", "interior Q with psi = 2r/|ln r|", h=2.0**-8,
                 profile=log_int, body={"shape": "interior_q"}, data={"kind": "xn_plus"},
                 probes={"hopf": [(0.0, 1.0)]}, expect={"hopf": an.DECAYS},
                 levels=(2.0**-8, 2.0**-9), statement_level=True),
        Scenario("T1.11-log", "solve", "exterior Q* with psi = 4r/|ln r|", h=2.0**-9,
                 profile=log_ext, body={"shape": "exterior_qstar"}, data={"kind": "xn_plus"},
                 probes={"hopf": [(0.0, 1.0)], "m_r0": 0.5}, expect={"hopf": an.BLOWS_UP},
                 levels=(2.0**-9,), statement_level=True),
        Scenario("T2.1-harnack", "harnack", "unit disk with a narrow boundary bump; Harnack "
                 "ratio on the half-radius disk", h=2.0**-7,
                 body={"shape": "ball", "center": (0.0, 0.0), "radius": 1.0},
                 data={"kind": "bump", "angle": 0.0, "width": 0.02},
                 probes={"delta": 0.5}, levels=(2.0**-6, 2.0**-7)),
        Scenario("T2.1-harnack-checkerboard", "harnack", "Harnack ratio for the checkerboard "
                 "field across a mollification sweep", h=2.0**-7,
                 body={"shape": "ball", "center": (0.0, 0.0), "radius": 1.0},
                 coeffs=CHECKER, data={"kind": "bump", "angle": 0.0, "width": 0.02},
                 probes={"delta": 0.5, "epsilons": [2.0**-m for m in range(3, 8)]}),
        Scenario("L2.3-lower-bound", "lower_bound", "floor mu on a boundary arc gives "
                 "u >= c mu inside", h=2.0**-7,
                 body={"shape": "ball", "center": (0.0, 0.0), "radius": 1.0}, coeffs=CHECKER,
                 data={"kind": "arc", "angle": "-pi/2", "half_width": "pi/6", "mu": 1.0},
                 probes={"delta": 0.25}, levels=(2.0**-6, 2.0**-7)),
        Scenario("T2.4-bauman", "bauman", "flat box, u vanishing on the bottom against v = x_n",
                 h=2.0**-7, body={"shape": "lipschitz_graph", "graph": "flat", "K": 0.0,
                                  "r": 1.0},
                 data={"kind": "graph_gap", "graph": "flat"}, probes={"r": 0.5, "v": "xn"},
                 levels=(2.0**-6, 2.0**-7, 2.0**-8)),
        Scenario("C2.7-bauman", "bauman", "Lipschitz vee graph with K = 1 against a positive "
                 "solution v", h=2.0**-7,
                 body={"shape": "lipschitz_graph", "graph": "vee", "slope": 1.0, "K": 1.0,
                       "r": 1.0},
                 data={"kind": "graph_gap", "graph": "vee", "slope": 1.0},
                 probes={"r": 0.5, "v": "positive"}, levels=(2.0**-6, 2.0**-7, 2.0**-8)),
        Scenario("L2.2-mollify", "mollify", "checkerboard on the square; solutions with "
                 "mollified coefficients approach the original", h=2.0**-7,
                 body={"shape": "box", "lo": (-1.0, -1.0), "hi": (1.0, 1.0)}, coeffs=CHECKER,
                 data={"kind": "quadratic"},
                 probes={"epsilons": [2.0**-m for m in range(3, 8)]}),
        Scenario("L1.4-barrier", "residual", "power barrier signs for identity, checkerboard "
                 "and rotating fields", probes={"target": "barrier"}),
        Scenario("E1.12-drift", "residual", "logarithmic pair: drift identity and majorant",
                 probes={"target": "logpair"}),
    ]


def by_id(sid: str) -> Scenario:
    for s in catalog():
        if s.id == sid:
            return s
    raise ConfigError(f"unknown scenario id {sid!r}")


REGIME_IDS = ("T1.8-dini", "T1.9-cusp", "T1.10-cone-solved", "T1.11-exterior-cone")

# families paired across the Dini threshold: (convergent id, divergent id)
DICHOTOMY_PAIRS = (
    ("T1.8-dini", "T1.10-cone-solved"),
    ("T1.9-cusp", "T1.11-exterior-cone"),
    ("T1.8-log", "T1.10-log"),
    ("T1.9-log", "T1.11-log"),
)
