"""Flat ``key = value`` run configuration with a strict schema.

One assignment per line, ``#`` starts a comment.  Keys are either top-level
(``id``, ``kind``, ``h`` ...) or ``section.key`` with sections ``profile``,
``body``, ``coeffs``, ``data``, ``probes``, ``expect`` and ``output``.
Lengths accept decimal numbers or powers of two written ``2^-7``.
Unknown keys and malformed values raise :class:`ConfigError` naming the
line.  See ``docs/config.md`` for the full key list.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

from .errors import ConfigError
from .scenarios import DATA_KINDS, SOLVE_KINDS, Scenario

_POW2 = re.compile(r"^\s*2\s*\^\s*(-?\d+)\s*$")


def parse_length(text: str) -> float:
    m = _POW2.match(text)
    if m:
        return 2.0 ** int(m.group(1))
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"not finite: {text!r}")
    return v


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _vector(n):
    def parse(text):
        parts = [parse_length(p) for p in text.split(",")]
        if len(parts) != n:
            raise ConfigError(f"expected {n} comma-separated numbers, got {text!r}")
        return tuple(parts)
    return parse


def _vectors(text):
    return [_vector(2)(p) for p in text.split(";") if p.strip()]


def _lengths(text):
    return tuple(parse_length(p) for p in text.split(",") if p.strip())


def _choice(*options):
    def parse(text):
        t = text.strip()
        if t not in options:
            raise ConfigError(f"{t!r} is not one of {', '.join(options)}")
        return t
    return parse


def _text(text):
    return text.strip()


_VERDICTS = ("PositiveLiminf", "DecaysToZero", "BlowsUp", "Bounded", "Unbounded", "Inconclusive")

SCHEMA = {
    "id": _text,
    "kind": _choice(*SOLVE_KINDS),
    "title": _text,
    "h": parse_length,
    "levels": _lengths,
    "statement_level": parse_bool,
    "profile.kind": _choice("zero", "cone", "power", "powerlog", "tabulated"),
    "profile.c": parse_length,
    "profile.p": parse_length,
    "profile.q": parse_length,
    "profile.K": parse_length,
    "profile.r0": parse_length,
    "profile.table": _text,
    "body.shape": _choice("interior_q", "exterior_qstar", "cone", "cylinder", "lipschitz_graph",
                          "ball", "annulus", "box"),
    "body.origin": _vector(2),
    "body.angle": parse_length,
    "body.K": parse_length,
    "body.r0": parse_length,
    "body.theta": _text,
    "body.r": parse_length,
    "body.graph": _choice("flat", "vee", "wave"),
    "body.slope": parse_length,
    "body.freq": parse_length,
    "body.center": _vector(2),
    "body.radius": parse_length,
    "body.gamma": parse_bool,
    "body.r_in": parse_length,
    "body.r_out": parse_length,
    "body.lo": _vector(2),
    "body.hi": _vector(2),
    "coeffs.kind": _choice("identity", "constant_matrix", "rotating", "checkerboard"),
    "coeffs.a11": parse_length,
    "coeffs.a12": parse_length,
    "coeffs.a22": parse_length,
    "coeffs.nu": parse_length,
    "coeffs.ratio": parse_length,
    "coeffs.angle": _choice("swirl", "wave", "constant"),
    "coeffs.cell": parse_length,
    "coeffs.even": _vector(3),
    "coeffs.odd": _vector(3),
    "coeffs.offset": _vector(2),
    "coeffs.epsilon": parse_length,
    "data.kind": _choice(*DATA_KINDS),
    "data.alpha": parse_length,
    "data.beta": _vector(2),
    "data.value": parse_length,
    "data.center": _vector(2),
    "data.angle": _text,
    "data.width": parse_length,
    "data.half_width": _text,
    "data.mu": parse_length,
    "data.graph": _choice("flat", "vee", "wave"),
    "data.slope": parse_length,
    "data.freq": parse_length,
    "data.tilt": parse_length,
    "probes.hopf": _vectors,
    "probes.decades": int,
    "probes.t_min": parse_length,
    "probes.m_r0": parse_length,
    "probes.m_kmax": int,
    "probes.compare": _choice("interior_barrier", "exterior_barrier"),
    "probes.barrier_center": _vector(2),
    "probes.barrier_r0": parse_length,
    "probes.delta": parse_length,
    "probes.epsilons": _lengths,
    "probes.r": parse_length,
    "probes.v": _choice("xn", "positive"),
    "probes.form": _choice("cone_harmonic", "logpair"),
    "probes.theta": _text,
    "probes.which": int,
    "probes.samples": int,
    "probes.seed": int,
    "probes.target": _choice("barrier", "logpair"),
    "probes.tol": parse_length,
    "expect.hopf": _choice(*_VERDICTS),
    "expect.m": _choice(*_VERDICTS),
    "expect.harnack_max": parse_length,
    "output.dir": _text,
    "output.csv": parse_bool,
    "output.plotdata": parse_bool,
    "output.masks": parse_bool,
}

SECTIONS = ("profile", "body", "coeffs", "data", "probes", "expect", "output")


def parse_text(text: str, source: str = "<config>") -> dict:
    """Parse config text into a nested dict (sections become sub-dicts)."""
    tree: dict = {s: {} for s in SECTIONS}
    seen = set()
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{n}: duplicate key {key!r}")
        seen.add(key)
        try:
            parsed = SCHEMA[key](value)
        except (ConfigError, ValueError) as exc:
            raise ConfigError(f"{source}:{n}: {key}: {exc}") from None
        if "." in key:
            sec, sub = key.split(".", 1)
            tree[sec][sub] = parsed
        else:
            tree[key] = parsed
    return tree


def load(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_text(p.read_text(), str(p))


def _check_divides(length: float, h: float, what: str) -> None:
    k = length / h
    if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
        raise ConfigError(f"h={h:g} does not divide the {what} {length:g}")


def to_scenario(tree: dict) -> Scenario:
    """Build a :class:`Scenario` from a parsed config.

    Raises
    ------
    ConfigError
        Missing ``id``/``kind`` or a box side not divisible by ``h``.
    """
    for req in ("id", "kind"):
        if req not in tree:
            raise ConfigError(f"missing required key {req!r}")
    h = tree.get("h", 2.0**-7)
    body = tree.get("body", {})
    if body.get("shape") == "box":
        lo, hi = body.get("lo", (0.0, 0.0)), body.get("hi", (1.0, 1.0))
        for k, name in ((0, "box width"), (1, "box height")):
            _check_divides(hi[k] - lo[k], h, name)
    if body.get("shape") == "cylinder":
        _check_divides(body.get("r", 1.0), h, "cylinder radius")
    return Scenario(
        id=tree["id"], kind=tree["kind"], title=tree.get("title", ""), h=h,
        profile=tree.get("profile", {}), body=body, coeffs=tree.get("coeffs", {}),
        data=tree.get("data", {}), probes=tree.get("probes", {}),
        expect=tree.get("expect", {}), levels=tuple(tree.get("levels", ())),
        statement_level=bool(tree.get("statement_level", False)))


def output_options(tree: dict) -> dict:
    out = {"dir": None, "csv": True, "plotdata": False, "masks": False}
    out.update(tree.get("output", {}))
    return out
