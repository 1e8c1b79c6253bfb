"""Boundary profiles, their dyadic sequences, the Dini integral and cone fits.

A profile is a non-negative, non-decreasing function psi on [0, r0] that
describes how far a boundary may bend away from a flat plane at a given
distance from the boundary point.  The Dini integral

    I(psi) = int_0^r0 psi(r) / r**2 dr

decides whether the boundary is regular enough for a linear lower bound.

Examples
--------
>>> p = PsiProfile.power(1.0, 1.5, r0=1.0)
>>> res = dini_integral(p)
>>> res.status, round(res.value, 9)
('Convergent', 2.0)
>>> dini_integral(PsiProfile.cone(2.0, r0=1.0)).status
'Divergent'
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import ConfigError, NoFitWithinRange, NotDini, OutOfRange

KINDS = ("zero", "cone", "power", "powerlog", "tabulated")

CONVERGENT = "Convergent"
DIVERGENT = "Divergent"

DEFAULT_ABS_TOL = 1e-8
DEFAULT_K_MAX = 64
TAIL_WINDOW = 16

# dyadic indices used by the deep asymptotic summability test
_DEEP_K = 2.0**40
_LOG4 = math.log(4.0)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PsiProfile:
    """Boundary profile psi on [0, r0].

    Use the classmethod constructors rather than the raw initializer.

    Parameters
    ----------
    kind : str
        One of ``zero``, ``cone``, ``power``, ``powerlog``, ``tabulated``.
    r0 : float
        Length of the profile's support.
    c, p, q : float
        Family parameters: ``cone`` uses ``c`` as the slope K, ``power``
        is ``c*r**p`` and ``powerlog`` is ``c*r**p*|ln r|**(-q)``.
    table_r, table_psi : array
        Sample abscissae (starting at 0) and values of a right-continuous
        step function.
    """

    kind: str
    r0: float
    c: float = 0.0
    p: float = 1.0
    q: float = 0.0
    table_r: np.ndarray | None = None
    table_psi: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown profile kind {self.kind!r}")
        if not (math.isfinite(self.r0) and self.r0 > 0):
            raise ConfigError(f"r0 must be positive, got {self.r0}")
        if self.kind in ("power", "powerlog"):
            if self.c < 0 or not math.isfinite(self.c):
                raise ConfigError("profile coefficient c must be >= 0")
            if self.p < 1:
                raise ConfigError(f"exponent p must be >= 1, got {self.p}")
        if self.kind == "cone" and not (self.c > 0 and math.isfinite(self.c)):
            raise ConfigError(f"cone slope K must be positive, got {self.c}")
        if self.kind == "powerlog":
            if self.r0 >= 1:
                raise ConfigError("powerlog profiles need r0 < 1 so that |ln r| > 0")
            # d ln(psi)/dr = (p + q/|ln r|)/r must stay >= 0
            if self.q < 0 and self.p + self.q / abs(math.log(self.r0)) < 0:
                raise ConfigError("powerlog profile is not non-decreasing on (0, r0]")
        if self.kind == "tabulated":
            self._check_table()
        self._check_dense()

    # constructors ------------------------------------------------------
    @classmethod
    def zero(cls, r0: float = 1.0) -> "PsiProfile":
        return cls("zero", float(r0))

    @classmethod
    def cone(cls, K: float, r0: float = 1.0) -> "PsiProfile":
        return cls("cone", float(r0), c=float(K))

    @classmethod
    def power(cls, c: float, p: float, r0: float = 1.0) -> "PsiProfile":
        return cls("power", float(r0), c=float(c), p=float(p))

    @classmethod
    def powerlog(cls, c: float, p: float, q: float, r0: float = 0.5) -> "PsiProfile":
        return cls("powerlog", float(r0), c=float(c), p=float(p), q=float(q))

    @classmethod
    def tabulated(cls, r, psi, r0: float | None = None) -> "PsiProfile":
        r = _frozen(r)
        psi = _frozen(psi)
        if r0 is None:
            r0 = float(r[-1]) if r.size else 0.0
        return cls("tabulated", float(r0), table_r=r, table_psi=psi)

    @classmethod
    def from_csv(cls, path, r0: float | None = None) -> "PsiProfile":
        """Read a two-column ``r, psi`` table; lines starting with ``#`` are skipped."""
        rows = []
        with open(Path(path), newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or rec[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(rec[0]), float(rec[1])))
                except (ValueError, IndexError):
                    if rows:
                        raise ConfigError(f"bad profile row {rec!r} in {path}")
                    # header line
        if not rows:
            raise ConfigError(f"no samples in {path}")
        r, psi = zip(*rows)
        return cls.tabulated(r, psi, r0)

    # validation --------------------------------------------------------
    def _check_table(self):
        r, psi = self.table_r, self.table_psi
        if r is None or psi is None or r.ndim != 1 or r.shape != psi.shape or r.size == 0:
            raise ConfigError("tabulated profile needs equal-length 1-D samples")
        if r[0] != 0.0:
            raise ConfigError("tabulated profile must start at r = 0")
        if np.any(np.diff(r) <= 0):
            raise ConfigError("tabulated radii must be strictly increasing")
        if r[-1] > self.r0:
            raise ConfigError("tabulated radii exceed r0")
        if not np.all(np.isfinite(psi)) or np.any(psi < 0):
            raise ConfigError("tabulated profile must be finite and non-negative")
        if np.any(np.diff(psi) < 0):
            raise ConfigError("tabulated profile must be non-decreasing")

    def _check_dense(self):
        if self.kind == "zero":
            return
        grid = np.unique(np.concatenate([
            np.linspace(0.0, self.r0, 4097),
            self.r0 * np.logspace(-12, 0, 1025),
        ]))
        v = self.upper(grid)
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ConfigError("profile takes negative or non-finite values")
        if np.any(np.diff(v) < -1e-12 * max(1.0, float(np.max(v)))):
            raise ConfigError("profile is not non-decreasing")

    # evaluation --------------------------------------------------------
    def _analytic(self, r: np.ndarray) -> np.ndarray:
        out = np.zeros_like(r)
        pos = r > 0
        rp = r[pos]
        if self.kind == "cone":
            out[pos] = self.c * rp
        elif self.kind == "power":
            out[pos] = self.c * rp**self.p
        elif self.kind == "powerlog":
            with np.errstate(divide="ignore"):
                out[pos] = self.c * rp**self.p * np.abs(np.log(rp)) ** (-self.q)
        return out

    def upper(self, r) -> np.ndarray:
        """Right limit psi(r+), vectorized; no range check."""
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(r)
        if self.kind == "tabulated":
            idx = np.searchsorted(self.table_r, r, side="right") - 1
            return self.table_psi[np.clip(idx, 0, None)]
        return self._analytic(r)

    def lower(self, r) -> np.ndarray:
        """Left limit psi(r-), vectorized; equals ``upper`` off the jump set."""
        r = np.asarray(r, dtype=float)
        if self.kind != "tabulated":
            return self.upper(r)
        idx = np.searchsorted(self.table_r, r, side="left") - 1
        return self.table_psi[np.clip(idx, 0, None)]

    def __call__(self, r) -> np.ndarray:
        return self.upper(r)

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind in ("power", "powerlog"):
            return self.c == 0.0
        if self.kind == "tabulated":
            return bool(np.all(self.table_psi == 0))
        return False

    @property
    def satisfies_value_cap(self) -> bool:
        """Whether psi(r0) < r0 (the body then stays a genuine graph box)."""
        return float(self.upper(self.r0)) < self.r0

    def jumps(self) -> list[tuple[float, float, float]]:
        """Jump points ``(r, psi(r-), psi(r+))`` inside (0, r0]."""
        if self.kind != "tabulated":
            return []
        out = []
        for i in range(1, self.table_r.size):
            lo, hi = self.table_psi[i - 1], self.table_psi[i]
            if hi > lo:
                out.append((float(self.table_r[i]), float(lo), float(hi)))
        return out

    def log_theta(self, k: float) -> float:
        """ln(psi(r_k)/r_k) for a (possibly huge) dyadic index ``k``."""
        lr = math.log(self.r0) - k * _LOG4
        if self.is_zero:
            return -math.inf
        if self.kind == "cone":
            return math.log(self.c)
        if self.kind == "power":
            return math.log(self.c) + (self.p - 1.0) * lr
        if self.kind == "powerlog":
            return math.log(self.c) + (self.p - 1.0) * lr - self.q * math.log(-lr)
        logs = np.log(self.table_r[1:])
        i = int(np.searchsorted(logs, lr, side="right"))
        v = float(self.table_psi[i])
        return -math.inf if v == 0.0 else math.log(v) - lr

    def describe(self) -> str:
        if self.kind == "zero":
            body = "zero"
        elif self.kind == "cone":
            body = f"cone(K={self.c:g})"
        elif self.kind == "power":
            body = f"power(c={self.c:g}, p={self.p:g})"
        elif self.kind == "powerlog":
            body = f"powerlog(c={self.c:g}, p={self.p:g}, q={self.q:g})"
        else:
            body = f"tabulated({self.table_r.size} samples)"
        return f"{body} on [0, {self.r0:g}]"


def eval_psi(profile: PsiProfile, r: float) -> tuple[float, float]:
    """Return the interval ``[psi(r-), psi(r+)]``.

    Raises
    ------
    OutOfRange
        If ``r`` lies outside ``[0, r0]``.
    """
    r = float(r)
    if not (0.0 <= r <= profile.r0):
        raise OutOfRange(f"r={r} outside [0, {profile.r0}]")
    return float(profile.lower(r)), float(profile.upper(r))


@dataclass(frozen=True, eq=False)
class DyadicSequence:
    """Radii r_k = 4**-k r0 with h_k = psi(r_k+), theta_k = h_k/r_k."""

    r_k: np.ndarray
    h_k: np.ndarray
    theta_k: np.ndarray
    partial_sums: np.ndarray

    @property
    def k_max(self) -> int:
        return self.r_k.size - 1


def dyadic_sequence(profile: PsiProfile, k_max: int = DEFAULT_K_MAX) -> DyadicSequence:
    if k_max < 1:
        raise ConfigError("k_max must be >= 1")
    k = np.arange(k_max + 1)
    r = profile.r0 * np.ldexp(1.0, -2 * k)
    h = profile.upper(r)
    theta = h / r
    return DyadicSequence(_frozen(r), _frozen(h), _frozen(theta), _frozen(np.cumsum(theta)))


def dyadic_status(profile: PsiProfile, k_max: int = DEFAULT_K_MAX,
                  abs_tol: float = DEFAULT_ABS_TOL) -> str:
    """Summability of theta_k.

    A Cauchy test on the last ``TAIL_WINDOW`` terms settles fast decay.
    Slowly decaying sequences (for instance theta_k ~ 1/k**2) fail that
    test at any practical ``k_max``, so they are settled by the log-log
    slope of theta between two very deep indices, evaluated in log space:
    slope below -1 means summable.
    """
    seq = dyadic_sequence(profile, k_max)
    if float(np.sum(seq.theta_k[-TAIL_WINDOW:])) <= abs_tol:
        return CONVERGENT
    a = profile.log_theta(_DEEP_K)
    b = profile.log_theta(2.0 * _DEEP_K)
    if b == -math.inf:
        return CONVERGENT
    slope = (b - a) / math.log(2.0)
    return CONVERGENT if slope < -1.0 else DIVERGENT


@dataclass(frozen=True)
class DiniResult:
    """Outcome of :func:`dini_integral`.

    ``value`` is the full integral over (0, r0]; ``truncated_value`` covers
    [r_kmax, r0] only and ``tail`` is the analytic remainder below r_kmax.
    Divergent results carry ``inf`` in every numeric slot.
    """

    status: str
    value: float
    dyadic_sum: float
    k_used: int
    truncated_value: float = math.inf
    tail: float = math.inf

    @property
    def convergent(self) -> bool:
        return self.status == CONVERGENT

    def summary(self) -> str:
        if self.convergent:
            return f"Convergent I={self.value:.9f}"
        return "Divergent"


def _table_integral(profile: PsiProfile, a: float, b: float) -> float:
    """Exact int_a^b psi/r^2 for a step profile (0 < a <= b)."""
    if b <= a:
        return 0.0
    r = profile.table_r
    inner = r[(r > a) & (r < b)]
    edges = np.concatenate([[a], inner, [b]])
    vals = profile.upper(edges[:-1])
    return float(np.sum(vals * (1.0 / edges[:-1] - 1.0 / edges[1:])))


def _analytic_tail(profile: PsiProfile, rho: float) -> float:
    """int_0^rho psi/r^2 for a summable built-in profile."""
    if profile.is_zero:
        return 0.0
    if profile.kind == "tabulated":
        r = profile.table_r
        pos = np.nonzero(profile.table_psi > 0)[0]
        start = float(r[pos[0]])
        return _table_integral(profile, start, rho) if start < rho else 0.0
    if profile.kind == "power":
        return profile.c * rho ** (profile.p - 1.0) / (profile.p - 1.0)
    if profile.kind == "powerlog":
        L = -math.log(rho)
        c, p, q = profile.c, profile.p, profile.q
        if p == 1.0:
            return c * L ** (1.0 - q) / (q - 1.0)
        # substitute r = exp(-s): int_L^inf c exp(-(p-1)s) s^-q ds
        val, _ = integrate.quad(lambda s: c * math.exp(-(p - 1.0) * s) * s ** (-q),
                                L, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
        return val
    raise ConfigError(f"no summable tail for {profile.describe()}")


def dini_integral(profile: PsiProfile, abs_tol: float = DEFAULT_ABS_TOL,
                  k_max: int = DEFAULT_K_MAX) -> DiniResult:
    """Evaluate I(psi) or report divergence.

    Status is decided by :func:`dyadic_status`; a convergent value is the
    quadrature over [r_kmax, r0], panel by dyadic panel in the variable
    s = ln(r0/r), plus the analytic tail below r_kmax.
    """
    status = dyadic_status(profile, k_max, abs_tol)
    if status == DIVERGENT:
        return DiniResult(DIVERGENT, math.inf, math.inf, k_max)
    seq = dyadic_sequence(profile, k_max)
    r0 = profile.r0
    if profile.is_zero:
        trunc = 0.0
    elif profile.kind == "tabulated":
        trunc = _table_integral(profile, float(seq.r_k[-1]), r0)
    else:
        def theta(s):
            r = r0 * math.exp(-s)
            return float(profile._analytic(np.array([r]))[0]) / r

        trunc = 0.0
        panel_tol = abs_tol / (4.0 * k_max)
        for k in range(k_max):
            val, _ = integrate.quad(theta, k * _LOG4, (k + 1) * _LOG4,
                                    epsabs=panel_tol, epsrel=1e-13, limit=200)
            trunc += val
    tail = _analytic_tail(profile, float(seq.r_k[-1]))
    return DiniResult(CONVERGENT, trunc + tail, float(seq.partial_sums[-1]), k_max,
                      truncated_value=trunc, tail=tail)


@dataclass(frozen=True)
class ConeFit:
    """Cone {|x| < R0, x_n > K0 |x'|} fitted under a Dini profile.

    ``flat_convention`` marks the zero profile, for which the radius is
    set to r0 by convention instead of min(r_k0, h_k0) = 0.
    """

    K0: float
    k0: int
    R0: float
    flat_convention: bool = False

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xp = np.linalg.norm(x[..., :-1], axis=-1)
        return (np.linalg.norm(x, axis=-1) < self.R0) & (x[..., -1] > self.K0 * xp)


def cone_fit(profile: PsiProfile, K0: float, k_max: int = DEFAULT_K_MAX) -> ConeFit:
    """Fit a cone of slope K0 into the interior body of ``profile``.

    k0 is the least index >= 1 with h_k / r_{k+1} <= K0 for every
    k in [k0, k_max]; then R0 = min(r_k0, h_k0).

    Raises
    ------
    NotDini
        The profile has a divergent Dini integral.
    NoFitWithinRange
        Even the last index violates the slope bound.
    """
    if not K0 > 0:
        raise ConfigError("K0 must be positive")
    if dyadic_status(profile, k_max) == DIVERGENT:
        raise NotDini(f"{profile.describe()} has a divergent Dini integral")
    if profile.is_zero:
        return ConeFit(float(K0), 0, profile.r0, flat_convention=True)
    seq = dyadic_sequence(profile, k_max + 1)
    ratio = seq.h_k[:-1] / seq.r_k[1:]
    bad = np.nonzero(ratio > K0)[0]
    if bad.size and bad[-1] == k_max:
        raise NoFitWithinRange(f"h_k/r_(k+1) > {K0} up to k = {k_max}")
    k0 = max(1, int(bad[-1]) + 1 if bad.size else 0)
    h0 = float(seq.h_k[k0])
    r0k = float(seq.r_k[k0])
    R0 = min(r0k, h0) if h0 > 0 else r0k
    return ConeFit(float(K0), k0, R0)
