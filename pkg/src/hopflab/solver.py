"""Monotone nine-point discretization, Dirichlet solves and comparison checks.

For a symmetric matrix a = (a11, a12; a12, a22) at an interior node the
stencil (scaled by h**2) is::

    E, W   : a11 - |a12|          NE, SW : max(a12, 0)
    N, S   : a22 - |a12|          NW, SE : max(-a12, 0)
    center : -2 (a11 + a22 - |a12|)

It is exact on quadratics and has non-negative off-center weights exactly
when |a12| <= min(a11, a22), which makes the system an M-matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pyamg
import scipy.sparse as sp
from pyamg.relaxation.relaxation import sor
from scipy.sparse.linalg import splu

from .coeffs import CoefficientField, ellipticity_check
from .errors import ConfigError, NoConvergence, NonMonotoneStencil
from .geometry import EXTERIOR, GAMMA, INTERIOR, OTHER, GridDomain

# center, E, W, N, S, NE, SW, NW, SE
OFFSETS = ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (-1, 1), (1, -1))

DIRECT_LIMIT = 150_000


def stencil_weights(a11, a12, a22, h: float) -> np.ndarray:
    """Weights in :data:`OFFSETS` order, shape ``(..., 9)``."""
    a11, a12, a22 = (np.asarray(v, dtype=float) for v in (a11, a12, a22))
    ab = np.abs(a12)
    ih2 = 1.0 / (h * h)
    w = np.empty(np.shape(a11) + (9,))
    w[..., 0] = -2.0 * (a11 + a22 - ab) * ih2
    w[..., 1] = w[..., 2] = (a11 - ab) * ih2
    w[..., 3] = w[..., 4] = (a22 - ab) * ih2
    w[..., 5] = w[..., 6] = np.maximum(a12, 0.0) * ih2
    w[..., 7] = w[..., 8] = np.maximum(-a12, 0.0) * ih2
    return w


@dataclass(frozen=True, eq=False)
class StencilSet:
    """Per interior node: lattice indices, neighbour flat indices and weights."""

    domain: GridDomain
    nodes: np.ndarray  # (m, 2) array indices of interior nodes
    neighbors: np.ndarray  # (m, 9) flat indices into the grid
    weights: np.ndarray  # (m, 9)
    monotone: bool

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def apply(self, values: np.ndarray) -> np.ndarray:
        """L_h u at the interior nodes for a grid array ``values``."""
        flat = np.asarray(values, dtype=float).ravel()
        return np.einsum("ij,ij->i", self.weights, flat[self.neighbors])

    def system(self, boundary_values: np.ndarray):
        """Sparse matrix on interior unknowns and the right-hand side from data."""
        dom = self.domain
        cls = dom.node_class.ravel()
        number = np.full(cls.size, -1, dtype=np.int64)
        flat_nodes = np.ravel_multi_index(self.nodes.T, dom.shape)
        number[flat_nodes] = np.arange(self.size)
        col = number[self.neighbors]
        inner = col >= 0
        rows = np.repeat(np.arange(self.size), 9).reshape(self.size, 9)
        keep = inner & (self.weights != 0)
        keep[:, 0] = True
        A = sp.csr_matrix((self.weights[keep], (rows[keep], col[keep])),
                          shape=(self.size, self.size))
        g = np.asarray(boundary_values, dtype=float).ravel()[self.neighbors]
        contrib = np.where(inner, 0.0, self.weights * np.where(inner, 0.0, g))
        return A, -contrib.sum(axis=1)


def discretize(fld: CoefficientField, domain: GridDomain, require_monotone: bool = False,
               check: bool = True) -> StencilSet:
    """Assemble the nine-point operator for ``fld`` on ``domain``.

    Raises
    ------
    EllipticityViolation
        ``check`` is set and the field breaks its declared bound on the grid.
    NonMonotoneStencil
        ``require_monotone`` is set and some node has |a12| > min(a11, a22).
    """
    if check:
        ellipticity_check(fld, domain)
    I, J = np.nonzero(domain.interior)
    pts = np.stack([(domain.index0[0] + I) * domain.h, (domain.index0[1] + J) * domain.h], -1)
    a11, a12, a22 = fld.components(pts)
    w = stencil_weights(a11, a12, a22, domain.h)
    monotone = bool(np.all(w[:, 1:] >= 0) and np.all(w[:, 0] < 0))
    if require_monotone and not monotone:
        k = int(np.argmin(np.min(w[:, 1:], axis=1)))
        raise NonMonotoneStencil(
            f"|a12| > min(a11, a22) at x={tuple(pts[k])}: "
            f"a=({a11[k]:.4g}, {a12[k]:.4g}, {a22[k]:.4g})")
    nx, ny = domain.shape
    nbr = np.empty((I.size, 9), dtype=np.int64)
    for k, (di, dj) in enumerate(OFFSETS):
        ii, jj = I + di, J + dj
        if np.any((ii < 0) | (ii >= nx) | (jj < 0) | (jj >= ny)):
            raise ConfigError("interior node on the grid edge")
        nbr[:, k] = ii * ny + jj
    if np.any(domain.node_class.ravel()[nbr] == EXTERIOR):
        raise ConfigError("stencil reaches an exterior node; domain is not closed")
    for a in (w, nbr):
        a.setflags(write=False)
    return StencilSet(domain, np.stack([I, J], 1), nbr, w, monotone)


# ---------------------------------------------------------------------------
# grid functions


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Values on the closed domain (NaN on exterior nodes)."""

    domain: GridDomain
    values: np.ndarray
    residual_norm: float = float("nan")
    iterations: int = 0
    method: str = ""
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_function(cls, domain: GridDomain, f, mask=None) -> "ScalarField":
        """Sample ``f(points)`` on ``mask`` (default: the closed domain)."""
        mask = domain.closed if mask is None else mask
        vals = np.full(domain.shape, np.nan)
        vals[mask] = f(domain.points(mask))
        return cls(domain, vals)

    def scale(self, c: float) -> "ScalarField":
        return ScalarField(self.domain, c * self.values, self.residual_norm,
                           self.iterations, self.method, dict(self.meta))

    @property
    def h(self) -> float:
        return self.domain.h

    def interpolate(self, points) -> np.ndarray:
        """Bilinear interpolation; NaN where a surrounding node is missing."""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        d = self.domain
        fx = p[:, 0] / d.h - d.index0[0]
        fy = p[:, 1] / d.h - d.index0[1]
        i = np.floor(fx).astype(np.int64)
        j = np.floor(fy).astype(np.int64)
        tx, ty = fx - i, fy - j
        nx, ny = d.shape
        ok = (i >= 0) & (j >= 0) & (i + 1 < nx) & (j + 1 < ny)
        out = np.full(len(p), np.nan)
        i, j, tx, ty = i[ok], j[ok], tx[ok], ty[ok]
        v = self.values
        out[ok] = ((1 - tx) * (1 - ty) * v[i, j] + tx * (1 - ty) * v[i + 1, j]
                   + (1 - tx) * ty * v[i, j + 1] + tx * ty * v[i + 1, j + 1])
        return out.reshape(np.shape(points)[:-1])

    def restrict(self, other: GridDomain) -> "ScalarField":
        """Values on the closed nodes of ``other`` (same lattice, sub-domain)."""
        if other.h != self.domain.h:
            raise ConfigError("restriction needs equal grid spacing")
        di = other.index0[0] - self.domain.index0[0]
        dj = other.index0[1] - self.domain.index0[1]
        I, J = np.nonzero(other.closed)
        src_i, src_j = I + di, J + dj
        nx, ny = self.domain.shape
        if np.any((src_i < 0) | (src_i >= nx) | (src_j < 0) | (src_j >= ny)):
            raise ConfigError("sub-domain leaves the field's grid")
        vals = np.full(other.shape, np.nan)
        vals[I, J] = self.values[src_i, src_j]
        if np.any(np.isnan(vals[I, J])):
            raise ConfigError("sub-domain node outside the field's closed domain")
        return ScalarField(other, vals, self.residual_norm)

    def to_csv(self, path) -> None:
        """Rows ``i,j,x,y,u`` over the closed domain, shortest round-trip floats."""
        d = self.domain
        I, J = np.nonzero(d.closed)
        lines = ["i,j,x,y,u"]
        for i, j in zip(I, J):
            x = float((d.index0[0] + i) * d.h)
            y = float((d.index0[1] + j) * d.h)
            lines.append(f"{i},{j},{x!r},{y!r},{float(self.values[i, j])!r}")
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_gnuplot(self, path) -> None:
        """``x y u`` blocks separated by blank lines (for ``splot``)."""
        d = self.domain
        ax, ay = d.axes()
        out = ["# x y u"]
        for i, x in enumerate(ax.tolist()):
            for j, y in enumerate(ay.tolist()):
                v = self.values[i, j]
                out.append(f"{x!r} {y!r} {'NaN' if np.isnan(v) else repr(float(v))}")
            out.append("")
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(out) + "\n")

    def save(self, path) -> None:
        d = self.domain
        np.savez_compressed(path, h=d.h, index0=np.array(d.index0), node_class=d.node_class,
                            values=self.values, residual_norm=self.residual_norm)

    @classmethod
    def load(cls, path) -> "ScalarField":
        z = np.load(path)
        cls_arr = z["node_class"].astype(np.int8)
        cls_arr.setflags(write=False)
        dom = GridDomain(float(z["h"]), tuple(int(v) for v in z["index0"]), cls_arr)
        return cls(dom, z["values"], float(z["residual_norm"]))


def boundary_data(domain: GridDomain, g, gamma_zero: bool = True) -> ScalarField:
    """Dirichlet data: ``g`` on boundary nodes, exactly 0 on the vanishing portion."""
    vals = np.full(domain.shape, np.nan)
    mask = domain.boundary
    vals[mask] = g(domain.points(mask))
    if gamma_zero:
        vals[domain.gamma] = 0.0
    return ScalarField(domain, vals)


def relative_residual(A, x, rhs, scale_vals) -> float:
    r = A @ x - rhs
    diag = float(np.max(np.abs(A.diagonal()))) if A.shape[0] else 1.0
    scale = max(float(np.max(np.abs(scale_vals))) if scale_vals.size else 0.0,
                float(np.max(np.abs(x))) if x.size else 0.0)
    if scale == 0.0:
        return float(np.max(np.abs(r))) if r.size else 0.0
    return float(np.max(np.abs(r))) / (diag * scale)


def solve_dirichlet(stencils: StencilSet, data: ScalarField | np.ndarray, rel_tol: float = 1e-10,
                    method: str = "auto", max_iter: int = 100_000, omega: float = 1.5,
                    x0: np.ndarray | None = None) -> ScalarField:
    """Solve L_h u = 0 with u = data on boundary nodes.

    Parameters
    ----------
    method : {"auto", "direct", "amg", "ssor"}
        ``ssor`` runs symmetric successive over-relaxation sweeps in a fixed
        order with relaxation ``omega``; ``direct`` uses a sparse LU
        factorization; ``amg`` an algebraic multigrid preconditioned Krylov
        iteration.  ``auto`` picks direct below :data:`DIRECT_LIMIT` unknowns.

    Raises
    ------
    NonMonotoneStencil
        The stencil set is not monotone.
    NoConvergence
        The iteration budget ran out before ``rel_tol`` was reached.
    """
    if not stencils.monotone:
        raise NonMonotoneStencil("solve requires a monotone stencil set")
    dom = stencils.domain
    g = data.values if isinstance(data, ScalarField) else np.asarray(data, dtype=float)
    bnd = dom.boundary
    if np.any(~np.isfinite(g[bnd])):
        raise ConfigError("boundary data missing on some boundary nodes")
    gb = np.where(bnd, g, 0.0)
    A, rhs = stencils.system(gb)
    if method == "auto":
        method = "direct" if stencils.size <= DIRECT_LIMIT else "amg"
    iters = 0
    scale_vals = g[bnd]
    if method == "direct":
        lu = splu(A.tocsc())
        x = lu.solve(rhs)
        res = relative_residual(A, x, rhs, scale_vals)
        while res > rel_tol and iters < 3:
            x = x + lu.solve(rhs - A @ x)
            res = relative_residual(A, x, rhs, scale_vals)
            iters += 1
        if res > rel_tol:
            raise NoConvergence(iters, res)
    elif method == "amg":
        ml = pyamg.ruge_stuben_solver(A.tocsr())
        x = np.zeros(stencils.size) if x0 is None else np.array(x0, dtype=float)
        res = relative_residual(A, x, rhs, scale_vals)
        while res > rel_tol:
            if iters >= 10:
                raise NoConvergence(iters, res)
            x = ml.solve(rhs, x0=x, tol=1e-14, accel="bicgstab", maxiter=100)
            res = relative_residual(A, x, rhs, scale_vals)
            iters += 1
    elif method == "ssor":
        A = A.tocsr()
        x = np.zeros(stencils.size) if x0 is None else np.array(x0, dtype=float)
        res = relative_residual(A, x, rhs, scale_vals)
        check = 10
        while res > rel_tol:
            if iters >= max_iter:
                raise NoConvergence(iters, res)
            n = min(check, max_iter - iters)
            sor(A, x, rhs, omega, iterations=n, sweep="symmetric")
            iters += n
            res = relative_residual(A, x, rhs, scale_vals)
    else:
        raise ConfigError(f"unknown solve method {method!r}")
    vals = np.full(dom.shape, np.nan)
    vals[bnd] = g[bnd]
    vals[stencils.nodes[:, 0], stencils.nodes[:, 1]] = x
    return ScalarField(dom, vals, res, iters, method)


# ---------------------------------------------------------------------------
# comparison utilities


@dataclass(frozen=True)
class CompareReport:
    """Outcome of a discrete comparison check.

    ``holds`` is the implication "premise => conclusion"; ``witness`` is
    the first node (array indices) where the conclusion fails and
    ``premise_witness`` the first node where the premise fails.
    """

    premise_holds: bool
    conclusion_holds: bool
    holds: bool
    margin: float
    max_excess: float
    witness: tuple | None = None
    premise_witness: tuple | None = None


def compare(u1: ScalarField, u2: ScalarField, stencils: StencilSet,
            tol: float | None = None) -> CompareReport:
    """Check that L_h u1 >= L_h u2 inside and u1 <= u2 on the boundary
    imply u1 <= u2 on the closed domain.

    ``tol`` is the value tolerance; the operator tolerance is ``tol`` times
    the largest center weight.
    """
    dom = stencils.domain
    if u1.domain.shape != dom.shape or u2.domain.shape != dom.shape:
        raise ConfigError("fields live on different grids")
    closed = dom.closed
    scale = max(float(np.nanmax(np.abs(u1.values[closed]))),
                float(np.nanmax(np.abs(u2.values[closed]))), 1e-300)
    tol_u = 1e-8 * scale if tol is None else float(tol)
    tol_L = tol_u * float(np.max(np.abs(stencils.weights[:, 0]))) if stencils.size else tol_u
    L1 = stencils.apply(u1.values)
    L2 = stencils.apply(u2.values)
    bad_int = L1 < L2 - tol_L
    bnd = dom.boundary
    bad_bnd = bnd & (u1.values > u2.values + tol_u)
    premise = not bad_int.any() and not bad_bnd.any()
    pw = None
    if not premise:
        cand = []
        if bad_int.any():
            cand.append(tuple(int(v) for v in stencils.nodes[np.argmax(bad_int)]))
        if bad_bnd.any():
            cand.append(tuple(int(v) for v in np.argwhere(bad_bnd)[0]))
        pw = min(cand)
    diff = np.where(closed, u1.values - u2.values, -np.inf)
    excess = diff > tol_u
    conclusion = not excess.any()
    witness = None if conclusion else tuple(int(v) for v in np.argwhere(excess)[0])
    margin = float(np.min(np.where(closed, u2.values - u1.values, np.inf)))
    return CompareReport(premise, conclusion, (not premise) or conclusion, margin,
                         float(np.max(diff)), witness, pw)


@dataclass(frozen=True)
class MaxPrincipleReport:
    holds: bool
    interior_max: float
    interior_min: float
    boundary_max: float
    boundary_min: float


def check_max_principle(u: ScalarField, rel_tol: float = 1e-9) -> MaxPrincipleReport:
    """Extrema over the closed domain must be attained on boundary nodes."""
    d = u.domain
    vi = u.values[d.interior]
    vb = u.values[d.boundary]
    tol = rel_tol * max(float(np.max(np.abs(vb))), 1e-300)
    imax, imin = float(vi.max()), float(vi.min())
    bmax, bmin = float(vb.max()), float(vb.min())
    return MaxPrincipleReport(imax <= bmax + tol and imin >= bmin - tol, imax, imin, bmax, bmin)


__all__ = [
    "OFFSETS", "StencilSet", "ScalarField", "CompareReport", "MaxPrincipleReport",
    "stencil_weights", "discretize", "solve_dirichlet", "boundary_data", "compare",
    "check_max_principle", "INTERIOR", "GAMMA", "OTHER",
]
