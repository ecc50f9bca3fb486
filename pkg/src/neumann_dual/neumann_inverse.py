"""Zero-average inverse of the Neumann Laplacian on radial domains.

For radial data ``h`` of zero average, ``u = K h`` satisfies
``u_r = -I h / dens`` where ``I h`` is the cumulative integral in the
measure coordinate. In ``s`` this reads ``du/ds = -F W`` with ``F = I h``
and ``W = dens**-2``. For cell data ``F`` is linear on each cell, so the
node values and the cell means of ``u`` follow exactly from the moments
stored on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .errors import NumericalError, PreconditionError, UnsupportedError
from .grid import (
    DomainKind,
    RadialFunction,
    RadialGrid,
    require_zero_average,
    weight_moments,
)


@dataclass(frozen=True)
class Potential:
    """Cumulative integral and potential of one cell function.

    ``F`` and ``u`` are node arrays with ``F[0] = u[0] = 0``; ``ubar`` holds
    the exact cell means of ``u``.
    """

    F: np.ndarray
    u: np.ndarray
    ubar: np.ndarray


def cumulative_nodes(grid: RadialGrid, cells: np.ndarray) -> np.ndarray:
    out = np.empty(grid.n_nodes)
    out[0] = 0.0
    np.cumsum(grid.cell_measures * cells, out=out[1:])
    return out


def potential(grid: RadialGrid, cells: np.ndarray) -> Potential:
    """Integrate ``du/ds = -F W`` for the cell function ``cells``.

    No normalization is applied: ``u`` starts at 0 on the inner boundary.
    """
    F = cumulative_nodes(grid, cells)
    Fa, Fb = F[:-1], F[1:]
    du = -((grid.c00 + grid.c01) * Fa + (grid.c01 + grid.c11) * Fb)
    u = np.empty(grid.n_nodes)
    u[0] = 0.0
    np.cumsum(du, out=u[1:])
    ubar = u[:-1] - (grid.c00 * Fa + grid.c01 * Fb)
    return Potential(F, u, ubar)


def _zero_mean_cells(h: RadialFunction, rel: float = 1e-8) -> np.ndarray:
    require_zero_average(h, rel)
    c = h.cell_values()
    return c - np.dot(h.grid.cell_measures, c) / h.grid.total_measure


def radial_derivative_from_F(grid: RadialGrid, F: np.ndarray) -> np.ndarray:
    """``u_r = -F / dens`` at the nodes, with the limit 0 at a ball centre."""
    dens = grid.density
    out = np.zeros_like(F)
    ok = dens > 0
    out[ok] = -F[ok] / dens[ok]
    return out


def apply_K(h: RadialFunction) -> RadialFunction:
    """Zero-average Neumann inverse, returned at the nodes.

    Raises:
        PreconditionError: when ``h`` does not have zero average within
            ``1e-8 * |h|_inf * |Omega|``.
    """
    grid = h.grid
    pot = potential(grid, _zero_mean_cells(h))
    u = pot.u - np.dot(grid.weights, pot.u) / grid.total_measure
    return RadialFunction(grid, u, "node")


def radial_derivative(h: RadialFunction) -> RadialFunction:
    """Radial derivative of ``K h`` at the nodes."""
    F = cumulative_nodes(h.grid, _zero_mean_cells(h))
    F[-1] = 0.0
    return RadialFunction(h.grid, radial_derivative_from_F(h.grid, F), "node")


def signed_power(y: np.ndarray, t: float) -> np.ndarray:
    """``|y|^(t-1) y``, with the value 0 at ``y = 0``."""
    return np.sign(y) * np.abs(y) ** t


def compat_constant(values: np.ndarray, weights: np.ndarray, t: float) -> float:
    """Unique ``c`` with ``sum w |v + c|^(t-1) (v + c) = 0``."""
    if t <= 0:
        raise PreconditionError("t must be positive")
    M = float(np.max(np.abs(values))) if values.size else 0.0
    if M == 0.0:
        return 0.0

    def fn(c: float) -> float:
        return float(np.dot(weights, signed_power(values + c, t)))

    lo, hi = -M, M
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo > 0 or fhi < 0:
        raise NumericalError("compatibility map does not change sign on its bracket")
    try:
        c, info = brentq(fn, lo, hi, xtol=1e-16 * M, rtol=4 * np.finfo(float).eps, maxiter=500, full_output=True)
    except (RuntimeError, ValueError) as exc:  # pragma: no cover - defensive
        raise NumericalError(str(exc)) from exc
    if not info.converged:  # pragma: no cover - defensive
        raise NumericalError("compatibility root did not converge")
    return float(c)


def apply_K_t(h: RadialFunction, t: float, centering: str = "node") -> RadialFunction:
    """``K h + c_t`` with ``c_t`` fixed by the signed-power compatibility.

    With ``centering="node"`` the potential is taken at the nodes and the
    compatibility integral uses the node weights. With ``"cell"`` the exact
    cell means of the potential are used with the cell measures.
    """
    grid = h.grid
    pot = potential(grid, _zero_mean_cells(h))
    if centering == "node":
        vals, w = pot.u, grid.weights
    elif centering == "cell":
        vals, w = pot.ubar, grid.cell_measures
    else:
        raise PreconditionError(f"unknown centering {centering!r}")
    base = vals - np.dot(w, vals) / grid.total_measure
    c = compat_constant(base, w, t)
    return RadialFunction(grid, base + c, centering)


def compat_integral(u: RadialFunction, t: float) -> float:
    """``int |u|^(t-1) u``."""
    w = u.grid.cell_measures if u.centering == "cell" else u.grid.weights
    return float(np.dot(w, signed_power(u.values, t)))


def t_form(
    c00: np.ndarray, c01: np.ndarray, c11: np.ndarray, F: np.ndarray, G: np.ndarray
) -> float:
    """``int F G W ds`` for node arrays ``F``, ``G`` linear on each cell."""
    Fa, Fb, Ga, Gb = F[:-1], F[1:], G[:-1], G[1:]
    return float(np.sum(c00 * Fa * Ga + c01 * (Fa * Gb + Fb * Ga) + c11 * Fb * Gb))


@dataclass(frozen=True)
class BilinearReport:
    """Both evaluations of the bilinear form and their relative gap."""

    reduced: float
    direct: float
    rel_diff: float
    tol: float

    @property
    def agree(self) -> bool:
        return self.rel_diff <= self.tol


def bilinear_T_report(f: RadialFunction, g: RadialFunction, tol: float = 1e-6) -> BilinearReport:
    """Evaluate ``T(f, g)`` in reduced and direct form."""
    if not f.grid.same_as(g.grid):
        raise PreconditionError("f and g live on different grids")
    grid = f.grid
    fc, gc = _zero_mean_cells(f), _zero_mean_cells(g)
    F = cumulative_nodes(grid, fc)
    G = cumulative_nodes(grid, gc)
    F[-1] = G[-1] = 0.0
    reduced = t_form(grid.c00, grid.c01, grid.c11, F, G)
    direct = float(np.dot(grid.cell_measures * gc, potential(grid, fc).ubar))
    scale = max(abs(reduced), abs(direct))
    rel = abs(reduced - direct) / scale if scale > 0 else 0.0
    return BilinearReport(reduced, direct, rel, tol)


def bilinear_T(f: RadialFunction, g: RadialFunction) -> float:
    """``T(f, g) = int g K f`` through the reduced cumulative form."""
    return bilinear_T_report(f, g).reduced


def bilinear_T_profiles(kind: DomainKind, fp, gp) -> float:
    """``T`` for two step profiles in the measure coordinate.

    ``fp`` and ``gp`` expose ``breakpoints`` and ``values`` (one value per
    piece). The profiles are merged on the common refinement of their
    breakpoints, on which both cumulative integrals are linear.
    """
    s = np.union1d(fp.breakpoints, gp.breakpoints)
    mids = 0.5 * (s[:-1] + s[1:])
    fv = fp.values[np.clip(np.searchsorted(fp.breakpoints, mids, side="right") - 1, 0, fp.values.size - 1)]
    gv = gp.values[np.clip(np.searchsorted(gp.breakpoints, mids, side="right") - 1, 0, gp.values.size - 1)]
    ds = np.diff(s)
    F = np.concatenate([[0.0], np.cumsum(ds * fv)])
    G = np.concatenate([[0.0], np.cumsum(ds * gv)])
    c00, c01, c11 = weight_moments(kind, s[:-1], s[1:])
    return t_form(c00, c01, c11, F, G)


class Mode1Boundary(str, Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class Mode1Solution:
    """Radial profile ``w`` of the solution ``w(r) x_1 / r``."""

    w: RadialFunction
    boundary_kind: Mode1Boundary
    residual: float


def _reconcile_nodes(h: RadialFunction) -> np.ndarray:
    if h.centering == "node":
        return np.asarray(h.values)
    c = h.values
    out = np.empty(h.grid.n_nodes)
    out[1:-1] = 0.5 * (c[:-1] + c[1:])
    out[0], out[-1] = c[0], c[-1]
    return out


def solve_mode1(h: RadialFunction, boundary_kind: Mode1Boundary | str) -> Mode1Solution:
    """Solve ``-w'' - (N-1) w'/r + (N-1) w/r^2 = h`` on ``(delta, 1)``.

    Second-order three-point differences. Balls use ``w(0) = 0``; Neumann
    ends use a mirrored ghost node.
    """
    bk = Mode1Boundary(boundary_kind)
    grid = h.grid
    kind = grid.kind
    if not kind.is_radial or kind.N < 2:
        raise UnsupportedError("mode-1 solves need a ball or annulus with N >= 2")
    r = grid.nodes
    rhs_all = _reconcile_nodes(h)
    n = r.size
    N1 = kind.N - 1.0
    hm = np.empty(n)
    hp = np.empty(n)
    hm[1:] = np.diff(r)
    hp[:-1] = np.diff(r)
    hm[0], hp[-1] = hp[0], hm[-1]

    lower = np.zeros(n)
    diag = np.zeros(n)
    upper = np.zeros(n)
    inner = slice(1, n - 1)
    a, b, ri = hm[inner], hp[inner], r[inner]
    lower[inner] = -2.0 / (a * (a + b)) + N1 / ri * b / (a * (a + b))
    upper[inner] = -2.0 / (b * (a + b)) - N1 / ri * a / (b * (a + b))
    diag[inner] = 2.0 / (a * b) - N1 / ri * (b - a) / (a * b) + N1 / ri**2

    def neumann_row(i: int, nb: int, hh: float) -> None:
        diag[i] = 2.0 / hh**2 + N1 / r[i] ** 2
        if nb < i:
            lower[i] = -2.0 / hh**2
        else:
            upper[i] = -2.0 / hh**2

    last = n - 1
    if bk is Mode1Boundary.NEUMANN:
        neumann_row(last, last - 1, hm[last])
    keep_first = kind.tag == "annulus" and bk is Mode1Boundary.NEUMANN
    if keep_first:
        neumann_row(0, 1, hp[0])
    lo_idx = 0 if keep_first else 1
    hi_idx = n if bk is Mode1Boundary.NEUMANN else n - 1
    idx = np.arange(lo_idx, hi_idx)
    m = idx.size
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[idx[:-1]]
    ab[1, :] = diag[idx]
    ab[2, :-1] = lower[idx[1:]]
    rhs = rhs_all[idx]
    try:
        sol = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"mode-1 system is singular: {exc}") from exc
    w = np.zeros(n)
    w[idx] = sol
    res = diag[inner] * w[inner] + lower[inner] * w[:-2] + upper[inner] * w[2:] - rhs_all[inner]
    scale = max(float(np.max(np.abs(rhs_all))), 1e-300)
    return Mode1Solution(RadialFunction(grid, w, "node"), bk, float(np.max(np.abs(res))) / scale)


__all__ = [
    "BilinearReport",
    "Mode1Boundary",
    "Mode1Solution",
    "Potential",
    "apply_K",
    "apply_K_t",
    "bilinear_T",
    "bilinear_T_profiles",
    "bilinear_T_report",
    "compat_constant",
    "compat_integral",
    "potential",
    "radial_derivative",
    "signed_power",
    "solve_mode1",
    "t_form",
]
