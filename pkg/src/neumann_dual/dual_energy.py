"""Exponents, the dual functional, its gradient, and solution recovery.

The dual variables ``(f, g)`` are zero-average cell functions. The
functional is

    phi(f, g) = int |f|^alpha/alpha + |g|^beta/beta - T(f, g),

with ``T(f, g) = int g K f``. Discrete ``T`` is evaluated exactly for step
data, so the gradient below is the exact gradient of the discrete
functional with respect to the measure-weighted inner product.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from .errors import ExponentError, PreconditionError, UnsupportedError
from .grid import DomainKind, RadialFunction, RadialGrid, zero_average_tolerance
from .neumann_inverse import (
    bilinear_T_profiles,
    compat_constant,
    potential,
    radial_derivative_from_F,
    signed_power,
    t_form,
)

Regime = Literal["sublinear", "superlinear"]


@dataclass(frozen=True)
class Exponents:
    """Exponent pair and the derived quantities of the dual formulation."""

    p: float
    q: float
    N: int
    alpha: float
    beta: float
    alpha_prime: float
    beta_prime: float
    gamma1: float
    gamma2: float
    gamma: float
    regime: Regime

    def to_dict(self) -> dict:
        return asdict(self)


def make_exponents(p: float, q: float, N: int = 1) -> Exponents:
    """Validate ``(p, q)`` in dimension ``N`` and derive all exponents.

    Raises:
        ExponentError: for non-positive exponents, ``pq = 1`` or pairs on or
            above the critical hyperbola.
    """
    p, q = float(p), float(q)
    if not (math.isfinite(p) and math.isfinite(q)) or p <= 0 or q <= 0:
        raise ExponentError("p and q must be positive")
    if int(N) != N or N < 1:
        raise ExponentError("N must be a positive integer")
    N = int(N)
    if abs(p * q - 1.0) <= 1e-12:
        raise ExponentError("linear case pq=1 unsupported")
    if 1.0 / (p + 1.0) + 1.0 / (q + 1.0) <= (N - 2.0) / N:
        raise ExponentError("supercritical unsupported: need 1/(p+1) + 1/(q+1) > (N-2)/N")
    alpha = (p + 1.0) / p
    beta = (q + 1.0) / q
    s = alpha + beta
    gamma = alpha * beta / s
    return Exponents(
        p=p,
        q=q,
        N=N,
        alpha=alpha,
        beta=beta,
        alpha_prime=p + 1.0,
        beta_prime=q + 1.0,
        gamma1=beta / s,
        gamma2=alpha / s,
        gamma=gamma,
        regime="sublinear" if p * q < 1.0 else "superlinear",
    )


def _checked_cells(h: RadialFunction, rel: float) -> np.ndarray:
    c = np.asarray(h.cell_values(), dtype=float)
    avg = float(np.dot(h.grid.cell_measures, c))
    if abs(avg) > zero_average_tolerance(h, rel):
        raise PreconditionError(f"dual variables must have zero average, integral is {avg:.3e}")
    return c


@dataclass(frozen=True, eq=False)
class DualPair:
    """Zero-average pair ``(f, g)`` on a shared grid.

    Inputs are converted to cells; the average is checked but the values
    are not shifted. A shift at roundoff level would be harmless for ``f``
    itself, but the inverse maps ``|f|^(alpha-2) f`` have unbounded slope at
    zero for ``alpha < 2`` and would amplify it in the criticality residual.
    """

    f: RadialFunction
    g: RadialFunction
    exponents: Exponents
    avg_tol: float = 1e-8

    def __post_init__(self) -> None:
        if not self.f.grid.same_as(self.g.grid):
            raise PreconditionError("f and g live on different grids")
        fc = _checked_cells(self.f, self.avg_tol)
        gc = _checked_cells(self.g, self.avg_tol)
        object.__setattr__(self, "f", RadialFunction(self.f.grid, fc, "cell"))
        object.__setattr__(self, "g", RadialFunction(self.f.grid, gc, "cell"))

    @classmethod
    def from_arrays(cls, grid: RadialGrid, f: np.ndarray, g: np.ndarray, exponents: Exponents) -> DualPair:
        return cls(RadialFunction(grid, f, "cell"), RadialFunction(grid, g, "cell"), exponents)

    @classmethod
    def zero(cls, grid: RadialGrid, exponents: Exponents) -> DualPair:
        z = np.zeros(grid.n_cells)
        return cls.from_arrays(grid, z, z, exponents)

    @property
    def grid(self) -> RadialGrid:
        return self.f.grid

    def scaled(self, sf: float, sg: float) -> DualPair:
        return DualPair.from_arrays(self.grid, sf * self.f.values, sg * self.g.values, self.exponents)


class DiscreteFunctional:
    """Array-level evaluation of ``phi`` on one grid.

    Used by the minimizer to avoid rebuilding containers at every step.
    """

    def __init__(self, grid: RadialGrid, exponents: Exponents) -> None:
        self.grid = grid
        self.exps = exponents
        self.m = np.asarray(grid.cell_measures)
        self.total = grid.total_measure

    def project(self, h: np.ndarray) -> np.ndarray:
        return h - np.dot(self.m, h) / self.total

    def psi(self, f: np.ndarray, g: np.ndarray) -> float:
        e = self.exps
        return float(
            np.dot(self.m, np.abs(f) ** e.alpha) / e.alpha + np.dot(self.m, np.abs(g) ** e.beta) / e.beta
        )

    def gamma_psi(self, f: np.ndarray, g: np.ndarray) -> float:
        """``gamma1 |f|_alpha^alpha + gamma2 |g|_beta^beta``."""
        e = self.exps
        return float(
            e.gamma1 * np.dot(self.m, np.abs(f) ** e.alpha) + e.gamma2 * np.dot(self.m, np.abs(g) ** e.beta)
        )

    def T(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.dot(self.m * g, potential(self.grid, f).ubar))

    def phi(self, f: np.ndarray, g: np.ndarray) -> float:
        return self.psi(f, g) - self.T(f, g)

    def phi_and_gradient(self, f: np.ndarray, g: np.ndarray):
        e = self.exps
        uf = potential(self.grid, f).ubar
        ug = potential(self.grid, g).ubar
        T = float(np.dot(self.m * g, uf))
        val = self.psi(f, g) - T
        gf = self.project(signed_power(f, e.alpha - 1.0) - ug)
        gg = self.project(signed_power(g, e.beta - 1.0) - uf)
        return val, gf, gg, T

    def nehari_scale(self, f: np.ndarray, g: np.ndarray) -> float:
        T = self.T(f, g)
        if not T > 0:
            raise PreconditionError("not projectable: T(f, g) <= 0")
        return (self.gamma_psi(f, g) / T) ** (1.0 / (1.0 - self.exps.gamma))

    def nehari_project(self, f: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = self.nehari_scale(f, g)
        return t**self.exps.gamma1 * f, t**self.exps.gamma2 * g


def psi(pair: DualPair) -> float:
    """``int |f|^alpha/alpha + |g|^beta/beta``."""
    return DiscreteFunctional(pair.grid, pair.exponents).psi(pair.f.values, pair.g.values)


def phi(pair: DualPair) -> float:
    """The dual functional."""
    return DiscreteFunctional(pair.grid, pair.exponents).phi(pair.f.values, pair.g.values)


def phi_gradient(pair: DualPair) -> DualPair:
    """Zero-average representation of the derivative of ``phi``.

    Pairing the result with a zero-average direction ``(a, b)`` through
    ``int (grad_f a + grad_g b)`` gives the directional derivative.
    """
    _, gf, gg, _ = DiscreteFunctional(pair.grid, pair.exponents).phi_and_gradient(
        pair.f.values, pair.g.values
    )
    return DualPair.from_arrays(pair.grid, gf, gg, pair.exponents)


def pairing(a: DualPair, b: DualPair) -> float:
    """``int a.f b.f + a.g b.g``."""
    m = a.grid.cell_measures
    return float(np.dot(m, a.f.values * b.f.values) + np.dot(m, a.g.values * b.g.values))


def _require_superlinear(pair: DualPair) -> None:
    if pair.exponents.regime != "superlinear":
        raise UnsupportedError("the Nehari projection needs the superlinear regime")


def nehari_t(pair: DualPair) -> float:
    """Scale ``t`` placing ``(t^gamma1 f, t^gamma2 g)`` on the Nehari set.

    Raises:
        PreconditionError: if ``T(f, g) <= 0``.
    """
    _require_superlinear(pair)
    return DiscreteFunctional(pair.grid, pair.exponents).nehari_scale(pair.f.values, pair.g.values)


def nehari_project(pair: DualPair) -> DualPair:
    t = nehari_t(pair)
    e = pair.exponents
    return pair.scaled(t**e.gamma1, t**e.gamma2)


def nehari_residual(pair: DualPair) -> float:
    """``|gamma1 |f|^alpha + gamma2 |g|^beta - T| / T``."""
    fn = DiscreteFunctional(pair.grid, pair.exponents)
    T = fn.T(pair.f.values, pair.g.values)
    return abs(fn.gamma_psi(pair.f.values, pair.g.values) - T) / abs(T) if T != 0 else math.inf


def phi_along_scaling(pair: DualPair, s: np.ndarray) -> np.ndarray:
    """``phi(s^gamma1 f, s^gamma2 g) = s^gamma Psi - s T`` for each ``s``."""
    e = pair.exponents
    fn = DiscreteFunctional(pair.grid, e)
    P = fn.psi(pair.f.values, pair.g.values)
    T = fn.T(pair.f.values, pair.g.values)
    s = np.asarray(s, dtype=float)
    return s**e.gamma * P - s * T


def phi_profiles(kind: DomainKind, exponents: Exponents, fp, gp) -> float:
    """``phi`` for two step profiles in the measure coordinate."""
    P = fp.power_integral(exponents.alpha) / exponents.alpha + gp.power_integral(exponents.beta) / exponents.beta
    return P - bilinear_T_profiles(kind, fp, gp)


@dataclass(frozen=True)
class SolutionDiagnostics:
    residual: float
    compat_u: float
    compat_v: float
    phi: float
    I: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class SolutionPair:
    """``(u, v) = (K_p g, K_q f)`` recovered from a dual pair.

    Attributes:
        u, v: exact cell means of the potentials (cell functions).
        u_nodes, v_nodes: the same potentials at the nodes.
        u_r, v_r: radial derivatives at the nodes; zero on the boundary.
        I_f, I_g: cumulative integrals of ``f`` and ``g`` at the nodes.
        pair: the dual pair the solution was built from.
    """

    u: RadialFunction
    v: RadialFunction
    u_nodes: RadialFunction
    v_nodes: RadialFunction
    u_r: RadialFunction
    v_r: RadialFunction
    I_f: np.ndarray
    I_g: np.ndarray
    exponents: Exponents
    pair: DualPair
    diagnostics: SolutionDiagnostics

    @property
    def grid(self) -> RadialGrid:
        return self.u.grid

    def to_csv(self) -> str:
        lines = ["r,f,g,u,v"]
        rows = zip(self.grid.midpoints, self.pair.f.values, self.pair.g.values, self.u.values, self.v.values)
        for row in rows:
            lines.append(",".join(f"{x:.17g}" for x in row))
        return "\n".join(lines) + "\n"

    def diagnostics_json(self) -> str:
        return json.dumps(self.diagnostics.to_dict(), sort_keys=True)


def solution_parts(grid: RadialGrid, f: np.ndarray, g: np.ndarray, exps: Exponents):
    """Potentials and derivatives shared by recovery and energy checks."""
    m = grid.cell_measures
    pg = potential(grid, g)
    pf = potential(grid, f)
    cu = compat_constant(pg.ubar, m, exps.p)
    cv = compat_constant(pf.ubar, m, exps.q)
    Fg = pg.F.copy()
    Ff = pf.F.copy()
    Fg[-1] = Ff[-1] = 0.0
    return {
        "ubar": pg.ubar + cu,
        "vbar": pf.ubar + cv,
        "u_nodes": pg.u + cu,
        "v_nodes": pf.u + cv,
        "u_r": radial_derivative_from_F(grid, Fg),
        "v_r": radial_derivative_from_F(grid, Ff),
        "I_g": Fg,
        "I_f": Ff,
    }


def recover_solution(pair: DualPair) -> SolutionPair:
    """Build ``u = K_p g`` and ``v = K_q f`` with their diagnostics."""
    grid, e = pair.grid, pair.exponents
    f, g = pair.f.values, pair.g.values
    parts = solution_parts(grid, f, g, e)
    ubar, vbar = parts["ubar"], parts["vbar"]
    m = grid.cell_measures
    residual = float(
        np.max(np.abs(ubar - signed_power(f, e.alpha - 1.0)), initial=0.0)
        + np.max(np.abs(vbar - signed_power(g, e.beta - 1.0)), initial=0.0)
    )
    compat_u = float(np.dot(m, signed_power(ubar, e.p)))
    compat_v = float(np.dot(m, signed_power(vbar, e.q)))
    phi_val = phi(pair)
    I_val = _energy_I(grid, e, parts)
    diag = SolutionDiagnostics(residual, compat_u, compat_v, phi_val, I_val)
    return SolutionPair(
        u=RadialFunction(grid, ubar, "cell"),
        v=RadialFunction(grid, vbar, "cell"),
        u_nodes=RadialFunction(grid, parts["u_nodes"], "node"),
        v_nodes=RadialFunction(grid, parts["v_nodes"], "node"),
        u_r=RadialFunction(grid, parts["u_r"], "node"),
        v_r=RadialFunction(grid, parts["v_r"], "node"),
        I_f=parts["I_f"],
        I_g=parts["I_g"],
        exponents=e,
        pair=pair,
        diagnostics=diag,
    )


def _energy_I(grid: RadialGrid, e: Exponents, parts: dict) -> float:
    # grad u . grad v integrates to int I_g I_f W ds for the stored profiles.
    grad = t_form(grid.c00, grid.c01, grid.c11, parts["I_g"], parts["I_f"])
    m = grid.cell_measures
    pot_u = np.dot(m, np.abs(parts["ubar"]) ** (e.p + 1.0)) / (e.p + 1.0)
    pot_v = np.dot(m, np.abs(parts["vbar"]) ** (e.q + 1.0)) / (e.q + 1.0)
    return float(grad - pot_u - pot_v)


def direct_energy_I(sol: SolutionPair) -> float:
    """``int grad u . grad v - |u|^(p+1)/(p+1) - |v|^(q+1)/(q+1)``.

    The gradient term integrates the product of the stored derivative
    profiles exactly; the potential terms use the cell means.
    """
    parts = {"I_g": sol.I_g, "I_f": sol.I_f, "ubar": sol.u.values, "vbar": sol.v.values}
    return _energy_I(sol.grid, sol.exponents, parts)


__all__ = [
    "DiscreteFunctional",
    "DualPair",
    "Exponents",
    "SolutionDiagnostics",
    "SolutionPair",
    "direct_energy_I",
    "make_exponents",
    "nehari_project",
    "nehari_residual",
    "nehari_t",
    "pairing",
    "phi",
    "phi_along_scaling",
    "phi_gradient",
    "phi_profiles",
    "psi",
    "recover_solution",
    "solution_parts",
]
