"""Least-energy dual pairs.

Both regimes run in two phases. A backtracking descent (on ``phi`` when
``pq < 1``, on ``phi`` restricted to the Nehari set when ``pq > 1``) with
periodic star polishing locates the least-energy basin. A damped Newton
solve of the discrete critical-point equations then removes the remaining
error. The Newton result is kept only if its energy does not exceed the
descent level, so the recorded history stays non-increasing.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .dual_energy import (
    DiscreteFunctional,
    DualPair,
    Exponents,
    SolutionPair,
    nehari_project,
    recover_solution,
)
from .errors import PreconditionError, UnsupportedError
from .grid import RadialGrid
from .neumann_inverse import signed_power
from .rearrange import star_transform_grid


@dataclass(frozen=True)
class MinimizeOptions:
    """Controls for :func:`minimize`.

    Attributes:
        max_iterations: descent iterations per round.
        step_init: initial step length.
        backtrack: step reduction factor in ``(0, 1)``.
        tol: target for the criticality residual.
        stagnation_tol: relative energy change that ends a descent round.
        seed: seed of the initial profile perturbation.
        polish_every: descent iterations between star polishing attempts.
        newton_max: Newton iterations per polish.
        noise: relative size of the seeded perturbation.
        rounds: descent and Newton rounds before giving up.
    """

    max_iterations: int = 1500
    step_init: float = 1.0
    backtrack: float = 0.5
    tol: float = 1e-9
    stagnation_tol: float = 1e-7
    seed: int = 0
    polish_every: int = 50
    newton_max: int = 60
    noise: float = 1e-2
    rounds: int = 4

    def __post_init__(self) -> None:
        if not 0.0 < self.backtrack < 1.0:
            raise PreconditionError("backtrack must lie in (0, 1)")
        for name in ("step_init", "tol", "stagnation_tol"):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"{name} must be positive")
        for name in ("max_iterations", "polish_every", "newton_max", "rounds"):
            if int(getattr(self, name)) < 1:
                raise PreconditionError(f"{name} must be a positive integer")
        if self.noise < 0:
            raise PreconditionError("noise must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class MinResult:
    """Outcome of a minimization run."""

    pair: DualPair
    solution: SolutionPair
    phi_value: float
    iterations: int
    converged: bool
    history: list[float]
    newton_iterations: int = 0
    notes: list[str] = field(default_factory=list)
    options: MinimizeOptions | None = None

    def report(self) -> dict:
        d = self.solution.diagnostics
        return {
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "newton_iterations": int(self.newton_iterations),
            "phi": self.phi_value,
            "residuals": {
                "criticality": d.residual,
                "compat_u": d.compat_u,
                "compat_v": d.compat_v,
            },
            "I": d.I,
            "options": self.options.to_dict() if self.options else None,
            "seed": self.options.seed if self.options else None,
            "notes": list(self.notes),
        }

    def report_json(self) -> str:
        return json.dumps(self.report(), sort_keys=True, indent=2)


def initial_profile(grid: RadialGrid, seed: int, noise: float) -> np.ndarray:
    """Zero-average ``r - midpoint`` cell profile plus smooth seeded noise."""
    r = grid.midpoints
    lo = grid.nodes[0]
    rho = (r - lo) / (1.0 - lo)
    base = rho - 0.5
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=4) / np.arange(2, 6)
    pert = sum(c * np.cos((k + 2) * np.pi * rho) for k, c in enumerate(coef))
    h = base + noise * pert
    m = grid.cell_measures
    h = h - np.dot(m, h) / grid.total_measure
    return h / np.max(np.abs(h))


def star_polish(pair: DualPair) -> DualPair:
    """Star-transform both components and keep the original norms.

    Each component is rearranged exactly, averaged back to the grid, and
    rescaled to its ``L^alpha`` (resp. ``L^beta``) norm before the
    transform.
    """
    e = pair.exponents
    out = []
    for h, t in ((pair.f, e.alpha), (pair.g, e.beta)):
        if h.sup_norm() == 0.0:
            out.append(h.values)
            continue
        hs = star_transform_grid(h).function
        n0, n1 = h.lp_norm(t), hs.lp_norm(t)
        out.append(hs.values * (n0 / n1 if n1 > 0 else 1.0))
    return DualPair.from_arrays(pair.grid, out[0], out[1], e)


class _Descent:
    """Backtracking descent shared by both regimes.

    In the superlinear regime every iterate is projected onto the Nehari
    set and the monitored energy is ``phi`` at the projected pair.
    """

    def __init__(self, fn: DiscreteFunctional, opts: MinimizeOptions, nehari: bool) -> None:
        self.fn = fn
        self.opts = opts
        self.nehari = nehari
        self.step = opts.step_init

    def energy(self, f: np.ndarray, g: np.ndarray):
        if self.nehari:
            if not self.fn.T(f, g) > 0:
                return None
            f, g = self.fn.nehari_project(f, g)
        return self.fn.phi(f, g), f, g

    def polish(self, f: np.ndarray, g: np.ndarray, val: float):
        grid, e = self.fn.grid, self.fn.exps
        try:
            cand = star_polish(DualPair.from_arrays(grid, f, g, e))
        except PreconditionError:
            return None
        res = self.energy(cand.f.values, cand.g.values)
        if res is None or not res[0] < val:
            return None
        return res

    def run(self, f: np.ndarray, g: np.ndarray, history: list[float]) -> tuple[np.ndarray, np.ndarray, int]:
        fn, opts = self.fn, self.opts
        val = history[-1]
        m = fn.m
        window = [val]
        it = 0
        for it in range(1, opts.max_iterations + 1):
            _, gf, gg, _ = fn.phi_and_gradient(f, g)
            gnorm2 = float(np.dot(m, gf * gf) + np.dot(m, gg * gg))
            if gnorm2 == 0.0:
                break
            accepted = False
            for _ in range(60):
                res = self.energy(fn.project(f - self.step * gf), fn.project(g - self.step * gg))
                if res is not None and res[0] <= val - 1e-4 * self.step * gnorm2:
                    accepted = True
                    break
                self.step *= opts.backtrack
            if not accepted:
                break
            val, f, g = res
            history.append(val)
            self.step /= opts.backtrack
            if it % opts.polish_every == 0:
                pol = self.polish(f, g, val)
                if pol is not None:
                    val, f, g = pol
                    history.append(val)
            window.append(val)
            if len(window) > 50:
                window.pop(0)
                if abs(window[0] - window[-1]) <= opts.stagnation_tol * (abs(val) + 1e-300):
                    break
        return f, g, it


def _newton(fn: DiscreteFunctional, f0: np.ndarray, g0: np.ndarray, max_iter: int):
    """Damped Newton on the discrete critical-point system.

    Unknowns per side are the primary variable (``f`` itself when ``p < 1``,
    otherwise the cell mean of ``u``), the cumulative integral at the nodes,
    and the potential at the nodes. The free potential constant plays the
    role of the multiplier of the zero-average constraint.
    """
    grid, e = fn.grid, fn.exps
    n = grid.n_cells
    m = np.asarray(grid.cell_measures)
    c00, c01, c11 = grid.c00, grid.c01, grid.c11
    e0, e1 = c00 + c01, c01 + c11
    use_f = e.p < 1.0
    use_g = e.q < 1.0

    # layout: X | Y | Fg | U | Ff | V
    iX, iY = 0, n
    iFg, iU = 2 * n, 3 * n + 1
    iFf, iV = 4 * n + 2, 5 * n + 3
    size = 6 * n + 4

    def dual_of(Z, is_f):
        # Convert the primary variable to the dual one and its derivative.
        if (use_f if is_f else use_g):
            return Z, np.ones_like(Z)
        t = e.p if is_f else e.q
        return signed_power(Z, t), t * np.abs(Z) ** (t - 1.0)

    def crit(Z, is_f):
        # Left side of "|f|^(alpha-2) f = ubar" in the primary variable.
        if (use_f if is_f else use_g):
            a = e.alpha if is_f else e.beta
            return signed_power(Z, a - 1.0), (a - 1.0) * np.abs(Z) ** (a - 2.0)
        return Z, np.ones_like(Z)

    def build_initial():
        X = f0.copy() if use_f else signed_power(f0, e.alpha - 1.0)
        Y = g0.copy() if use_g else signed_power(g0, e.beta - 1.0)
        z = np.zeros(size)
        z[iX:iX + n], z[iY:iY + n] = X, Y
        for iF, iP, src, target in ((iFg, iU, g0, X), (iFf, iV, f0, Y)):
            F = np.concatenate([[0.0], np.cumsum(m * src)])
            du = -(e0 * F[:-1] + e1 * F[1:])
            P = np.concatenate([[0.0], np.cumsum(du)])
            pbar = P[:-1] - (c00 * F[:-1] + c01 * F[1:])
            lhs = crit(target, iF == iFg)[0]
            P = P + np.dot(m, lhs - pbar) / grid.total_measure
            z[iF:iF + n + 1], z[iP:iP + n + 1] = F, P
        return z

    k = np.arange(n)

    def system(z, want_jac=True):
        X, Y = z[iX:iX + n], z[iY:iY + n]
        fX, dfX = dual_of(X, True)
        gY, dgY = dual_of(Y, False)
        cX, dcX = crit(X, True)
        cY, dcY = crit(Y, False)
        R = np.empty(size)
        rows, cols, vals = [], [], []

        def add(r, c, v):
            rows.append(r)
            cols.append(c)
            vals.append(np.broadcast_to(v, np.shape(r)).astype(float))

        # Equations are laid out in the same blocks as the unknowns.
        # Side A (u from g): F block rows iFg.., U block rows iU.., crit rows iX..
        for iF, iP, iCrit, src, dsrc, iSrc, lhs, dlhs, iLhs in (
            (iFg, iU, iX, gY, dgY, iY, cX, dcX, iX),
            (iFf, iV, iY, fX, dfX, iX, cY, dcY, iY),
        ):
            F = z[iF:iF + n + 1]
            P = z[iP:iP + n + 1]
            # F_0 = 0
            R[iF] = F[0]
            if want_jac:
                add(np.array([iF]), np.array([iF]), 1.0)
            # F_{k+1} - F_k - m_k src_k = 0, rows iF+1 .. iF+n
            R[iF + 1:iF + n + 1] = F[1:] - F[:-1] - m * src
            if want_jac:
                add(iF + 1 + k, iF + 1 + k, 1.0)
                add(iF + 1 + k, iF + k, -1.0)
                add(iF + 1 + k, iSrc + k, -m * dsrc)
            # P recurrences, rows iP .. iP+n-1 ; row iP+n holds F_n = 0
            R[iP:iP + n] = P[1:] - P[:-1] + e0 * F[:-1] + e1 * F[1:]
            if want_jac:
                add(iP + k, iP + k + 1, 1.0)
                add(iP + k, iP + k, -1.0)
                add(iP + k, iF + k, e0)
                add(iP + k, iF + k + 1, e1)
            R[iP + n] = F[n]
            if want_jac:
                add(np.array([iP + n]), np.array([iF + n]), 1.0)
            # lhs(X) - pbar = 0, rows iCrit .. iCrit+n-1
            pbar = P[:-1] - (c00 * F[:-1] + c01 * F[1:])
            R[iCrit:iCrit + n] = lhs - pbar
            if want_jac:
                add(iCrit + k, iLhs + k, dlhs)
                add(iCrit + k, iP + k, -1.0)
                add(iCrit + k, iF + k, c00)
                add(iCrit + k, iF + k + 1, c01)
        if not want_jac:
            return R, None
        J = sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
        )
        return R, J

    def unpack(z):
        X, Y = z[iX:iX + n], z[iY:iY + n]
        return dual_of(X, True)[0], dual_of(Y, False)[0]

    z = build_initial()
    R, J = system(z)
    rn = float(np.linalg.norm(R))
    it = 0
    for it in range(1, max_iter + 1):
        try:
            dz = spsolve(J, -R)
        except Exception:  # pragma: no cover - singular Jacobian
            break
        if not np.all(np.isfinite(dz)):
            break
        lam = 1.0
        improved = False
        for _ in range(40):
            zt = z + lam * dz
            Rt, _ = system(zt, want_jac=False)
            rt = float(np.linalg.norm(Rt))
            if np.isfinite(rt) and rt < rn:
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
        z, rn = zt, rt
        if rn <= 1e-15 * max(1.0, float(np.max(np.abs(z)))):
            break
        R, J = system(z)
    f, g = unpack(z)
    # No re-projection: the system already imposes zero averages.
    return f, g, it, rn


def _check_regime(exps: Exponents, want: str, grid: RadialGrid) -> None:
    if exps.regime != want:
        raise UnsupportedError(f"exponents are {exps.regime}, expected {want}")
    if exps.N != grid.kind.N:
        raise PreconditionError("exponent dimension does not match the grid")


def _finish(
    fn: DiscreteFunctional,
    f: np.ndarray,
    g: np.ndarray,
    history: list[float],
    iterations: int,
    opts: MinimizeOptions,
    nehari: bool,
    newton_its: int,
    notes: list[str],
    converged: bool,
) -> MinResult:
    pair = DualPair.from_arrays(fn.grid, f, g, fn.exps)
    if nehari:
        pair = nehari_project(pair)
    sol = recover_solution(pair)
    return MinResult(
        pair=pair,
        solution=sol,
        phi_value=sol.diagnostics.phi,
        iterations=iterations,
        converged=converged,
        history=history,
        newton_iterations=newton_its,
        notes=notes,
        options=opts,
    )


def _minimize(grid: RadialGrid, exps: Exponents, opts: MinimizeOptions, nehari: bool) -> MinResult:
    fn = DiscreteFunctional(grid, exps)
    base = initial_profile(grid, opts.seed, opts.noise)
    notes: list[str] = []
    if nehari:
        f, g = base.copy(), base.copy()
        if not fn.T(f, g) > 0:  # pragma: no cover - T(h, h) > 0 for h != 0
            raise PreconditionError("seed is not projectable")
        f, g = fn.nehari_project(f, g)
    else:
        best = None
        for k in range(1, 13):
            t = 10.0 ** (-k / 2)
            cand = (t**exps.gamma1 * base, t**exps.gamma2 * base)
            val = fn.phi(*cand)
            if val < 0 and (best is None or val < best[0]):
                best = (val, *cand)
        if best is None:  # pragma: no cover - cannot happen when gamma > 1
            raise PreconditionError("no negative-energy seed found")
        _, f, g = best
    history = [fn.phi(f, g)]
    descent = _Descent(fn, opts, nehari)
    total_its = 0
    newton_total = 0
    for round_ in range(opts.rounds):
        f, g, its = descent.run(f, g, history)
        total_its += its
        pol = descent.polish(f, g, history[-1])
        if pol is not None:
            history.append(pol[0])
            f, g = pol[1], pol[2]
        fN, gN, nits, _ = _newton(fn, f, g, opts.newton_max)
        newton_total += nits
        res = descent.energy(fN, gN)
        level = history[-1]
        if res is not None and res[0] <= level + 1e-10 * (1.0 + abs(level)):
            pair = DualPair.from_arrays(grid, res[1], res[2], exps)
            resid = recover_solution(pair).diagnostics.residual
            if resid <= opts.tol:
                history.append(min(res[0], level))
                return _finish(fn, res[1], res[2], history, total_its, opts, nehari, newton_total, notes, True)
            notes.append(f"round {round_}: Newton residual {resid:.3e} above tolerance")
        else:
            notes.append(f"round {round_}: Newton point rejected (energy above descent level)")
    return _finish(fn, f, g, history, total_its, opts, nehari, newton_total, notes, False)


def minimize_sublinear(grid: RadialGrid, exps: Exponents, opts: MinimizeOptions | None = None) -> MinResult:
    """Global minimizer of ``phi`` when ``pq < 1``."""
    _check_regime(exps, "sublinear", grid)
    return _minimize(grid, exps, opts or MinimizeOptions(), nehari=False)


def minimize_superlinear(grid: RadialGrid, exps: Exponents, opts: MinimizeOptions | None = None) -> MinResult:
    """Minimizer of ``phi`` on the Nehari set when ``pq > 1``."""
    _check_regime(exps, "superlinear", grid)
    return _minimize(grid, exps, opts or MinimizeOptions(), nehari=True)


def minimize(grid: RadialGrid, exps: Exponents, opts: MinimizeOptions | None = None) -> MinResult:
    """Dispatch on the regime of ``exps``."""
    if exps.regime == "sublinear":
        return minimize_sublinear(grid, exps, opts)
    return minimize_superlinear(grid, exps, opts)


__all__ = [
    "MinResult",
    "MinimizeOptions",
    "initial_profile",
    "minimize",
    "minimize_sublinear",
    "minimize_superlinear",
    "star_polish",
]
