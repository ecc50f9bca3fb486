"""Radial domains, their quadrature, and the measure coordinate.

Every radial domain is handled through the measure coordinate
``s = tau(r)``, the volume of the region between the inner boundary and the
sphere of radius ``r``. A grid of radii ``r_0 < ... < r_n`` induces cells
``[s_k, s_{k+1}]`` whose measures are exact, so cell sums reproduce
``|Omega|`` to roundoff.

Functions live either on nodes (piecewise linear in ``s``) or on cells
(piecewise constant in ``s``). Cell functions are the working
representation of the dual variables: cumulative integrals, flips and
rearrangements are all exact on them.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import DomainError, PreconditionError

Centering = Literal["node", "cell"]

_GL_T, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


def unit_ball_volume(N: int) -> float:
    """Volume of the unit ball in dimension ``N``."""
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1)


@dataclass(frozen=True)
class DomainKind:
    """Ball, annulus or interval.

    Attributes:
        tag: one of ``"ball"``, ``"annulus"``, ``"interval"``.
        N: space dimension. The interval has ``N = 1``.
        delta: inner radius. Zero for balls, in ``(0, 1)`` for annuli and
            ``-1`` for the interval, whose nodes span ``[-1, 1]``.
    """

    tag: str
    N: int = 1
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.tag not in ("ball", "annulus", "interval"):
            raise DomainError(f"unknown domain tag {self.tag!r}")
        if isinstance(self.N, bool) or int(self.N) != self.N:
            raise DomainError(f"dimension must be an integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "delta", float(self.delta))
        if self.tag == "ball":
            if self.N < 1:
                raise DomainError("ball needs N >= 1")
            if self.delta != 0.0:
                raise DomainError("ball has delta = 0")
        elif self.tag == "annulus":
            if self.N < 2:
                raise DomainError("annulus needs N >= 2")
            if not 0.0 < self.delta < 1.0:
                raise DomainError("annulus needs 0 < delta < 1")
        else:
            if self.N != 1:
                raise DomainError("interval has N = 1")
            object.__setattr__(self, "delta", -1.0)

    @classmethod
    def ball(cls, N: int) -> DomainKind:
        return cls("ball", N, 0.0)

    @classmethod
    def annulus(cls, N: int, delta: float) -> DomainKind:
        return cls("annulus", N, delta)

    @classmethod
    def interval(cls) -> DomainKind:
        return cls("interval", 1, -1.0)

    @property
    def omega_N(self) -> float:
        return unit_ball_volume(self.N)

    @property
    def total_measure(self) -> float:
        if self.tag == "interval":
            return 2.0
        return self.omega_N * (1.0 - self.delta**self.N)

    @property
    def r_min(self) -> float:
        return self.delta

    @property
    def is_radial(self) -> bool:
        """True for balls and annuli, where ``N >= 2`` geometry applies."""
        return self.tag != "interval"

    def to_dict(self) -> dict:
        return {"kind": self.tag, "N": self.N, "delta": self.delta}

    def __str__(self) -> str:
        if self.tag == "interval":
            return "Interval"
        if self.tag == "ball":
            return f"Ball(N={self.N})"
        return f"Annulus(N={self.N}, delta={self.delta:g})"


def _tau(kind: DomainKind, r: np.ndarray) -> np.ndarray:
    if kind.tag == "interval":
        return r + 1.0
    return kind.omega_N * (r**kind.N - kind.delta**kind.N)


def _tau_inv(kind: DomainKind, s: np.ndarray) -> np.ndarray:
    if kind.tag == "interval":
        return s - 1.0
    y = s / kind.omega_N + kind.delta**kind.N
    return np.clip(y, 0.0, None) ** (1.0 / kind.N)


def _density(kind: DomainKind, r: np.ndarray) -> np.ndarray:
    """``d tau / d r``, the area of the sphere of radius ``r``."""
    if kind.tag == "interval":
        return np.ones_like(r)
    return kind.N * kind.omega_N * r ** (kind.N - 1)


def weight_moments(
    kind: DomainKind, s_a: np.ndarray, s_b: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Moments of ``W(s) = dens(r(s))**-2`` against linear hat functions.

    With local coordinate ``t = (s - s_a) / (s_b - s_a)`` this returns
    ``c00 = int (1-t)^2 W``, ``c01 = int t(1-t) W`` and ``c11 = int t^2 W``
    over ``[s_a, s_b]`` (measure ``ds``). Products of functions that are
    linear in ``s`` against ``W`` are integrated exactly with them.

    At the centre of a ball with ``N >= 2`` the ``c00`` moment diverges; it
    is returned as 0 because every cumulative integral vanishes there.
    """
    s_a = np.asarray(s_a, dtype=float)
    s_b = np.asarray(s_b, dtype=float)
    L = s_b - s_a
    if kind.tag == "interval" or kind.N == 1:
        w = 1.0 if kind.tag == "interval" else 1.0 / (kind.N * kind.omega_N) ** 2
        return w * L / 3.0, w * L / 6.0, w * L / 3.0
    N, om = kind.N, kind.omega_N
    a = 2.0 / N - 2.0
    d_N = kind.delta**N
    ya = np.clip(s_a / om + d_N, 0.0, None)
    yb = s_b / om + d_N
    Ly = yb - ya
    scale = 1.0 / (N * N * om)
    c00 = np.zeros_like(Ly)
    c01 = np.zeros_like(Ly)
    c11 = np.zeros_like(Ly)

    far = (ya >= 4.0 * Ly) & (Ly > 0)
    if np.any(far):
        y0, ly = ya[far], Ly[far]
        pts = y0[:, None] + ly[:, None] * _GL_T[None, :]
        wy = (pts**a) * _GL_W[None, :] * (ly * scale)[:, None]
        c00[far] = wy @ ((1.0 - _GL_T) ** 2)
        c01[far] = wy @ (_GL_T * (1.0 - _GL_T))
        c11[far] = wy @ (_GL_T**2)

    near = ~far & (Ly > 0)
    if np.any(near):
        y0, y1, ly = ya[near], yb[near], Ly[near]

        def pw(j: int) -> np.ndarray:
            e = a + j + 1.0
            if abs(e) < 1e-14:
                with np.errstate(divide="ignore"):
                    return np.log(y1) - np.log(y0)
            with np.errstate(divide="ignore"):
                return (y1**e - y0**e) / e

        P0, P1, P2 = pw(0), pw(1), pw(2)
        inv = scale / ly**2
        at_origin = y0 == 0.0
        with np.errstate(invalid="ignore"):
            v00 = (y1 * y1 * P0 - 2.0 * y1 * P1 + P2) * inv
            t01 = np.where(at_origin, 0.0, y0 * y1 * P0)
            v01 = (-P2 + (y0 + y1) * P1 - t01) * inv
            v11 = (P2 - 2.0 * y0 * P1 + y0 * y0 * np.where(at_origin, 0.0, P0)) * inv
        c00[near] = np.where(at_origin, 0.0, v00)
        c01[near] = v01
        c11[near] = v11
    return c00, c01, c11


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Discretized radial domain.

    Attributes:
        kind: the domain.
        nodes: strictly increasing radii spanning ``[delta, 1]`` (or
            ``[-1, 1]`` for the interval).
        s_nodes: measure coordinate of the nodes.
        cell_measures: exact measures of the cells ``[r_k, r_{k+1}]``.
        weights: node quadrature weights, the trapezoid rule in ``s``.
        density: ``d tau / d r`` at the nodes.
        c00, c01, c11: per-cell moments from :func:`weight_moments`.
    """

    kind: DomainKind
    nodes: np.ndarray
    s_nodes: np.ndarray = field(init=False, repr=False)
    cell_measures: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    density: np.ndarray = field(init=False, repr=False)
    c00: np.ndarray = field(init=False, repr=False)
    c01: np.ndarray = field(init=False, repr=False)
    c11: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        r = np.array(self.nodes, dtype=float)
        if r.ndim != 1 or r.size < 16:
            raise DomainError("a grid needs at least 16 nodes")
        if not np.all(np.isfinite(r)) or np.any(np.diff(r) <= 0):
            raise DomainError("nodes must be finite and strictly increasing")
        lo, hi = (-1.0, 1.0) if self.kind.tag == "interval" else (self.kind.delta, 1.0)
        if abs(r[0] - lo) > 1e-12 or abs(r[-1] - hi) > 1e-12:
            raise DomainError(f"nodes must span [{lo}, {hi}]")
        r[0], r[-1] = lo, hi
        s = _tau(self.kind, r)
        s[0], s[-1] = 0.0, self.kind.total_measure
        m = np.diff(s)
        w = np.zeros_like(s)
        w[:-1] += 0.5 * m
        w[1:] += 0.5 * m
        c00, c01, c11 = weight_moments(self.kind, s[:-1], s[1:])
        for name, arr in (
            ("nodes", r),
            ("s_nodes", s),
            ("cell_measures", m),
            ("weights", w),
            ("density", _density(self.kind, r)),
            ("c00", c00),
            ("c01", c01),
            ("c11", c11),
        ):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def total_measure(self) -> float:
        return self.kind.total_measure

    @property
    def omega_N(self) -> float:
        return self.kind.omega_N

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def same_as(self, other: RadialGrid) -> bool:
        return self is other or (
            self.kind == other.kind
            and self.nodes.shape == other.nodes.shape
            and np.array_equal(self.nodes, other.nodes)
        )

    def header(self) -> dict:
        """JSON-serializable description of the grid."""
        d = self.kind.to_dict()
        d["nodes"] = [float(x) for x in self.nodes]
        return d

    @classmethod
    def from_header(cls, header: dict) -> RadialGrid:
        kind = DomainKind(header["kind"], header.get("N", 1), header.get("delta", 0.0))
        return cls(kind, np.asarray(header["nodes"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.header())


def make_grid(kind: DomainKind, node_count: int) -> RadialGrid:
    """Uniform grid in ``r`` with ``node_count`` nodes."""
    if isinstance(node_count, bool) or int(node_count) != node_count:
        raise DomainError("node_count must be an integer")
    if node_count < 16:
        raise DomainError("node_count must be at least 16")
    lo = -1.0 if kind.tag == "interval" else kind.delta
    return RadialGrid(kind, np.linspace(lo, 1.0, int(node_count)))


def grid_uniform_in_s(kind: DomainKind, node_count: int) -> RadialGrid:
    """Grid whose nodes are equally spaced in the measure coordinate."""
    if node_count < 16:
        raise DomainError("node_count must be at least 16")
    s = np.linspace(0.0, kind.total_measure, int(node_count))
    r = _tau_inv(kind, s)
    r[0] = -1.0 if kind.tag == "interval" else kind.delta
    r[-1] = 1.0
    return RadialGrid(kind, r)


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Sampled radial profile.

    Node-centered functions are piecewise linear in ``s`` between nodes.
    Cell-centered functions are constant in ``s`` on each cell.
    """

    grid: RadialGrid
    values: np.ndarray
    centering: Centering = "node"

    def __post_init__(self) -> None:
        if self.centering not in ("node", "cell"):
            raise PreconditionError(f"unknown centering {self.centering!r}")
        v = np.array(self.values, dtype=float)
        expected = self.grid.n_nodes if self.centering == "node" else self.grid.n_cells
        if v.shape != (expected,):
            raise PreconditionError(
                f"{self.centering} function needs {expected} values, got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise PreconditionError("values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: RadialGrid, fn, centering: Centering = "node") -> RadialFunction:
        """Sample ``fn(r)``. Cell functions take the endpoint average."""
        nodal = np.asarray(fn(grid.nodes), dtype=float) * np.ones(grid.n_nodes)
        if centering == "node":
            return cls(grid, nodal, "node")
        return cls(grid, 0.5 * (nodal[:-1] + nodal[1:]), "cell")

    @property
    def positions(self) -> np.ndarray:
        return self.grid.nodes if self.centering == "node" else self.grid.midpoints

    def cell_values(self) -> np.ndarray:
        """Constant-per-cell values carrying the same integral on each cell."""
        if self.centering == "cell":
            return self.values
        return 0.5 * (self.values[:-1] + self.values[1:])

    def as_cells(self) -> RadialFunction:
        if self.centering == "cell":
            return self
        return RadialFunction(self.grid, self.cell_values(), "cell")

    def with_values(self, values: np.ndarray) -> RadialFunction:
        return RadialFunction(self.grid, values, self.centering)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def lp_norm(self, t: float) -> float:
        """``(int |h|^t)^(1/t)``, exact for cell functions."""
        if self.centering == "cell":
            return float(np.sum(self.grid.cell_measures * np.abs(self.values) ** t) ** (1 / t))
        return float(np.sum(self.grid.weights * np.abs(self.values) ** t) ** (1 / t))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "value"])
        for x, y in zip(self.positions, self.values):
            w.writerow([f"{x:.17g}", f"{y:.17g}"])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, grid: RadialGrid, text: str) -> RadialFunction:
        """Parse ``r,value`` rows; row positions decide the centering."""
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["r", "value"]:
            raise PreconditionError("expected header 'r,value'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
        if data.size == 0:
            raise PreconditionError("no data rows")
        r, v = data[:, 0], data[:, 1]
        for centering, pos in (("node", grid.nodes), ("cell", grid.midpoints)):
            if r.shape == pos.shape and np.allclose(r, pos, rtol=0, atol=1e-12):
                return cls(grid, v, centering)
        raise PreconditionError("CSV radii match neither the grid nodes nor the cell midpoints")


def _check_grid(h: RadialFunction, grid: RadialGrid) -> None:
    if not h.grid.same_as(grid):
        raise PreconditionError("function lives on a different grid")


def integrate(h: RadialFunction) -> float:
    """``int_Omega h``: trapezoid in ``s`` for nodes, exact for cells."""
    if h.centering == "cell":
        return float(np.dot(h.grid.cell_measures, h.values))
    return float(np.dot(h.grid.weights, h.values))


def measure_map(grid: RadialGrid | DomainKind, r):
    """``tau(r)``: measure of the region between the inner boundary and ``r``."""
    kind = grid.kind if isinstance(grid, RadialGrid) else grid
    arr = np.asarray(r, dtype=float)
    lo = -1.0 if kind.tag == "interval" else kind.delta
    if np.any(~np.isfinite(arr)) or np.any(arr < lo - 1e-14) or np.any(arr > 1.0 + 1e-14):
        raise DomainError(f"radius outside [{lo}, 1]")
    out = _tau(kind, np.clip(arr, lo, 1.0))
    return float(out) if out.ndim == 0 else out


def measure_map_inverse(grid: RadialGrid | DomainKind, s):
    """Inverse of :func:`measure_map`."""
    kind = grid.kind if isinstance(grid, RadialGrid) else grid
    arr = np.asarray(s, dtype=float)
    tot = kind.total_measure
    tol = 1e-14 * max(1.0, tot)
    if np.any(~np.isfinite(arr)) or np.any(arr < -tol) or np.any(arr > tot + tol):
        raise DomainError(f"measure coordinate outside [0, {tot}]")
    out = _tau_inv(kind, np.clip(arr, 0.0, tot))
    return float(out) if out.ndim == 0 else out


def project_zero_average(h: RadialFunction) -> RadialFunction:
    """Subtract the mean so that :func:`integrate` returns zero."""
    mean = integrate(h) / h.grid.total_measure
    return h.with_values(h.values - mean)


def zero_average_tolerance(h: RadialFunction, rel: float = 1e-8) -> float:
    return rel * max(h.sup_norm(), 1e-300) * h.grid.total_measure


def require_zero_average(h: RadialFunction, rel: float = 1e-8) -> None:
    avg = integrate(h)
    if abs(avg) > zero_average_tolerance(h, rel):
        raise PreconditionError(f"input must have zero average, integral is {avg:.3e}")
