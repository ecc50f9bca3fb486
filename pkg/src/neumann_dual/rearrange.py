"""Cumulative integral, flipping, decreasing rearrangement and the star map.

All operators act on the cell representation, where a function is a step
function in the measure coordinate. On step functions these operators are
exact: the flip splits every cell in which the cumulative integral changes
sign at the crossing point, and the rearrangement sorts pieces by value.
Results are :class:`MeasureProfile` objects on ``[0, |Omega|]``; use
:func:`resample_to_grid` to bring them back to a radial grid.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PreconditionError, UnsupportedError
from .grid import RadialFunction, RadialGrid, require_zero_average
from .neumann_inverse import cumulative_nodes


@dataclass(frozen=True, eq=False)
class MeasureProfile:
    """Step function on ``[0, total]`` in the measure coordinate.

    Attributes:
        total: length of the measure interval, ``|Omega|``.
        breakpoints: ``0 = b_0 < b_1 < ... < b_m = total``.
        values: value on each piece ``[b_i, b_{i+1})``.
    """

    total: float
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        b = np.array(self.breakpoints, dtype=float)
        v = np.array(self.values, dtype=float)
        if b.ndim != 1 or v.ndim != 1 or b.size != v.size + 1 or v.size == 0:
            raise PreconditionError("need one value per piece")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v))):
            raise PreconditionError("profile must be finite")
        if np.any(np.diff(b) <= 0):
            raise PreconditionError("breakpoints must be strictly increasing")
        if b[0] != 0.0 or abs(b[-1] - self.total) > 1e-12 * max(1.0, self.total):
            raise PreconditionError("breakpoints must run from 0 to total")
        b[-1] = self.total
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "total", float(self.total))

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def evaluate(self, s) -> np.ndarray:
        """Value at ``s``; pieces are closed on the left."""
        idx = np.searchsorted(self.breakpoints, np.asarray(s, dtype=float), side="right") - 1
        return self.values[np.clip(idx, 0, self.values.size - 1)]

    def integral(self) -> float:
        return float(np.dot(self.lengths, self.values))

    def l1_norm(self) -> float:
        return float(np.dot(self.lengths, np.abs(self.values)))

    def lp_norm(self, t: float) -> float:
        return float(np.dot(self.lengths, np.abs(self.values) ** t) ** (1.0 / t))

    def power_integral(self, t: float) -> float:
        """``int |h|^t``."""
        return float(np.dot(self.lengths, np.abs(self.values) ** t))

    def cumulative_at_breakpoints(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.lengths * self.values)])

    def cumulative(self, s) -> np.ndarray:
        """``int_0^s h``, piecewise linear."""
        return np.interp(np.asarray(s, dtype=float), self.breakpoints, self.cumulative_at_breakpoints())

    def level_measure(self, t: float) -> float:
        """``|{h > t}|``."""
        return float(np.sum(self.lengths[self.values > t]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "value"])
        for s, v in zip(self.breakpoints[:-1], self.values):
            w.writerow([f"{s:.17g}", f"{v:.17g}"])
        w.writerow([f"{self.total:.17g}", f"{self.values[-1]:.17g}"])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> MeasureProfile:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["s", "value"]:
            raise PreconditionError("expected header 's,value'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
        if data.shape[0] < 2:
            raise PreconditionError("a profile needs at least two rows")
        return cls(data[-1, 0], data[:, 0], data[:-1, 1])


class DecreasingProfile(MeasureProfile):
    """A :class:`MeasureProfile` with non-increasing values."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if np.any(np.diff(self.values) > 0):
            raise PreconditionError("values must be non-increasing")


def profile_of(h: RadialFunction) -> MeasureProfile:
    """The cell representation of ``h`` as a step profile in ``s``."""
    grid = h.grid
    return MeasureProfile(grid.total_measure, grid.s_nodes, h.cell_values())


def cumulative_I(h: RadialFunction) -> RadialFunction:
    """``I h`` at the nodes, with ``I h = 0`` on the inner boundary."""
    return RadialFunction(h.grid, cumulative_nodes(h.grid, h.cell_values()), "node")


def _signed_states(h: RadialFunction, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    grid = h.grid
    S = cumulative_nodes(grid, cells)
    band = 1e-12 * max(float(np.max(np.abs(cells))), 0.0) * grid.total_measure
    sig = np.where(S > band, 1, np.where(S < -band, -1, 0))
    return S, sig


def _flip_pieces(h: RadialFunction):
    """Exact flip as arrays ``(lengths, values)`` in radial order."""
    grid = h.grid
    c = np.asarray(h.cell_values(), dtype=float)
    S, sig = _signed_states(h, c)
    sa, sb = sig[:-1], sig[1:]
    m = grid.cell_measures
    cross = sa * sb < 0
    keep = ~cross & (np.maximum(sa, sb) > 0)
    sign_whole = np.where(keep, 1.0, -1.0)

    theta = np.zeros_like(c)
    with np.errstate(invalid="ignore", divide="ignore"):
        th = S[:-1] / (S[:-1] - S[1:])
    theta[cross] = np.clip(th[cross], 0.0, 1.0)
    # Two slots per cell: the first part and (for crossing cells) the rest.
    first_len = np.where(cross, theta * m, m)
    first_val = np.where(cross, np.where(sa > 0, c, -c), sign_whole * c)
    second_len = np.where(cross, (1.0 - theta) * m, 0.0)
    second_val = np.where(cross, np.where(sa > 0, -c, c), 0.0)
    lengths = np.column_stack([first_len, second_len]).ravel()
    values = np.column_stack([first_val, second_val]).ravel()
    ok = lengths > 0
    return lengths[ok], values[ok], theta, cross, sa, sign_whole


def _from_lengths(total: float, lengths: np.ndarray, values: np.ndarray, cls=MeasureProfile):
    b = np.concatenate([[0.0], np.cumsum(lengths)])
    b[-1] = total
    # Cumulative sums of tiny pieces can collide in floating point.
    keep = np.concatenate([[True], np.diff(b) > 0])
    if not np.all(keep):
        idx = np.flatnonzero(keep)
        b = b[idx]
        values = values[idx[1:] - 1]
        b[-1] = total
    return cls(total, b, values)


def flip_profile(h: RadialFunction) -> MeasureProfile:
    """Exact ``F h``: ``h`` negated where ``I h <= 0``, as a step profile."""
    lengths, values, *_ = _flip_pieces(h)
    return _from_lengths(h.grid.total_measure, lengths, values)


def flip_F(h: RadialFunction) -> RadialFunction:
    """Flip on the grid, returned as a cell function.

    Cells where ``I h`` keeps one sign are copied or negated. A cell in which
    ``I h`` changes sign carries the average of its two flipped parts, which
    keeps ``I`` of the result equal to ``|I h|`` at every node.
    """
    c = np.asarray(h.cell_values(), dtype=float)
    _, _, theta, cross, sa, sign_whole = _flip_pieces(h)
    out = sign_whole * c
    frac = np.where(sa > 0, 2.0 * theta - 1.0, 1.0 - 2.0 * theta)
    out = np.where(cross, frac * c, out)
    return RadialFunction(h.grid, out, "cell")


def _sorted_profile(total: float, lengths: np.ndarray, values: np.ndarray) -> DecreasingProfile:
    ok = lengths > 0
    lengths, values = lengths[ok], values[ok]
    order = np.argsort(-values, kind="stable")
    return _from_lengths(total, lengths[order], values[order], DecreasingProfile)


def rearrange_profile(p: MeasureProfile) -> DecreasingProfile:
    """Decreasing rearrangement of a step profile."""
    return _sorted_profile(p.total, p.lengths, p.values)


def decreasing_rearrangement(h: RadialFunction) -> DecreasingProfile:
    """``h^#`` on ``[0, |Omega|]``: cells sorted by value, ties kept in radial order."""
    grid = h.grid
    return _sorted_profile(grid.total_measure, grid.cell_measures.copy(), np.asarray(h.cell_values()))


def star_transform(h: RadialFunction, avg_tol: float = 1e-8) -> DecreasingProfile:
    """``h`` star: the decreasing rearrangement of the exact flip of ``h``.

    Composing the returned profile with ``tau`` gives a radial function,
    non-increasing in ``r``, with the same integral and ``L^t`` norms.
    """
    require_zero_average(h, avg_tol)
    lengths, values, *_ = _flip_pieces(h)
    return _sorted_profile(h.grid.total_measure, lengths, values)


def schwarz_symmetrization(h: RadialFunction) -> DecreasingProfile:
    """``h^*(r) = h^#(tau(r))`` on a ball."""
    if h.grid.kind.tag != "ball":
        raise UnsupportedError("Schwarz symmetrization is defined on balls only")
    return decreasing_rearrangement(h)


@dataclass(frozen=True)
class Resampled:
    """A profile averaged onto grid cells and the norm drift this caused."""

    function: RadialFunction
    drift: dict[float, float]

    @property
    def max_drift(self) -> float:
        return max(self.drift.values()) if self.drift else 0.0


def resample_to_grid(
    p: MeasureProfile, grid: RadialGrid, exponents: tuple[float, ...] = (1.5, 2.0, 3.0)
) -> Resampled:
    """Average ``p`` over each grid cell.

    The integral is kept exactly and the cumulative integral agrees with
    that of ``p`` at every node. ``drift[t]`` is the relative change of the
    ``L^t`` norm.
    """
    if abs(p.total - grid.total_measure) > 1e-12 * max(1.0, p.total):
        raise PreconditionError("profile and grid have different total measure")
    C = p.cumulative(grid.s_nodes)
    C[0] = 0.0
    C[-1] = p.cumulative_at_breakpoints()[-1]
    vals = np.diff(C) / grid.cell_measures
    fn = RadialFunction(grid, vals, "cell")
    drift = {}
    for t in exponents:
        ref = p.lp_norm(t)
        drift[t] = abs(fn.lp_norm(t) - ref) / ref if ref > 0 else 0.0
    return Resampled(fn, drift)


def star_transform_grid(h: RadialFunction) -> Resampled:
    """Star transform averaged back onto the grid of ``h``."""
    return resample_to_grid(star_transform(h), h.grid)


def profile_inner(a: MeasureProfile, b: MeasureProfile) -> float:
    """``int a b`` over the common refinement of the two profiles."""
    if abs(a.total - b.total) > 1e-12 * max(1.0, a.total):
        raise PreconditionError("profiles live on different intervals")
    s = np.union1d(a.breakpoints, b.breakpoints)
    s = s[s <= a.total]
    mids = 0.5 * (s[:-1] + s[1:])
    return float(np.dot(np.diff(s), a.evaluate(mids) * b.evaluate(mids)))


def hardy_littlewood_gap(a: MeasureProfile, b: MeasureProfile) -> float:
    """``int a^# b^# - int a b``, non-negative up to roundoff."""
    return profile_inner(rearrange_profile(a), rearrange_profile(b)) - profile_inner(a, b)


@dataclass(frozen=True)
class RigidityResult:
    """Quantities for the equality case with a strictly decreasing weight."""

    gap: float
    distance: float


def rigidity_check(phi: MeasureProfile, psi: MeasureProfile) -> RigidityResult:
    """Compare ``int phi^# psi`` with ``int phi psi`` for decreasing ``psi``.

    Returns the gap between the two integrals and ``|phi - phi^#|_1``.
    Equality of the integrals forces the distance to vanish when ``psi`` is
    strictly decreasing.
    """
    if np.any(np.diff(psi.values) >= 0):
        raise PreconditionError("psi must be strictly decreasing")
    phis = rearrange_profile(phi)
    gap = profile_inner(phis, psi) - profile_inner(phi, psi)
    s = np.union1d(phi.breakpoints, phis.breakpoints)
    mids = 0.5 * (s[:-1] + s[1:])
    dist = float(np.dot(np.diff(s), np.abs(phi.evaluate(mids) - phis.evaluate(mids))))
    return RigidityResult(float(gap), dist)


__all__ = [
    "DecreasingProfile",
    "MeasureProfile",
    "Resampled",
    "RigidityResult",
    "cumulative_I",
    "decreasing_rearrangement",
    "flip_F",
    "flip_profile",
    "hardy_littlewood_gap",
    "profile_inner",
    "profile_of",
    "rearrange_profile",
    "resample_to_grid",
    "rigidity_check",
    "schwarz_symmetrization",
    "star_transform",
    "star_transform_grid",
]
