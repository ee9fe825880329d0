"""Unit-speed piecewise-linear curves and the segment-rotation operator.

A curve is stored as strictly increasing breakpoints with complex vertices;
between breakpoints it is affine with a unit-modulus tangent, so its arc
length equals its parameter length.  The rotation operator takes an ordered
family of equal-width subintervals, rigidly rotates the curve pieces over
them by a fixed angle and translates the pieces in between so the result
stays continuous; iterating it along a renormalization trace with angles
read off the torus cocycle produces the curve sequence that converges to an
invariant curve of an adapted planar piecewise isometry.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from math import pi, tau
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    BudgetExceeded,
    DomainMismatch,
    IntervalOutOfRange,
    NonUnitSpeed,
    OutOfDomain,
)
from .rauzy import InductionTrace, torus_distance_to_zero, torus_project

#: per-segment absolute tolerance for the unit-speed invariant
TOL_UNIT_SPEED = 1e-12


def angle_to_symmetric(angle: float) -> float:
    """Reduce an angle to the representative in ``[-pi, pi)``."""
    a = float(angle) % tau
    return a - tau if a >= pi else a


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------

@dataclass
class PLCurve:
    """Continuous piecewise-linear map from ``[0, length)`` to the plane.

    ``x`` holds the breakpoints starting at 0; ``z`` holds one vertex per
    breakpoint plus the limit value at the right end, so ``len(z) ==
    len(x) + 1``.  Unit speed (chord length equals parameter length on every
    segment) is an invariant of every constructor in this module.
    """

    length: float
    x: np.ndarray
    z: np.ndarray

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.z = np.asarray(self.z, dtype=complex)
        if self.x.ndim != 1 or self.z.ndim != 1 or len(self.z) != len(self.x) + 1:
            raise ValueError("need one vertex per breakpoint plus the right-end value")
        if self.x[0] != 0.0:
            raise ValueError("breakpoints must start at 0")

    @classmethod
    def identity(cls, length: float) -> "PLCurve":
        return cls(length, np.array([0.0]), np.array([0.0 + 0.0j, length + 0.0j]))

    @property
    def n_segments(self) -> int:
        return len(self.x)

    def segment_bounds(self) -> np.ndarray:
        return np.append(self.x, self.length)

    def segment_lengths(self) -> np.ndarray:
        return np.diff(self.segment_bounds())

    def tangents(self) -> np.ndarray:
        """Unit tangent of each segment."""
        return np.diff(self.z) / self.segment_lengths()

    def evaluate(self, params: Union[float, Sequence[float], np.ndarray]) -> np.ndarray:
        """Vectorized evaluation; accepts the right endpoint as a limit value."""
        q = np.atleast_1d(np.asarray(params, dtype=float))
        if np.any(q < 0.0) or np.any(q > self.length):
            raise OutOfDomain("parameter outside [0, length]")
        idx = np.clip(np.searchsorted(self.x, q, side="right") - 1, 0, self.n_segments - 1)
        out = self.z[idx] + (q - self.x[idx]) * self.tangents()[idx]
        return out if np.ndim(params) else out[0]

    def arc_length(self) -> float:
        return float(np.sum(np.abs(np.diff(self.z))))

    def cumulative_arc_length(self) -> np.ndarray:
        """Arc length from 0 to each breakpoint (and to the right end)."""
        return np.concatenate([[0.0], np.cumsum(np.abs(np.diff(self.z)))])

    def unit_speed_defect(self) -> float:
        """Largest deviation of chord length from parameter length."""
        return float(np.max(np.abs(np.abs(np.diff(self.z)) - self.segment_lengths())))

    def require_unit_speed(self) -> None:
        defect = self.unit_speed_defect()
        if defect > TOL_UNIT_SPEED:
            raise NonUnitSpeed(f"unit-speed defect {defect:.3e} exceeds {TOL_UNIT_SPEED}")

    # -- exports ----------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,re,im\n")
        bounds = self.segment_bounds()
        for xv, zv in zip(bounds, self.z):
            buf.write(f"{float(xv)!r},{float(zv.real)!r},{float(zv.imag)!r}\n")
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "length": self.length,
            "x": [float(v) for v in self.segment_bounds()],
            "re": [float(v.real) for v in self.z],
            "im": [float(v.imag) for v in self.z],
        }

    def to_svg(self, width: int = 800, stroke: str = "black",
               stroke_width: float = 1.0, margin: float = 0.05) -> str:
        """Standalone SVG with the viewport fit to the bounding box."""
        re, im = self.z.real, self.z.imag
        x0, x1 = float(re.min()), float(re.max())
        y0, y1 = float(im.min()), float(im.max())
        span = max(x1 - x0, y1 - y0, 1e-9)
        pad = margin * span
        x0, x1 = x0 - pad, x1 + pad
        y0, y1 = y0 - pad, y1 + pad
        scale = width / (x1 - x0)
        height = max(int(round((y1 - y0) * scale)), 1)
        pts = " ".join(
            f"{(r - x0) * scale:.3f},{(y1 - i) * scale:.3f}" for r, i in zip(re, im)
        )
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n'
            f'  <polyline points="{pts}" fill="none" stroke="{stroke}" '
            f'stroke-width="{stroke_width}"/>\n</svg>\n'
        )


def sup_distance(a: PLCurve, b: PLCurve) -> float:
    """Exact supremum distance between two curves on a shared domain.

    The difference of two piecewise-linear maps is piecewise linear, so the
    supremum of its modulus is attained at a breakpoint of the merged
    partition; no sampling is involved.
    """
    if abs(a.length - b.length) > 1e-12 * max(1.0, a.length):
        raise DomainMismatch(f"domain lengths differ: {a.length} vs {b.length}")
    merged = np.union1d(a.segment_bounds(), b.segment_bounds())
    merged = merged[merged <= min(a.length, b.length)]
    return float(np.max(np.abs(a.evaluate(merged) - b.evaluate(merged))))


# ---------------------------------------------------------------------------
# rotation intervals
# ---------------------------------------------------------------------------

@dataclass
class IntervalSeq:
    """Ordered disjoint intervals ``[y_k, y_k + delta)`` of equal width."""

    y: np.ndarray
    delta: float
    y_num: Optional[tuple[int, ...]] = None
    delta_num: Optional[int] = None
    denominator: Optional[int] = None

    def __post_init__(self) -> None:
        self.y = np.asarray(self.y, dtype=float)
        if self.delta <= 0:
            raise ValueError("interval width must be positive")
        if np.any(np.diff(self.y) < self.delta - 1e-15):
            raise ValueError("intervals must be ordered and disjoint")

    @property
    def count(self) -> int:
        return len(self.y)

    def bounds(self) -> np.ndarray:
        """Interleaved endpoints ``y_0, y_0+delta, y_1, ...`` for zone lookup."""
        out = np.empty(2 * self.count)
        out[0::2] = self.y
        out[1::2] = self.y + self.delta
        return out


def breaking_offsets(curve: PLCurve, phi: float,
                     intervals: IntervalSeq) -> tuple[np.ndarray, np.ndarray]:
    """Translation corrections that keep the rotated curve continuous.

    ``upper[k]`` is added to the rotated piece over the k-th interval and
    ``lower[k]`` to the translated piece after it; both follow the coupled
    recursion seeded by the curve values at the interval endpoints.
    """
    rot = complex(np.cos(phi), np.sin(phi))
    one_minus = 1.0 - rot
    g_left = curve.evaluate(intervals.y)
    g_right = curve.evaluate(intervals.y + intervals.delta)
    r = intervals.count
    upper = np.empty(r, dtype=complex)
    lower = np.empty(r, dtype=complex)
    upper[0] = g_left[0] * one_minus
    lower[0] = upper[0] - g_right[0] * one_minus
    for k in range(1, r):
        upper[k] = g_left[k] * one_minus + lower[k - 1]
        lower[k] = upper[k] - g_right[k] * one_minus
    return upper, lower


def breaking_operator(curve: PLCurve, phi: float, intervals: IntervalSeq) -> PLCurve:
    """Rotate the curve pieces over the intervals by ``phi``, keeping continuity.

    The output lives on the same domain, is continuous and keeps unit speed;
    the interval endpoints are inserted as new breakpoints.
    """
    curve.require_unit_speed()
    if not -pi <= phi < pi:
        phi = angle_to_symmetric(phi)
    y = intervals.y
    if y[0] < 0.0 or y[-1] + intervals.delta > curve.length * (1 + 1e-12):
        raise IntervalOutOfRange("rotation intervals must lie inside the curve domain")

    upper, lower = breaking_offsets(curve, phi, intervals)
    rot = complex(np.cos(phi), np.sin(phi))
    bounds = intervals.bounds()

    new_x = np.union1d(curve.x, bounds[bounds < curve.length])
    # merge numerically coincident breakpoints: a zero-length segment carries
    # no geometry but fabricates spurious self-contacts downstream
    merge_tol = 1e-13 * max(1.0, curve.length)
    keep = np.concatenate([[True], np.diff(new_x) > merge_tol])
    new_x = new_x[keep]
    if len(new_x) > 1 and new_x[-1] > curve.length - merge_tol:
        new_x = new_x[:-1]
    params = np.append(new_x, curve.length)
    values = curve.evaluate(params)
    # zone 0 precedes every interval; odd zones are rotated, even translated
    zone = np.searchsorted(bounds, params, side="right")
    out = values.copy()
    inside = (zone % 2) == 1
    k_in = (zone[inside] - 1) // 2
    out[inside] = values[inside] * rot + upper[k_in]
    after = (zone > 0) & ~inside
    k_after = zone[after] // 2 - 1
    out[after] = values[after] + lower[k_after]
    return PLCurve(curve.length, new_x, out)


# ---------------------------------------------------------------------------
# interval families and angle sequences along a renormalization trace
# ---------------------------------------------------------------------------

def breaking_intervals(trace: InductionTrace, n: int, budget: int = 10**7) -> IntervalSeq:
    """Forward orbit of the level-``n`` removed piece until its first return.

    The removed piece is the right part of the level ``n-1`` interval; its
    images under the original exchange are translated rigidly (each lies in
    one continuity piece) and are collected until the piece re-enters the
    level-``n`` interval, then sorted by position.  Runs on exact integer
    numerators; the step count is bounded by ``budget``.
    """
    if n < 1 or n > trace.n_steps:
        raise ValueError(f"level {n} outside 1..{trace.n_steps}")
    iet0 = trace.initial
    den = iet0.denominator
    total_prev = trace.states[n - 1].total_num
    total_next = trace.states[n].total_num
    delta_num = total_prev - total_next
    grid = iet0.e0_num
    ups = iet0.upsilon_num
    top = iet0.perm.top

    from bisect import bisect_right

    lefts = []
    a = total_next
    steps = 0
    while True:
        lefts.append(a)
        if steps > budget:
            raise BudgetExceeded(f"interval orbit exceeded {budget} steps")
        j = bisect_right(grid, a) - 1
        if a + delta_num > grid[j + 1]:
            raise AssertionError("removed piece straddles a continuity boundary")
        a = a + ups[top[j]]
        steps += 1
        if a >= 0 and a + delta_num <= total_next:
            break
    lefts.sort()
    # every piece is inside or disjoint from each removed zone above level n
    for m in range(1, n + 1):
        lo, hi = trace.states[m].total_num, trace.states[m - 1].total_num
        for a in lefts:
            overlap = min(a + delta_num, hi) - max(a, lo)
            if 0 < overlap < delta_num:
                raise AssertionError("orbit piece straddles a removed zone")
    y = np.array([float(Fraction(a, den)) for a in lefts])
    return IntervalSeq(y, float(Fraction(delta_num, den)),
                       tuple(lefts), delta_num, den)


@dataclass
class ThetaSeq:
    """Torus rotation coordinates pushed through the renormalization cocycle."""

    theta0: np.ndarray
    entries: list[np.ndarray]
    image_last: list[int] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.entries) - 1

    def distances(self) -> np.ndarray:
        return np.array([torus_distance_to_zero(t) for t in self.entries])

    def breaking_angle(self, n: int) -> float:
        """Rotation applied at level ``n+1``, reduced into ``[-pi, pi)``.

        This is the coordinate of the level-``n`` rotation vector indexed by
        the final bottom-row symbol of the level-``n`` permutation.
        """
        return angle_to_symmetric(float(self.entries[n][self.image_last[n]]))


ThetaLike = Union[Sequence[float], Sequence[Fraction], np.ndarray]


def theta_sequence(trace: InductionTrace, theta: ThetaLike, depth: int) -> ThetaSeq:
    """Push ``theta`` through the exact cocycle products, reduced mod ``2*pi``.

    ``theta`` may carry exact rational coordinates; they are consumed
    exactly, so deep levels lose no precision to the reduction.
    """
    if depth > trace.n_steps:
        raise ValueError(f"trace holds {trace.n_steps} steps, need {depth}")
    theta0 = np.array([float(t) for t in theta])
    entries = [torus_project(trace.cocycle[n], theta) for n in range(depth + 1)]
    image_last = [trace.image_last_symbol(n) for n in range(depth)]
    return ThetaSeq(theta0, entries, image_last)


def breaking_sequence(trace: InductionTrace, theta: ThetaLike, depth: int,
                      budget: int = 10**7) -> list[PLCurve]:
    """The curve sequence: identity parametrization, then one rotation per level."""
    seq = theta_sequence(trace, theta, depth)
    curves = [PLCurve.identity(trace.initial.total)]
    for n in range(1, depth + 1):
        intervals = breaking_intervals(trace, n, budget=budget)
        phi = seq.breaking_angle(n - 1)
        curves.append(breaking_operator(curves[-1], phi, intervals))
    return curves
