"""Renormalization of interval exchanges and the associated integer cocycle.

One induction step removes the shorter of the two final subintervals (the
loser) and takes the first-return map to what is left; the step is type 0
when the top row's final subinterval wins and type 1 otherwise.  Each step
contributes the unimodular factor ``I + E[loser, winner]``, and the running
left-product of these factors is maintained in exact arbitrary-precision
integers: its entries count subinterval visits and grow exponentially, so
64-bit arithmetic would overflow almost immediately.

The same factors act on the torus ``R^d / 2*pi*Z^d``; reduction of the
integer matrix-vector product modulo ``2*pi`` is done with an adaptive-
precision integer value of pi so that huge products lose no accuracy.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import tau
from typing import IO, Optional, Sequence, Union

import numpy as np

from .errors import BudgetExceeded, RauzyUndefined, Reducible
from .iet import IETState, Lengths, Permutation, build_iet, is_irreducible

#: relative tie tolerance: induction aborts when the two candidate lengths
#: agree to within ``TOL_TIE_REL`` times the current total length
TOL_TIE_REL = 1e-12

IntMatrix = tuple[tuple[int, ...], ...]


# ---------------------------------------------------------------------------
# exact integer matrices
# ---------------------------------------------------------------------------

def identity_matrix(d: int) -> IntMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))


def elementary_update(matrix: IntMatrix, loser: int, winner: int) -> IntMatrix:
    """Left-multiply by ``I + E[loser, winner]``: add the winner row into the loser row."""
    rows = [list(r) for r in matrix]
    rows[loser] = [a + b for a, b in zip(rows[loser], rows[winner])]
    return tuple(tuple(r) for r in rows)


def matmul_exact(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    d = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(d)) for j in range(d))
        for i in range(d)
    )


def det_exact(matrix: IntMatrix) -> int:
    """Integer determinant by fraction-free (Bareiss) elimination."""
    m = [list(r) for r in matrix]
    d = len(m)
    sign = 1
    prev = 1
    for k in range(d - 1):
        if m[k][k] == 0:
            for i in range(k + 1, d):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, d):
            for j in range(k + 1, d):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[d - 1][d - 1]


def matrix_to_float(matrix: Union[IntMatrix, np.ndarray]) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in matrix])


def _as_int_rows(matrix: Union[IntMatrix, Sequence[Sequence[int]], np.ndarray]) -> IntMatrix:
    return tuple(tuple(int(v) for v in row) for row in matrix)


# ---------------------------------------------------------------------------
# single induction step
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InductionStep:
    """Record of one induction step."""

    type_eps: int
    winner: int
    loser: int

    def b_factor(self, d: int) -> np.ndarray:
        out = np.eye(d, dtype=np.int64)
        out[self.loser, self.winner] = 1
        return out


def _tied(num_a: int, num_b: int, total_num: int) -> bool:
    return abs(num_a - num_b) * 10**12 <= total_num


def rauzy_step(iet: IETState) -> tuple[IETState, InductionStep]:
    """One induction step; raises when the final subintervals tie."""
    if not is_irreducible(iet.perm):
        raise Reducible(f"monodromy {iet.perm.monodromy()} is reducible")
    top, bottom = iet.perm.top, iet.perm.bottom
    beta0, beta1 = top[-1], bottom[-1]
    nums = list(iet.lengths.numerators)
    if _tied(nums[beta0], nums[beta1], iet.total_num):
        raise RauzyUndefined(
            f"final subintervals tie within {TOL_TIE_REL} * |lambda|"
        )
    if nums[beta0] > nums[beta1]:
        type_eps, winner, loser = 0, beta0, beta1
        new_bottom = list(bottom[:-1])
        new_bottom.insert(new_bottom.index(beta0) + 1, beta1)
        new_perm = Permutation(top, tuple(new_bottom))
    else:
        type_eps, winner, loser = 1, beta1, beta0
        new_top = list(top[:-1])
        new_top.insert(new_top.index(beta1) + 1, beta0)
        new_perm = Permutation(tuple(new_top), bottom)
    nums[winner] -= nums[loser]
    new_state = build_iet(new_perm, Lengths(tuple(nums), iet.lengths.denominator))
    return new_state, InductionStep(type_eps, winner, loser)


# ---------------------------------------------------------------------------
# iterated induction
# ---------------------------------------------------------------------------

@dataclass
class InductionTrace:
    """States, steps and exact cocycle products of an induction run.

    ``states[k]`` is the level-``k`` exchange and ``cocycle[k]`` the exact
    product of the first ``k`` elementary factors (newest on the left), so
    ``cocycle[0]`` is the identity.  ``zorich_lengths`` lists the sizes of
    the completed maximal same-type blocks found along the run.
    """

    states: list[IETState]
    steps: list[InductionStep] = field(default_factory=list)
    cocycle: list[IntMatrix] = field(default_factory=list)
    zorich_lengths: list[int] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def initial(self) -> IETState:
        return self.states[0]

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def d(self) -> int:
        return self.initial.d

    def state(self, n: int) -> IETState:
        return self.states[n]

    def cocycle_float(self, n: int) -> np.ndarray:
        return matrix_to_float(self.cocycle[n])

    def image_last_symbol(self, n: int) -> int:
        """Final symbol of the level-``n`` bottom row (rightmost image piece)."""
        return self.states[n].perm.bottom[-1]

    @property
    def zorich_count(self) -> int:
        return len(self.zorich_lengths)

    def acceleration_partial_sums(self) -> list[int]:
        """Cumulative Rauzy-step counts after each completed block."""
        sums = [0]
        for length in self.zorich_lengths:
            sums.append(sums[-1] + length)
        return sums

    def zorich_factor(self, k: int) -> IntMatrix:
        """Exact matrix of the ``k``-th completed block (0-based)."""
        sums = self.acceleration_partial_sums()
        start, stop = sums[k], sums[k + 1]
        block = identity_matrix(self.d)
        for i in range(start, stop):
            step = self.steps[i]
            block = elementary_update(block, step.loser, step.winner)
        return block

    def to_jsonl(self, stream: IO[str]) -> None:
        """One record per step: type, winner, loser, length snapshot, factor."""
        for k, step in enumerate(self.steps):
            state = self.states[k]
            record = {
                "n": k,
                "type": step.type_eps,
                "winner": step.winner,
                "loser": step.loser,
                "lambda": [float(v) for v in state.lengths.values()],
                "B": step.b_factor(self.d).tolist(),
            }
            stream.write(json.dumps(record) + "\n")


def _iterate(iet: IETState, *, max_steps: Optional[int], max_blocks: Optional[int]) -> InductionTrace:
    if not is_irreducible(iet.perm):
        raise Reducible(f"monodromy {iet.perm.monodromy()} is reducible")
    trace = InductionTrace(states=[iet], cocycle=[identity_matrix(iet.d)])
    block_start = 0
    block_type: Optional[int] = None
    while True:
        if max_steps is not None and trace.n_steps >= max_steps:
            break
        if max_blocks is not None and trace.zorich_count >= max_blocks:
            break
        try:
            nxt, step = rauzy_step(trace.states[-1])
        except RauzyUndefined:
            trace.error = "RauzyUndefined"
            if block_type is not None and trace.n_steps > block_start:
                # keep the partial block so the grouping stays observable
                trace.zorich_lengths.append(trace.n_steps - block_start)
            break
        if block_type is None:
            block_type = step.type_eps
        elif step.type_eps != block_type:
            trace.zorich_lengths.append(trace.n_steps - block_start)
            block_start = trace.n_steps
            block_type = step.type_eps
            if max_blocks is not None and trace.zorich_count >= max_blocks:
                # the differing step opens block max_blocks+1; do not record it
                break
        trace.steps.append(step)
        trace.states.append(nxt)
        trace.cocycle.append(elementary_update(trace.cocycle[-1], step.loser, step.winner))
    return trace


def rauzy_iterate(iet: IETState, n: int) -> InductionTrace:
    """Run ``n`` induction steps, keeping every state and exact cocycle product.

    A tie stops the run early; the partial trace is returned with
    ``error == "RauzyUndefined"``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    return _iterate(iet, max_steps=n, max_blocks=None)


def zorich_iterate(iet: IETState, m: int) -> InductionTrace:
    """Run induction until ``m`` maximal same-type blocks are complete.

    The returned trace is truncated at the last completed block boundary, so
    ``trace.n_steps`` equals the sum of the ``m`` acceleration times.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return InductionTrace(states=[iet], cocycle=[identity_matrix(iet.d)])
    trace = _iterate(iet, max_steps=None, max_blocks=m)
    if trace.error is None:
        boundary = trace.acceleration_partial_sums()[-1]
        del trace.steps[boundary:]
        del trace.states[boundary + 1:]
        del trace.cocycle[boundary + 1:]
    return trace


# ---------------------------------------------------------------------------
# visit-count oracle
# ---------------------------------------------------------------------------

def visit_counts_bruteforce(iet: IETState, n: int, budget: int = 10**7) -> IntMatrix:
    """Count subinterval visits of each level-``n`` piece by direct orbits.

    For each symbol the midpoint of its level-``n`` subinterval is iterated
    (exact integer arithmetic, numerators doubled to keep midpoints integral)
    under the original exchange until it returns to the shortened interval;
    entry ``[a][b]`` counts the visits of the level-``n`` piece ``a`` to the
    original piece ``b``.  Independent of the matrix product path.
    """
    trace = rauzy_iterate(iet, n)
    if trace.error is not None:
        raise RauzyUndefined(f"induction undefined before step {n}")
    deep = trace.states[n]
    d = iet.d
    grid2 = tuple(2 * e for e in iet.e0_num)
    ups2 = tuple(2 * u for u in iet.upsilon_num)
    top = iet.perm.top
    total2_deep = 2 * deep.total_num
    counts = [[0] * d for _ in range(d)]
    spent = 0
    for a in range(d):
        j = deep.perm.position0(a)
        x = deep.e0_num[j] + deep.e0_num[j + 1]  # doubled midpoint
        while True:
            symbol = top[bisect_right(grid2, x) - 1]
            counts[a][symbol] += 1
            spent += 1
            if spent > budget:
                raise BudgetExceeded(f"visit counting exceeded {budget} steps")
            x += ups2[symbol]
            if x < total2_deep:
                break
    return tuple(tuple(row) for row in counts)


# ---------------------------------------------------------------------------
# Rauzy classes
# ---------------------------------------------------------------------------

def _combinatorial_step(perm: Permutation, type_eps: int) -> Permutation:
    """Permutation update of the given type, independent of lengths."""
    top, bottom = perm.top, perm.bottom
    beta0, beta1 = top[-1], bottom[-1]
    if type_eps == 0:
        new_bottom = list(bottom[:-1])
        new_bottom.insert(new_bottom.index(beta0) + 1, beta1)
        return Permutation(top, tuple(new_bottom))
    new_top = list(top[:-1])
    new_top.insert(new_top.index(beta1) + 1, beta0)
    return Permutation(tuple(new_top), bottom)


@dataclass
class RauzyGraph:
    """A class of permutations closed under both induction types."""

    vertices: list[Permutation]
    edges: list[tuple[int, int, int]]  # (source index, type, target index)

    @property
    def size(self) -> int:
        return len(self.vertices)

    def to_dot(self) -> str:
        def label(p: Permutation) -> str:
            return " ".join(str(v) for v in p.monodromy())

        lines = ["digraph rauzy_class {"]
        for i, p in enumerate(self.vertices):
            lines.append(f'  v{i} [label="{label(p)}"];')
        for src, eps, dst in self.edges:
            lines.append(f'  v{src} -> v{dst} [label="{eps}"];')
        lines.append("}")
        return "\n".join(lines)


def rauzy_class(perm: Permutation) -> RauzyGraph:
    """Breadth-first closure of ``perm`` under both arrow types.

    Vertices are ordered lexicographically by monodromy for determinism.
    """
    if not is_irreducible(perm):
        raise Reducible(f"monodromy {perm.monodromy()} is reducible")
    seen: dict[tuple[tuple[int, ...], tuple[int, ...]], Permutation] = {}
    frontier = [perm]
    seen[(perm.top, perm.bottom)] = perm
    while frontier:
        current = frontier.pop()
        for eps in (0, 1):
            nxt = _combinatorial_step(current, eps)
            key = (nxt.top, nxt.bottom)
            if key not in seen:
                seen[key] = nxt
                frontier.append(nxt)
    vertices = sorted(seen.values(), key=lambda p: (p.monodromy(), p.top))
    index = {(p.top, p.bottom): i for i, p in enumerate(vertices)}
    edges = []
    for i, p in enumerate(vertices):
        for eps in (0, 1):
            nxt = _combinatorial_step(p, eps)
            edges.append((i, eps, index[(nxt.top, nxt.bottom)]))
    return RauzyGraph(vertices, edges)


# ---------------------------------------------------------------------------
# torus projection
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _pi_scaled(bits: int) -> int:
    """``round(pi * 2**bits)`` by Machin's formula in integer arithmetic."""
    guard = 16

    def arccot(x: int, unity: int) -> int:
        total = term = unity // x
        n, sign, xsq = 3, -1, x * x
        while term:
            term //= xsq
            total += sign * (term // n)
            n += 2
            sign = -sign
        return total

    unity = 1 << (bits + guard)
    value = 4 * (4 * arccot(5, unity) - arccot(239, unity))
    return (value + (1 << (guard - 1))) >> guard


def reduce_mod_tau(x: Fraction) -> float:
    """Reduce an exact rational angle modulo ``2*pi`` into ``[0, 2*pi)``.

    The quotient is extracted with an integer value of pi carrying enough
    bits for the magnitude of ``x``, so that cancellation in ``x - k*2*pi``
    costs no precision even when ``x`` is astronomically large.
    """
    if x == 0:
        return 0.0
    mag_bits = abs(x.numerator).bit_length() - x.denominator.bit_length()
    bits = 128 * ((max(mag_bits, 0) + 192) // 128)
    pi_s = _pi_scaled(bits)
    k = (x.numerator << bits) // (2 * pi_s * x.denominator)
    remainder = float(x - Fraction(2 * pi_s * k, 1 << bits))
    if remainder >= tau:
        remainder -= tau
    if remainder < 0.0:
        remainder += tau
    return remainder


def torus_project(matrix: Union[IntMatrix, Sequence[Sequence[int]], np.ndarray],
                  theta: Union[Sequence[float], Sequence[Fraction], np.ndarray]) -> np.ndarray:
    """Integer-matrix action on a torus point, reduced exactly modulo ``2*pi``.

    Any lift of ``theta`` gives the same answer because the matrix is
    integral.  Float coordinates are consumed as the dyadic rationals they
    are; exact rational coordinates are consumed exactly, which matters for
    deep products where a one-ulp lift error would be amplified
    exponentially.
    """
    rows = _as_int_rows(matrix)
    lifts = [t if isinstance(t, Fraction) else Fraction(float(t)) for t in theta]
    out = []
    for row in rows:
        acc = Fraction(0)
        for coeff, lift in zip(row, lifts):
            if coeff:
                acc += coeff * lift
        out.append(reduce_mod_tau(acc))
    return np.array(out)


def torus_distance_to_zero(theta: Union[Sequence[float], np.ndarray]) -> float:
    """Flat-torus distance from ``theta`` to the origin."""
    arr = np.mod(np.asarray(theta, dtype=float), tau)
    folded = np.minimum(arr, tau - arr)
    return float(np.sqrt(np.sum(folded * folded)))
