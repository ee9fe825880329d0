"""Ready-made exchanges with exactly known renormalization structure.

A length vector that is a Perron eigenvector of the transposed matrix of a
closed loop in its Rauzy graph renormalizes back to itself: the induction
path is periodic and the cocycle along one period is an explicit integer
matrix.  For such instances the contracting plane of the cocycle is spanned
by eigenvectors of one integer matrix and can be computed to arbitrary
precision by integer inverse iteration, which makes them the reference
inputs for the convergence and embedding experiments.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

import numpy as np

from .iet import IETState, Lengths, Permutation, build_iet
from .rauzy import IntMatrix, _combinatorial_step, elementary_update, identity_matrix

#: type word of the closed loop at monodromy (4 3 2 1) whose Perron vector
#: has length ratios (0.4277, 0.3383, 0.1196, 0.1144)
SYMMETRIC4_LOOP = (1, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0)


@dataclass(frozen=True)
class SelfInducingIET:
    """A periodic point of the induction with exact spectral data.

    ``strong_stable`` spans the most contracted direction of the loop
    matrix (the translation-vector direction); ``weak_stable`` completes the
    contracting plane.  Both are exact rational vectors accurate far beyond
    double precision.
    """

    iet: IETState
    loop_types: tuple[int, ...]
    loop_matrix: IntMatrix
    expansion: float
    strong_stable: tuple[Fraction, ...]
    weak_stable: tuple[Fraction, ...]

    @property
    def period(self) -> int:
        return len(self.loop_types)

    def stable_frame_exact(self) -> list[tuple[Fraction, ...]]:
        """Contracting-plane basis ordered strong first."""
        return [self.strong_stable, self.weak_stable]

    def stable_frame(self) -> np.ndarray:
        """Float orthonormal basis of the contracting plane, strong first."""
        raw = np.array([[float(c) for c in v] for v in self.stable_frame_exact()]).T
        q, _ = np.linalg.qr(raw)
        return q


def loop_matrix_for(start: Permutation, types: tuple[int, ...]) -> IntMatrix:
    """Cocycle matrix of a closed type word, validating that the path closes."""
    perm = start
    matrix = identity_matrix(start.d)
    for eps in types:
        beta0, beta1 = perm.top[-1], perm.bottom[-1]
        winner, loser = (beta0, beta1) if eps == 0 else (beta1, beta0)
        matrix = elementary_update(matrix, loser, winner)
        perm = _combinatorial_step(perm, eps)
    if (perm.top, perm.bottom) != (start.top, start.bottom):
        raise ValueError("type word does not close up in the Rauzy graph")
    return matrix


def _transpose(matrix: IntMatrix) -> IntMatrix:
    d = len(matrix)
    return tuple(tuple(matrix[i][j] for i in range(d)) for j in range(d))


def _integer_inverse(matrix: IntMatrix) -> IntMatrix:
    """Inverse of a unimodular integer matrix via the adjugate."""
    from .rauzy import det_exact

    d = len(matrix)
    det = det_exact(matrix)
    if det not in (1, -1):
        raise ValueError("matrix is not unimodular")

    def minor(i: int, j: int) -> IntMatrix:
        return tuple(
            tuple(matrix[r][c] for c in range(d) if c != j)
            for r in range(d) if r != i
        )

    return tuple(
        tuple((-1) ** (i + j) * det_exact(minor(j, i)) * det for j in range(d))
        for i in range(d)
    )


def _mat_vec(matrix: IntMatrix, vec: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(sum(row[j] * vec[j] for j in range(len(vec))) for row in matrix)


def _reduce_int_vector(vec: tuple[int, ...]) -> tuple[int, ...]:
    g = 0
    for v in vec:
        g = gcd(g, abs(v))
    return vec if g in (0, 1) else tuple(v // g for v in vec)


def perron_vector(matrix: IntMatrix, iterations: int = 260) -> tuple[Fraction, ...]:
    """Dominant eigenvector by integer power iteration, normalized to sum 1."""
    vec = tuple(1 for _ in matrix)
    for _ in range(iterations):
        vec = _mat_vec(matrix, vec)
        vec = _reduce_int_vector(vec)
    total = sum(vec)
    return tuple(Fraction(v, total) for v in vec)


def _weak_stable_vector(matrix: IntMatrix, strong_int: tuple[int, ...],
                        iterations: int = 160) -> tuple[Fraction, ...]:
    """Second most contracted eigendirection by deflated inverse iteration.

    The dominant direction of the inverse is the strong one; its component
    is removed with the dual left eigenvector (dominant direction of the
    inverse transpose), after which the iteration converges to the weak
    contracting eigendirection.  Everything runs on integers; per-step gcd
    reduction keeps the entries from compounding.
    """
    inv = _integer_inverse(matrix)
    inv_t = _transpose(inv)
    dual = tuple(1 for _ in matrix)
    for _ in range(iterations):
        dual = _reduce_int_vector(_mat_vec(inv_t, dual))
    ds = sum(a * b for a, b in zip(dual, strong_int))
    vec = tuple(range(1, len(matrix) + 1))
    for _ in range(iterations):
        vec = _mat_vec(inv, vec)
        dw = sum(a * b for a, b in zip(dual, vec))
        vec = _reduce_int_vector(tuple(ds * w - dw * s for w, s in zip(vec, strong_int)))
    scale = max(abs(v) for v in vec)
    return tuple(Fraction(v, scale) for v in vec)


def _quantize(vec: tuple[Fraction, ...], bits: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(round(v * (1 << bits)), 1 << bits) for v in vec)


@lru_cache(maxsize=4)
def symmetric4_self_inducing(bits: int = 400) -> SelfInducingIET:
    """The self-inducing exchange on 4 symbols with reversing monodromy.

    Lengths are the Perron direction of the period-11 loop, rounded to
    dyadic rationals with ``bits`` fractional bits so the exact integer
    induction follows the periodic path for hundreds of levels.
    """
    perm = Permutation.from_monodromy("4 3 2 1")
    loop = loop_matrix_for(perm, SYMMETRIC4_LOOP)
    lam = perron_vector(_transpose(loop))
    nums = tuple(int(v * (1 << bits)) for v in lam)
    iet = build_iet(perm, Lengths(nums, 1 << bits))
    expansion = float(max(abs(v) for v in np.linalg.eigvals(
        np.array([[float(x) for x in row] for row in loop]))))
    strong_int = tuple(
        sum(int(iet.omega[a, b]) * nums[b] for b in range(4)) for a in range(4)
    )
    scale = max(abs(v) for v in strong_int)
    strong = _quantize(tuple(Fraction(v, scale) for v in strong_int), 2 * bits)
    weak = _quantize(_weak_stable_vector(loop, strong_int), 2 * bits)
    return SelfInducingIET(iet, SYMMETRIC4_LOOP, loop, expansion, strong, weak)
