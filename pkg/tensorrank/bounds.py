"""
Rank lower bounds: flattenings and the substitution method.

Peeling a slice replaces p by p̃_a = p − a⊗p(α) for some a with α(a) = 1.
Some a gives R(p̃_a) ≤ R(p) − 1, and when p(α) has rank one every a gives
R(p̃_a) ≥ R(p) − 1. The substitution bound therefore takes the minimum of the
recursive bound over the whole affine hyperplane (α = 1).
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from tensorrank.errors import PreconditionError
from tensorrank.exactfield import (
    FieldDescriptor,
    all_vectors,
    array_rank,
    kernel,
    projective_points,
)
from tensorrank.tensor3 import Axis, Tensor3, flattening_ranks

logger = logging.getLogger(__name__)


@dataclass
class SubstitutionConfig:
    budget: int = 200_000


@dataclass(frozen=True, eq=False)
class RankOneSlice:
    axis: Axis
    alpha: np.ndarray
    slice: np.ndarray


@dataclass(frozen=True, eq=False)
class PeelCertificate:
    """One substitution step p ↦ p − a⊗p(α), residual written in a basis of α^⊥.

    The basis of α^⊥ drops the pivot (first nonzero) coordinate of α.
    """
    axis: Axis
    alpha: np.ndarray
    chosen_a: np.ndarray
    residual: Tensor3
    slice: np.ndarray
    slice_rank: int
    pivot: int

    @property
    def rank_one_slice(self) -> bool:
        """Whether R(residual) ≥ R(p) − 1 is guaranteed."""
        return self.slice_rank == 1

    def reconstruct(self) -> Tensor3:
        """Embed the residual back along α^⊥ and add a⊗p(α)."""
        f = self.residual.field
        moved = np.moveaxis(self.residual.data, self.axis.index, 0)
        n = moved.shape[0] + 1
        full = f.zeros((n,) + moved.shape[1:])
        others = [i for i in range(n) if i != self.pivot]
        full[others] = moved
        inv_piv = f.inv(self.alpha[self.pivot])
        pivot_slice = f.zeros(moved.shape[1:])
        for k, i in enumerate(others):
            pivot_slice = f.sub_arrays(pivot_slice, f.scale(moved[k], f.mul(self.alpha[i], inv_piv)))
        full[self.pivot] = pivot_slice
        full = f.add_arrays(full, f.normalize(np.multiply.outer(self.chosen_a, self.slice)))
        return Tensor3(f, np.moveaxis(full, 0, self.axis.index).copy())

    def describe(self) -> dict:
        f = self.residual.field
        return {
            "axis": self.axis.value,
            "alpha": f.to_python(self.alpha),
            "a": f.to_python(self.chosen_a),
            "slice_rank": self.slice_rank,
            "residual_dims": list(self.residual.dims),
        }


def flattening_lower_bound(p: Tensor3) -> int:
    return max(flattening_ranks(p))


def _rational_sqrt(value: Fraction) -> Optional[Fraction]:
    if value < 0:
        return None
    num, den = value.numerator, value.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        return None
    return Fraction(rn, rd)


def _quadratic_roots(a: Fraction, b: Fraction, c: Fraction) -> List[Fraction]:
    if a == 0:
        return [] if b == 0 else [-c / b]
    root = _rational_sqrt(b * b - 4 * a * c)
    if root is None:
        return []
    return sorted({(-b + root) / (2 * a), (-b - root) / (2 * a)})


def _pencil_parameters(s: np.ndarray, t: np.ndarray) -> List[Fraction]:
    """Values λ where every 2×2 minor of s + λt might vanish (from the first nonconstant minor).

    With every minor constant in λ only a λ where s + λt vanishes behaves
    differently, and for t ≠ 0 that is at most one of 0, 1, −1.
    """
    rows, cols = s.shape
    for i1 in range(rows):
        for i2 in range(i1 + 1, rows):
            for j1 in range(cols):
                for j2 in range(j1 + 1, cols):
                    x1, x2, x3, x4 = s[i1, j1], s[i1, j2], s[i2, j1], s[i2, j2]
                    y1, y2, y3, y4 = t[i1, j1], t[i1, j2], t[i2, j1], t[i2, j2]
                    quad = y1 * y4 - y2 * y3
                    lin = x1 * y4 + y1 * x4 - x2 * y3 - y2 * x3
                    const = x1 * x4 - x2 * x3
                    if quad == 0 and lin == 0:
                        continue
                    return _quadratic_roots(Fraction(quad), Fraction(lin), Fraction(const))
    return [Fraction(0), Fraction(1), Fraction(-1)]


def _dual_candidates(p: Tensor3, axis: Axis):
    f = p.field
    n = p.dims[axis.index]
    if f.is_prime:
        yield from projective_points(f, n)
        return
    eye = f.identity(n)
    for i in range(n):
        yield eye[i]
    if min(p.other_dims(axis)) > 2:
        return
    slices = p.slices(axis)
    for i in range(n):
        for j in range(i + 1, n):
            for lam in _pencil_parameters(slices[i], slices[j]):
                if lam == 0:
                    continue
                yield f.add_arrays(eye[i], f.scale(eye[j], lam))


def find_rank_one_slice(p: Tensor3, axis=Axis.A) -> Optional[RankOneSlice]:
    """First functional α (in enumeration order) whose slice p(α) has rank one.

    Over GF(p) the dual space is scanned completely. Over Q only coordinate
    functionals and coordinate pencils are tried, so None is inconclusive.
    """
    axis = Axis.parse(axis)
    for alpha in _dual_candidates(p, axis):
        s = p.contract(axis, alpha)
        if array_rank(p.field, s) == 1:
            return RankOneSlice(axis, np.array(alpha, copy=True), s)
    return None


def peel(p: Tensor3, axis, alpha, a=None) -> PeelCertificate:
    """Substitute p − a⊗p(α); a defaults to e_pivot / α_pivot."""
    axis = Axis.parse(axis)
    f = p.field
    alpha = f.array(alpha)
    s = p.contract(axis, alpha)
    if not np.any(s):
        raise PreconditionError("p(alpha) is zero")
    pivot = int(np.nonzero(alpha)[0][0])
    n = p.dims[axis.index]
    if a is None:
        a = f.zeros(n)
        a[pivot] = f.inv(alpha[pivot])
    a = f.array(a)
    if f.dot(alpha, a) != f.one():
        raise PreconditionError("alpha(a) must equal 1")
    moved = np.moveaxis(p.data, axis.index, 0)
    full = f.sub_arrays(moved, f.normalize(np.multiply.outer(a, s)))
    kept = np.delete(full, pivot, axis=0)
    residual = Tensor3(f, np.moveaxis(kept, 0, axis.index).copy())
    return PeelCertificate(axis, alpha, a, residual, s, array_rank(f, s), pivot)


def affine_hyperplane(field: FieldDescriptor, alpha: np.ndarray):
    """Every a with α(a) = 1, the pivot choice e_pivot / α_pivot first."""
    field.require_prime("affine hyperplane enumeration")
    n = alpha.shape[0]
    pivot = int(np.nonzero(alpha)[0][0])
    base = field.zeros(n)
    base[pivot] = field.inv(alpha[pivot])
    directions = kernel(field, alpha.reshape(1, -1))
    for coeffs in all_vectors(field, n - 1):
        yield field.add_arrays(base, field.dot(coeffs, directions)) if n > 1 else base


@dataclass
class SubstitutionResult:
    bound: int
    trace: List[PeelCertificate] = field(default_factory=list)
    final_flattening: int = 0
    nodes: int = 0
    exhausted: bool = False

    @property
    def peels(self) -> int:
        return len(self.trace)


class _SubstitutionSearch:
    def __init__(self, config: SubstitutionConfig):
        self.budget = config.budget
        self.nodes = 0
        self.exhausted = False
        self.memo: Dict[tuple, Tuple[int, List[PeelCertificate], int]] = {}

    def first_slice(self, p: Tensor3) -> Optional[RankOneSlice]:
        for axis in Axis:
            if p.dims[axis.index] == 0:
                continue
            found = find_rank_one_slice(p, axis)
            if found is not None:
                return found
        return None

    def bound(self, p: Tensor3) -> Tuple[int, List[PeelCertificate], int]:
        key = p.key()
        if key in self.memo:
            return self.memo[key]
        flat = flattening_lower_bound(p) if p.data.size else 0
        result = (flat, [], flat)
        found = None if flat == 0 or self.exhausted else self.first_slice(p)
        if found is not None:
            best = None
            complete = True
            for a in affine_hyperplane(p.field, found.alpha):
                self.nodes += 1
                if self.nodes > self.budget:
                    self.exhausted = True
                    complete = False
                    break
                cert = peel(p, found.axis, found.alpha, a)
                sub, trace, final = self.bound(cert.residual)
                if best is None or sub < best[0]:
                    best = (sub, [cert] + trace, final)
                if best[0] + 1 <= flat:
                    break
            if complete and best is not None and best[0] + 1 > flat:
                result = (best[0] + 1, best[1], best[2])
        if not self.exhausted:
            self.memo[key] = result
        return result


def substitution_lower_bound(p: Tensor3, config: Optional[SubstitutionConfig] = None) -> SubstitutionResult:
    """Lower bound on R(p) by peeling rank-one slices (prime fields).

    Each step peels the first rank-one slice found on axes A, B, C and takes
    the minimum over every a in (α = 1); the last residual contributes its
    flattening bound. A subtree cut off by the budget contributes only its
    flattening bound.
    """
    p.field.require_prime("substitution method")
    search = _SubstitutionSearch(config or SubstitutionConfig())
    bound, trace, final = search.bound(p)
    if search.exhausted:
        logger.info("substitution budget of %d exhausted; partial bound %d", search.budget, bound)
    return SubstitutionResult(bound, trace, final, search.nodes, search.exhausted)


def greedy_peel_trace(p: Tensor3, axis=None) -> Tuple[List[PeelCertificate], Tensor3]:
    """Peel rank-one slices with the pivot choice of a until none is left.

    With axis given only that axis is scanned. Each step is one-sided
    (R(residual) ≥ R(p) − 1); the trace is a reduction, not a bound.
    """
    axes = list(Axis) if axis is None else [Axis.parse(axis)]
    trace: List[PeelCertificate] = []
    current = p
    while not current.is_zero():
        found = None
        for ax in axes:
            if current.dims[ax.index] == 0:
                continue
            found = find_rank_one_slice(current, ax)
            if found is not None:
                break
        if found is None:
            break
        cert = peel(current, found.axis, found.alpha)
        trace.append(cert)
        current = cert.residual
    return trace, current
