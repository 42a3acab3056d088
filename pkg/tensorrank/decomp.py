"""
Rank-one decompositions, the Strassen table, and the exact rank oracle.

The oracle works in the slice space W = p(X*) along the axis with the largest
dimension: R(p) = R(W), so it enumerates rank-one matrices v⊗w of the two
remaining factors and recovers the third factor by one linear solve.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from tensorrank.errors import (
    CensusTooLargeError,
    DimensionMismatchError,
    PreconditionError,
)
from tensorrank.exactfield import (
    FieldDescriptor,
    all_vectors,
    array_rank,
    projective_points,
    row_reduce,
    solve_array,
)
from tensorrank.tensor3 import (
    Axis,
    Tensor3,
    flattening_ranks,
    matmul_tensor,
    slice_space,
)

logger = logging.getLogger(__name__)

MAX_ORACLE_VOLUME = 64
MAX_CENSUS_SIZE = 1 << 20


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class RankOneTerm:
    """A simple tensor u⊗v⊗w with all three factors nonzero."""
    field: FieldDescriptor
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        for name in ("u", "v", "w"):
            vec = getattr(self, name)
            if vec.ndim != 1:
                raise DimensionMismatchError(f"term factor {name} must be a vector")
            if vec.flags.writeable:
                vec = _frozen(self.field.normalize(vec.copy()))
                object.__setattr__(self, name, vec)
            if not np.any(vec):
                raise PreconditionError(f"term factor {name} is zero")

    @classmethod
    def of(cls, field: FieldDescriptor, u, v, w) -> "RankOneTerm":
        return cls(field, field.array(u), field.array(v), field.array(w))

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (self.u.shape[0], self.v.shape[0], self.w.shape[0])

    def tensor(self) -> Tensor3:
        return Tensor3.rank_one(self.field, self.u, self.v, self.w)

    def matrix(self, axis=Axis.A) -> np.ndarray:
        """The rank-one matrix of the two factors other than axis."""
        axis = Axis.parse(axis)
        a, b = [vec for i, vec in enumerate((self.u, self.v, self.w)) if i != axis.index]
        return self.field.outer(a, b)

    def factor(self, axis) -> np.ndarray:
        return (self.u, self.v, self.w)[Axis.parse(axis).index]

    def to_python(self) -> dict:
        return {"u": self.field.to_python(self.u), "v": self.field.to_python(self.v), "w": self.field.to_python(self.w)}


@dataclass(frozen=True)
class Decomposition:
    """An ordered list of rank-one terms for tensors of fixed dims."""
    field: FieldDescriptor
    dims: Tuple[int, int, int]
    terms: Tuple[RankOneTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        object.__setattr__(self, "terms", tuple(self.terms))
        for i, term in enumerate(self.terms):
            self.field.require_same(term.field)
            if term.dims != self.dims:
                raise DimensionMismatchError(f"term {i} has dims {term.dims}, expected {self.dims}")

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __getitem__(self, index) -> RankOneTerm:
        return self.terms[index]

    def without(self, index: int) -> "Decomposition":
        return Decomposition(self.field, self.dims, self.terms[:index] + self.terms[index + 1:])

    def factors(self, axis) -> np.ndarray:
        """Stacked factor vectors (r × n_axis) for one axis."""
        axis = Axis.parse(axis)
        if not self.terms:
            return self.field.zeros((0, self.dims[axis.index]))
        return np.stack([term.factor(axis) for term in self.terms])

    def stacked(self) -> np.ndarray:
        """Vectorized simple tensors as rows (r × a·b·c)."""
        size = int(np.prod(self.dims))
        if not self.terms:
            return self.field.zeros((0, size))
        return np.stack([term.tensor().data.reshape(-1) for term in self.terms])

    def to_python(self) -> List[dict]:
        return [term.to_python() for term in self.terms]


def concat_decompositions(d1: Decomposition, d2: Decomposition) -> Decomposition:
    """Block concatenation: a decomposition of p1 ⊕ p2 from ones of p1 and p2."""
    d1.field.require_same(d2.field)
    f = d1.field
    dims = tuple(x + y for x, y in zip(d1.dims, d2.dims))
    terms = []
    for term in d1:
        terms.append(RankOneTerm(f, *(np.concatenate([vec, f.zeros(n)]) for vec, n in zip((term.u, term.v, term.w), d2.dims))))
    for term in d2:
        terms.append(RankOneTerm(f, *(np.concatenate([f.zeros(n), vec]) for vec, n in zip((term.u, term.v, term.w), d1.dims))))
    return Decomposition(f, dims, tuple(terms))


def evaluate(d: Decomposition, coefficients: Optional[Sequence] = None) -> Tensor3:
    """Σ λ_i u_i⊗v_i⊗w_i; all coefficients 1 when none are given."""
    f = d.field
    if coefficients is None:
        coefficients = [f.one()] * len(d)
    if len(coefficients) != len(d):
        raise DimensionMismatchError(f"{len(coefficients)} coefficients for {len(d)} terms")
    a, b, c = d.dims
    if not d.terms:
        return Tensor3.zeros(f, d.dims)
    lam = f.array(list(coefficients))
    left = f.normalize(d.factors(Axis.A) * lam.reshape(-1, 1))
    right = np.stack([f.outer(t.v, t.w).reshape(-1) for t in d.terms])
    return Tensor3(f, f.dot(left.T, right).reshape(a, b, c))


def certifies(d: Decomposition, p: Tensor3) -> Optional[list]:
    """Coefficients λ with evaluate(d, λ) = p, or None when p is outside the span."""
    d.field.require_same(p.field)
    if d.dims != p.dims:
        raise DimensionMismatchError(f"decomposition dims {d.dims} against tensor dims {p.dims}")
    target = p.data.reshape(-1, 1)
    if not d.terms:
        return [] if p.is_zero() else None
    x = solve_array(p.field, d.stacked().T, target)
    if x is None:
        return None
    return x.reshape(-1).tolist()


STRASSEN_TABLE = (
    # (A-factor over a11 a12 a21 a22, B-factor over b11 b12 b21 b22, C-factor over c11 c12 c21 c22)
    ((1, 0, 0, 1), (1, 0, 0, 1), (1, 0, 0, 1)),
    ((0, 0, 1, 1), (1, 0, 0, 0), (0, 0, 1, -1)),
    ((1, 0, 0, 0), (0, 1, 0, -1), (0, 1, 0, 1)),
    ((0, 0, 0, 1), (-1, 0, 1, 0), (1, 0, 1, 0)),
    ((1, 1, 0, 0), (0, 0, 0, 1), (-1, 1, 0, 0)),
    ((-1, 0, 1, 0), (1, 1, 0, 0), (0, 0, 0, 1)),
    ((0, 1, 0, -1), (0, 0, 1, 1), (1, 0, 0, 0)),
)


def strassen_222(field: FieldDescriptor, table: Sequence = STRASSEN_TABLE) -> Decomposition:
    """Seven products computing 2×2 matrix multiplication."""
    terms = tuple(RankOneTerm.of(field, u, v, w) for u, v, w in table)
    return Decomposition(field, (4, 4, 4), terms)


# ---------------------------------------------------------------------------
# Decompositions from matrix spans
# ---------------------------------------------------------------------------


def rank_one_factors(field: FieldDescriptor, m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(x, y) with m = x⊗y, for a rank-one matrix m."""
    nz_rows = np.nonzero(np.any(m != 0, axis=1))[0]
    if nz_rows.size == 0:
        raise PreconditionError("zero matrix has no rank-one factorization")
    i = int(nz_rows[0])
    y = m[i].copy()
    j = int(np.nonzero(y != 0)[0][0])
    x = field.scale(m[:, j], field.inv(y[j]))
    if not np.array_equal(field.outer(x, y), field.normalize(m)):
        raise PreconditionError("matrix is not of rank one")
    return x, y


def rank_factorization(field: FieldDescriptor, m: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    """m as a sum of rank(m) rank-one matrices (pivot columns ⊗ RREF rows)."""
    reduced, pivots = row_reduce(field, m)
    return [(field.normalize(m[:, c].copy()), reduced[i].copy()) for i, c in enumerate(pivots)]


def _place(axis: Axis, u: np.ndarray, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Put u on axis and (x, y) on the two remaining axes in order."""
    slots = [None, None, None]
    slots[axis.index] = u
    rest = [i for i in range(3) if i != axis.index]
    slots[rest[0]], slots[rest[1]] = x, y
    return tuple(slots)


def decomposition_from_matrices(p: Tensor3, matrices: Sequence[np.ndarray], axis=Axis.A) -> Optional[Decomposition]:
    """Solve for the axis factors so the rank-one matrices decompose p.

    Returns None when some slice of p is outside the span of the matrices.
    """
    axis = Axis.parse(axis)
    f = p.field
    if not matrices:
        return Decomposition(f, p.dims) if p.is_zero() else None
    basis = np.stack([f.normalize(np.asarray(m)).reshape(-1) for m in matrices])
    lam = solve_array(f, basis.T, p.flattening(axis).T)
    if lam is None:
        return None
    terms = []
    for i, m in enumerate(matrices):
        u = lam[i]
        if not np.any(u):
            continue
        x, y = rank_one_factors(f, f.normalize(np.asarray(m)))
        terms.append(RankOneTerm(f, *_place(axis, u.copy(), x, y)))
    return Decomposition(f, p.dims, tuple(terms))


def slicewise_decomposition(p: Tensor3, axis=Axis.A) -> Decomposition:
    """Σ_k u_k ⊗ M_k over an RREF basis M_k of the slice space, each M_k split by rank."""
    axis = Axis.parse(axis)
    space = slice_space(p, axis)
    matrices = [piece for m in space.matrices() for piece in (p.field.outer(x, y) for x, y in rank_factorization(p.field, m))]
    d = decomposition_from_matrices(p, matrices, axis)
    if d is None:  # pragma: no cover - the slices span the slice space
        raise PreconditionError("slice basis does not span its own tensor")
    return d


def ambient_excess_bound(p: Tensor3, d: Decomposition, axis=Axis.A) -> int:
    """Upper bound on R(p) from any decomposition certifying p.

    R(p) + dim⟨u_i⟩ − dim A′ ≤ r with A′ the smallest subspace containing p
    on that axis; factor spans wider than A′ are wasted terms.
    """
    axis = Axis.parse(axis)
    factor_dim = array_rank(p.field, d.factors(axis)) if len(d) else 0
    return len(d) - factor_dim + flattening_ranks(p)[axis.index]


def upper_bound(p: Tensor3, split: Optional[Tuple[int, int, int]] = None) -> Tuple[Decomposition, str]:
    """Shortest certified decomposition among the known constructions."""
    candidates: List[Tuple[Decomposition, str]] = []
    if p.dims == (4, 4, 4) and p == matmul_tensor(2, 2, 2, p.field):
        candidates.append((strassen_222(p.field), "strassen"))
    if split is not None and _is_block_diagonal(p, split):
        first, second = split_blocks(p, split)
        d1, how1 = upper_bound(first)
        d2, how2 = upper_bound(second)
        candidates.append((concat_decompositions(d1, d2), f"blocks({how1}+{how2})"))
    for axis in Axis:
        candidates.append((slicewise_decomposition(p, axis), f"slices-{axis.value}"))
    best = min(candidates, key=lambda item: len(item[0]))
    logger.debug("upper bound %d via %s", len(best[0]), best[1])
    return best


def _is_block_diagonal(p: Tensor3, split: Sequence[int]) -> bool:
    a1, b1, c1 = split
    mask = np.zeros(p.dims, dtype=bool)
    mask[:a1, :b1, :c1] = True
    mask[a1:, b1:, c1:] = True
    return not np.any(p.data[~mask])


def split_blocks(p: Tensor3, split: Sequence[int]) -> Tuple[Tensor3, Tensor3]:
    """The two diagonal blocks of p at the split (a′, b′, c′)."""
    a1, b1, c1 = split
    if not (0 < a1 < p.dims[0] and 0 < b1 < p.dims[1] and 0 < c1 < p.dims[2]):
        raise DimensionMismatchError(f"split {tuple(split)} is not inside dims {p.dims}")
    return (
        Tensor3(p.field, p.data[:a1, :b1, :c1].copy()),
        Tensor3(p.field, p.data[a1:, b1:, c1:].copy()),
    )


# ---------------------------------------------------------------------------
# Rank oracle
# ---------------------------------------------------------------------------


@dataclass
class OracleConfig:
    budget: int = 10 ** 8
    max_rank: Optional[int] = None


class OracleStatus(str, Enum):
    EXACT = "exact"
    LOWER_BOUND_ONLY = "lower_bound_only"
    BUDGET_EXCEEDED = "budget_exceeded"


@dataclass
class OracleResult:
    status: OracleStatus
    lower: int
    upper: Optional[int] = None
    decomposition: Optional[Decomposition] = None
    nodes: int = 0

    @property
    def is_exact(self) -> bool:
        return self.status is OracleStatus.EXACT

    @property
    def rank(self) -> Optional[int]:
        return self.lower if self.is_exact else None


class _BudgetExhausted(Exception):
    pass


class _SliceSearch:
    """Depth-first search for r rank-one matrices whose span contains W.

    Terms are taken in increasing candidate order and must be independent.
    A term is "outside" when it is not in W + span(previous terms); a
    successful sequence has exactly r − dim W outside terms, which bounds
    every prefix.
    """

    def __init__(self, field: FieldDescriptor, w_basis: np.ndarray, candidates: np.ndarray, budget: int, nodes: int = 0):
        self.p = field.modulus
        self.w_basis = w_basis
        self.dim_w = w_basis.shape[0]
        self.candidates = candidates
        self.budget = budget
        self.nodes = nodes
        self._reduced_w = self._reduce_all(candidates, w_basis)

    def _reduce_all(self, rows: np.ndarray, basis: np.ndarray) -> np.ndarray:
        out = rows.copy()
        for vec in basis:
            piv = int(np.nonzero(vec)[0][0])
            out = (out - np.outer(out[:, piv], vec)) % self.p
        return out

    def _pivot_normalized(self, vec: np.ndarray) -> Tuple[int, np.ndarray]:
        piv = int(np.nonzero(vec)[0][0])
        return piv, (vec * pow(int(vec[piv]), self.p - 2, self.p)) % self.p

    def run(self, r: int) -> Optional[List[int]]:
        if r < self.dim_w:
            return None
        n = self.candidates.shape[0]
        return self._extend(r, [], 0, self.candidates, self._reduced_w, np.arange(n))

    def _extend(self, r, chosen, n_out, red_span, red_w, index):
        t = len(chosen)
        if t == r:
            return list(chosen) if n_out == r - self.dim_w else None
        slack = r - self.dim_w - n_out
        independent = np.any(red_span != 0, axis=1)
        inside = ~np.any(red_w != 0, axis=1)
        remaining = r - t
        for pos in range(red_span.shape[0]):
            if red_span.shape[0] - pos < remaining:
                break
            if not independent[pos]:
                continue
            out = not inside[pos]
            if out and slack == 0:
                continue
            self.nodes += 1
            if self.nodes > self.budget:
                raise _BudgetExhausted()
            piv, vec = self._pivot_normalized(red_span[pos])
            tail_span = red_span[pos + 1:]
            child_span = (tail_span - np.outer(tail_span[:, piv], vec)) % self.p
            tail_w = red_w[pos + 1:]
            if out:
                piv_w, vec_w = self._pivot_normalized(red_w[pos])
                child_w = (tail_w - np.outer(tail_w[:, piv_w], vec_w)) % self.p
            else:
                child_w = tail_w
            chosen.append(int(index[pos]))
            found = self._extend(r, chosen, n_out + int(out), child_span, child_w, index[pos + 1:])
            if found is not None:
                return found
            chosen.pop()
        return None


def _oracle_axis(p: Tensor3) -> Axis:
    dims = p.dims
    return list(Axis)[max(range(3), key=lambda i: (dims[i], -i))]


def rank_oracle(p: Tensor3, config: Optional[OracleConfig] = None) -> OracleResult:
    """Exact rank by iterative deepening over rank-one matrices of a slice space."""
    config = config or OracleConfig()
    a, b, c = p.dims
    if a * b * c > MAX_ORACLE_VOLUME:
        raise PreconditionError(f"oracle volume a*b*c = {a * b * c} exceeds {MAX_ORACLE_VOLUME}")
    lower = max(flattening_ranks(p))
    upper_decomposition, how = upper_bound(p)
    upper = len(upper_decomposition)
    if p.is_zero():
        return OracleResult(OracleStatus.EXACT, 0, 0, Decomposition(p.field, p.dims), 0)
    if not p.field.is_prime:
        return OracleResult(OracleStatus.LOWER_BOUND_ONLY, lower, upper, upper_decomposition, 0)
    if lower == upper:
        return OracleResult(OracleStatus.EXACT, lower, upper, upper_decomposition, 0)

    axis = _oracle_axis(p)
    space = slice_space(p, axis)
    x_dim, y_dim = space.shape
    xs = list(projective_points(p.field, x_dim))
    ys = list(projective_points(p.field, y_dim))
    candidates = np.stack([np.outer(x, y).reshape(-1) % p.field.modulus for x in xs for y in ys])
    search = _SliceSearch(p.field, space.basis.astype(np.int64), candidates, config.budget)

    ceiling = upper if config.max_rank is None else min(upper, config.max_rank + 1)
    r = lower
    try:
        while r < ceiling:
            logger.debug("oracle: trying r=%d (nodes so far %d)", r, search.nodes)
            found = search.run(r)
            if found is not None:
                matrices = [candidates[i].reshape(x_dim, y_dim) for i in found]
                witness = decomposition_from_matrices(p, matrices, axis)
                if witness is None or len(witness) != r:  # pragma: no cover
                    raise PreconditionError("oracle witness failed to certify")
                return OracleResult(OracleStatus.EXACT, r, r, witness, search.nodes)
            r += 1
    except _BudgetExhausted:
        logger.info("oracle budget of %d nodes exhausted at r=%d", config.budget, r)
        return OracleResult(OracleStatus.BUDGET_EXCEEDED, r, upper, upper_decomposition, search.nodes)
    if r >= upper:
        return OracleResult(OracleStatus.EXACT, upper, upper, upper_decomposition, search.nodes)
    return OracleResult(OracleStatus.LOWER_BOUND_ONLY, r, upper, upper_decomposition, search.nodes)


@dataclass
class CensusResult:
    dims: Tuple[int, int, int]
    field_spec: str
    histogram: Dict[int, int] = field(default_factory=dict)
    budget_exceeded: int = 0
    total: int = 0

    @property
    def max_rank(self) -> int:
        return max(self.histogram) if self.histogram else 0


def max_rank_census(dims: Sequence[int], field: FieldDescriptor, config: Optional[OracleConfig] = None) -> CensusResult:
    """Histogram of exact ranks over every tensor of the given shape."""
    field.require_prime("rank census")
    a, b, c = dims
    size = field.modulus ** (a * b * c)
    if size > MAX_CENSUS_SIZE:
        raise CensusTooLargeError(f"census over {size} tensors exceeds {MAX_CENSUS_SIZE}")
    histogram: Counter = Counter()
    exceeded = 0
    for entries in all_vectors(field, a * b * c):
        result = rank_oracle(Tensor3(field, entries.reshape(a, b, c).copy()), config)
        if result.is_exact:
            histogram[result.lower] += 1
        else:
            exceeded += 1
    logger.info("census %s over %s: %s", tuple(dims), field, dict(sorted(histogram.items())))
    return CensusResult(tuple(dims), field.spec, dict(sorted(histogram.items())), exceeded, size)

