"""
Exact scalar arithmetic and dense linear algebra.

Two fields are supported: the prime fields GF(p) for p < 2^16 and the
rationals. Vectors, matrices and tensors are numpy arrays; GF(p) arrays use
int64 residues, rational arrays use dtype=object holding Fraction values.
No floating point dtype is ever produced.

Pivoting is deterministic:
- GF(p): first nonzero entry in the pivot column.
- Q: largest absolute numerator in the pivot column, lowest row on ties.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from tensorrank.errors import (
    DimensionMismatchError,
    FieldMismatchError,
    UnsupportedFieldError,
)

logger = logging.getLogger(__name__)

MAX_MODULUS = 1 << 16

RawScalar = Union[int, Fraction]


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class FieldKind(str, Enum):
    """Supported base fields."""
    PRIME = "gf"
    RATIONAL = "q"


@dataclass(frozen=True)
class FieldDescriptor:
    """The base field: GF(p) or Q."""
    kind: FieldKind
    modulus: Optional[int] = None

    def __post_init__(self):
        if self.kind is FieldKind.PRIME:
            if self.modulus is None or not (2 <= self.modulus < MAX_MODULUS):
                raise UnsupportedFieldError(f"modulus must satisfy 2 <= p < {MAX_MODULUS}, got {self.modulus}")
            if not _is_prime(self.modulus):
                raise UnsupportedFieldError(f"modulus {self.modulus} is not prime")
        elif self.modulus is not None:
            raise UnsupportedFieldError("rational field takes no modulus")

    @classmethod
    def gf(cls, p: int) -> "FieldDescriptor":
        return cls(FieldKind.PRIME, int(p))

    @classmethod
    def rationals(cls) -> "FieldDescriptor":
        return cls(FieldKind.RATIONAL)

    @classmethod
    def parse(cls, spec: str) -> "FieldDescriptor":
        """Parse ``gf<p>`` or ``q``."""
        text = spec.strip().lower()
        if text == "q":
            return cls.rationals()
        if text.startswith("gf") and text[2:].isdigit():
            return cls.gf(int(text[2:]))
        raise UnsupportedFieldError(f"unknown field spec {spec!r} (expected gf<p> or q)")

    @property
    def is_prime(self) -> bool:
        return self.kind is FieldKind.PRIME

    @property
    def spec(self) -> str:
        return f"gf{self.modulus}" if self.is_prime else "q"

    @property
    def dtype(self):
        return np.int64 if self.is_prime else object

    def __str__(self) -> str:
        return f"GF({self.modulus})" if self.is_prime else "Q"

    # -- raw scalar arithmetic -------------------------------------------

    def coerce(self, value) -> RawScalar:
        if isinstance(value, Scalar):
            self.require_same(value.field)
            return value.value
        if self.is_prime:
            if isinstance(value, Fraction):
                if value.denominator != 1:
                    return (value.numerator * pow(value.denominator, -1, self.modulus)) % self.modulus
                value = value.numerator
            return int(value) % self.modulus
        return Fraction(value)

    def zero(self) -> RawScalar:
        return 0 if self.is_prime else Fraction(0)

    def one(self) -> RawScalar:
        return 1 if self.is_prime else Fraction(1)

    def add(self, a: RawScalar, b: RawScalar) -> RawScalar:
        return (a + b) % self.modulus if self.is_prime else a + b

    def sub(self, a: RawScalar, b: RawScalar) -> RawScalar:
        return (a - b) % self.modulus if self.is_prime else a - b

    def mul(self, a: RawScalar, b: RawScalar) -> RawScalar:
        return (a * b) % self.modulus if self.is_prime else a * b

    def neg(self, a: RawScalar) -> RawScalar:
        return (-a) % self.modulus if self.is_prime else -a

    def inv(self, a: RawScalar) -> RawScalar:
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        if self.is_prime:
            return pow(int(a), self.modulus - 2, self.modulus)
        return 1 / a

    def elements(self) -> Iterator[int]:
        """Every element of a prime field, in increasing residue order."""
        self.require_prime("element enumeration")
        return iter(range(self.modulus))

    def scalar(self, value) -> "Scalar":
        return Scalar(self, self.coerce(value))

    # -- arrays ----------------------------------------------------------

    def array(self, values) -> np.ndarray:
        """Coerce nested values into a normalized array of this field."""
        if self.is_prime:
            arr = np.array(values, dtype=object)
            if arr.size == 0:
                return np.zeros(arr.shape, dtype=np.int64)
            return np.vectorize(self.coerce, otypes=[np.int64])(arr).astype(np.int64)
        arr = np.array(values, dtype=object)
        if arr.size == 0:
            return np.empty(arr.shape, dtype=object)
        return np.vectorize(self.coerce, otypes=[object])(arr)

    def zeros(self, shape) -> np.ndarray:
        if self.is_prime:
            return np.zeros(shape, dtype=np.int64)
        arr = np.empty(shape, dtype=object)
        arr.fill(Fraction(0))
        return arr

    def identity(self, n: int) -> np.ndarray:
        arr = self.zeros((n, n))
        for i in range(n):
            arr[i, i] = self.one()
        return arr

    def normalize(self, arr: np.ndarray) -> np.ndarray:
        """Reduce a freshly computed array to canonical representatives."""
        if self.is_prime:
            return np.asarray(arr, dtype=np.int64) % self.modulus
        arr = np.asarray(arr, dtype=object)
        if arr.size == 0:
            return arr
        return np.vectorize(Fraction, otypes=[object])(arr)

    def dot(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.is_prime:
            return np.dot(a, b) % self.modulus
        if a.shape[-1] == 0:
            return self.zeros(a.shape[:-1] + b.shape[1:])
        return self.normalize(np.dot(a, b))

    def outer(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.normalize(np.multiply.outer(u, v))

    def scale(self, arr: np.ndarray, value: RawScalar) -> np.ndarray:
        return self.normalize(arr * value)

    def add_arrays(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.normalize(a + b)

    def sub_arrays(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.normalize(a - b)

    def to_python(self, arr: np.ndarray) -> list:
        """Nested lists of ints (GF) or "n/d" strings (Q), for serialization."""
        if self.is_prime:
            return np.asarray(arr).tolist()
        return np.vectorize(lambda x: str(Fraction(x)), otypes=[object])(arr).tolist()

    # -- guards ----------------------------------------------------------

    def require_same(self, other: "FieldDescriptor") -> None:
        if self != other:
            raise FieldMismatchError(f"cannot combine values over {self} and {other}")

    def require_prime(self, what: str) -> None:
        if not self.is_prime:
            raise UnsupportedFieldError(f"{what} needs a prime field, got {self}")


@dataclass(frozen=True)
class Scalar:
    """A field element tagged with its field."""
    field: FieldDescriptor
    value: RawScalar

    def _other(self, other) -> RawScalar:
        if isinstance(other, Scalar):
            self.field.require_same(other.field)
            return other.value
        return self.field.coerce(other)

    def __add__(self, other) -> "Scalar":
        return Scalar(self.field, self.field.add(self.value, self._other(other)))

    __radd__ = __add__

    def __sub__(self, other) -> "Scalar":
        return Scalar(self.field, self.field.sub(self.value, self._other(other)))

    def __rsub__(self, other) -> "Scalar":
        return Scalar(self.field, self.field.sub(self._other(other), self.value))

    def __mul__(self, other) -> "Scalar":
        return Scalar(self.field, self.field.mul(self.value, self._other(other)))

    __rmul__ = __mul__

    def __neg__(self) -> "Scalar":
        return Scalar(self.field, self.field.neg(self.value))

    def inverse(self) -> "Scalar":
        return Scalar(self.field, self.field.inv(self.value))

    def __truediv__(self, other) -> "Scalar":
        return self * Scalar(self.field, self._other(other)).inverse()

    def is_zero(self) -> bool:
        return self.value == 0

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True, eq=False)
class Matrix:
    """A dense matrix over one field, stored row-major as a read-only array."""
    field: FieldDescriptor
    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2:
            raise DimensionMismatchError(f"matrix data must be 2-dimensional, got shape {self.data.shape}")
        if self.data.flags.writeable:
            object.__setattr__(self, "data", _frozen(self.field.normalize(self.data.copy())))

    @classmethod
    def from_rows(cls, field: FieldDescriptor, rows: Sequence[Sequence]) -> "Matrix":
        return cls(field, field.array(rows))

    @classmethod
    def zeros(cls, field: FieldDescriptor, rows: int, cols: int) -> "Matrix":
        return cls(field, field.zeros((rows, cols)))

    @classmethod
    def identity(cls, field: FieldDescriptor, n: int) -> "Matrix":
        return cls(field, field.identity(n))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def entries(self) -> Tuple[Scalar, ...]:
        return tuple(Scalar(self.field, v) for v in self.data.reshape(-1).tolist())

    def __getitem__(self, index) -> Scalar:
        return Scalar(self.field, self.data[index])

    def transpose(self) -> "Matrix":
        return Matrix(self.field, self.data.T.copy())

    @property
    def T(self) -> "Matrix":
        return self.transpose()

    def __matmul__(self, other: "Matrix") -> "Matrix":
        self.field.require_same(other.field)
        if self.cols != other.rows:
            raise DimensionMismatchError(f"cannot multiply {self.shape} by {other.shape}")
        return Matrix(self.field, self.field.dot(self.data, other.data))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.field == other.field and np.array_equal(self.data, other.data)

    def __hash__(self) -> int:
        return hash((self.field, self.data.shape, self.data.tobytes() if self.field.is_prime else str(self.data.tolist())))

    def vectorize(self) -> np.ndarray:
        return self.data.reshape(-1)

    def rank(self) -> int:
        return matrix_rank(self)


# ---------------------------------------------------------------------------
# Row reduction
# ---------------------------------------------------------------------------


def _rref_prime(arr: np.ndarray, p: int) -> Tuple[np.ndarray, Tuple[int, ...]]:
    m = np.array(arr, dtype=np.int64) % p
    n_rows, n_cols = m.shape
    pivots: List[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            m[[r, k]] = m[[k, r]]
        m[r] = (m[r] * pow(int(m[r, c]), p - 2, p)) % p
        col = m[:, c].copy()
        col[r] = 0
        if col.any():
            m = (m - np.outer(col, m[r])) % p
        pivots.append(c)
        r += 1
    return m[:r], tuple(pivots)


def _rref_rational(arr: np.ndarray) -> Tuple[np.ndarray, Tuple[int, ...]]:
    m = [[Fraction(x) for x in row] for row in np.asarray(arr, dtype=object).tolist()]
    n_rows = len(m)
    n_cols = np.asarray(arr).shape[1]
    pivots: List[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        best = None
        for k in range(r, n_rows):
            if m[k][c] != 0 and (best is None or abs(m[k][c].numerator) > abs(m[best][c].numerator)):
                best = k
        if best is None:
            continue
        m[r], m[best] = m[best], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for k in range(n_rows):
            if k != r and m[k][c] != 0:
                factor = m[k][c]
                m[k] = [x - factor * y for x, y in zip(m[k], m[r])]
        pivots.append(c)
        r += 1
    out = np.empty((r, n_cols), dtype=object)
    for i in range(r):
        for j in range(n_cols):
            out[i, j] = m[i][j]
    return out, tuple(pivots)


def row_reduce(field: FieldDescriptor, arr: np.ndarray) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """Reduced row echelon form: (nonzero rows, pivot columns)."""
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"row reduction needs a 2-d array, got shape {arr.shape}")
    if arr.shape[0] == 0:
        return field.zeros((0, arr.shape[1])), ()
    if field.is_prime:
        return _rref_prime(arr, field.modulus)
    return _rref_rational(arr)


def array_rank(field: FieldDescriptor, arr: np.ndarray) -> int:
    return len(row_reduce(field, arr)[1])


def matrix_rank(m: Matrix) -> int:
    """Rank by exact Gaussian elimination."""
    return array_rank(m.field, m.data)


def solve_array(field: FieldDescriptor, a: np.ndarray, b: np.ndarray) -> Optional[np.ndarray]:
    """Some x with a @ x = b (free variables set to zero), or None."""
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(f"system has {a.shape[0]} rows but right-hand side has {b.shape[0]}")
    n = a.shape[1]
    if a.shape[0] == 0:
        return field.zeros((n, b.shape[1]))
    reduced, pivots = row_reduce(field, np.concatenate([a, b], axis=1))
    if pivots and pivots[-1] >= n:
        return None
    x = field.zeros((n, b.shape[1]))
    for i, c in enumerate(pivots):
        x[c] = reduced[i, n:]
    return x


def solve_linear(a: Matrix, b: Matrix) -> Optional[Matrix]:
    """Solve a @ x = b exactly; None when inconsistent."""
    a.field.require_same(b.field)
    x = solve_array(a.field, a.data, b.data)
    return None if x is None else Matrix(a.field, x)


def span_basis(field: FieldDescriptor, vectors, length: Optional[int] = None) -> np.ndarray:
    """RREF basis (rows) of the span of the given vectors."""
    rows = [np.asarray(v).reshape(-1) for v in vectors]
    if not rows:
        if length is None:
            raise DimensionMismatchError("length is required for an empty spanning set")
        return field.zeros((0, length))
    width = rows[0].shape[0]
    if any(r.shape[0] != width for r in rows) or (length is not None and width != length):
        raise DimensionMismatchError("vectors of a spanning set must share one length")
    return row_reduce(field, np.stack(rows))[0]


def in_span(field: FieldDescriptor, basis: np.ndarray, vector: np.ndarray) -> bool:
    """Whether vector lies in the row span of basis."""
    vector = np.asarray(vector).reshape(1, -1)
    if basis.shape[0] == 0:
        return not np.any(vector)
    return array_rank(field, np.concatenate([basis, vector])) == array_rank(field, basis)


def kernel(field: FieldDescriptor, arr: np.ndarray) -> np.ndarray:
    """Basis (rows) of {x : arr @ x = 0}."""
    n = arr.shape[1]
    reduced, pivots = row_reduce(field, arr)
    free = [c for c in range(n) if c not in pivots]
    basis = field.zeros((len(free), n))
    for k, f in enumerate(free):
        basis[k, f] = field.one()
        for i, c in enumerate(pivots):
            basis[k, c] = field.neg(reduced[i, f])
    return field.normalize(basis)


def annihilator(field: FieldDescriptor, basis: np.ndarray, length: int) -> np.ndarray:
    """Basis of the dual vectors vanishing on the span of basis."""
    if basis.shape[0] == 0:
        return field.identity(length)
    return kernel(field, basis)


def subspace_intersect(field: FieldDescriptor, span1, span2, length: Optional[int] = None) -> np.ndarray:
    """Basis of span(span1) ∩ span(span2)."""
    u = span_basis(field, list(span1), length)
    v = span_basis(field, list(span2), u.shape[1])
    if u.shape[1] != v.shape[1]:
        raise DimensionMismatchError("subspaces live in spaces of different dimension")
    if u.shape[0] == 0 or v.shape[0] == 0:
        return field.zeros((0, u.shape[1]))
    stacked = np.concatenate([u, field.normalize(-v)])
    relations = kernel(field, stacked.T)
    if relations.shape[0] == 0:
        return field.zeros((0, u.shape[1]))
    meet = field.dot(relations[:, : u.shape[0]], u)
    return row_reduce(field, meet)[0]


# ---------------------------------------------------------------------------
# Enumeration over prime fields
# ---------------------------------------------------------------------------


def projective_points(field: FieldDescriptor, dim: int) -> Iterator[np.ndarray]:
    """One normalized representative (first nonzero = 1) per projective point.

    Yields (p^dim - 1) / (p - 1) read-only vectors in lexicographic order.
    """
    field.require_prime("projective enumeration")
    p = field.modulus
    for lead in range(dim - 1, -1, -1):
        for tail in itertools.product(range(p), repeat=dim - lead - 1):
            vec = np.zeros(dim, dtype=np.int64)
            vec[lead] = 1
            vec[lead + 1:] = tail
            yield _frozen(vec)


def projective_count(field: FieldDescriptor, dim: int) -> int:
    p = field.modulus
    return (p ** dim - 1) // (p - 1)


def subspaces(field: FieldDescriptor, n: int, d: int) -> Iterator[np.ndarray]:
    """Every d-dimensional subspace of GF(p)^n as its d×n RREF basis.

    For d = 1 the order coincides with projective_points.
    """
    field.require_prime("subspace enumeration")
    if d == 0:
        yield _frozen(field.zeros((0, n)))
        return
    if d > n:
        return
    p = field.modulus
    for pivots in reversed(list(itertools.combinations(range(n), d))):
        pivot_set = set(pivots)
        free = [(r, c) for r, pc in enumerate(pivots) for c in range(pc + 1, n) if c not in pivot_set]
        for values in itertools.product(range(p), repeat=len(free)):
            basis = np.zeros((d, n), dtype=np.int64)
            for r, pc in enumerate(pivots):
                basis[r, pc] = 1
            for (r, c), value in zip(free, values):
                basis[r, c] = value
            yield _frozen(basis)


def all_vectors(field: FieldDescriptor, dim: int) -> Iterator[np.ndarray]:
    """Every vector of GF(p)^dim in lexicographic order."""
    field.require_prime("vector enumeration")
    for values in itertools.product(range(field.modulus), repeat=dim):
        yield _frozen(np.array(values, dtype=np.int64))
