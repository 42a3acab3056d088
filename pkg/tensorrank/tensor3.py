"""
Order-3 tensors, matrix spaces and hook shapes.

Entries are stored (i, j, k) row-major; every axis permutation goes through
an explicit transpose so the three axes share one code path.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from tensorrank.errors import DimensionMismatchError, PreconditionError
from tensorrank.exactfield import (
    FieldDescriptor,
    Matrix,
    annihilator,
    array_rank,
    in_span,
    row_reduce,
    solve_array,
    span_basis,
    subspace_intersect,
    subspaces,
)

logger = logging.getLogger(__name__)

MAX_AXIS_DIM = 32
MAX_HOOK_AMBIENT = 6
MAX_HOOK_WIDTH = 3


class Axis(str, Enum):
    A = "A"
    B = "B"
    C = "C"

    @property
    def index(self) -> int:
        return "ABC".index(self.value)

    @classmethod
    def parse(cls, value) -> "Axis":
        if isinstance(value, Axis):
            return value
        if isinstance(value, int):
            return list(cls)[value]
        return cls(str(value).upper())


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Tensor3:
    """Dense tensor in A⊗B⊗C over one field."""
    field: FieldDescriptor
    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3:
            raise DimensionMismatchError(f"tensor data must be 3-dimensional, got shape {self.data.shape}")
        if any(n > MAX_AXIS_DIM for n in self.data.shape):
            raise DimensionMismatchError(f"axis dimensions are capped at {MAX_AXIS_DIM}, got {self.data.shape}")
        if self.data.flags.writeable:
            object.__setattr__(self, "data", _frozen(self.field.normalize(self.data.copy())))

    # -- constructors ----------------------------------------------------

    @classmethod
    def zeros(cls, field: FieldDescriptor, dims: Sequence[int]) -> "Tensor3":
        return cls(field, field.zeros(tuple(dims)))

    @classmethod
    def from_entries(cls, field: FieldDescriptor, dims: Sequence[int], entries: Sequence) -> "Tensor3":
        a, b, c = dims
        if len(entries) != a * b * c:
            raise DimensionMismatchError(f"expected {a * b * c} entries for dims {tuple(dims)}, got {len(entries)}")
        return cls(field, field.array(list(entries)).reshape(a, b, c))

    @classmethod
    def rank_one(cls, field: FieldDescriptor, u, v, w) -> "Tensor3":
        u, v, w = field.array(u), field.array(v), field.array(w)
        return cls(field, field.normalize(np.multiply.outer(np.multiply.outer(u, v), w)))

    # -- views -----------------------------------------------------------

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(self.data.shape)

    @property
    def entries(self) -> list:
        return self.data.reshape(-1).tolist()

    def is_zero(self) -> bool:
        return not np.any(self.data)

    def flattening(self, axis) -> np.ndarray:
        """The n_axis × (product of the other two) flattening."""
        axis = Axis.parse(axis)
        moved = np.moveaxis(self.data, axis.index, 0)
        return moved.reshape(moved.shape[0], int(np.prod(moved.shape[1:])))

    def other_dims(self, axis) -> Tuple[int, int]:
        axis = Axis.parse(axis)
        return tuple(n for i, n in enumerate(self.dims) if i != axis.index)

    def slices(self, axis=Axis.A) -> List[np.ndarray]:
        axis = Axis.parse(axis)
        return [np.take(self.data, i, axis=axis.index) for i in range(self.dims[axis.index])]

    def contract(self, axis, alpha) -> np.ndarray:
        """The slice p(α) for a dual vector α on the given axis."""
        axis = Axis.parse(axis)
        alpha = self.field.array(alpha)
        if alpha.shape != (self.dims[axis.index],):
            raise DimensionMismatchError(f"functional of length {alpha.shape} on axis of size {self.dims[axis.index]}")
        flat = self.field.dot(alpha.reshape(1, -1), self.flattening(axis))
        return flat.reshape(self.other_dims(axis))

    # -- arithmetic ------------------------------------------------------

    def _check(self, other: "Tensor3") -> None:
        self.field.require_same(other.field)
        if self.dims != other.dims:
            raise DimensionMismatchError(f"dims {self.dims} and {other.dims} differ")

    def __add__(self, other: "Tensor3") -> "Tensor3":
        self._check(other)
        return Tensor3(self.field, self.field.add_arrays(self.data, other.data))

    def __sub__(self, other: "Tensor3") -> "Tensor3":
        self._check(other)
        return Tensor3(self.field, self.field.sub_arrays(self.data, other.data))

    def scale(self, value) -> "Tensor3":
        return Tensor3(self.field, self.field.scale(self.data, self.field.coerce(value)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor3):
            return NotImplemented
        return self.field == other.field and self.dims == other.dims and np.array_equal(self.data, other.data)

    def __hash__(self) -> int:
        return hash((self.field, self.dims, str(self.data.reshape(-1).tolist())))

    def key(self) -> Tuple:
        """Hashable identity used by memo tables."""
        return (self.field.spec, self.dims, tuple(self.data.reshape(-1).tolist()))

    def __repr__(self) -> str:
        return f"Tensor3({self.field}, dims={self.dims})"


@dataclass(frozen=True, eq=False)
class MatrixSpace:
    """A linear space of rows×cols matrices held by its RREF basis."""
    field: FieldDescriptor
    shape: Tuple[int, int]
    basis: np.ndarray

    def __post_init__(self):
        rows, cols = self.shape
        if self.basis.ndim != 2 or self.basis.shape[1] != rows * cols:
            raise DimensionMismatchError(f"basis vectors must have length {rows * cols}")
        if self.basis.flags.writeable:
            reduced = row_reduce(self.field, self.basis)[0] if self.basis.shape[0] else self.field.zeros((0, rows * cols))
            object.__setattr__(self, "basis", _frozen(reduced))

    @classmethod
    def span(cls, field: FieldDescriptor, shape: Sequence[int], matrices: Iterable) -> "MatrixSpace":
        rows, cols = shape
        vectors = []
        for m in matrices:
            m = np.asarray(m.data if isinstance(m, Matrix) else m)
            if m.shape != (rows, cols):
                raise DimensionMismatchError(f"matrix of shape {m.shape} in a space of {rows}x{cols} matrices")
            vectors.append(field.normalize(m).reshape(-1))
        return cls(field, (rows, cols), span_basis(field, vectors, rows * cols).copy())

    @classmethod
    def zero(cls, field: FieldDescriptor, shape: Sequence[int]) -> "MatrixSpace":
        rows, cols = shape
        return cls(field, (rows, cols), field.zeros((0, rows * cols)))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    def matrices(self) -> List[np.ndarray]:
        return [row.reshape(self.shape) for row in self.basis]

    def contains(self, matrix) -> bool:
        matrix = np.asarray(matrix.data if isinstance(matrix, Matrix) else matrix)
        if matrix.shape != self.shape:
            raise DimensionMismatchError(f"matrix of shape {matrix.shape} tested against {self.shape} space")
        return in_span(self.field, self.basis, self.field.normalize(matrix).reshape(-1))

    def _check(self, other: "MatrixSpace") -> None:
        self.field.require_same(other.field)
        if self.shape != other.shape:
            raise DimensionMismatchError(f"spaces of {self.shape} and {other.shape} matrices")

    def __add__(self, other: "MatrixSpace") -> "MatrixSpace":
        self._check(other)
        return MatrixSpace.span(self.field, self.shape, self.matrices() + other.matrices())

    def intersect(self, other: "MatrixSpace") -> "MatrixSpace":
        self._check(other)
        meet = subspace_intersect(self.field, list(self.basis), list(other.basis), self.rows * self.cols)
        return MatrixSpace(self.field, self.shape, meet.copy())

    def is_subspace_of(self, other: "MatrixSpace") -> bool:
        self._check(other)
        return all(other.contains(m) for m in self.matrices())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixSpace):
            return NotImplemented
        return self.field == other.field and self.shape == other.shape and np.array_equal(self.basis, other.basis)

    def __hash__(self) -> int:
        return hash((self.field, self.shape, str(self.basis.tolist())))

    def embed(self, shape: Sequence[int], row_offset: int, col_offset: int) -> "MatrixSpace":
        """Place every member as a block of a larger matrix."""
        placed = []
        for m in self.matrices():
            big = self.field.zeros(tuple(shape))
            big[row_offset:row_offset + self.rows, col_offset:col_offset + self.cols] = m
            placed.append(big)
        return MatrixSpace.span(self.field, shape, placed)

    def __repr__(self) -> str:
        return f"MatrixSpace({self.field}, shape={self.shape}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class HookShape:
    """Certificate that a space sits in G⊗C + B⊗H with dim G = e, dim H = f."""
    e: int
    f: int
    row_subspace: np.ndarray
    col_subspace: np.ndarray

    def __post_init__(self):
        if self.row_subspace.shape[0] != self.e or self.col_subspace.shape[0] != self.f:
            raise DimensionMismatchError("hook subspace bases must have e and f rows")

    @classmethod
    def coordinate(cls, field: FieldDescriptor, shape: Sequence[int], rows: Sequence[int], cols: Sequence[int]) -> "HookShape":
        """The hook spanned by coordinate rows and coordinate columns."""
        n_rows, n_cols = shape
        eye_r, eye_c = field.identity(n_rows), field.identity(n_cols)
        g = eye_r[list(rows)] if rows else field.zeros((0, n_rows))
        h = eye_c[list(cols)] if cols else field.zeros((0, n_cols))
        return cls(len(rows), len(cols), _frozen(g), _frozen(h))


@dataclass(frozen=True)
class ConciseRecord:
    """Change of basis used by concise_reduce on one axis.

    embedding (n × r) maps the concise coordinates back; projection (r × n)
    is the surjection onto them, with projection @ embedding = I.
    """
    axis: Axis
    embedding: np.ndarray
    projection: np.ndarray

    @property
    def is_identity(self) -> bool:
        n, r = self.embedding.shape
        return n == r and np.array_equal(self.embedding, np.eye(n, dtype=self.embedding.dtype))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def transpose(p: Tensor3, perm: Sequence[int]) -> Tensor3:
    """Reorder axes: the new axis i is the old axis perm[i]."""
    return Tensor3(p.field, np.transpose(p.data, tuple(perm)).copy())


def change_basis(p: Tensor3, axis, g) -> Tensor3:
    """Apply the linear map g (n' × n) to one factor of p."""
    axis = Axis.parse(axis)
    g = p.field.array(g)
    n = p.dims[axis.index]
    if g.ndim != 2 or g.shape[1] != n:
        raise DimensionMismatchError(f"map of shape {g.shape} on an axis of size {n}")
    image = p.field.dot(g, p.flattening(axis))
    moved_shape = (g.shape[0],) + p.other_dims(axis)
    return Tensor3(p.field, np.moveaxis(image.reshape(moved_shape), 0, axis.index).copy())


def slice_space(p: Tensor3, axis=Axis.A) -> MatrixSpace:
    """The image p(X*) of the chosen dual space, as a matrix space."""
    axis = Axis.parse(axis)
    shape = p.other_dims(axis)
    basis = row_reduce(p.field, p.flattening(axis))[0]
    return MatrixSpace(p.field, shape, basis.copy())


def flattening_ranks(p: Tensor3) -> Tuple[int, int, int]:
    return tuple(array_rank(p.field, p.flattening(axis)) for axis in Axis)


def concise_reduce(p: Tensor3) -> Tuple[Tensor3, Tuple[ConciseRecord, ConciseRecord, ConciseRecord]]:
    """Restrict p to the smallest subspaces of A, B and C that contain it."""
    records = []
    current = p
    for axis in Axis:
        flat = current.flattening(axis)
        n = flat.shape[0]
        columns, pivots = row_reduce(p.field, flat.T)
        embedding = _frozen(columns.T.copy())
        projection = _frozen(p.field.identity(n)[list(pivots)].reshape(len(pivots), n))
        records.append(ConciseRecord(axis, embedding, projection))
        current = change_basis(current, axis, projection)
    logger.debug("concise_reduce %s -> %s", p.dims, current.dims)
    return current, tuple(records)


def expand_concise(p: Tensor3, records: Sequence[ConciseRecord]) -> Tensor3:
    """Inverse of concise_reduce: push p back along the embeddings."""
    out = p
    for record in records:
        out = change_basis(out, record.axis, record.embedding)
    return out


def direct_sum(p1: Tensor3, p2: Tensor3) -> Tensor3:
    """Block-diagonal sum p1 ⊕ p2 with dims added componentwise."""
    p1.field.require_same(p2.field)
    (a1, b1, c1), (a2, b2, c2) = p1.dims, p2.dims
    data = p1.field.zeros((a1 + a2, b1 + b2, c1 + c2))
    data[:a1, :b1, :c1] = p1.data
    data[a1:, b1:, c1:] = p2.data
    return Tensor3(p1.field, data)


def matmul_tensor(i: int, j: int, k: int, field: FieldDescriptor) -> Tensor3:
    """Structure tensor of (i×j)·(j×k) multiplication: Σ a_{x,y} ⊗ b_{y,z} ⊗ c_{x,z}."""
    if min(i, j, k) < 1:
        raise DimensionMismatchError("matrix multiplication sizes must be positive")
    if max(i * j, j * k, i * k) > MAX_AXIS_DIM:
        raise DimensionMismatchError(f"mu_{i},{j},{k} exceeds the axis cap of {MAX_AXIS_DIM}")
    data = field.zeros((i * j, j * k, i * k))
    for x in range(i):
        for y in range(j):
            for z in range(k):
                data[x * j + y, y * k + z, x * k + z] = field.one()
    return Tensor3(field, data)


def tensor_from_space(space: MatrixSpace) -> Tensor3:
    """The tensor Σ e_x ⊗ w_x whose A-slices are the basis of the space."""
    rows, cols = space.shape
    data = space.field.zeros((space.dim, rows, cols))
    for x, m in enumerate(space.matrices()):
        data[x] = m
    return Tensor3(space.field, data)


def _hook_generators(field: FieldDescriptor, shape: Tuple[int, int], hook: HookShape) -> np.ndarray:
    rows, cols = shape
    eye_r, eye_c = field.identity(rows), field.identity(cols)
    gens = [field.outer(g, eye_c[k]).reshape(-1) for g in hook.row_subspace for k in range(cols)]
    gens += [field.outer(eye_r[j], h).reshape(-1) for j in range(rows) for h in hook.col_subspace]
    if not gens:
        return field.zeros((rows * cols, 0))
    return np.stack(gens, axis=1)


def is_hook_shaped(space: MatrixSpace, hook: HookShape) -> bool:
    """Whether every basis matrix lies in G⊗C + B⊗H (one exact solve each)."""
    if hook.row_subspace.shape[1] != space.rows or hook.col_subspace.shape[1] != space.cols:
        raise DimensionMismatchError(f"hook subspaces do not live in the ambient {space.shape}")
    field = space.field
    gens = _hook_generators(field, space.shape, hook)
    for vec in space.basis:
        if gens.shape[1] == 0:
            if np.any(vec):
                return False
            continue
        if solve_array(field, gens, vec.reshape(-1, 1)) is None:
            return False
    return True


def find_hook_shape(space: MatrixSpace, e: int, f: int) -> Optional[HookShape]:
    """First (e, f) hook found by enumerating annihilators of the row subspace.

    For a candidate row subspace G (given by Y with kernel G) a hook exists
    iff the rows of Y·M over all basis matrices M span at most f dimensions;
    H is that span completed by coordinate vectors.
    """
    field = space.field
    field.require_prime("hook search")
    rows, cols = space.shape
    if max(rows, cols) > MAX_HOOK_AMBIENT or max(e, f) > MAX_HOOK_WIDTH:
        raise PreconditionError(
            f"hook search is limited to ambient <= {MAX_HOOK_AMBIENT} and e, f <= {MAX_HOOK_WIDTH}"
        )
    if e > rows or f > cols:
        raise PreconditionError(f"a ({e},{f}) hook does not fit in {rows}x{cols} matrices")
    members = space.matrices()
    for quotient in subspaces(field, rows, rows - e):
        images = [row for m in members for row in field.dot(quotient, m)] if quotient.shape[0] else []
        image_basis = span_basis(field, images, cols)
        if image_basis.shape[0] > f:
            continue
        col_basis = _complete_basis(field, image_basis, f, cols)
        row_basis = annihilator(field, quotient, rows)
        hook = HookShape(e, f, _frozen(row_basis.copy()), _frozen(col_basis))
        logger.debug("found (%d,%d) hook in %s", e, f, space)
        return hook
    return None


def _complete_basis(field: FieldDescriptor, basis: np.ndarray, target: int, length: int) -> np.ndarray:
    """Extend basis by coordinate vectors, in order, up to target dimensions."""
    current = basis
    eye = field.identity(length)
    for k in range(length):
        if current.shape[0] >= target:
            break
        if not in_span(field, current, eye[k]):
            current = np.concatenate([current, eye[k:k + 1]])
    return row_reduce(field, current)[0].copy() if current.shape[0] else field.zeros((0, length))
