import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorrank.decomp import rank_oracle
from tensorrank.errors import DimensionMismatchError
from tensorrank.exactfield import FieldDescriptor
from tensorrank.tensor3 import (
    Axis,
    HookShape,
    MatrixSpace,
    Tensor3,
    change_basis,
    concise_reduce,
    direct_sum,
    expand_concise,
    find_hook_shape,
    flattening_ranks,
    is_hook_shaped,
    matmul_tensor,
    slice_space,
    tensor_from_space,
    transpose,
)


def _hook_space(field, rows, cols, e, f, entries):
    """Span of the coordinate matrices allowed by an (e, f) hook, scaled by entries."""
    mats = []
    k = 0
    for i in range(rows):
        for j in range(cols):
            if i < e or j < f:
                m = field.zeros((rows, cols))
                m[i, j] = entries[k % len(entries)]
                k += 1
                mats.append(m)
    return MatrixSpace.span(field, (rows, cols), mats)


def test_axis_parse():
    assert Axis.parse("b") is Axis.B
    assert Axis.parse(2) is Axis.C
    assert Axis.C.index == 2


def test_tensor_is_read_only(gf2):
    p = Tensor3.zeros(gf2, (2, 2, 2))
    with pytest.raises(ValueError):
        p.data[0, 0, 0] = 1


def test_from_entries_checks_length(gf2):
    with pytest.raises(DimensionMismatchError):
        Tensor3.from_entries(gf2, (2, 2, 2), [0] * 7)


def test_flattening_ranks_small_tensors(gf2, rationals):
    assert flattening_ranks(matmul_tensor(2, 2, 2, gf2)) == (4, 4, 4)
    assert flattening_ranks(matmul_tensor(2, 2, 3, rationals)) == (4, 6, 6)
    assert flattening_ranks(Tensor3.rank_one(gf2, [1, 1], [0, 1], [1, 0, 1])) == (1, 1, 1)
    assert flattening_ranks(Tensor3.zeros(gf2, (2, 3, 2))) == (0, 0, 0)


def test_matmul_small_cases(gf2):
    mu111 = matmul_tensor(1, 1, 1, gf2)
    assert mu111.dims == (1, 1, 1) and mu111.entries == [1]
    mu222 = matmul_tensor(2, 2, 2, gf2)
    assert sum(mu222.entries) == 8
    # a11⊗b11⊗c11 and a12⊗b21⊗c11
    assert mu222.data[0, 0, 0] == 1
    assert mu222.data[1, 2, 0] == 1


def test_slice_space_small_tensors(gf2):
    assert slice_space(Tensor3.zeros(gf2, (2, 2, 2))).dim == 0
    space = slice_space(matmul_tensor(2, 2, 2, gf2), Axis.A)
    assert space.dim == 4 and space.shape == (4, 4)
    p = Tensor3.rank_one(gf2, [1, 1], [1, 0, 1], [0, 1])
    rank_one = slice_space(p)
    assert rank_one.dim == 1
    assert rank_one.contains(gf2.outer(gf2.array([1, 0, 1]), gf2.array([0, 1])))


def test_direct_sum_shapes_and_rank(gf2, oracle_config):
    mu = matmul_tensor(2, 2, 2, gf2)
    assert direct_sum(mu, mu).dims == (8, 8, 8)
    padded = direct_sum(mu, Tensor3.zeros(gf2, (1, 1, 1)))
    assert padded.dims == (5, 5, 5)
    one = Tensor3.rank_one(gf2, [1], [1], [1])
    assert rank_oracle(direct_sum(one, one), oracle_config).rank == 2


def test_concise_input_is_unchanged(gf2):
    mu = matmul_tensor(2, 2, 2, gf2)
    reduced, records = concise_reduce(mu)
    assert reduced == mu
    assert all(record.is_identity for record in records)


def test_concise_removes_padding(gf2):
    p = Tensor3.rank_one(gf2, [1, 0, 0], [0, 1, 0, 0], [1, 1])
    reduced, records = concise_reduce(p)
    assert reduced.dims == flattening_ranks(p) == (1, 1, 1)
    assert expand_concise(reduced, records) == p


def test_concise_keeps_rank(gf2, oracle_config):
    eye = gf2.identity(3)
    cyc = gf2.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    p = Tensor3(gf2, np.stack([eye, cyc, gf2.add_arrays(eye, cyc)]))
    reduced, records = concise_reduce(p)
    assert reduced.dims == (2, 3, 3)
    assert expand_concise(reduced, records) == p
    assert rank_oracle(reduced, oracle_config).rank == rank_oracle(p, oracle_config).rank


@given(entries=st.lists(st.integers(min_value=0, max_value=2), min_size=12, max_size=12))
@settings(max_examples=30, deadline=None)
def test_transpose_permutes_flattening_ranks(entries):
    gf3 = FieldDescriptor.gf(3)
    p = Tensor3.from_entries(gf3, (2, 3, 2), entries)
    ranks = flattening_ranks(p)
    q = transpose(p, (2, 0, 1))
    assert q.dims == (2, 2, 3)
    assert flattening_ranks(q) == (ranks[2], ranks[0], ranks[1])


def test_change_basis_by_invertible_map_keeps_flattenings(gf3):
    p = matmul_tensor(1, 2, 2, gf3)
    g = gf3.array([[1, 1], [0, 1]])
    assert flattening_ranks(change_basis(p, Axis.A, g)) == flattening_ranks(p)
    projected = change_basis(p, Axis.A, gf3.array([[1, 0]]))
    assert projected.dims == (1, 4, 2)


def test_tensor_from_space_recovers_space(gf5):
    space = MatrixSpace.span(gf5, (2, 3), [gf5.array([[1, 0, 2], [0, 1, 1]]), gf5.array([[0, 0, 1], [3, 0, 0]])])
    p = tensor_from_space(space)
    assert p.dims == (2, 2, 3)
    assert slice_space(p) == space


def test_matrix_space_operations(gf2):
    eye = gf2.identity(2)
    swap = gf2.array([[0, 1], [1, 0]])
    first = MatrixSpace.span(gf2, (2, 2), [eye])
    second = MatrixSpace.span(gf2, (2, 2), [swap])
    total = first + second
    assert total.dim == 2
    assert total.intersect(first) == first
    assert first.is_subspace_of(total)
    assert not total.is_subspace_of(first)
    big = first.embed((3, 3), 1, 1)
    assert big.contains(np.pad(eye, ((1, 0), (1, 0))))


def test_sparse_hook_pattern_is_hook_shaped(gf5):
    space = _hook_space(gf5, 4, 4, 1, 2, [1, 2, 3, 4])
    hook = HookShape.coordinate(gf5, (4, 4), [0], [0, 1])
    assert is_hook_shaped(space, hook)
    found = find_hook_shape(space, 1, 2)
    assert found is not None and is_hook_shaped(space, found)


def test_full_space_is_not_a_zero_hook(gf2):
    full = _hook_space(gf2, 2, 2, 2, 2, [1])
    empty = HookShape.coordinate(gf2, (2, 2), [], [])
    assert not is_hook_shaped(full, empty)
    assert is_hook_shaped(MatrixSpace.zero(gf2, (2, 2)), empty)
    assert find_hook_shape(full, 0, 0) is None


def test_column_hook_witness(gf2):
    space = _hook_space(gf2, 3, 3, 0, 2, [1])
    assert is_hook_shaped(space, HookShape.coordinate(gf2, (3, 3), [], [0, 1]))
    assert not is_hook_shaped(space, HookShape.coordinate(gf2, (3, 3), [], [0]))
    assert find_hook_shape(space, 0, 1) is None


def test_hook_is_found_after_change_of_basis(gf2):
    space = _hook_space(gf2, 4, 4, 1, 2, [1])
    g = gf2.array([[1, 1, 0, 0], [0, 1, 0, 0], [0, 1, 1, 0], [1, 0, 0, 1]])
    h = gf2.array([[1, 0, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 1, 0, 1]])
    moved = MatrixSpace.span(gf2, (4, 4), [gf2.dot(gf2.dot(g, m), h) for m in space.matrices()])
    hook = find_hook_shape(moved, 1, 2)
    assert hook is not None
    assert is_hook_shaped(moved, hook)
