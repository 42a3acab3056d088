import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorrank.decomp import (
    STRASSEN_TABLE,
    Decomposition,
    OracleConfig,
    OracleStatus,
    RankOneTerm,
    ambient_excess_bound,
    certifies,
    concat_decompositions,
    decomposition_from_matrices,
    evaluate,
    max_rank_census,
    rank_factorization,
    rank_one_factors,
    rank_oracle,
    slicewise_decomposition,
    strassen_222,
    upper_bound,
)
from tensorrank.errors import CensusTooLargeError, PreconditionError
from tensorrank.exactfield import FieldDescriptor, array_rank
from tensorrank.seed import LcgStream, random_tensor
from tensorrank.tensor3 import Axis, Tensor3, change_basis, direct_sum, matmul_tensor


def _w_pair(field):
    """Slices I₂ and [[0,1],[0,0]]."""
    data = field.zeros((2, 2, 2))
    data[0] = field.identity(2)
    data[1, 0, 1] = field.one()
    return Tensor3(field, data)


def test_rank_one_term_rejects_zero_factor(gf2):
    with pytest.raises(PreconditionError):
        RankOneTerm.of(gf2, [0, 0], [1], [1])


def test_evaluate_empty_and_single_term(gf3):
    assert evaluate(Decomposition(gf3, (2, 2, 2))).is_zero()
    term = RankOneTerm.of(gf3, [1, 2], [0, 1], [2, 2])
    d = Decomposition(gf3, (2, 2, 2), (term,))
    assert evaluate(d) == term.tensor()
    assert certifies(d, term.tensor()) == [1]


@pytest.mark.parametrize("field_name", ["q", "gf2", "gf3", "gf5"])
def test_strassen_certifies_mu222(field_name):
    field = FieldDescriptor.parse(field_name)
    d = strassen_222(field)
    assert len(d) == 7
    mu = matmul_tensor(2, 2, 2, field)
    assert evaluate(d) == mu
    assert certifies(d, mu) is not None


@pytest.mark.parametrize("field_name", ["q", "gf2"])
def test_strassen_without_a_term_does_not_certify(field_name):
    field = FieldDescriptor.parse(field_name)
    d = strassen_222(field)
    assert certifies(d.without(3), matmul_tensor(2, 2, 2, field)) is None


def test_mutated_strassen_table_fails_over_rationals(rationals):
    table = list(STRASSEN_TABLE)
    u, v, w = table[0]
    table[0] = (u, v, (w[0], w[1], w[2], -w[3]))
    d = strassen_222(rationals, table)
    assert evaluate(d) != matmul_tensor(2, 2, 2, rationals)


@given(
    left=st.lists(st.integers(min_value=0, max_value=2), min_size=3, max_size=3),
    right=st.lists(st.integers(min_value=0, max_value=2), min_size=3, max_size=3),
)
@settings(max_examples=40, deadline=None)
def test_evaluate_is_linear_in_coefficients(left, right):
    gf3 = FieldDescriptor.gf(3)
    terms = (
        RankOneTerm.of(gf3, [1, 0], [1, 1], [0, 1]),
        RankOneTerm.of(gf3, [1, 2], [0, 1], [1, 1]),
        RankOneTerm.of(gf3, [0, 1], [2, 1], [1, 0]),
    )
    d = Decomposition(gf3, (2, 2, 2), terms)
    both = [(a + b) % 3 for a, b in zip(left, right)]
    assert evaluate(d, both) == evaluate(d, left) + evaluate(d, right)


def test_rank_factorizations(gf5):
    m = gf5.array([[1, 2, 0], [2, 4, 0], [0, 1, 1]])
    pieces = rank_factorization(gf5, m)
    assert len(pieces) == array_rank(gf5, m) == 2
    total = gf5.zeros((3, 3))
    for x, y in pieces:
        total = gf5.add_arrays(total, gf5.outer(x, y))
    assert (total == m).all()
    x, y = rank_one_factors(gf5, gf5.outer(gf5.array([0, 3, 1]), gf5.array([2, 0, 4])))
    assert (gf5.outer(x, y) == gf5.outer(gf5.array([0, 3, 1]), gf5.array([2, 0, 4]))).all()
    with pytest.raises(PreconditionError):
        rank_one_factors(gf5, gf5.identity(2))


def test_decomposition_from_matrices(gf2, make_diagonal):
    p = make_diagonal(gf2, 2)
    e = gf2.identity(2)
    d = decomposition_from_matrices(p, [gf2.outer(e[0], e[0]), gf2.outer(e[1], e[1])], Axis.A)
    assert d is not None and len(d) == 2
    assert certifies(d, p) is not None
    assert decomposition_from_matrices(p, [gf2.outer(e[0], e[0])], Axis.A) is None


def test_slicewise_and_concatenation(gf3):
    p = _w_pair(gf3)
    for axis in Axis:
        assert certifies(slicewise_decomposition(p, axis), p) is not None
    d = slicewise_decomposition(p)
    both = concat_decompositions(d, d)
    assert certifies(both, direct_sum(p, p)) is not None
    assert len(both) == 2 * len(d)


def test_ambient_excess_bound(gf2, make_diagonal):
    p = make_diagonal(gf2, 3)
    assert ambient_excess_bound(p, slicewise_decomposition(p)) == 3
    single = Tensor3.rank_one(gf2, [1, 0], [1], [1])
    padded = Decomposition(gf2, (2, 1, 1), (
        RankOneTerm.of(gf2, [1, 0], [1], [1]),
        RankOneTerm.of(gf2, [0, 1], [1], [1]),
        RankOneTerm.of(gf2, [1, 1], [1], [1]),
    ))
    assert certifies(padded, single) is not None
    assert ambient_excess_bound(single, padded) == 2


def test_upper_bound_prefers_strassen(rationals):
    mu = matmul_tensor(2, 2, 2, rationals)
    d, how = upper_bound(mu)
    assert len(d) == 7 and how == "strassen"
    d2, how2 = upper_bound(direct_sum(mu, mu), (4, 4, 4))
    assert len(d2) == 14
    assert how2.startswith("blocks")
    assert certifies(d2, direct_sum(mu, mu)) is not None


def test_oracle_small_examples(gf2, make_diagonal, oracle_config):
    assert rank_oracle(Tensor3.rank_one(gf2, [1, 1], [1, 0], [0, 1]), oracle_config).rank == 1
    assert rank_oracle(Tensor3.zeros(gf2, (2, 2, 2)), oracle_config).rank == 0
    for n in (1, 2, 3):
        assert rank_oracle(make_diagonal(gf2, n), oracle_config).rank == n


def test_oracle_finds_rank_three(gf2, oracle_config):
    p = _w_pair(gf2)
    result = rank_oracle(p, oracle_config)
    assert result.status is OracleStatus.EXACT
    assert result.rank == 3
    assert len(result.decomposition) == 3
    assert certifies(result.decomposition, p) is not None


def test_oracle_w_state_over_gf3(gf3, make_w, oracle_config):
    p = make_w(gf3)
    result = rank_oracle(p, oracle_config)
    assert result.rank == 3
    assert certifies(result.decomposition, p) is not None


def test_oracle_budget_and_max_rank(gf2):
    p = _w_pair(gf2)
    starved = rank_oracle(p, OracleConfig(budget=0))
    assert starved.status is OracleStatus.BUDGET_EXCEEDED
    assert (starved.lower, starved.upper) == (2, 3)
    capped = rank_oracle(p, OracleConfig(max_rank=1))
    assert capped.status is OracleStatus.LOWER_BOUND_ONLY
    assert capped.lower == 2


def test_oracle_over_rationals_reports_bounds(rationals):
    result = rank_oracle(matmul_tensor(2, 2, 2, rationals))
    assert result.status is OracleStatus.LOWER_BOUND_ONLY
    assert (result.lower, result.upper) == (4, 7)
    assert result.rank is None


def test_oracle_rejects_oversize_tensors(gf2):
    with pytest.raises(PreconditionError):
        rank_oracle(Tensor3.zeros(gf2, (4, 4, 5)))


def test_census_tiny_and_2x2x2(gf2, oracle_config):
    tiny = max_rank_census((1, 1, 1), gf2, oracle_config)
    assert tiny.histogram == {0: 1, 1: 1}
    census = max_rank_census((2, 2, 2), gf2, oracle_config)
    assert census.total == 256
    assert sum(census.histogram.values()) == 256
    assert census.histogram[1] == 27
    assert census.max_rank == 3
    assert census.budget_exceeded == 0


def test_census_refuses_large_shapes(gf2):
    with pytest.raises(CensusTooLargeError):
        max_rank_census((3, 3, 3), gf2)


def _random_invertible(field, n, stream):
    while True:
        g = field.array([[stream.element(field) for _ in range(n)] for _ in range(n)])
        if array_rank(field, g) == n:
            return g


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_rank_is_invariant_under_basis_change(gf2, oracle_config, seed):
    stream = LcgStream(seed)
    p = random_tensor(gf2, (2, 2, 3), stream)
    expected = rank_oracle(p, oracle_config)
    assert expected.is_exact
    for axis in Axis:
        g = _random_invertible(gf2, p.dims[axis.index], stream)
        moved = change_basis(p, axis, g)
        assert moved.dims == p.dims
        assert rank_oracle(moved, oracle_config).rank == expected.rank
