import numpy as np
import pytest

from tensorrank.bounds import (
    SubstitutionConfig,
    _pencil_parameters,
    affine_hyperplane,
    find_rank_one_slice,
    flattening_lower_bound,
    greedy_peel_trace,
    peel,
    substitution_lower_bound,
)
from tensorrank.decomp import rank_oracle
from tensorrank.errors import PreconditionError, UnsupportedFieldError
from tensorrank.exactfield import array_rank
from tensorrank.tensor3 import Axis, Tensor3, matmul_tensor


def _pencil(field, first, second):
    return Tensor3(field, np.stack([field.array(first), field.array(second)]))


def test_flattening_lower_bound(gf2, make_diagonal):
    assert flattening_lower_bound(matmul_tensor(2, 2, 2, gf2)) == 4
    assert flattening_lower_bound(make_diagonal(gf2, 3)) == 3
    assert flattening_lower_bound(Tensor3.zeros(gf2, (2, 2, 2))) == 0


def test_matmul_has_no_rank_one_slice(gf2):
    mu = matmul_tensor(2, 2, 2, gf2)
    for axis in Axis:
        assert find_rank_one_slice(mu, axis) is None
    trace, residual = greedy_peel_trace(mu)
    assert trace == []
    assert residual == mu


def test_peel_rejects_bad_inputs(gf3, make_w):
    p = make_w(gf3)
    with pytest.raises(PreconditionError):
        peel(p, Axis.A, [0, 1], a=[1, 0])
    with pytest.raises(PreconditionError):
        peel(Tensor3.zeros(gf3, (2, 2, 2)), Axis.A, [1, 0])


def test_every_peel_reconstructs(gf3, make_w):
    p = make_w(gf3)
    found = find_rank_one_slice(p, Axis.A)
    assert found is not None
    assert found.slice.tolist() == [[1, 0], [0, 0]]
    points = list(affine_hyperplane(gf3, found.alpha))
    assert len(points) == 3
    for a in points:
        cert = peel(p, Axis.A, found.alpha, a)
        assert cert.rank_one_slice
        assert cert.residual.dims == (1, 2, 2)
        assert cert.reconstruct() == p


def test_rank_one_peel_stays_within_one_of_the_rank(gf3, oracle_config):
    # slices I and E₀₀: rank 2, and a₀ = 1 kills the first diagonal entry
    p = _pencil(gf3, [[1, 0], [0, 1]], [[1, 0], [0, 0]])
    r = rank_oracle(p, oracle_config).rank
    assert r == 2
    found = find_rank_one_slice(p, Axis.A)
    ranks = []
    for a in affine_hyperplane(gf3, found.alpha):
        residual = peel(p, Axis.A, found.alpha, a).residual
        ranks.append(rank_oracle(residual, oracle_config).rank)
    assert all(r - 1 <= value <= r for value in ranks)
    assert min(ranks) == r - 1
    assert max(ranks) == r


def test_substitution_matches_rank_of_w(gf2, make_w):
    result = substitution_lower_bound(make_w(gf2))
    assert result.bound == 3
    assert result.peels == 1
    assert result.final_flattening == 2
    assert not result.exhausted
    assert result.trace[0].describe()["slice_rank"] == 1


def test_substitution_on_diagonal_is_flattening_bound(gf2, make_diagonal):
    result = substitution_lower_bound(make_diagonal(gf2, 3))
    assert result.bound == 3
    assert result.peels == 0


def test_substitution_budget_falls_back_to_flattenings(gf2, make_w):
    result = substitution_lower_bound(make_w(gf2), SubstitutionConfig(budget=0))
    assert result.exhausted
    assert result.bound == 2


def test_substitution_needs_prime_field(rationals, make_w):
    with pytest.raises(UnsupportedFieldError):
        substitution_lower_bound(make_w(rationals))


def test_greedy_trace_on_diagonal(gf2, make_diagonal):
    p = make_diagonal(gf2, 3)
    trace, residual = greedy_peel_trace(p, Axis.A)
    assert len(trace) == 3
    assert residual.is_zero()
    current = p
    for cert in trace:
        assert cert.reconstruct() == current
        current = cert.residual


def test_rational_pencil_slice_is_found(rationals):
    p = _pencil(rationals, [[1, 0], [0, 1]], [[1, 1], [0, 1]])
    found = find_rank_one_slice(p, Axis.A)
    assert found is not None
    assert found.alpha.tolist() == [1, -1]
    cert = peel(p, Axis.A, found.alpha)
    assert cert.reconstruct() == p


def test_constant_pencil_offers_a_nonvanishing_member(rationals):
    s = rationals.array([[1, 0], [0, 0]])
    t = rationals.array([[-1, 0], [0, 0]])
    params = _pencil_parameters(s, t)
    assert 0 in params
    members = [rationals.add_arrays(s, rationals.scale(t, lam)) for lam in params if lam != 0]
    assert any(array_rank(rationals, m) == 1 for m in members)
