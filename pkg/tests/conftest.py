"""
Pytest configuration and fixtures
"""

import pytest

from tensorrank.decomp import OracleConfig
from tensorrank.exactfield import FieldDescriptor
from tensorrank.tensor3 import Tensor3


@pytest.fixture
def gf2():
    return FieldDescriptor.gf(2)


@pytest.fixture
def gf3():
    return FieldDescriptor.gf(3)


@pytest.fixture
def gf5():
    return FieldDescriptor.gf(5)


@pytest.fixture
def rationals():
    return FieldDescriptor.rationals()


@pytest.fixture
def oracle_config():
    """Budget large enough for every fixture below to finish."""
    return OracleConfig(budget=5_000_000)


def diagonal_tensor(field, n):
    data = field.zeros((n, n, n))
    for i in range(n):
        data[i, i, i] = field.one()
    return Tensor3(field, data)


def w_state(field):
    """e0⊗e0⊗e1 + e0⊗e1⊗e0 + e1⊗e0⊗e0, rank 3 over every field."""
    data = field.zeros((2, 2, 2))
    data[0, 0, 1] = data[0, 1, 0] = data[1, 0, 0] = field.one()
    return Tensor3(field, data)


@pytest.fixture
def make_diagonal():
    return diagonal_tensor


@pytest.fixture
def make_w():
    return w_state
