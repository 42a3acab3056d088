"""
Deterministic generators. Every random tensor in the workbench comes from an
LcgStream so runs are reproducible across platforms.
"""

import random
from typing import Optional, Sequence, Tuple

import numpy as np

from tensorrank.exactfield import FieldDescriptor
from tensorrank.tensor3 import HookShape, Tensor3

LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
LCG_MASK = (1 << 64) - 1
RATIONAL_SPREAD = 5


def seed_everything(seed: int, numpy_seed: Optional[int] = None) -> None:
    """Seed Python and NumPy RNGs."""
    random.seed(seed)
    np.random.seed((numpy_seed if numpy_seed is not None else seed) & 0xFFFFFFFF)


class LcgStream:
    """64-bit linear congruential stream; each draw is (state >> 33) mod n."""

    def __init__(self, seed: int):
        self.state = seed & LCG_MASK

    def next_raw(self) -> int:
        self.state = (LCG_MULTIPLIER * self.state + LCG_INCREMENT) & LCG_MASK
        return self.state >> 33

    def draw(self, n: int) -> int:
        return self.next_raw() % n

    def element(self, field: FieldDescriptor):
        if field.is_prime:
            return self.draw(field.modulus)
        return field.coerce(self.draw(RATIONAL_SPREAD) - RATIONAL_SPREAD // 2)

    def vector(self, field: FieldDescriptor, n: int) -> np.ndarray:
        return field.array([self.element(field) for _ in range(n)])

    def nonzero_vector(self, field: FieldDescriptor, n: int) -> np.ndarray:
        while True:
            vec = self.vector(field, n)
            if np.any(vec):
                return vec

    def choice(self, options: Sequence):
        return options[self.draw(len(options))]


def random_tensor(field: FieldDescriptor, dims: Sequence[int], stream: LcgStream) -> Tensor3:
    a, b, c = dims
    return Tensor3(field, stream.vector(field, a * b * c).reshape(a, b, c))


def random_hook_tensor(
    field: FieldDescriptor,
    dims: Sequence[int],
    e: int,
    f: int,
    stream: LcgStream,
) -> Tuple[Tensor3, HookShape]:
    """Random tensor whose A-slices live in the coordinate (e, f) hook on B⊗C."""
    a, b, c = dims
    data = stream.vector(field, a * b * c).reshape(a, b, c)
    data[:, e:, f:] = 0
    return Tensor3(field, data), HookShape.coordinate(field, (b, c), list(range(e)), list(range(f)))


def random_rank_one_slice_tensor(field: FieldDescriptor, dims: Sequence[int], stream: LcgStream) -> Tensor3:
    """Random tensor whose first A-slice is a nonzero rank-one matrix."""
    a, b, c = dims
    data = stream.vector(field, a * b * c).reshape(a, b, c)
    x = stream.nonzero_vector(field, b)
    y = stream.nonzero_vector(field, c)
    data[0] = field.outer(x, y)
    return Tensor3(field, data)


def random_dims(stream: LcgStream, caps: Sequence[int]) -> Tuple[int, int, int]:
    return tuple(1 + stream.draw(cap) for cap in caps)
