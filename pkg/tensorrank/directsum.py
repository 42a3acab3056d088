"""
Direct sums p = p′ ⊕ p″ and the structure of minimal decompositions of their
slice spaces W = W′ ⊕ W″ ⊂ B⊗C.

Blocks are coordinate blocks: B = B′ ⊕ B″ splits after the first b′
coordinates and C = C′ ⊕ C″ after the first c′, so every projection is a
coordinate deletion. Terms of a decomposition are read through their
B- and C-factors only; the A-factor is recovered by a solve when needed.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from tensorrank.bounds import PeelCertificate, peel
from tensorrank.decomp import (
    Decomposition,
    OracleConfig,
    OracleResult,
    OracleStatus,
    certifies,
    decomposition_from_matrices,
    rank_oracle,
    rank_one_factors,
    upper_bound,
)
from tensorrank.errors import (
    ClassificationError,
    DimensionMismatchError,
    PreconditionError,
)
from tensorrank.exactfield import (
    FieldDescriptor,
    annihilator,
    array_rank,
    in_span,
    projective_count,
    projective_points,
    solve_array,
    span_basis,
)
from tensorrank.tensor3 import (
    MAX_HOOK_AMBIENT,
    MAX_HOOK_WIDTH,
    Axis,
    HookShape,
    MatrixSpace,
    Tensor3,
    direct_sum,
    find_hook_shape,
    flattening_ranks,
    is_hook_shaped,
    slice_space,
    tensor_from_space,
)

logger = logging.getLogger(__name__)

MAX_BASIS_SEARCH = 1 << 16


class Label(str, Enum):
    """The seven term types, in classification priority order."""
    PRIME = "Prime"
    BIS = "Bis"
    HL = "HL"
    HR = "HR"
    VL = "VL"
    VR = "VR"
    MIX = "Mix"


# B-side and C-side subspaces each label requires, by name.
LABEL_SUPPORT = {
    Label.PRIME: (("B1",), ("C1",)),
    Label.BIS: (("B2",), ("C2",)),
    Label.HL: (("E1",), ("C1", "F2")),
    Label.HR: (("E2",), ("F1", "C2")),
    Label.VL: (("B1", "E2"), ("F1",)),
    Label.VR: (("E1", "B2"), ("F2",)),
    Label.MIX: (("E1", "E2"), ("F1", "F2")),
}


@dataclass(frozen=True)
class BlockSplit:
    b1: int
    b2: int
    c1: int
    c2: int
    a1: Optional[int] = None
    a2: Optional[int] = None

    def __post_init__(self):
        if min(self.b1, self.b2, self.c1, self.c2) < 0:
            raise DimensionMismatchError("block sizes must be non-negative")

    @property
    def rows(self) -> int:
        return self.b1 + self.b2

    @property
    def cols(self) -> int:
        return self.c1 + self.c2

    @classmethod
    def from_dims(cls, dims1: Sequence[int], dims2: Sequence[int]) -> "BlockSplit":
        return cls(dims1[1], dims2[1], dims1[2], dims2[2], dims1[0], dims2[0])

    @classmethod
    def from_tensor_split(cls, dims: Sequence[int], split: Sequence[int]) -> "BlockSplit":
        a, b, c = dims
        a1, b1, c1 = split
        return cls(b1, b - b1, c1, c - c1, a1, a - a1)

    def tensor_split(self) -> Tuple[int, int, int]:
        if self.a1 is None:
            raise PreconditionError("split carries no A-block boundary")
        return (self.a1, self.b1, self.c1)


@dataclass(frozen=True, eq=False)
class StickOutProfile:
    """E′ ⊂ B′, E″ ⊂ B″, F′ ⊂ C′, F″ ⊂ C″ as RREF bases in block coordinates."""
    e_prime: np.ndarray
    e_bis: np.ndarray
    f_prime: np.ndarray
    f_bis: np.ndarray

    @property
    def dims(self) -> Tuple[int, int, int, int]:
        return (self.e_prime.shape[0], self.e_bis.shape[0], self.f_prime.shape[0], self.f_bis.shape[0])


@dataclass(frozen=True)
class ClassifiedDecomposition:
    decomposition: Decomposition
    split: BlockSplit
    profile: StickOutProfile
    labels: Tuple[Label, ...]

    @property
    def counts(self) -> Dict[Label, int]:
        return {label: self.labels.count(label) for label in Label}

    def count(self, label: Label) -> int:
        return self.labels.count(label)

    def indices(self, label: Label) -> List[int]:
        return [i for i, lab in enumerate(self.labels) if lab is label]

    def summary(self) -> dict:
        return {
            "labels": [label.value for label in self.labels],
            "counts": {label.value: n for label, n in self.counts.items()},
            "profile": list(self.profile.dims),
        }


def _check_split(d: Decomposition, split: BlockSplit) -> None:
    if d.dims[1] != split.rows or d.dims[2] != split.cols:
        raise DimensionMismatchError(f"decomposition dims {d.dims} do not match split {split}")


def stickout_profile(d: Decomposition, split: BlockSplit) -> StickOutProfile:
    """Minimal stick-out subspaces of V = ⟨terms⟩, from the terms' block components."""
    _check_split(d, split)
    f = d.field
    b1, c1 = split.b1, split.c1
    e1, e2, f1, f2 = [], [], [], []
    for term in d:
        vb1, vb2 = term.v[:b1], term.v[b1:]
        wc1, wc2 = term.w[:c1], term.w[c1:]
        if np.any(wc2):
            e1.append(vb1)
        if np.any(wc1):
            e2.append(vb2)
        if np.any(vb2):
            f1.append(wc1)
        if np.any(vb1):
            f2.append(wc2)
    return StickOutProfile(
        _frozen(span_basis(f, e1, split.b1).copy()),
        _frozen(span_basis(f, e2, split.b2).copy()),
        _frozen(span_basis(f, f1, split.c1).copy()),
        _frozen(span_basis(f, f2, split.c2).copy()),
    )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _embed(field: FieldDescriptor, basis: np.ndarray, offset: int, length: int) -> np.ndarray:
    out = field.zeros((basis.shape[0], length))
    out[:, offset:offset + basis.shape[1]] = basis
    return out


class _Supports:
    """Named subspaces of B and C used by the label tests."""

    def __init__(self, field: FieldDescriptor, split: BlockSplit, profile: StickOutProfile):
        self.field = field
        b, c = split.rows, split.cols
        self.b_spaces = {
            "B1": _embed(field, field.identity(split.b1), 0, b),
            "B2": _embed(field, field.identity(split.b2), split.b1, b),
            "E1": _embed(field, profile.e_prime, 0, b),
            "E2": _embed(field, profile.e_bis, split.b1, b),
        }
        self.c_spaces = {
            "C1": _embed(field, field.identity(split.c1), 0, c),
            "C2": _embed(field, field.identity(split.c2), split.c1, c),
            "F1": _embed(field, profile.f_prime, 0, c),
            "F2": _embed(field, profile.f_bis, split.c1, c),
        }
        self.b_len, self.c_len = b, c

    def _contains(self, spaces, names, length, vector) -> bool:
        basis = np.concatenate([spaces[n] for n in names]) if names else self.field.zeros((0, length))
        return in_span(self.field, basis, vector)

    def label(self, v: np.ndarray, w: np.ndarray) -> Optional[Label]:
        """Highest-priority label of v⊗w; v⊗w ∈ X⊗Y iff v ∈ X and w ∈ Y."""
        for lab in Label:
            b_names, c_names = LABEL_SUPPORT[lab]
            if self._contains(self.b_spaces, b_names, self.b_len, v) and self._contains(self.c_spaces, c_names, self.c_len, w):
                return lab
        return None


def classify(d: Decomposition, split: BlockSplit, profile: Optional[StickOutProfile] = None) -> ClassifiedDecomposition:
    """Label every term Prime > Bis > HL > HR > VL > VR > Mix, first match wins.

    With the profile derived from the same terms every term is labeled; an
    external profile may leave a term unlabeled, which raises.
    """
    _check_split(d, split)
    profile = profile or stickout_profile(d, split)
    supports = _Supports(d.field, split, profile)
    labels = []
    for i, term in enumerate(d):
        lab = supports.label(term.v, term.w)
        if lab is None:
            raise ClassificationError(i, "term lies in none of the seven subspaces")
        labels.append(lab)
    return ClassifiedDecomposition(d, split, profile, tuple(labels))


def maximize_basis(p: Tensor3, d: Decomposition, split: BlockSplit) -> Decomposition:
    """Rechoose the basis of V = ⟨terms⟩ among its rank-one members, greedily by label priority.

    Rank-one members are found by enumerating projective coefficient vectors,
    so this runs over prime fields only.
    """
    f = d.field
    f.require_prime("basis maximization")
    _check_split(d, split)
    profile = stickout_profile(d, split)
    supports = _Supports(f, split, profile)
    shape = (split.rows, split.cols)
    v_basis = span_basis(f, [term.matrix(Axis.A).reshape(-1) for term in d], split.rows * split.cols)
    dim_v = v_basis.shape[0]
    if projective_count(f, dim_v) > MAX_BASIS_SEARCH:
        raise PreconditionError(f"basis search over {projective_count(f, dim_v)} points is too large")
    members = []
    for order, coeffs in enumerate(projective_points(f, dim_v)):
        m = f.dot(coeffs, v_basis).reshape(shape)
        if array_rank(f, m) != 1:
            continue
        x, y = rank_one_factors(f, m)
        lab = supports.label(x, y)
        priority = len(Label) if lab is None else list(Label).index(lab)
        members.append((priority, order, m))
    members.sort(key=lambda item: (item[0], item[1]))
    chosen: List[np.ndarray] = []
    chosen_basis = f.zeros((0, shape[0] * shape[1]))
    for _, _, m in members:
        if len(chosen) == dim_v:
            break
        if in_span(f, chosen_basis, m.reshape(-1)):
            continue
        chosen.append(m)
        chosen_basis = np.concatenate([chosen_basis, m.reshape(1, -1)])
    result = decomposition_from_matrices(p, chosen, Axis.A)
    if result is None:  # pragma: no cover - chosen spans V
        raise PreconditionError("rechosen basis does not decompose p")
    return result


# ---------------------------------------------------------------------------
# Repletion and digestion
# ---------------------------------------------------------------------------


def block_sum(w_prime: MatrixSpace, w_bis: MatrixSpace) -> MatrixSpace:
    """W′ ⊕ W″ as block-diagonal matrices."""
    w_prime.field.require_same(w_bis.field)
    shape = (w_prime.rows + w_bis.rows, w_prime.cols + w_bis.cols)
    first = w_prime.embed(shape, 0, 0)
    second = w_bis.embed(shape, w_prime.rows, w_prime.cols)
    return first + second


def _check_pair(w_prime: MatrixSpace, w_bis: MatrixSpace, split: BlockSplit) -> None:
    if w_prime.shape != (split.b1, split.c1) or w_bis.shape != (split.b2, split.c2):
        raise DimensionMismatchError(f"pair of shapes {w_prime.shape}, {w_bis.shape} against split {split}")


def _prime_or_bis(cd: ClassifiedDecomposition, index: int) -> Label:
    label = cd.labels[index]
    if label not in (Label.PRIME, Label.BIS):
        raise PreconditionError(f"term {index} is {label.value}, not Prime or Bis")
    return label


def _block(cd: ClassifiedDecomposition, index: int, label: Label) -> np.ndarray:
    m = cd.decomposition[index].matrix(Axis.A)
    s = cd.split
    return m[:s.b1, :s.c1] if label is Label.PRIME else m[s.b1:, s.c1:]


def replete(w_prime: MatrixSpace, w_bis: MatrixSpace, cd: ClassifiedDecomposition, index: int) -> Tuple[MatrixSpace, MatrixSpace]:
    """Add the Prime (or Bis) term at index to W′ (or W″)."""
    _check_pair(w_prime, w_bis, cd.split)
    label = _prime_or_bis(cd, index)
    block = _block(cd, index, label)
    if label is Label.PRIME:
        return w_prime + MatrixSpace.span(w_prime.field, w_prime.shape, [block]), w_bis
    return w_prime, w_bis + MatrixSpace.span(w_bis.field, w_bis.shape, [block])


@dataclass
class DigestResult:
    s_prime: MatrixSpace
    s_bis: MatrixSpace
    decomposition: Optional[Decomposition]
    index: int
    label: Label

    @property
    def space(self) -> MatrixSpace:
        return block_sum(self.s_prime, self.s_bis)


def _restrict(space: MatrixSpace, rows: slice, cols: slice, shape: Tuple[int, int]) -> MatrixSpace:
    return MatrixSpace.span(space.field, shape, [m[rows, cols] for m in space.matrices()])


def _space_decomposition(space: MatrixSpace, matrices: Sequence[np.ndarray]) -> Optional[Decomposition]:
    return decomposition_from_matrices(tensor_from_space(space), list(matrices), Axis.A)


def digest(
    w_prime: MatrixSpace,
    w_bis: MatrixSpace,
    cd: ClassifiedDecomposition,
    index: int,
    require_replete: bool = True,
) -> DigestResult:
    """S′ = ⟨terms ∖ v⟩ ∩ W′ and S″ = W″ for a Prime v (symmetric for Bis)."""
    _check_pair(w_prime, w_bis, cd.split)
    label = _prime_or_bis(cd, index)
    block = _block(cd, index, label)
    split = cd.split
    f = w_prime.field
    shape = (split.rows, split.cols)
    others = [term.matrix(Axis.A) for i, term in enumerate(cd.decomposition) if i != index]
    others_span = MatrixSpace.span(f, shape, others)
    if label is Label.PRIME:
        if require_replete and not w_prime.contains(block):
            raise PreconditionError(f"pair is not replete with respect to term {index}")
        meet = others_span.intersect(w_prime.embed(shape, 0, 0))
        s_prime = _restrict(meet, slice(0, split.b1), slice(0, split.c1), w_prime.shape)
        s_bis = w_bis
    else:
        if require_replete and not w_bis.contains(block):
            raise PreconditionError(f"pair is not replete with respect to term {index}")
        meet = others_span.intersect(w_bis.embed(shape, split.b1, split.c1))
        s_prime = w_prime
        s_bis = _restrict(meet, slice(split.b1, None), slice(split.c1, None), w_bis.shape)
    reduced = _space_decomposition(block_sum(s_prime, s_bis), others)
    if reduced is None:
        logger.warning("remaining terms do not span the digested pair at term %d", index)
    return DigestResult(s_prime, s_bis, reduced, index, label)


@dataclass
class RepleteDigestTrace:
    w_prime: MatrixSpace
    w_bis: MatrixSpace
    decomposition: Decomposition
    steps: List[DigestResult] = field(default_factory=list)


def replete_all(w_prime: MatrixSpace, w_bis: MatrixSpace, cd: ClassifiedDecomposition) -> Tuple[MatrixSpace, MatrixSpace]:
    """Consecutive repletion with respect to every Prime and Bis term."""
    for index, label in enumerate(cd.labels):
        if label in (Label.PRIME, Label.BIS):
            w_prime, w_bis = replete(w_prime, w_bis, cd, index)
    return w_prime, w_bis


def digest_all(w_prime: MatrixSpace, w_bis: MatrixSpace, cd: ClassifiedDecomposition) -> RepleteDigestTrace:
    """Replete at every Prime/Bis term, then digest one at a time until none is left.

    The remaining terms are relabeled after each step against the digested
    pair and repleted again; the loop stops early when the remaining terms
    no longer span it.
    """
    split = cd.split
    w_prime, w_bis = replete_all(w_prime, w_bis, cd)
    trace = RepleteDigestTrace(w_prime, w_bis, cd.decomposition)
    current = cd
    while True:
        targets = [i for i, lab in enumerate(current.labels) if lab in (Label.PRIME, Label.BIS)]
        if not targets:
            break
        index = targets[0]
        trace.w_prime, trace.w_bis = replete(trace.w_prime, trace.w_bis, current, index)
        step = digest(trace.w_prime, trace.w_bis, current, index)
        trace.steps.append(step)
        trace.w_prime, trace.w_bis = step.s_prime, step.s_bis
        if step.decomposition is None:
            break
        trace.decomposition = step.decomposition
        current = classify(step.decomposition, split)
    return trace


@dataclass
class SplitOffResult:
    w_tilde: MatrixSpace
    decomposition: Optional[Decomposition]
    replaced: int


def _exchange(field: FieldDescriptor, matrices: List[np.ndarray], v: np.ndarray) -> int:
    """Index of the first matrix v can replace without changing the span."""
    stacked = np.stack([m.reshape(-1) for m in matrices])
    coeffs = solve_array(field, stacked.T, v.reshape(-1, 1))
    if coeffs is None:
        raise PreconditionError("matrix is outside the span of the decomposition")
    nonzero = np.nonzero(coeffs.reshape(-1) != 0)[0]
    if nonzero.size == 0:
        raise PreconditionError("cannot exchange the zero matrix")
    return int(nonzero[0])


def split_off_rank_one(w_prime: MatrixSpace, w_bis: MatrixSpace, d: Decomposition, w: np.ndarray) -> SplitOffResult:
    """Complement W̃′ with W̃′ ⊕ ⟨w⟩ ⊕ W″ = W for a rank-one w ∈ W′.

    w is exchanged into the minimal decomposition d of W and the pair is
    digested at it, so R(W̃′ ⊕ W″) = R(W) − 1.
    """
    f = w_prime.field
    w = f.array(w)
    if array_rank(f, w) != 1 or not w_prime.contains(w):
        raise PreconditionError("w must be a rank-one member of W'")
    shape = (w_prime.rows + w_bis.rows, w_prime.cols + w_bis.cols)
    big = f.zeros(shape)
    big[:w_prime.rows, :w_prime.cols] = w
    matrices = [term.matrix(Axis.A) for term in d]
    replaced = _exchange(f, matrices, big)
    others = matrices[:replaced] + matrices[replaced + 1:]
    meet = MatrixSpace.span(f, shape, others).intersect(w_prime.embed(shape, 0, 0))
    w_tilde = _restrict(meet, slice(0, w_prime.rows), slice(0, w_prime.cols), w_prime.shape)
    reduced = _space_decomposition(block_sum(w_tilde, w_bis), others)
    return SplitOffResult(w_tilde, reduced, replaced)


# ---------------------------------------------------------------------------
# Hook peeling
# ---------------------------------------------------------------------------


@dataclass
class HookPeelResult:
    tensor: Tensor3
    split: Tuple[int, int, int]
    hook: HookShape
    certificate: PeelCertificate
    decomposition: Optional[Decomposition]
    gamma: np.ndarray

    @property
    def first(self) -> Tensor3:
        a1, b1, c1 = self.split
        return Tensor3(self.tensor.field, self.tensor.data[:a1, :b1, :c1].copy())

    @property
    def second(self) -> Tensor3:
        a1, b1, c1 = self.split
        return Tensor3(self.tensor.field, self.tensor.data[a1:, b1:, c1:].copy())


def _minimal_decomposition(p: Tensor3, config: Optional[OracleConfig]) -> Decomposition:
    result = rank_oracle(p, config)
    if not result.is_exact:
        raise PreconditionError(f"no minimal decomposition available ({result.status.value})")
    return result.decomposition


def peel_hook_slice(
    p: Tensor3,
    split: Sequence[int],
    gamma,
    hook: HookShape,
    decomposition: Optional[Decomposition] = None,
    config: Optional[OracleConfig] = None,
) -> HookPeelResult:
    """Remove one C′-slice direction of a direct sum whose W′ is hook shaped.

    gamma ∈ C′* must vanish on the hook's column space H′ and p(γ) must have
    rank one. The rank-one matrix p(γ) ∈ A′⊗B′ is exchanged into a minimal
    decomposition of the C-slice space, the pair is digested at it, and a is
    read off the unique splitting p′(e_k*) = λ_k·p(γ) + s_k with s_k in the
    digested space. The result is p̃′ ⊕ p″ with c′ reduced by one.
    """
    f = p.field
    a1, b1, c1 = split
    gamma = f.array(gamma)
    if gamma.shape != (c1,):
        raise DimensionMismatchError(f"gamma must live on C' of dimension {c1}")
    if hook.col_subspace.shape[1] != c1 or hook.row_subspace.shape[1] != b1:
        raise DimensionMismatchError("hook does not live in B'⊗C'")
    if hook.f and np.any(f.dot(hook.col_subspace, gamma)):
        raise PreconditionError("gamma does not annihilate the hook column space")
    full_gamma = np.concatenate([gamma, f.zeros(p.dims[2] - c1)])
    v = p.contract(Axis.C, full_gamma)
    if array_rank(f, v) != 1:
        raise PreconditionError("p(gamma) is not a rank-one matrix")

    d = decomposition if decomposition is not None else _minimal_decomposition(p, config)
    matrices = [term.matrix(Axis.C) for term in d]
    replaced = _exchange(f, matrices, v)
    others = matrices[:replaced] + matrices[replaced + 1:]
    shape = (p.dims[0], p.dims[1])
    prime_c = MatrixSpace.span(f, shape, [p.data[:, :, k] for k in range(c1)])
    s_prime = MatrixSpace.span(f, shape, others).intersect(prime_c)

    system = np.concatenate([v.reshape(1, -1), s_prime.basis]).T
    a = f.zeros(p.dims[2])
    for k in range(c1):
        coeffs = solve_array(f, system, p.data[:, :, k].reshape(-1, 1))
        if coeffs is None:
            raise PreconditionError("decomposition is not minimal for the C-slice space")
        a[k] = coeffs[0, 0]
    cert = peel(p, Axis.C, full_gamma, a)

    pivot = cert.pivot
    keep = [j for j in range(c1) if j != pivot]
    new_hook = HookShape(hook.e, hook.f, hook.row_subspace, _frozen(hook.col_subspace[:, keep].copy()))
    reduced = decomposition_from_matrices(cert.residual, others, Axis.C)
    if reduced is None:
        logger.warning("remaining terms do not span the peeled tensor")
    return HookPeelResult(cert.residual, (a1, b1, c1 - 1), new_hook, cert, reduced, gamma)


def _rank_one_gamma(p: Tensor3, split: Sequence[int], hook: HookShape) -> Optional[np.ndarray]:
    f = p.field
    c1 = split[2]
    directions = annihilator(f, hook.col_subspace, c1)
    if directions.shape[0] == 0:
        return None
    for coeffs in projective_points(f, directions.shape[0]):
        gamma = f.dot(coeffs, directions)
        full = np.concatenate([gamma, f.zeros(p.dims[2] - c1)])
        if array_rank(f, p.contract(Axis.C, full)) == 1:
            return gamma
    return None


def hook_peel_chain(
    p: Tensor3,
    split: Sequence[int],
    hook: HookShape,
    config: Optional[OracleConfig] = None,
) -> List[HookPeelResult]:
    """Peel C′ down to the hook's column dimension (prime fields).

    Each step reuses the reduced decomposition of the previous one, so only
    the first step runs the oracle.
    """
    p.field.require_prime("hook peel chain")
    steps: List[HookPeelResult] = []
    current, current_split, current_hook = p, tuple(split), hook
    decomposition = None
    while current_split[2] > current_hook.f:
        gamma = _rank_one_gamma(current, current_split, current_hook)
        if gamma is None:
            logger.info("no rank-one slice direction left at c'=%d", current_split[2])
            break
        step = peel_hook_slice(current, current_split, gamma, current_hook, decomposition, config)
        steps.append(step)
        current, current_split, current_hook = step.tensor, step.split, step.hook
        decomposition = step.decomposition
    return steps


# ---------------------------------------------------------------------------
# Inequalities and additivity
# ---------------------------------------------------------------------------


@dataclass
class InequalityCheck:
    name: str
    lhs: int
    rhs: int
    relation: str
    holds: bool
    applicable: bool = True

    def describe(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "relation": self.relation,
            "rhs": self.rhs,
            "holds": self.holds,
            "applicable": self.applicable,
        }


def _le(name: str, lhs: int, rhs: int, applicable: bool = True) -> InequalityCheck:
    return InequalityCheck(name, lhs, rhs, "<=", lhs <= rhs, applicable)


def _lt(name: str, lhs: int, rhs: int, applicable: bool = True) -> InequalityCheck:
    return InequalityCheck(name, lhs, rhs, "<", lhs < rhs, applicable)


def audit_inequalities(
    cd: ClassifiedDecomposition,
    r_prime: int,
    r_bis: int,
    r_sum: int,
    dim_prime: int,
    dim_bis: int,
) -> List[InequalityCheck]:
    """Evaluate the projection inequalities for a classified minimal decomposition of W′ ⊕ W″.

    Checks that only apply when additivity fails are returned with
    applicable=False (and holds=True) otherwise.
    """
    e1, e2, f1, f2 = cd.profile.dims
    n = cd.counts
    d = r_prime + r_bis - r_sum
    failing = d > 0
    checks = [
        _le("stickout_e_bis", r_prime + e2, r_sum - dim_bis),
        _le("stickout_e_prime", r_bis + e1, r_sum - dim_prime),
        _le("stickout_f_bis", r_prime + f2, r_sum - dim_bis),
        _le("stickout_f_prime", r_bis + f1, r_sum - dim_prime),
        _le("projection_prime", r_prime, n[Label.PRIME] + n[Label.HL] + n[Label.VL] + min(n[Label.MIX], e1 * f1)),
        _le("projection_bis", r_bis, n[Label.BIS] + n[Label.HR] + n[Label.VR] + min(n[Label.MIX], e2 * f2)),
    ]
    conditional = [
        _le("mix_at_least_defect", d, n[Label.MIX]),
        _le("horizontal_and_mix", e1 + e2 + d, n[Label.HL] + n[Label.HR] + n[Label.MIX]),
        _le("vertical_and_mix", f1 + f2 + d, n[Label.VL] + n[Label.VR] + n[Label.MIX]),
        _lt("gap_e_prime", e1, r_prime - dim_prime),
        _lt("gap_f_prime", f1, r_prime - dim_prime),
        _lt("gap_e_bis", e2, r_bis - dim_bis),
        _lt("gap_f_bis", f2, r_bis - dim_bis),
    ]
    for check in conditional:
        if not failing:
            check.applicable = False
            check.holds = True
    checks.extend(conditional)
    zero_stickout = min(e1, e2, f1, f2) == 0
    checks.append(InequalityCheck("zero_stickout_additive", d, 0, "==", (d == 0) or not zero_stickout, zero_stickout))
    if len(cd.decomposition) != r_sum:
        logger.info("audit on a decomposition of length %d for rank %d: decomposition not minimal",
                    len(cd.decomposition), r_sum)
    return checks


@dataclass
class MixConditionReport:
    k: int
    e_tilde_dim: int
    mix_fits_hook: bool
    vertical_independent: bool
    horizontal_independent: bool

    @property
    def all_hold(self) -> bool:
        return self.mix_fits_hook and self.vertical_independent and self.horizontal_independent

    def violated(self) -> List[str]:
        names = {
            "mix_fits_hook": self.mix_fits_hook,
            "vertical_independent": self.vertical_independent,
            "horizontal_independent": self.horizontal_independent,
        }
        return [name for name, ok in names.items() if not ok]


def _independent(field: FieldDescriptor, matrices: List[np.ndarray]) -> bool:
    if not matrices:
        return True
    return array_rank(field, np.stack([m.reshape(-1) for m in matrices])) == len(matrices)


def _quotient(field: FieldDescriptor, basis: np.ndarray, length: int) -> np.ndarray:
    """Rows of a map onto the quotient by the span of basis."""
    return annihilator(field, basis, length)


def _smallest_hook_rows(w_bis: MatrixSpace, f: int) -> int:
    for k in range(w_bis.rows + 1):
        if k == w_bis.rows:
            return k
        if k > MAX_HOOK_WIDTH:
            raise PreconditionError(f"hook row dimension above {MAX_HOOK_WIDTH} is not searched")
        if find_hook_shape(w_bis, k, f) is not None:
            return k
    return w_bis.rows  # pragma: no cover


def check_mix_conditions(cd: ClassifiedDecomposition, w_bis: MatrixSpace) -> MixConditionReport:
    """Evaluate the three sufficient conditions on Mix, VL and HR (Bis must be empty)."""
    if cd.count(Label.BIS):
        raise PreconditionError("mix conditions need a decomposition without Bis terms")
    f = cd.decomposition.field
    f.require_prime("mix conditions")
    split = cd.split
    b1, c1 = split.b1, split.c1
    profile = cd.profile
    terms = cd.decomposition.terms
    mix = [terms[i] for i in cd.indices(Label.MIX)]
    e_tilde = span_basis(f, [t.v[b1:] for t in mix], split.b2)
    k = _smallest_hook_rows(w_bis, profile.dims[3])
    mix_fits_hook = not mix or e_tilde.shape[0] <= k - 1

    to_b1_quotient = _quotient(f, profile.e_prime, b1)
    vl = [f.outer(f.dot(to_b1_quotient, terms[i].v[:b1]), terms[i].w[:c1]) for i in cd.indices(Label.VL)]
    vertical = _independent(f, vl)
    if profile.dims[2] > 0:
        left = span_basis(f, [f.dot(to_b1_quotient, terms[i].v[:b1]) for i in cd.indices(Label.VL)], to_b1_quotient.shape[0])
        right = span_basis(f, [terms[i].w[:c1] for i in cd.indices(Label.VL)], c1)
        vertical = vertical and left.shape[0] == to_b1_quotient.shape[0] and right.shape[0] == profile.dims[2]

    to_b2_quotient = _quotient(f, e_tilde, split.b2)
    hr = [f.outer(f.dot(to_b2_quotient, terms[i].v[b1:]), terms[i].w[:c1]) for i in cd.indices(Label.HR)]
    horizontal = _independent(f, hr)
    return MixConditionReport(k, e_tilde.shape[0], mix_fits_hook, vertical, horizontal)


@dataclass
class AdditivityCertificate:
    name: str
    factor: str
    axis: Optional[str] = None
    detail: str = ""

    def describe(self) -> dict:
        return {"name": self.name, "factor": self.factor, "axis": self.axis, "detail": self.detail}


def _rank_upper(p: Tensor3, result: Optional[OracleResult]) -> int:
    if result is not None and result.upper is not None:
        return result.upper
    return len(upper_bound(p)[0])


def additivity_certificates(
    p1: Tensor3,
    p2: Tensor3,
    results: Optional[Tuple[OracleResult, OracleResult]] = None,
) -> List[AdditivityCertificate]:
    """Sufficient conditions for R(p1 ⊕ p2) = R(p1) + R(p2) that need no search.

    - some concise factor dimension is at most 2 (any field);
    - a factor's rank exceeds some concise dimension by at most 1 (any field);
    - a factor is concise on an axis and its rank exceeds that dimension by at most 2 (any field);
    - a slice space of a factor is (1,2)- or (2,1)-hook shaped (searched over prime fields).
    """
    certs: List[AdditivityCertificate] = []
    for name, p, result in (("p1", p1, results[0] if results else None), ("p2", p2, results[1] if results else None)):
        ranks = flattening_ranks(p)
        upper = _rank_upper(p, result)
        for axis, r in zip(Axis, ranks):
            if r <= 2:
                certs.append(AdditivityCertificate("small_factor", name, axis.value, f"concise dimension {r}"))
        for axis, r in zip(Axis, ranks):
            if upper <= r + 1:
                certs.append(AdditivityCertificate("gap_at_most_one", name, axis.value, f"rank <= {upper}, dimension {r}"))
        for axis, r in zip(Axis, ranks):
            if p.dims[axis.index] == r and r + 1 < upper <= r + 2:
                certs.append(AdditivityCertificate("gap_at_most_two_concise", name, axis.value, f"rank <= {upper}, concise dimension {r}"))
        if p.field.is_prime:
            for axis in Axis:
                space = slice_space(p, axis)
                if space.dim == 0 or max(space.shape) > MAX_HOOK_AMBIENT:
                    continue
                for e, f in ((1, 2), (2, 1)):
                    if e > space.rows or f > space.cols:
                        continue
                    hook = find_hook_shape(space, e, f)
                    if hook is not None and is_hook_shaped(space, hook):
                        certs.append(AdditivityCertificate("hook_1_2", name, axis.value, f"({e},{f})-hook shaped slices"))
                        break
    return certs


class AdditivityStatus(str, Enum):
    ADDITIVE = "additive"
    COUNTEREXAMPLE = "counterexample"
    INCONSISTENT = "inconsistent"
    UNDECIDED = "undecided"


@dataclass
class AdditivityReport:
    first: Tensor3
    second: Tensor3
    r_prime: OracleResult
    r_bis: OracleResult
    r_sum: OracleResult
    status: AdditivityStatus
    defect: Optional[int] = None
    classification: Optional[ClassifiedDecomposition] = None
    audit: List[InequalityCheck] = field(default_factory=list)
    certificates: List[AdditivityCertificate] = field(default_factory=list)
    reverified: Optional[bool] = None

    @property
    def needs_dossier(self) -> bool:
        return self.status in (AdditivityStatus.COUNTEREXAMPLE, AdditivityStatus.INCONSISTENT)

    @property
    def audit_failures(self) -> List[InequalityCheck]:
        return [check for check in self.audit if not check.holds]


def _reverify(p: Tensor3, results: Sequence[Tuple[Tensor3, OracleResult]], config: Optional[OracleConfig]) -> bool:
    for tensor, result in results:
        if result.decomposition is None or certifies(result.decomposition, tensor) is None:
            return False
    again = rank_oracle(p, config)
    return again.is_exact and again.lower == results[-1][1].lower


def additivity_check(p1: Tensor3, p2: Tensor3, config: Optional[OracleConfig] = None) -> AdditivityReport:
    """Ranks of p1, p2 and p1 ⊕ p2, the defect, and the structure of the sum's witness."""
    p1.field.require_same(p2.field)
    config = config or OracleConfig()
    total = direct_sum(p1, p2)
    r1 = rank_oracle(p1, config)
    r2 = rank_oracle(p2, config)
    split = BlockSplit.from_dims(p1.dims, p2.dims)
    if r1.is_exact and r2.is_exact:
        r12 = rank_oracle(total, config)
    else:
        r12 = _sum_bounds(total, split, r1, r2)
    certs = additivity_certificates(p1, p2, (r1, r2))
    report = AdditivityReport(p1, p2, r1, r2, r12, AdditivityStatus.UNDECIDED, certificates=certs)
    if not (r1.is_exact and r2.is_exact and r12.is_exact):
        return report

    report.defect = r1.lower + r2.lower - r12.lower
    if r12.decomposition is not None and len(r12.decomposition):
        report.classification = classify(r12.decomposition, split)
        report.audit = audit_inequalities(
            report.classification,
            r1.lower,
            r2.lower,
            r12.lower,
            flattening_ranks(p1)[0],
            flattening_ranks(p2)[0],
        )
    if report.defect == 0:
        report.status = AdditivityStatus.ADDITIVE
        return report
    report.status = AdditivityStatus.COUNTEREXAMPLE if report.defect > 0 else AdditivityStatus.INCONSISTENT
    report.reverified = _reverify(total, [(p1, r1), (p2, r2), (total, r12)], config)
    logger.warning(
        "defect %d for %s ⊕ %s over %s (%s, reverified=%s)",
        report.defect, p1.dims, p2.dims, p1.field, report.status.value, report.reverified,
    )
    return report


def _sum_bounds(total: Tensor3, split: BlockSplit, r1: OracleResult, r2: OracleResult) -> OracleResult:
    """Bounds for the sum without searching it: flattening below, block concatenation above."""
    decomposition, _ = upper_bound(total, split.tensor_split())
    lower = max(flattening_ranks(total))
    return OracleResult(OracleStatus.LOWER_BOUND_ONLY, lower, len(decomposition), decomposition, 0)
