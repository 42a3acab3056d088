"""
JSON file formats: tensors, decompositions and counterexample dossiers.

Entries are integers for GF(p) and "n/d" strings for Q, so files round-trip
exactly.
"""

import json
import logging
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from tensorrank.decomp import Decomposition, RankOneTerm
from tensorrank.directsum import AdditivityReport
from tensorrank.errors import TensorFileError
from tensorrank.exactfield import FieldDescriptor
from tensorrank.tensor3 import Tensor3

logger = logging.getLogger(__name__)

RATIONAL_PATTERN = re.compile(r"^-?\d+(/\d+)?$")

Entry = Union[int, str]


def _check_entries(field: FieldDescriptor, entries: List[Entry]) -> None:
    for entry in entries:
        if field.is_prime:
            if isinstance(entry, str) or isinstance(entry, bool):
                raise ValueError(f"GF entries must be integers, got {entry!r}")
            if not 0 <= entry < field.modulus:
                raise ValueError(f"GF({field.modulus}) entry {entry} out of range")
        else:
            if not isinstance(entry, str) or not RATIONAL_PATTERN.match(entry.strip()):
                raise ValueError(f"rational entries must be 'n/d' strings, got {entry!r}")
            if entry.strip().endswith("/0"):
                raise ValueError(f"zero denominator in {entry!r}")


def _entry_out(field: FieldDescriptor, value) -> Entry:
    return int(value) if field.is_prime else str(Fraction(value))


class BlockSplitModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    a_prime: int = Field(..., alias="aP", ge=0)
    b_prime: int = Field(..., alias="bP", ge=0)
    c_prime: int = Field(..., alias="cP", ge=0)

    def as_tuple(self):
        return (self.a_prime, self.b_prime, self.c_prime)


class TensorFile(BaseModel):
    field: str
    dims: List[int]
    entries: List[Entry]
    split: Optional[BlockSplitModel] = None

    @field_validator("field")
    @classmethod
    def validate_field(cls, v):
        return FieldDescriptor.parse(v).spec

    @field_validator("dims")
    @classmethod
    def validate_dims(cls, v):
        if len(v) != 3 or any(n < 0 for n in v):
            raise ValueError("dims must be three non-negative integers")
        return v

    @model_validator(mode="after")
    def validate_entries(self):
        a, b, c = self.dims
        if len(self.entries) != a * b * c:
            raise ValueError(f"expected {a * b * c} entries, got {len(self.entries)}")
        _check_entries(FieldDescriptor.parse(self.field), self.entries)
        if self.split is not None:
            if any(s > n for s, n in zip(self.split.as_tuple(), self.dims)):
                raise ValueError("split exceeds dims")
        return self

    @classmethod
    def from_tensor(cls, p: Tensor3, split=None) -> "TensorFile":
        field = p.field
        entries = [_entry_out(field, x) for x in p.entries]
        split_model = None
        if split is not None:
            a1, b1, c1 = split
            split_model = BlockSplitModel(aP=a1, bP=b1, cP=c1)
        return cls(field=field.spec, dims=list(p.dims), entries=entries, split=split_model)

    def descriptor(self) -> FieldDescriptor:
        return FieldDescriptor.parse(self.field)

    def to_tensor(self) -> Tensor3:
        return Tensor3.from_entries(self.descriptor(), self.dims, self.entries)

    def split_tuple(self):
        return self.split.as_tuple() if self.split is not None else None


class TermModel(BaseModel):
    u: List[Entry]
    v: List[Entry]
    w: List[Entry]


class DecompositionFile(BaseModel):
    field: str
    dims: List[int]
    terms: List[TermModel]

    @field_validator("field")
    @classmethod
    def validate_field(cls, v):
        return FieldDescriptor.parse(v).spec

    @model_validator(mode="after")
    def validate_terms(self):
        field = FieldDescriptor.parse(self.field)
        a, b, c = self.dims
        for i, term in enumerate(self.terms):
            if (len(term.u), len(term.v), len(term.w)) != (a, b, c):
                raise ValueError(f"term {i} factor lengths do not match dims {self.dims}")
            _check_entries(field, term.u + term.v + term.w)
        return self

    @classmethod
    def from_decomposition(cls, d: Decomposition) -> "DecompositionFile":
        f = d.field
        terms = [
            TermModel(
                u=[_entry_out(f, x) for x in t.u.tolist()],
                v=[_entry_out(f, x) for x in t.v.tolist()],
                w=[_entry_out(f, x) for x in t.w.tolist()],
            )
            for t in d
        ]
        return cls(field=f.spec, dims=list(d.dims), terms=terms)

    def to_decomposition(self) -> Decomposition:
        f = FieldDescriptor.parse(self.field)
        terms = tuple(RankOneTerm.of(f, t.u, t.v, t.w) for t in self.terms)
        return Decomposition(f, tuple(self.dims), terms)


class RankSummary(BaseModel):
    status: str
    lower: int
    upper: Optional[int] = None
    decomposition: Optional[DecompositionFile] = None


class CounterexampleDossier(BaseModel):
    status: str
    defect: int
    reverified: Optional[bool] = None
    first: TensorFile
    second: TensorFile
    ranks: Dict[str, RankSummary]
    classification: Optional[Dict[str, Any]] = None
    audit: List[Dict[str, Any]] = Field(default_factory=list)

    @classmethod
    def from_report(cls, report: AdditivityReport) -> "CounterexampleDossier":
        def summary(result):
            dec = DecompositionFile.from_decomposition(result.decomposition) if result.decomposition is not None else None
            return RankSummary(status=result.status.value, lower=result.lower, upper=result.upper, decomposition=dec)

        return cls(
            status=report.status.value,
            defect=report.defect if report.defect is not None else 0,
            reverified=report.reverified,
            first=TensorFile.from_tensor(report.first),
            second=TensorFile.from_tensor(report.second),
            ranks={
                "first": summary(report.r_prime),
                "second": summary(report.r_bis),
                "sum": summary(report.r_sum),
            },
            classification=report.classification.summary() if report.classification is not None else None,
            audit=[check.describe() for check in report.audit],
        )


def _dump(model: BaseModel, path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8") as handle:
        json.dump(model.model_dump(by_alias=True, exclude_none=True), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return target


def _load(model_cls, path: Union[str, Path]):
    try:
        with Path(path).open("r", encoding="utf-8") as handle:
            data = json.load(handle)
        return model_cls.model_validate(data)
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        raise TensorFileError(f"cannot read {path}: {exc}") from exc


def write_tensor(p: Tensor3, path: Union[str, Path], split=None) -> Path:
    return _dump(TensorFile.from_tensor(p, split), path)


def read_tensor_file(path: Union[str, Path]) -> TensorFile:
    return _load(TensorFile, path)


def read_tensor(path: Union[str, Path]) -> Tensor3:
    return read_tensor_file(path).to_tensor()


def write_decomposition(d: Decomposition, path: Union[str, Path]) -> Path:
    return _dump(DecompositionFile.from_decomposition(d), path)


def read_decomposition(path: Union[str, Path]) -> Decomposition:
    return _load(DecompositionFile, path).to_decomposition()


def write_dossier(report: AdditivityReport, directory: Union[str, Path]) -> Path:
    dossier = CounterexampleDossier.from_report(report)
    name = f"dossier-{report.status.value}-{'x'.join(map(str, report.first.dims))}-{'x'.join(map(str, report.second.dims))}.json"
    path = _dump(dossier, Path(directory) / name)
    logger.warning("counterexample dossier written to %s", path)
    return path
