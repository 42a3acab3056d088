import json

import pytest
from pydantic import ValidationError

from tensorrank.decomp import strassen_222
from tensorrank.directsum import additivity_check
from tensorrank.errors import TensorFileError
from tensorrank.tensor3 import Tensor3, matmul_tensor
from tensorrank.tensorfile import (
    TensorFile,
    read_decomposition,
    read_tensor,
    read_tensor_file,
    write_decomposition,
    write_dossier,
    write_tensor,
)


def test_rejects_bad_entries():
    with pytest.raises(ValidationError):
        TensorFile(field="gf2", dims=[1, 1, 2], entries=[0])
    with pytest.raises(ValidationError):
        TensorFile(field="gf3", dims=[1, 1, 1], entries=[3])
    with pytest.raises(ValidationError):
        TensorFile(field="q", dims=[1, 1, 1], entries=[1])
    with pytest.raises(ValidationError):
        TensorFile(field="gf4", dims=[1, 1, 1], entries=[0])


def test_rational_tensor_keeps_fractions(tmp_path, rationals):
    p = Tensor3.from_entries(rationals, (1, 1, 2), ["1/2", "-3"])
    path = write_tensor(p, tmp_path / "p.json")
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["entries"] == ["1/2", "-3"]
    assert read_tensor(path) == p


def test_split_uses_short_names(tmp_path, gf2):
    mu = matmul_tensor(1, 1, 2, gf2)
    path = write_tensor(mu, tmp_path / "mu.json", split=(1, 1, 1))
    assert json.loads(path.read_text(encoding="utf-8"))["split"] == {"aP": 1, "bP": 1, "cP": 1}
    assert read_tensor_file(path).split_tuple() == (1, 1, 1)


def test_decomposition_file(tmp_path, gf3):
    d = strassen_222(gf3)
    back = read_decomposition(write_decomposition(d, tmp_path / "d.json"))
    assert len(back) == 7
    assert [t.to_python() for t in back] == d.to_python()


def test_unreadable_file_is_a_tensor_file_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(TensorFileError):
        read_tensor(path)
    with pytest.raises(TensorFileError):
        read_tensor(tmp_path / "missing.json")


def test_dossier_layout(tmp_path, gf2, make_w, oracle_config):
    report = additivity_check(make_w(gf2), Tensor3(gf2, gf2.array([[[1]]])), oracle_config)
    path = write_dossier(report, tmp_path)
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["defect"] == 0
    assert set(data["ranks"]) == {"first", "second", "sum"}
    assert data["ranks"]["sum"]["lower"] == 4
    assert data["first"]["dims"] == [2, 2, 2]
