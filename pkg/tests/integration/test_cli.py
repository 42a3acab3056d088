import json

from tensorrank.cli import main
from tensorrank.decomp import Decomposition, RankOneTerm, concat_decompositions
from tensorrank.exactfield import FieldDescriptor
from tensorrank.tensor3 import Tensor3, direct_sum, matmul_tensor
from tensorrank.tensorfile import read_tensor_file, write_decomposition, write_tensor

GF2 = FieldDescriptor.gf(2)


def _one():
    return Tensor3.rank_one(GF2, [1], [1], [1])


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_verify_strassen(capsys):
    assert main(["verify-strassen", "--json"]) == 0
    report = _json(capsys)
    assert report["passed"] is True
    assert set(report["fields"]) == {"q", "gf2", "gf3", "gf5"}


def test_gen_matmul_writes_a_tensor_file(tmp_path):
    out = tmp_path / "mu.json"
    assert main(["gen", "matmul", "2", "2", "2", "--out", str(out)]) == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["dims"] == [4, 4, 4]
    assert sum(data["entries"]) == 8


def test_gen_hook_and_dirsum(tmp_path):
    hook = tmp_path / "hook.json"
    assert main(["gen", "hook", "2", "4", "1", "2", "--slices", "2", "--seed", "3", "--out", str(hook)]) == 0
    p = read_tensor_file(hook).to_tensor()
    assert p.dims == (2, 2, 4)
    assert not p.data[:, 1:, 2:].any()
    one = write_tensor(_one(), tmp_path / "one.json")
    both = tmp_path / "sum.json"
    assert main(["gen", "dirsum", str(hook), str(one), "--out", str(both)]) == 0
    summed = read_tensor_file(both)
    assert summed.dims == [3, 3, 5]
    assert summed.split_tuple() == (2, 2, 4)


def test_gen_rejects_hook_that_does_not_fit(tmp_path, capsys):
    assert main(["gen", "hook", "2", "2", "3", "1", "--out", str(tmp_path / "x.json")]) == 2
    assert "does not fit" in capsys.readouterr().err


def test_rank_of_zero_tensor(tmp_path, capsys):
    path = write_tensor(Tensor3.zeros(GF2, (2, 2, 2)), tmp_path / "zero.json")
    assert main(["rank", str(path), "--json"]) == 0
    report = _json(capsys)
    assert report["oracle"]["status"] == "exact"
    assert report["oracle"]["lower"] == 0


def test_rank_over_rationals_is_bounds_only(tmp_path, capsys):
    q = FieldDescriptor.rationals()
    path = write_tensor(matmul_tensor(2, 2, 2, q), tmp_path / "mu.json")
    assert main(["rank", str(path), "--json"]) == 3
    report = _json(capsys)
    assert report["oracle"]["status"] == "lower_bound_only"
    assert (report["oracle"]["lower"], report["oracle"]["upper"]) == (4, 7)
    assert report["upper_bound"]["construction"] == "strassen"


def test_additivity_of_rank_one_tensors(tmp_path, capsys):
    first = write_tensor(_one(), tmp_path / "a.json")
    second = write_tensor(Tensor3.rank_one(GF2, [1, 1], [1], [0, 1]), tmp_path / "b.json")
    assert main(["additivity", str(first), str(second), "--json"]) == 0
    report = _json(capsys)
    assert report["status"] == "additive"
    assert report["defect"] == 0
    assert report["ranks"]["sum"]["lower"] == 2


def test_additivity_of_matmul_pair_over_rationals(tmp_path, capsys):
    q = FieldDescriptor.rationals()
    path = write_tensor(matmul_tensor(2, 2, 2, q), tmp_path / "mu.json")
    assert main(["additivity", str(path), str(path)]) == 3
    text = capsys.readouterr().out
    assert "sum upper bound 14" in text
    assert "= 14" in text


def test_classify_block_decomposition(tmp_path, capsys):
    p = direct_sum(_one(), _one())
    path = write_tensor(p, tmp_path / "p.json", split=(1, 1, 1))
    single = Decomposition(GF2, (1, 1, 1), (RankOneTerm.of(GF2, [1], [1], [1]),))
    good = write_decomposition(concat_decompositions(single, single), tmp_path / "good.json")
    assert main(["classify", str(path), str(good), "--json", "--ranks", "1", "1", "2"]) == 0
    report = _json(capsys)
    assert report["labels"] == ["Prime", "Bis"]
    assert all(check["holds"] for check in report["audit"])


def test_classify_rejects_non_certifying_decomposition(tmp_path):
    p = direct_sum(_one(), _one())
    path = write_tensor(p, tmp_path / "p.json", split=(1, 1, 1))
    short = Decomposition(GF2, (2, 2, 2), (RankOneTerm.of(GF2, [1, 0], [1, 0], [1, 0]),))
    bad = write_decomposition(short, tmp_path / "bad.json")
    assert main(["classify", str(path), str(bad)]) == 2


def test_peel_diagonal(tmp_path, capsys, make_diagonal):
    path = write_tensor(make_diagonal(GF2, 3), tmp_path / "diag.json")
    assert main(["peel", str(path), "--json"]) == 0
    report = _json(capsys)
    assert len(report["trace"]) == 3
    assert report["residual_dims"] == [0, 3, 3]
    assert report["lower_bound"] == 3


def test_census_tiny(capsys):
    assert main(["census", "1", "1", "1", "--json"]) == 0
    assert _json(capsys)["histogram"] == {"0": 1, "1": 1}


def test_bad_field_and_bad_usage(capsys):
    assert main(["gen", "matmul", "1", "1", "1", "--field", "gf4"]) == 2
    assert main(["no-such-command"]) == 2
    assert main(["rank", "/nonexistent/tensor.json"]) == 2
