import json
import logging

from tensorrank.config import BUDGET_ENV, load_config
from tensorrank.logs import JsonFormatter, resolve_level


def test_defaults_without_a_file(monkeypatch):
    monkeypatch.delenv(BUDGET_ENV, raising=False)
    config = load_config()
    assert config.seed == 42
    assert config.oracle.budget == 10 ** 8
    assert config.suite.field == "gf2"
    assert config.suite.max_factor_dims == (3, 3, 3)


def test_quick_profile_from_yaml():
    config = load_config("configs/quick.yaml")
    assert config.profile == "quick"
    assert config.seed == 7
    assert config.suite.substitution_fields == ("gf2",)
    assert config.suite.max_factor_dims == (2, 2, 2)
    assert config.substitution.budget == 20000


def test_json_profile_and_env_budget(tmp_path, monkeypatch):
    path = tmp_path / "profile.json"
    path.write_text(json.dumps({"profile": "tiny", "suite": {"census_pairs": 2}}), encoding="utf-8")
    monkeypatch.setenv(BUDGET_ENV, "1234")
    config = load_config(str(path))
    assert config.profile == "tiny"
    assert config.suite.census_pairs == 2
    assert config.oracle.budget == 1234


def test_file_budget_wins_over_env(monkeypatch):
    monkeypatch.setenv(BUDGET_ENV, "5")
    assert load_config("configs/baseline.json").oracle.budget == 100000000


def test_json_formatter_fields():
    record = logging.LogRecord("tensorrank.decomp", logging.INFO, __file__, 1, "rank %d", (3,), None)
    payload = json.loads(JsonFormatter().format(record))
    assert payload["message"] == "rank 3"
    assert payload["level"] == "INFO"
    assert payload["logger"] == "tensorrank.decomp"


def test_log_level_from_env(monkeypatch):
    monkeypatch.setenv("TENSORRANK_LOG_LEVEL", "debug")
    assert resolve_level() == "DEBUG"
    assert resolve_level("warning") == "WARNING"
