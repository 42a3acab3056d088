import json

import pytest

from tensorrank.config import load_config
from tensorrank.suite import run_suite


@pytest.mark.smoke
def test_suite_smoke(tmp_path):
    config = load_config("configs/quick.yaml")
    run_dir = run_suite(config, output_dir=str(tmp_path), run_id="smoke")
    assert (run_dir / "metrics.json").exists()
    assert (run_dir / "metrics.csv").exists()
    metrics = json.loads((run_dir / "metrics.json").read_text(encoding="utf-8"))
    assert metrics["strassen"]["passed"]
