import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from tensorrank.bounds import SubstitutionConfig
from tensorrank.decomp import OracleConfig

BUDGET_ENV = "TENSORRANK_BUDGET"


@dataclass
class SuiteConfig:
    field: str = "gf2"
    census_pairs: int = 1000
    substitution_instances: int = 200
    substitution_fields: tuple = ("gf2", "gf3")
    jaja_pairs: int = 200
    hook_pairs: int = 100
    replete_instances: int = 100
    max_factor_dims: tuple = (3, 3, 3)
    oracle_budget: int = 2_000_000

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SuiteConfig":
        values = dict(data)
        for key in ("substitution_fields", "max_factor_dims"):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)


@dataclass
class WorkbenchConfig:
    profile: str = "baseline"
    seed: int = 42
    oracle: OracleConfig = field(default_factory=OracleConfig)
    substitution: SubstitutionConfig = field(default_factory=SubstitutionConfig)
    suite: SuiteConfig = field(default_factory=SuiteConfig)
    output_dir: str = "runs"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WorkbenchConfig":
        oracle = dict(data.get("oracle", {}))
        env_budget = os.getenv(BUDGET_ENV)
        if "budget" not in oracle and env_budget:
            oracle["budget"] = int(env_budget)
        return cls(
            profile=str(data.get("profile", "baseline")),
            seed=int(data.get("seed", 42)),
            oracle=OracleConfig(**oracle),
            substitution=SubstitutionConfig(**data.get("substitution", {})),
            suite=SuiteConfig.from_dict(data.get("suite", {})),
            output_dir=str(data.get("output_dir", "runs")),
        )


def load_config(path: Optional[str] = None) -> WorkbenchConfig:
    """Read a JSON or YAML profile; no path gives defaults plus environment."""
    if path is None:
        return WorkbenchConfig.from_dict({})
    source = Path(path)
    with source.open("r", encoding="utf-8") as handle:
        if source.suffix in (".yaml", ".yml"):
            data = yaml.safe_load(handle) or {}
        else:
            data = json.load(handle)
    return WorkbenchConfig.from_dict(data)
