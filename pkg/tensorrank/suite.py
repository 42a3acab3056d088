"""
Acceptance suite: the property checks the workbench is expected to pass,
run from one seed and written out as a run directory.
"""

import json
import logging
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

from tensorrank.bounds import affine_hyperplane, find_rank_one_slice, peel
from tensorrank.config import WorkbenchConfig
from tensorrank.decomp import (
    MAX_ORACLE_VOLUME,
    OracleConfig,
    certifies,
    max_rank_census,
    rank_oracle,
    strassen_222,
)
from tensorrank.directsum import (
    AdditivityStatus,
    BlockSplit,
    Label,
    additivity_check,
    audit_inequalities,
    block_sum,
    classify,
    digest,
    hook_peel_chain,
    replete,
)
from tensorrank.exactfield import FieldDescriptor, all_vectors
from tensorrank.seed import (
    LcgStream,
    random_dims,
    random_hook_tensor,
    random_rank_one_slice_tensor,
    random_tensor,
    seed_everything,
)
from tensorrank.tensor3 import (
    Axis,
    HookShape,
    MatrixSpace,
    Tensor3,
    direct_sum,
    flattening_ranks,
    is_hook_shaped,
    matmul_tensor,
    slice_space,
    tensor_from_space,
)

LOGGER = logging.getLogger(__name__)

STRASSEN_FIELDS = ("q", "gf2", "gf3", "gf5")


class _AuditLedger:
    """Collects classification totality and inequality failures across checks."""

    def __init__(self):
        self.classified = 0
        self.failures: List[str] = []

    def record(self, report) -> None:
        if report.classification is None:
            return
        self.classified += 1
        self.failures.extend(check.name for check in report.audit_failures)


def _sum_volume(dims1, dims2) -> int:
    a, b, c = (x + y for x, y in zip(dims1, dims2))
    return a * b * c


def _pair_dims(stream: LcgStream, caps1, caps2):
    while True:
        dims1, dims2 = random_dims(stream, caps1), random_dims(stream, caps2)
        if _sum_volume(dims1, dims2) <= MAX_ORACLE_VOLUME:
            return dims1, dims2


def check_strassen() -> Dict[str, object]:
    results = {}
    for spec in STRASSEN_FIELDS:
        field = FieldDescriptor.parse(spec)
        results[spec] = certifies(strassen_222(field), matmul_tensor(2, 2, 2, field)) is not None
    return {"passed": all(results.values()), "fields": results}


def check_flattenings() -> Dict[str, object]:
    field = FieldDescriptor.gf(2)
    mu222 = flattening_ranks(matmul_tensor(2, 2, 2, field))
    mu223 = flattening_ranks(matmul_tensor(2, 2, 3, field))
    return {
        "passed": mu222 == (4, 4, 4) and mu223 == (4, 6, 6),
        "mu222": list(mu222),
        "mu223": list(mu223),
    }


def check_census(config: WorkbenchConfig, stream: LcgStream) -> Dict[str, object]:
    field = FieldDescriptor.gf(2)
    census = max_rank_census((2, 2, 2), field, config.oracle)
    ranks = {}
    for entries in all_vectors(field, 8):
        p = Tensor3(field, entries.reshape(2, 2, 2).copy())
        ranks[p.key()] = rank_oracle(p, config.oracle).lower
    violations = 0
    for _ in range(config.suite.census_pairs):
        p = random_tensor(field, (2, 2, 2), stream)
        q = random_tensor(field, (2, 2, 2), stream)
        if ranks[(p + q).key()] > ranks[p.key()] + ranks[q.key()]:
            violations += 1
    return {
        "passed": census.total == 256 and census.max_rank == 3 and census.budget_exceeded == 0 and violations == 0,
        "histogram": {str(k): v for k, v in census.histogram.items()},
        "max_rank": census.max_rank,
        "subadditivity_violations": violations,
    }


def check_substitution(config: WorkbenchConfig, stream: LcgStream) -> Dict[str, object]:
    """Every a on (α = 1): r − 1 ≤ R(p̃_a) ≤ r, with r − 1 attained."""
    oracle = OracleConfig(budget=config.suite.oracle_budget)
    per_field = {}
    passed = True
    for spec in config.suite.substitution_fields:
        field = FieldDescriptor.parse(spec)
        checked = exact_every_a = failures = skipped = 0
        for _ in range(config.suite.substitution_instances):
            dims = (2 + stream.draw(2), 1 + stream.draw(3), 1 + stream.draw(3))
            p = random_rank_one_slice_tensor(field, dims, stream)
            r = rank_oracle(p, oracle)
            found = find_rank_one_slice(p, Axis.A)
            if not r.is_exact or found is None:
                skipped += 1
                continue
            residual_ranks = []
            for a in affine_hyperplane(field, found.alpha):
                sub = rank_oracle(peel(p, Axis.A, found.alpha, a).residual, oracle)
                if not sub.is_exact:
                    break
                residual_ranks.append(sub.lower)
            else:
                checked += 1
                in_range = all(r.lower - 1 <= x <= r.lower for x in residual_ranks)
                if not in_range or min(residual_ranks) != r.lower - 1:
                    failures += 1
                if all(x == r.lower - 1 for x in residual_ranks):
                    exact_every_a += 1
                continue
            skipped += 1
        per_field[spec] = {"checked": checked, "failures": failures, "skipped": skipped, "exact_for_every_a": exact_every_a}
        passed = passed and failures == 0
    return {"passed": passed, "fields": per_field}


def _pair_outcome(report, counts: Dict[str, int], ledger: _AuditLedger) -> None:
    if report.status is AdditivityStatus.UNDECIDED:
        counts["budget_exceeded"] += 1
        return
    counts["completed"] += 1
    if report.status is AdditivityStatus.ADDITIVE:
        counts["additive"] += 1
    ledger.record(report)


def check_small_factor_pairs(
    config: WorkbenchConfig,
    stream: LcgStream,
    ledger: Optional[_AuditLedger] = None,
) -> Dict[str, object]:
    """Pairs where one dimension of the first factor is at most 2, cycling that axis over A, B, C."""
    field = FieldDescriptor.parse(config.suite.field)
    oracle = OracleConfig(budget=config.suite.oracle_budget)
    caps = config.suite.max_factor_dims
    ledger = ledger if ledger is not None else _AuditLedger()
    counts = {"completed": 0, "additive": 0, "budget_exceeded": 0}
    certified = {axis.value: 0 for axis in Axis}
    for index in range(config.suite.jaja_pairs):
        axis = list(Axis)[index % 3]
        caps1 = list(caps)
        caps1[axis.index] = min(2, caps[axis.index])
        dims1, dims2 = _pair_dims(stream, tuple(caps1), caps)
        p1, p2 = random_tensor(field, dims1, stream), random_tensor(field, dims2, stream)
        report = additivity_check(p1, p2, oracle)
        _pair_outcome(report, counts, ledger)
        if any(c.name == "small_factor" and c.factor == "p1" and c.axis == axis.value for c in report.certificates):
            certified[axis.value] += 1
    return {"passed": counts["additive"] == counts["completed"], **counts, "certified_by_axis": certified}


def check_hook_pairs(config: WorkbenchConfig, stream: LcgStream, ledger: _AuditLedger) -> Dict[str, object]:
    """Pairs whose first slice space is a (1,2)-hook."""
    field = FieldDescriptor.parse(config.suite.field)
    oracle = OracleConfig(budget=config.suite.oracle_budget)
    caps = config.suite.max_factor_dims
    counts = {"completed": 0, "additive": 0, "budget_exceeded": 0}
    for _ in range(config.suite.hook_pairs):
        while True:
            dims1, dims2 = _pair_dims(stream, caps, caps)
            if dims1[2] >= 2:
                break
        p1, _ = random_hook_tensor(field, dims1, 1, 2, stream)
        p2 = random_tensor(field, dims2, stream)
        _pair_outcome(additivity_check(p1, p2, oracle), counts, ledger)
    return {"passed": counts["additive"] == counts["completed"], **counts}


def _random_space(field: FieldDescriptor, shape, count: int, stream: LcgStream) -> MatrixSpace:
    return MatrixSpace.span(field, shape, [stream.vector(field, shape[0] * shape[1]).reshape(shape) for _ in range(count)])


def _space_rank(space: MatrixSpace, oracle: OracleConfig) -> Optional[int]:
    if space.dim == 0:
        return 0
    result = rank_oracle(tensor_from_space(space), oracle)
    return result.lower if result.is_exact else None


def check_replete_digest(config: WorkbenchConfig, stream: LcgStream, ledger: _AuditLedger) -> Dict[str, object]:
    """Repletion keeps R(W); digestion drops it by one and splits off ⟨v⟩."""
    field = FieldDescriptor.parse(config.suite.field)
    oracle = OracleConfig(budget=config.suite.oracle_budget)
    checked = failures = skipped = 0
    for _ in range(config.suite.replete_instances):
        split = BlockSplit(1 + stream.draw(2), 1 + stream.draw(2), 1 + stream.draw(2), 1 + stream.draw(2))
        w_prime = _random_space(field, (split.b1, split.c1), 1 + stream.draw(2), stream)
        w_bis = _random_space(field, (split.b2, split.c2), 1 + stream.draw(2), stream)
        whole = block_sum(w_prime, w_bis)
        if whole.dim == 0 or whole.dim * split.rows * split.cols > MAX_ORACLE_VOLUME:
            skipped += 1
            continue
        result = rank_oracle(tensor_from_space(whole), oracle)
        if not result.is_exact:
            skipped += 1
            continue
        cd = classify(result.decomposition, split)
        targets = cd.indices(Label.PRIME) + cd.indices(Label.BIS)
        if not targets:
            skipped += 1
            continue
        r_prime, r_bis = _space_rank(w_prime, oracle), _space_rank(w_bis, oracle)
        if r_prime is not None and r_bis is not None:
            audit = audit_inequalities(cd, r_prime, r_bis, result.lower, w_prime.dim, w_bis.dim)
            ledger.classified += 1
            ledger.failures.extend(check.name for check in audit if not check.holds)
        index = targets[0]
        full_prime, full_bis = replete(w_prime, w_bis, cd, index)
        step = digest(full_prime, full_bis, cd, index)
        r_full = _space_rank(block_sum(full_prime, full_bis), oracle)
        r_digested = _space_rank(step.space, oracle)
        if r_full is None or r_digested is None:
            skipped += 1
            continue
        checked += 1
        if step.label is Label.PRIME:
            grown, kept_other, digested, untouched = full_prime, full_bis, step.s_prime, step.s_bis
        else:
            grown, kept_other, digested, untouched = full_bis, full_prime, step.s_bis, step.s_prime
        ok = (
            r_full == result.lower
            and r_digested == result.lower - 1
            and digested.dim == grown.dim - 1
            and digested.is_subspace_of(grown)
            and untouched == kept_other
        )
        if not ok:
            failures += 1
            LOGGER.warning("repletion/digestion mismatch at term %d (%s)", index, step.label.value)
    return {"passed": failures == 0, "checked": checked, "failures": failures, "skipped": skipped}


def hook_chain_instance(field: FieldDescriptor, stream: LcgStream, attempts: int = 20):
    """A 2×2×4 (1,2)-hook summand plus a 1×1×1 summand with two peelable C′ directions."""
    hook = HookShape.coordinate(field, (2, 4), [0], [0, 1])
    for _ in range(attempts):
        first, _ = random_hook_tensor(field, (2, 2, 4), 1, 2, stream)
        if flattening_ranks(first)[2] != 4:
            continue
        second = Tensor3(field, field.array([[[1]]]))
        return direct_sum(first, second), (2, 2, 4), hook
    return None


def check_hook_chain(config: WorkbenchConfig, stream: LcgStream) -> Dict[str, object]:
    field = FieldDescriptor.parse(config.suite.field)
    oracle = OracleConfig(budget=config.suite.oracle_budget)
    instance = hook_chain_instance(field, stream)
    if instance is None:
        return {"passed": False, "reason": "no instance"}
    p, split, hook = instance
    start = rank_oracle(p, oracle)
    steps = hook_peel_chain(p, split, hook, oracle)
    ranks = [start.lower]
    hooks_kept = []
    for step in steps:
        ranks.append(rank_oracle(step.tensor, oracle).lower)
        hooks_kept.append(is_hook_shaped(slice_space(step.first, Axis.A), step.hook))
    drops = [a - b for a, b in zip(ranks, ranks[1:])]
    final_c = steps[-1].split[2] if steps else split[2]
    return {
        "passed": len(steps) == 2 and all(d == 1 for d in drops) and all(hooks_kept) and final_c == 2,
        "ranks": ranks,
        "hooks_kept": hooks_kept,
        "final_c_prime": final_c,
    }


def run_stamp(profile: str, now: Optional[datetime] = None) -> str:
    now = now or datetime.now(timezone.utc)
    return f"{now.strftime('%Y%m%d-%H%M%S')}-{profile}"


def run_suite(
    config: WorkbenchConfig,
    output_dir: Optional[str] = None,
    run_id: Optional[str] = None,
) -> Path:
    seed_everything(config.seed)
    stream = LcgStream(config.seed)
    ledger = _AuditLedger()

    metrics: Dict[str, object] = {"profile": config.profile, "seed": config.seed}
    metrics["strassen"] = check_strassen()
    metrics["flattenings"] = check_flattenings()
    metrics["census"] = check_census(config, stream)
    metrics["substitution"] = check_substitution(config, stream)
    metrics["small_factor_pairs"] = check_small_factor_pairs(config, stream, ledger)
    metrics["hook_pairs"] = check_hook_pairs(config, stream, ledger)
    metrics["replete_digest"] = check_replete_digest(config, stream, ledger)
    metrics["audit"] = {
        "passed": not ledger.failures,
        "classified": ledger.classified,
        "failures": sorted(set(ledger.failures)),
    }
    metrics["hook_chain"] = check_hook_chain(config, stream)
    checks = [name for name, value in metrics.items() if isinstance(value, dict)]
    metrics["all_passed"] = all(metrics[name]["passed"] for name in checks)

    output_root = Path(output_dir or config.output_dir)
    run_dir = output_root / (run_id or run_stamp(config.profile))
    run_dir.mkdir(parents=True, exist_ok=True)

    with (run_dir / "config.json").open("w", encoding="utf-8") as handle:
        json.dump(asdict(config), handle, indent=2, sort_keys=True)

    with (run_dir / "metrics.json").open("w", encoding="utf-8") as handle:
        json.dump(metrics, handle, indent=2, sort_keys=True)

    with (run_dir / "metrics.csv").open("w", encoding="utf-8") as handle:
        handle.write("metric,value\n")
        for name in checks:
            handle.write(f"{name}_passed,{metrics[name]['passed']}\n")
        handle.write(f"all_passed,{metrics['all_passed']}\n")

    LOGGER.info("Suite complete: %s (all passed: %s)", run_dir, metrics["all_passed"])
    return run_dir
