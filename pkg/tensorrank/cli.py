"""
Command-line surface of the workbench.

Exit codes: 0 success / exact / additive, 2 bad input, 3 bounds only,
4 inconsistent ranks, 5 counterexample to additivity (dossier written).
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from tensorrank.bounds import greedy_peel_trace, substitution_lower_bound
from tensorrank.config import WorkbenchConfig, load_config
from tensorrank.decomp import (
    OracleStatus,
    certifies,
    max_rank_census,
    rank_oracle,
    split_blocks,
    strassen_222,
    upper_bound,
)
from tensorrank.directsum import (
    AdditivityStatus,
    BlockSplit,
    additivity_check,
    audit_inequalities,
    classify,
)
from tensorrank.errors import TensorRankError
from tensorrank.exactfield import FieldDescriptor
from tensorrank.logs import setup_logging
from tensorrank.seed import LcgStream, random_hook_tensor, random_tensor
from tensorrank.suite import STRASSEN_FIELDS, run_suite
from tensorrank.tensor3 import (
    Axis,
    Tensor3,
    direct_sum,
    find_hook_shape,
    flattening_ranks,
    matmul_tensor,
    slice_space,
)
from tensorrank.tensorfile import (
    TensorFile,
    read_decomposition,
    read_tensor,
    read_tensor_file,
    write_dossier,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_BOUNDS_ONLY = 3
EXIT_INCONSISTENT = 4
EXIT_COUNTEREXAMPLE = 5

ADDITIVITY_EXIT = {
    AdditivityStatus.ADDITIVE: EXIT_OK,
    AdditivityStatus.UNDECIDED: EXIT_BOUNDS_ONLY,
    AdditivityStatus.INCONSISTENT: EXIT_INCONSISTENT,
    AdditivityStatus.COUNTEREXAMPLE: EXIT_COUNTEREXAMPLE,
}


class _Output:
    """Text lines for people, one JSON document with --json."""

    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.lines: List[str] = []
        self.report: dict = {}

    def line(self, text: str) -> None:
        self.lines.append(text)

    def flush(self) -> None:
        if self.as_json:
            print(json.dumps(self.report, indent=2, sort_keys=True))
        else:
            for text in self.lines:
                print(text)


def _config(args) -> WorkbenchConfig:
    config = load_config(args.config)
    if args.budget is not None:
        config.oracle.budget = args.budget
    if args.seed is not None:
        config.seed = args.seed
    return config


def _field(args) -> FieldDescriptor:
    return FieldDescriptor.parse(args.field)


def _emit_tensor(p: Tensor3, out: Optional[str], split=None) -> None:
    model = TensorFile.from_tensor(p, split)
    text = json.dumps(model.model_dump(by_alias=True, exclude_none=True), indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _fmt_result(result) -> str:
    if result.status is OracleStatus.EXACT:
        return f"exact {result.lower}"
    return f"{result.status.value}: {result.lower} <= R <= {result.upper}"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    field = _field(args)
    stream = LcgStream(args.seed if args.seed is not None else 0)
    split = None
    if args.kind == "matmul":
        i, j, k = _ints(args.params, 3)
        p = matmul_tensor(i, j, k, field)
    elif args.kind == "random":
        dims = _ints(args.params, 3)
        p = random_tensor(field, dims, stream)
    elif args.kind == "hook":
        b, c, e, f = _ints(args.params, 4)
        if e > b or f > c:
            raise argparse.ArgumentTypeError(f"a ({e},{f}) hook does not fit in {b}x{c}")
        p, _ = random_hook_tensor(field, (args.slices, b, c), e, f, stream)
    else:
        if len(args.params) != 2:
            raise argparse.ArgumentTypeError("dirsum takes two tensor files")
        p1, p2 = read_tensor(args.params[0]), read_tensor(args.params[1])
        p = direct_sum(p1, p2)
        split = p1.dims
    _emit_tensor(p, args.out, split)
    return EXIT_OK


def _ints(params: List[str], count: int) -> List[int]:
    if len(params) != count:
        raise argparse.ArgumentTypeError(f"expected {count} integer arguments, got {len(params)}")
    try:
        values = [int(x) for x in params]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("sizes must be non-negative")
    return values


def cmd_rank(args) -> int:
    config = _config(args)
    config.oracle.max_rank = args.max_rank
    out = _Output(args.json)
    p = read_tensor(args.file)
    flat = flattening_ranks(p)
    decomposition, how = upper_bound(p)
    out.line(f"tensor {p.dims} over {p.field}")
    out.line(f"flattening ranks {flat}; lower bound {max(flat)} (flattening)")
    out.line(f"upper bound {len(decomposition)} ({how}, certified)")
    out.report.update({
        "dims": list(p.dims),
        "field": p.field.spec,
        "flattening_ranks": list(flat),
        "upper_bound": {"value": len(decomposition), "construction": how},
    })
    if p.field.is_prime:
        sub = substitution_lower_bound(p, config.substitution)
        out.line(f"substitution bound {sub.bound} after {sub.peels} peels (nodes {sub.nodes}{', budget exhausted' if sub.exhausted else ''})")
        for step in sub.trace:
            out.line(f"  peel axis {step.axis.value} alpha {p.field.to_python(step.alpha)} -> residual {step.residual.dims}")
        out.report["substitution"] = {
            "bound": sub.bound,
            "trace": [step.describe() for step in sub.trace],
            "exhausted": sub.exhausted,
        }
    result = rank_oracle(p, config.oracle)
    out.line(f"oracle: {_fmt_result(result)} (nodes {result.nodes})")
    if result.decomposition is not None:
        out.line(f"witness of length {len(result.decomposition)}:")
        for term in result.decomposition:
            out.line(f"  {term.to_python()}")
    out.report["oracle"] = {
        "status": result.status.value,
        "lower": result.lower,
        "upper": result.upper,
        "nodes": result.nodes,
        "witness": result.decomposition.to_python() if result.decomposition is not None else None,
    }
    out.flush()
    return EXIT_OK if result.is_exact else EXIT_BOUNDS_ONLY


def _is_mu222_pair(p1: Tensor3, p2: Tensor3) -> bool:
    if p1.dims != (4, 4, 4) or p2.dims != (4, 4, 4):
        return False
    mu = matmul_tensor(2, 2, 2, p1.field)
    return p1 == mu and p2 == mu


def cmd_additivity(args) -> int:
    config = _config(args)
    out = _Output(args.json)
    p1, p2 = read_tensor(args.file1), read_tensor(args.file2)
    report = additivity_check(p1, p2, config.oracle)
    labels = (("first", report.r_prime), ("second", report.r_bis), ("sum", report.r_sum))
    for name, result in labels:
        out.line(f"{name}: {_fmt_result(result)}")
    out.report["ranks"] = {name: {"status": r.status.value, "lower": r.lower, "upper": r.upper} for name, r in labels}
    out.report["status"] = report.status.value
    out.report["defect"] = report.defect
    out.report["certificates"] = [cert.describe() for cert in report.certificates]
    for cert in report.certificates:
        out.line(f"certificate {cert.name} on {cert.factor} axis {cert.axis}: {cert.detail}")
    if report.status is AdditivityStatus.UNDECIDED:
        out.line(f"sum upper bound {report.r_sum.upper}; additivity not decidable at desk scale over {p1.field}")
        if _is_mu222_pair(p1, p2):
            out.line("known value over the complex numbers: R(mu222 + mu222) = 14, rank additive")
    else:
        out.line(f"defect {report.defect}: {report.status.value}")
    if report.classification is not None:
        counts = {label.value: n for label, n in report.classification.counts.items()}
        out.line("counts " + " ".join(f"{k}={v}" for k, v in counts.items()))
        out.report["classification"] = report.classification.summary()
        for check in report.audit:
            if check.applicable:
                out.line(f"  {check.name}: {check.lhs} {check.relation} {check.rhs} {'ok' if check.holds else 'FAILED'}")
        out.report["audit"] = [check.describe() for check in report.audit]
    if report.needs_dossier:
        path = write_dossier(report, args.dossier_dir or config.output_dir)
        out.line(f"dossier written to {path}")
        out.report["dossier"] = str(path)
        out.report["reverified"] = report.reverified
    out.flush()
    return ADDITIVITY_EXIT[report.status]


def cmd_verify_strassen(args) -> int:
    out = _Output(args.json)
    results = {}
    for spec in STRASSEN_FIELDS:
        field = FieldDescriptor.parse(spec)
        ok = certifies(strassen_222(field), matmul_tensor(2, 2, 2, field)) is not None
        results[spec] = ok
        out.line(f"{field}: {'pass' if ok else 'FAIL'}")
    out.report["fields"] = results
    out.report["passed"] = all(results.values())
    out.flush()
    return EXIT_OK if all(results.values()) else EXIT_FAILED


def cmd_classify(args) -> int:
    out = _Output(args.json)
    tensor_file = read_tensor_file(args.file)
    p = tensor_file.to_tensor()
    split = tensor_file.split_tuple()
    if split is None:
        raise argparse.ArgumentTypeError("tensor file carries no split")
    d = read_decomposition(args.decomposition)
    if certifies(d, p) is None:
        logger.error("decomposition does not certify %s", args.file)
        return EXIT_USAGE
    block = BlockSplit.from_tensor_split(p.dims, split)
    cd = classify(d, block)
    for i, label in enumerate(cd.labels):
        out.line(f"term {i}: {label.value}")
    out.line("(e', e'', f', f'') = " + str(cd.profile.dims))
    out.line("counts " + " ".join(f"{label.value}={n}" for label, n in cd.counts.items()))
    out.report.update(cd.summary())
    if args.ranks:
        r1, r2, r12 = args.ranks
        first, second = split_blocks(p, split)
        audit = audit_inequalities(cd, r1, r2, r12, flattening_ranks(first)[0], flattening_ranks(second)[0])
        for check in audit:
            if check.applicable:
                out.line(f"  {check.name}: {check.lhs} {check.relation} {check.rhs} {'ok' if check.holds else 'FAILED'}")
        out.report["audit"] = [check.describe() for check in audit]
    out.flush()
    return EXIT_OK


def cmd_peel(args) -> int:
    config = _config(args)
    out = _Output(args.json)
    p = read_tensor(args.file)
    axis = None if args.all else Axis.parse(args.axis)
    hook = None
    if args.hook:
        e, f = args.hook
        hook = find_hook_shape(slice_space(p, Axis.A), e, f)
        out.line(f"({e},{f}) hook on the A-slices: {'found' if hook else 'not found'}")
    trace, residual = greedy_peel_trace(p, axis)
    steps = []
    if not trace:
        out.line("no rank-one slice on any axis" if axis is None else f"no rank-one slice on axis {axis.value}")
    for step in trace:
        line = f"peel axis {step.axis.value} alpha {p.field.to_python(step.alpha)} slice rank {step.slice_rank} -> residual {step.residual.dims}"
        entry = step.describe()
        if hook is not None:
            kept = find_hook_shape(slice_space(step.residual, Axis.A), hook.e, hook.f) is not None if step.residual.dims[0] else True
            line += f"; hook {'preserved' if kept else 'lost'}"
            entry["hook_preserved"] = kept
        out.line(line)
        steps.append(entry)
    final_flat = flattening_ranks(residual)
    out.line(f"final residual {residual.dims} flattening ranks {final_flat}")
    sub = substitution_lower_bound(p, config.substitution)
    out.line(f"lower bound {sub.bound}")
    out.report.update({
        "trace": steps,
        "residual_dims": list(residual.dims),
        "residual_flattening_ranks": list(final_flat),
        "lower_bound": sub.bound,
    })
    out.flush()
    return EXIT_OK


def cmd_census(args) -> int:
    config = _config(args)
    out = _Output(args.json)
    census = max_rank_census(args.dims, _field(args), config.oracle)
    for rank, count in census.histogram.items():
        out.line(f"rank {rank}: {count}")
    out.line(f"max rank {census.max_rank} over {census.total} tensors ({census.budget_exceeded} over budget)")
    out.report.update({
        "dims": list(census.dims),
        "field": census.field_spec,
        "histogram": {str(k): v for k, v in census.histogram.items()},
        "max_rank": census.max_rank,
        "budget_exceeded": census.budget_exceeded,
    })
    out.flush()
    return EXIT_OK


def cmd_suite(args) -> int:
    config = _config(args)
    run_dir = run_suite(config, output_dir=args.output, run_id=args.run_id)
    with (run_dir / "metrics.json").open("r", encoding="utf-8") as handle:
        metrics = json.load(handle)
    print(str(run_dir))
    return EXIT_OK if metrics["all_passed"] else EXIT_FAILED


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="Print a machine-readable report")
    common.add_argument("--log-level", default=None, help="Logging level (default from TENSORRANK_LOG_LEVEL or INFO)")
    common.add_argument("--json-logs", action="store_true", help="Emit logs as JSON objects")
    common.add_argument("--config", default=None, help="Workbench profile (JSON or YAML)")
    common.add_argument("--field", default="gf2", help="gf<p> or q")
    common.add_argument("--seed", type=int, default=None, help="Seed for the LCG stream")
    common.add_argument("--budget", type=int, default=None, help="Oracle node budget")

    parser = argparse.ArgumentParser(prog="tensorrank", description="Exact tensor rank workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="Generate a tensor file")
    gen.add_argument("kind", choices=["matmul", "random", "hook", "dirsum"])
    gen.add_argument("params", nargs="*")
    gen.add_argument("--slices", type=int, default=3, help="A-dimension of generated hook tensors")
    gen.add_argument("--out", default=None)
    gen.set_defaults(handler=cmd_gen)

    rank = sub.add_parser("rank", parents=[common], help="Bounds and exact rank of a tensor")
    rank.add_argument("file")
    rank.add_argument("--max-rank", type=int, default=None)
    rank.set_defaults(handler=cmd_rank)

    add = sub.add_parser("additivity", parents=[common], help="Rank additivity of a direct sum")
    add.add_argument("file1")
    add.add_argument("file2")
    add.add_argument("--dossier-dir", default=None)
    add.set_defaults(handler=cmd_additivity)

    strassen = sub.add_parser("verify-strassen", parents=[common], help="Certify the seven-product table")
    strassen.set_defaults(handler=cmd_verify_strassen)

    cls = sub.add_parser("classify", parents=[common], help="Label the terms of a decomposition of a direct sum")
    cls.add_argument("file")
    cls.add_argument("decomposition")
    cls.add_argument("--ranks", type=int, nargs=3, default=None, metavar=("R1", "R2", "R12"))
    cls.set_defaults(handler=cmd_classify)

    peel = sub.add_parser("peel", parents=[common], help="Peel rank-one slices")
    peel.add_argument("file")
    peel.add_argument("--axis", default="A")
    peel.add_argument("--all", action="store_true", help="Peel along every axis")
    peel.add_argument("--hook", type=int, nargs=2, default=None, metavar=("E", "F"))
    peel.set_defaults(handler=cmd_peel)

    census = sub.add_parser("census", parents=[common], help="Rank histogram over every tensor of a shape")
    census.add_argument("dims", type=int, nargs=3)
    census.set_defaults(handler=cmd_census)

    suite = sub.add_parser("suite", parents=[common], help="Run the acceptance suite")
    suite.add_argument("--output", default=None)
    suite.add_argument("--run-id", default=None)
    suite.set_defaults(handler=cmd_suite)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    setup_logging(args.log_level, args.json_logs)
    try:
        return args.handler(args)
    except (TensorRankError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
