"""Command-line entry point.

    latticelab analyze --spec norm.json [--dim N] [--format json|csv|text]
    latticelab certify --spec norm.json --profile profile.json
    latticelab gauge --spec body.json 1 1
    latticelab gallery [NAME | --all | --list] [--json]

Reports go to stdout (or --out); logs go to stderr. The exit code is 0 on
success, 1 when an expectation fails, 2 for unreadable input or an unknown
gallery entry, 3 for invalid specs and 4 when a norm degenerates.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import LatticeLabError, SpecParseError, SpecValidationError
from app.core.logging import get_logger
from app.lattice.bodies import gauge
from app.schemas.schemas import (
    CertifyProfile, GaugeSpec, PropertyReport, RunConfig, Witness, parse_body_spec, parse_norm_spec
)
from app.services.certify_service import CertifyService
from app.services.gallery_service import list_entries, run_all, run_entry
from app.utils.helpers import (
    constants_csv, dump_report_json, entries_text, gallery_csv, gallery_text, report_text
)

logger = get_logger(__name__)

# verdict -> constant whose witness explains a failed expectation
VERDICT_CONSTANTS = {
    "strictly_rectangular": "restriction",
    "rectangular": "restriction",
    "monotone": "monotonicity",
    "riesz": "ideal",
    "ideal": "ideal",
    "unconditional": "unconditional",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", dest="spec_path", help="JSON norm spec file")
    common.add_argument("--seed", type=int, default=settings.default_seed)
    common.add_argument("--budget", type=int, default=settings.default_budget,
                        help="candidate budget per estimator")
    common.add_argument("--dim", dest="dimension", type=int, default=None,
                        help="number of atoms, for specs that do not fix one")
    common.add_argument("--tol", type=float, default=settings.gauge_tol, help="gauge bisection tolerance")
    common.add_argument("--refine-steps", dest="refine_steps", type=int, default=settings.refine_steps)
    common.add_argument("--jobs", type=int, default=settings.jobs, help="worker threads for the search")
    common.add_argument("--format", dest="output_format", choices=["json", "csv", "text"], default="text")
    common.add_argument("--out", dest="output_path", help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="latticelab", description="Norm property laboratory")
    commands = parser.add_subparsers(dest="subcommand", required=True)

    commands.add_parser("analyze", parents=[common], help="estimate every constant and audit their relations")

    certify = commands.add_parser("certify", parents=[common], help="check a report against a profile")
    certify.add_argument("--profile", dest="profile_path", required=True)

    gauge_cmd = commands.add_parser("gauge", parents=[common], help="Minkowski functional at a point")
    gauge_cmd.add_argument("point", type=float, nargs="+")

    gallery = commands.add_parser("gallery", parents=[common], help="built-in examples with expected values")
    gallery.add_argument("name", nargs="?")
    gallery.add_argument("--all", dest="run_all", action="store_true")
    gallery.add_argument("--list", dest="list_entries", action="store_true")
    gallery.add_argument("--json", dest="as_json", action="store_true")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    try:
        return RunConfig(
            subcommand=args.subcommand,
            spec_path=args.spec_path,
            seed=args.seed,
            budget=args.budget,
            refine_steps=args.refine_steps,
            dimension=args.dimension,
            tol=args.tol,
            output_format="json" if getattr(args, "as_json", False) else args.output_format,
            output_path=args.output_path,
            profile_path=getattr(args, "profile_path", None),
            jobs=args.jobs,
        )
    except ValidationError as e:
        raise SpecValidationError("Invalid options", {"errors": json.loads(e.json(include_url=False))})


def _read(path: Optional[str], what: str) -> str:
    if not path:
        raise SpecValidationError(f"--{what} is required for this command")
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SpecParseError(f"Cannot read {what} file '{path}': {e.strerror}", {"path": path})


def _emit(text: str, config: RunConfig) -> None:
    if config.output_path:
        Path(config.output_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def render_report(report: PropertyReport, output_format: str) -> str:
    if output_format == "json":
        return dump_report_json(report) + "\n"
    if output_format == "csv":
        return constants_csv(report)
    return report_text(report)


def run_analysis(config: RunConfig) -> PropertyReport:
    spec = parse_norm_spec(_read(config.spec_path, "spec"))
    return CertifyService(
        spec,
        dimension=config.dimension,
        budget=config.budget,
        seed=config.seed,
        refine_steps=config.refine_steps,
        jobs=config.jobs,
        tol=config.tol,
    ).analyze()


def analyze(config: RunConfig) -> int:
    report = run_analysis(config)
    _emit(render_report(report, config.output_format), config)
    return 0


def load_profile(text: str) -> CertifyProfile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecParseError(f"profile is not valid JSON: {e}")
    try:
        return CertifyProfile.model_validate(data)
    except ValidationError as e:
        raise SpecValidationError("Invalid profile", {"errors": json.loads(e.json(include_url=False))})


def profile_failures(report: PropertyReport, profile: CertifyProfile) -> List[Tuple[str, Dict[str, Any]]]:
    """Every violated expectation, in profile order, with the evidence for it"""
    failures = []
    for name, expected in profile.expect.items():
        if name == "audit":
            if report.audit_passed != expected:
                failed = [c.name for c in report.relations if c.asserted and not c.holds]
                failures.append((f"audit expected {expected}, got {report.audit_passed}", {"failed": failed}))
            continue
        verdict = report.verdicts[name]
        if verdict.holds == expected:
            continue
        if name == "riesz" and report.riesz_violation is not None:
            evidence = report.riesz_violation.model_dump()
        else:
            witness: Witness = report.constants[VERDICT_CONSTANTS[name]].witness
            evidence = {"constant": verdict.constant, "witness": witness.model_dump(exclude_none=True)}
        failures.append((f"{name} expected {expected}, got {verdict.holds}", evidence))

    for name, bounds in profile.ranges.items():
        if name not in report.constants:
            raise SpecValidationError(
                f"Profile names unknown constant '{name}'", {"known": sorted(report.constants)}
            )
        estimate = report.constants[name]
        low = bounds.min is not None and estimate.value < bounds.min
        high = bounds.max is not None and estimate.value > bounds.max
        if low or high:
            failures.append((
                f"{name} = {estimate.value!r} outside [{bounds.min}, {bounds.max}]",
                {"witness": estimate.witness.model_dump(exclude_none=True)},
            ))
    return failures


def certify(config: RunConfig) -> int:
    profile = load_profile(_read(config.profile_path, "profile"))
    report = run_analysis(config)
    if config.output_path:
        _emit(render_report(report, config.output_format), config)

    failures = profile_failures(report, profile)
    if not failures:
        sys.stdout.write("certified: every expectation holds\n")
        return 0
    message, evidence = failures[0]
    sys.stdout.write(f"expectation failed: {message}\nwitness: {json.dumps(evidence, sort_keys=True)}\n")
    logger.warning("Certification failed", failures=len(failures), first=message)
    return 1


def gauge_cmd(config: RunConfig, point: Sequence[float]) -> int:
    data = json.loads(_read(config.spec_path, "spec")) if config.spec_path else None
    if not isinstance(data, dict):
        raise SpecValidationError("gauge needs a gauge norm spec or a body spec")
    if "type" in data:
        spec = parse_norm_spec(data)
        if not isinstance(spec, GaugeSpec):
            raise SpecValidationError(f"gauge needs a gauge norm spec, got '{spec.type}'")
        body = spec.body
    else:
        body = parse_body_spec(data)

    value = gauge(body, point, config.tol)
    if config.output_format == "json":
        text = json.dumps({"point": list(point), "tol": config.tol, "value": value}, sort_keys=True) + "\n"
    else:
        text = f"{value!r}\n"
    _emit(text, config)
    return 0


def gallery_cmd(config: RunConfig, name: Optional[str], everything: bool, listing: bool) -> int:
    if listing:
        entries = list_entries()
        if config.output_format == "json":
            _emit(json.dumps([e.model_dump() for e in entries], indent=2) + "\n", config)
        else:
            _emit(entries_text(entries), config)
        return 0

    if everything:
        tables = run_all(seed=config.seed, budget=config.budget)
    elif name:
        tables = [run_entry(name, dimension=config.dimension, seed=config.seed, budget=config.budget)]
    else:
        raise SpecValidationError("gallery needs an entry name, --all or --list")

    if config.output_format == "json":
        _emit(json.dumps([t.model_dump(mode="json") for t in tables], indent=2, sort_keys=True) + "\n", config)
    elif config.output_format == "csv":
        _emit(gallery_csv(tables), config)
    else:
        _emit("\n".join(gallery_text(t) for t in tables), config)
    return 0 if all(t.passed for t in tables) else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config(args)
        logger.info("Command started", subcommand=config.subcommand, seed=config.seed, budget=config.budget)
        if config.subcommand == "analyze":
            code = analyze(config)
        elif config.subcommand == "certify":
            code = certify(config)
        elif config.subcommand == "gauge":
            code = gauge_cmd(config, args.point)
        else:
            code = gallery_cmd(config, args.name, args.run_all, args.list_entries)
    except json.JSONDecodeError as e:
        code = SpecParseError.exit_code
        sys.stderr.write(f"error: spec is not valid JSON: {e}\n")
    except LatticeLabError as e:
        code = e.exit_code
        sys.stderr.write(f"error: {e.message}\n")
        if e.details:
            sys.stderr.write(json.dumps(e.details, sort_keys=True, default=str) + "\n")
    logger.info("Command finished", subcommand=args.subcommand, exit_code=code)
    return code


if __name__ == "__main__":
    sys.exit(main())
