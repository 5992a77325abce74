import csv
import io
import json
import time
from typing import Any, Dict, List, Optional

from fastapi import Request

from app.core.logging import get_logger
from app.schemas.schemas import GalleryEntryInfo, GalleryTable, PropertyReport

logger = get_logger(__name__)


class RequestResponseLogger:
    """Logs one structured line per API request"""

    async def log_request_response(
        self,
        request: Request,
        status_code: int,
        execution_time: float
    ):
        try:
            logger.info(
                "API request",
                endpoint=request.url.path,
                method=request.method,
                query=dict(request.query_params),
                status_code=status_code,
                execution_time=round(execution_time, 6),
                ip_address=request.client.host if request.client else None,
                user_agent=request.headers.get("user-agent"),
            )
        except Exception as e:
            logger.error("Failed to log API request", error=str(e))


def format_api_response(
    success: bool,
    message: str,
    data: Optional[Dict[str, Any]] = None,
    errors: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Format standardized API response"""
    response = {
        "success": success,
        "message": message,
        "timestamp": time.time()
    }

    if data is not None:
        response["data"] = data

    if errors is not None:
        response["errors"] = errors

    return response


def format_success_response(
    message: str = "Operation successful",
    data: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Format success response"""
    return format_api_response(success=True, message=message, data=data)


def format_error_response(
    message: str = "Operation failed",
    errors: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Format error response"""
    return format_api_response(success=False, message=message, errors=errors)


# Report rendering
def dump_report_json(report: PropertyReport) -> str:
    """Canonical JSON text: sorted keys, no timestamps, stable across runs"""
    return json.dumps(report.to_json_dict(), sort_keys=True, indent=2)


CONSTANT_COLUMNS = ["name", "value", "method", "exact", "candidates", "refine_steps", "witness"]


def constants_csv(report: PropertyReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CONSTANT_COLUMNS)
    for name in sorted(report.constants):
        estimate = report.constants[name]
        writer.writerow([
            name,
            repr(estimate.value),
            estimate.method,
            str(estimate.exact).lower(),
            estimate.candidates,
            estimate.refine_steps,
            json.dumps(estimate.witness.model_dump(exclude_none=True), sort_keys=True),
        ])
    return buffer.getvalue()


def report_text(report: PropertyReport) -> str:
    config = report.config
    lines = [
        f"dimension {config.dimension}  seed {config.seed}  budget {config.budget}  tol {config.tol:g}",
        "",
        "constants:",
    ]
    for name in sorted(report.constants):
        estimate = report.constants[name]
        flag = "exact" if estimate.exact else estimate.method
        lines.append(f"  {name:<14} {estimate.value:.12g}  ({flag})")

    lines += ["", "verdicts:"]
    for name, verdict in report.verdicts.items():
        constant = "" if verdict.constant is None else f"  C={verdict.constant:.12g}"
        certified = "  certified" if verdict.certified else ""
        lines.append(f"  {name:<20} {'yes' if verdict.holds else 'no'}{constant}{certified}")

    if report.riesz_violation is not None:
        v = report.riesz_violation
        lines += ["", f"riesz violation: f={v.f} g={v.g} ratio={v.ratio:.12g}"]

    failed = [check for check in report.relations if check.asserted and not check.holds]
    lines += ["", f"relations audit: {'passed' if report.audit_passed else 'FAILED'}"]
    for check in failed:
        lines.append(f"  {check.name}: {check.lhs}={check.lhs_value} vs {check.rhs}={check.rhs_value}")

    if report.notes:
        lines += ["", "notes:"] + [f"  - {note}" for note in report.notes]
    return "\n".join(lines) + "\n"


def gallery_text(table: GalleryTable) -> str:
    symbols = {"eq": "=", "ge": ">=", "le": "<="}
    lines = [f"{table.entry} (n={table.dimension}): {'PASS' if table.passed else 'FAIL'}"]
    for row in table.rows:
        mark = "ok " if row.passed else "BAD"
        lines.append(
            f"  [{mark}] {row.label}: {row.observed:.12g} {symbols[row.relation]} {row.expected:.12g}"
            f"  [{row.provenance.value}]"
        )
    for diagnostic in table.diagnostics:
        lines.append(f"  n={diagnostic.dimension:<3} {diagnostic.label}: {diagnostic.value:.12g}")
    if table.monotone_growth is not None:
        lines.append(f"  growth monotone: {'yes' if table.monotone_growth else 'no'}")
    for note in table.notes:
        lines.append(f"  - {note}")
    return "\n".join(lines) + "\n"


def gallery_csv(tables: List[GalleryTable]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["entry", "dimension", "label", "observed", "relation", "expected", "provenance", "passed"])
    for table in tables:
        for row in table.rows:
            writer.writerow([
                table.entry, table.dimension, row.label, repr(row.observed), row.relation,
                repr(row.expected), row.provenance.value, str(row.passed).lower(),
            ])
    return buffer.getvalue()


def entries_text(entries: List[GalleryEntryInfo]) -> str:
    return "".join(f"{e.name:<28} n={e.default_dimension:<3} {e.description}\n" for e in entries)
