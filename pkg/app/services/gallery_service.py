"""Built-in example norms with their expected values.

Rows tagged PUBLISHED reproduce published values; DERIVED rows are worked out
from the definitions; TRIVIAL rows are sanity anchors. Statements that are
only meaningful in infinite dimensions appear as notes and as growth
diagnostics, never as pass/fail rows.
"""
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

from app.core.config import settings
from app.core.exceptions import SpecValidationError, UnknownEntryError
from app.core.logging import get_logger
from app.lattice.functions import AtomSet, Func, restrict
from app.lattice.norms import bbody_spec, build_oracle, pnorm_spec, rectangularize, v_basis_pullback, vnorm
from app.schemas.schemas import GalleryDiagnostic, GalleryEntryInfo, GalleryRow, GalleryTable, ProvenanceEnum
from app.services.certify_service import CertifyService

logger = get_logger(__name__)

GROWTH_DIMENSIONS = (4, 8, 16)
EXACT_TOL = 1e-9


def _row(label: str, observed: float, expected: float, provenance: ProvenanceEnum,
         tol: float = EXACT_TOL, relation: str = "eq") -> GalleryRow:
    scale = max(1.0, abs(expected))
    if relation == "eq":
        passed = abs(observed - expected) <= tol * scale
    elif relation == "ge":
        passed = observed >= expected - tol * scale
    else:
        passed = observed <= expected + tol * scale
    return GalleryRow(
        label=label, observed=observed, expected=expected, relation=relation,
        provenance=provenance, tol=tol, passed=passed,
    )


def v_basis_vector(n: int, k: int) -> Func:
    """v_k = e_1 + ... + e_k (k counted from 1)"""
    return Func.indicator(AtomSet.of(n, range(k)))


def restriction_witness_ratio(n: int) -> float:
    """‖χ_{first atom} v_n‖ / ‖v_n‖ in the v-basis space"""
    norm = build_oracle(v_basis_pullback(n), n)
    v_n = v_basis_vector(n, n)
    return norm(restrict(v_n, AtomSet.of(n, [0]))) / norm(v_n)


def abs_lipschitz_witness(n: int):
    """(ratio, ‖g - h‖) for g = -e_1 + v_n, h = -e_1"""
    norm = build_oracle(v_basis_pullback(n), n)
    h = -Func.basis(n, 0)
    g = h + v_basis_vector(n, n)
    distance = norm(g - h)
    return norm(abs(g) - abs(h)) / distance, distance


@dataclass(frozen=True)
class GalleryEntry:
    name: str
    description: str
    default_dimension: int
    run: Callable[[int, int, int], GalleryTable]
    fixed_dimension: Optional[int] = None
    min_dimension: int = 1


def _bbody(dimension: int, seed: int, budget: int) -> GalleryTable:
    norm = build_oracle(bbody_spec(), 2)
    gauge_tol = settings.gauge_tol
    rows = [
        _row("‖(1,1)‖_B", norm([1.0, 1.0]), math.sqrt(2.0), ProvenanceEnum.PUBLISHED, gauge_tol),
        _row("‖(-1,1)‖_B", norm([-1.0, 1.0]), 2.0, ProvenanceEnum.PUBLISHED, gauge_tol),
    ]
    riesz = CertifyService(bbody_spec(), budget=budget, seed=seed).riesz_violation()
    rows.append(_row(
        "riesz violation ratio", riesz.ratio if riesz else 1.0, math.sqrt(2.0),
        ProvenanceEnum.PUBLISHED, settings.relation_tol, relation="ge",
    ))
    return GalleryTable(
        entry="bbody", dimension=2, rows=rows, passed=all(r.passed for r in rows),
        notes=[
            "Union of the unit disc on {xy ≥ 0} and the slab |y - x| ≤ 1 on {xy ≤ 0}.",
            "The gauge is rectangular but not a Riesz norm: |(-1,1)| = (1,1) has the smaller norm.",
        ],
    )


def _bbody_vnorm(dimension: int, seed: int, budget: int) -> GalleryTable:
    norm = build_oracle(vnorm(bbody_spec()), 2)
    gauge_tol = settings.gauge_tol
    rows = [
        _row("‖(-1,1)‖_V", norm([-1.0, 1.0]), math.sqrt(2.0), ProvenanceEnum.PUBLISHED, gauge_tol),
        _row("‖(1,1)‖_V", norm([1.0, 1.0]), math.sqrt(2.0), ProvenanceEnum.DERIVED, gauge_tol),
    ]
    riesz = CertifyService(vnorm(bbody_spec()), budget=budget, seed=seed).riesz_violation()
    rows.append(_row(
        "riesz violation ratio", riesz.ratio if riesz else 1.0, 1.0,
        ProvenanceEnum.DERIVED, settings.relation_tol, relation="le",
    ))
    return GalleryTable(
        entry="bbody-vnorm", dimension=2, rows=rows, passed=all(r.passed for r in rows),
        notes=["‖f‖_V = ‖|f|‖_B is an equivalent Riesz norm because ‖·‖_B is strictly rectangular."],
    )


def _growth(dimensions=GROWTH_DIMENSIONS):
    diagnostics = []
    previous = {}
    monotone = True
    for n in dimensions:
        lip, distance = abs_lipschitz_witness(n)
        values = {
            "restriction witness ratio": restriction_witness_ratio(n),
            "abs-Lipschitz witness ratio": lip,
            "positive-cone distance ‖(-e1+v_n) - (-e1)‖": distance,
        }
        for label, value in values.items():
            diagnostics.append(GalleryDiagnostic(label=label, dimension=n, value=value))
        for label in ("restriction witness ratio", "abs-Lipschitz witness ratio"):
            if label in previous and values[label] < previous[label]:
                monotone = False
            previous[label] = values[label]
    return diagnostics, monotone


def _vpullback(dimension: int, seed: int, budget: int) -> GalleryTable:
    n = dimension
    norm = build_oracle(v_basis_pullback(n), n)
    rows = [
        _row(f"‖v_{k}‖", norm(v_basis_vector(n, k)), 1.0 / k, ProvenanceEnum.PUBLISHED)
        for k in range(1, n + 1)
    ]
    rows.append(_row(
        "restriction witness ratio (v_n, {1})", restriction_witness_ratio(n), float(n), ProvenanceEnum.DERIVED
    ))
    lip, _ = abs_lipschitz_witness(n)
    rows.append(_row(
        "abs-Lipschitz witness ratio", lip, n * math.sqrt(4.0 + 1.0 / n ** 2), ProvenanceEnum.DERIVED
    ))
    if n == 2:
        rows.append(_row("‖(0,1)‖", norm([0.0, 1.0]), math.sqrt(5.0) / 2, ProvenanceEnum.DERIVED))
        rows.append(_row("‖(-1,1)‖", norm([-1.0, 1.0]), math.sqrt(17.0) / 2, ProvenanceEnum.DERIVED))
        rows.append(_row("monotone witness ‖(1,2)‖/‖(2,2)‖", norm([1.0, 2.0]) / norm([2.0, 2.0]),
                         math.sqrt(2.0), ProvenanceEnum.DERIVED))

    diagnostics, monotone = _growth()
    return GalleryTable(
        entry="vpullback", dimension=n, rows=rows, diagnostics=diagnostics, monotone_growth=monotone,
        passed=all(r.passed for r in rows) and monotone,
        notes=[
            "‖Σ a_k v_k‖ = ‖(a_k / k)‖₂ with v_k = e_1 + ... + e_k.",
            "The restriction constant grows at least like n, so the limiting space is not rectangular.",
            "Witness pairs at distance 1/n have moduli at distance about 2: the modulus map is not continuous "
            "in the limit and the positive cone is not closed.",
            "The span of restricted copies of a single function need not be complete in the limit; "
            "this is documented only, not tested.",
        ],
    )


def _vpullback_rectangularized(dimension: int, seed: int, budget: int) -> GalleryTable:
    n = dimension
    spec = rectangularize(v_basis_pullback(n))
    norm = build_oracle(spec, n)
    inner = build_oracle(v_basis_pullback(n), n)
    rows = []
    if n == 2:
        rows.append(_row("‖(1,1)‖_r", norm([1.0, 1.0]), math.sqrt(5.0) / 2, ProvenanceEnum.DERIVED))
    rows.append(_row(
        f"‖v_{n}‖_r", norm(v_basis_vector(n, n)), inner(Func.basis(n, 0)), ProvenanceEnum.DERIVED, relation="ge"
    ))
    restriction = CertifyService(spec, budget=budget, seed=seed).restriction_constant()
    rows.append(_row("restriction constant", restriction.value, 1.0, ProvenanceEnum.DERIVED))
    return GalleryTable(
        entry="vpullback-rectangularized", dimension=n, rows=rows, passed=all(r.passed for r in rows),
        notes=["‖f‖_r = max over atom sets of ‖χ_A f‖ is strictly rectangular and equivalent to the inner norm."],
    )


def _pnorm_reference(dimension: int, seed: int, budget: int) -> GalleryTable:
    n = dimension
    norm = build_oracle(pnorm_spec(2.0), n)
    service = CertifyService(pnorm_spec(2.0), dimension=n, budget=budget, seed=seed)
    restriction = service.restriction_constant()
    unconditional = service.unconditional_constant()
    rows = [
        _row("‖(3,4)‖₂", build_oracle(pnorm_spec(2.0), 2)([3.0, 4.0]), 5.0, ProvenanceEnum.TRIVIAL),
        _row("‖e_1‖₂", norm(Func.basis(n, 0)), 1.0, ProvenanceEnum.TRIVIAL),
        _row("restriction constant", restriction.value, 1.0, ProvenanceEnum.TRIVIAL),
        _row("unconditional constant", unconditional.value, 1.0, ProvenanceEnum.TRIVIAL),
    ]
    return GalleryTable(
        entry="pnorm-reference", dimension=n, rows=rows, passed=all(r.passed for r in rows),
    )


ENTRIES: Dict[str, GalleryEntry] = {
    entry.name: entry for entry in [
        GalleryEntry("bbody", "Gauge of the planar body B: rectangular, not Riesz", 2, _bbody, fixed_dimension=2),
        GalleryEntry("bbody-vnorm", "V-norm of the B gauge: an equivalent Riesz norm", 2, _bbody_vnorm,
                     fixed_dimension=2),
        GalleryEntry("vpullback", "Weighted l2 norm in the basis v_k = e_1 + ... + e_k, with growth diagnostics",
                     8, _vpullback, min_dimension=2),
        GalleryEntry("vpullback-rectangularized", "Rectangularization of the v-basis norm", 4,
                     _vpullback_rectangularized),
        GalleryEntry("pnorm-reference", "Euclidean norm: every constant equals 1", 4, _pnorm_reference),
    ]
}


def list_entries() -> List[GalleryEntryInfo]:
    return [
        GalleryEntryInfo(name=e.name, description=e.description, default_dimension=e.default_dimension)
        for e in ENTRIES.values()
    ]


def run_entry(name: str, dimension: Optional[int] = None, seed: int = None, budget: int = None) -> GalleryTable:
    """Evaluate every expectation of one entry."""
    if name not in ENTRIES:
        raise UnknownEntryError(f"Unknown gallery entry '{name}'", {"entry": name, "known": list(ENTRIES)})
    entry = ENTRIES[name]
    dimension = entry.default_dimension if dimension is None else dimension
    if entry.fixed_dimension is not None and dimension != entry.fixed_dimension:
        raise SpecValidationError(
            f"Entry '{name}' only exists in dimension {entry.fixed_dimension}",
            {"entry": name, "dimension": dimension},
        )
    if dimension < entry.min_dimension:
        raise SpecValidationError(
            f"Entry '{name}' needs dimension >= {entry.min_dimension}",
            {"entry": name, "dimension": dimension},
        )

    seed = settings.default_seed if seed is None else seed
    budget = settings.default_budget if budget is None else budget
    table = entry.run(dimension, seed, budget)
    logger.info("Gallery entry finished", entry=name, dimension=dimension, passed=table.passed)
    return table


def run_all(seed: int = None, budget: int = None) -> List[GalleryTable]:
    return [run_entry(name, seed=seed, budget=budget) for name in ENTRIES]

