import math

import numpy as np
import pytest

from app.core.config import settings
from app.core.exceptions import UnboundedDirectionError
from app.lattice.functions import AtomSet, Func
from app.lattice.norms import build_oracle, pnorm_spec, rectangularize, scaled, v_basis_pullback, vnorm
from app.schemas.schemas import parse_norm_spec
from app.services import certify_service
from app.services.certify_service import CertifyService, SetFamily, direction_seeds
from app.utils.helpers import dump_report_json

BUDGET = 1000
SQRT2 = math.sqrt(2.0)


@pytest.fixture
def bbody_service(bbody):
    return CertifyService(bbody, budget=BUDGET, seed=0)


def test_set_family_exhaustive_below_cap():
    family = SetFamily.all_or_sampled(4, seed=0)
    assert family.exhaustive
    assert family.size == 16
    assert family.mask(5).tolist() == [True, False, True, False]


def test_set_family_sampled_above_cap(mocker):
    mocker.patch.object(settings, "exhaustive_cap", 3)
    family = SetFamily.all_or_sampled(5, seed=0)
    assert not family.exhaustive
    assert family.masks[0].all()


def test_direction_seeds_contain_v_basis():
    seeds = direction_seeds(4)
    assert any(np.array_equal(row, [1.0, 1.0, 1.0, 1.0]) for row in seeds)
    assert any(np.array_equal(row, [1.0, 1.0, 0.0, 0.0]) for row in seeds)


def test_bbody_constants(bbody_service):
    restriction = bbody_service.restriction_constant()
    unconditional = bbody_service.unconditional_constant()
    ideal = bbody_service.ideal_constant()
    monotonicity = bbody_service.monotonicity_constant()

    assert restriction.value == pytest.approx(1.0, abs=1e-6)
    assert unconditional.value == pytest.approx(SQRT2, abs=1e-6)
    assert ideal.value == pytest.approx(SQRT2, abs=1e-6)
    assert monotonicity.value == pytest.approx(1.0, abs=1e-6)
    assert unconditional.method == "exhaustive"
    assert not unconditional.exact


def test_bbody_riesz_violation(bbody_service):
    violation = bbody_service.riesz_violation()
    assert violation is not None
    assert violation.ratio >= SQRT2 - 1e-6

    norm = build_oracle(bbody_service.spec)
    f, g = np.asarray(violation.f), np.asarray(violation.g)
    assert np.all(np.abs(f) <= np.abs(g) + 1e-12)
    assert norm(f) / norm(g) == pytest.approx(violation.ratio, rel=1e-8)


def test_riesz_norms_have_no_violation(bbody):
    assert certify_service.riesz_violation(pnorm_spec(2.0, [1.0, 1.0, 1.0]), budget=BUDGET) is None
    assert certify_service.riesz_violation(vnorm(bbody), budget=BUDGET) is None


def test_lattice_norm_constants_are_exact():
    service = CertifyService(pnorm_spec(2.0), dimension=3, budget=BUDGET)
    for estimate in (service.restriction_constant(), service.unconditional_constant(), service.ideal_constant()):
        assert estimate.value == pytest.approx(1.0, abs=1e-12)
        assert estimate.exact
    assert service.monotonicity_constant().value == pytest.approx(1.0, abs=1e-12)


def test_sampled_family_reports_random_method(mocker):
    mocker.patch.object(settings, "exhaustive_cap", 2)
    service = CertifyService(pnorm_spec(2.0), dimension=3, budget=BUDGET)
    assert service.restriction_constant().method == "random+refine"


@pytest.mark.parametrize("n", [2, 4])
def test_vpullback_restriction_grows(n):
    service = CertifyService(v_basis_pullback(n), budget=BUDGET)
    estimate = service.restriction_constant()
    assert estimate.value >= n - 1e-9
    assert service.replay_matches(estimate)


@pytest.mark.slow
@pytest.mark.parametrize("n", [8, 16])
def test_vpullback_restriction_grows_in_large_dimension(n):
    service = CertifyService(v_basis_pullback(n), budget=BUDGET, refine_steps=20)
    estimate = service.restriction_constant()
    assert estimate.value >= n - 1e-9
    assert estimate.method == "exhaustive"
    assert estimate.refine_steps <= settings.refine_work_cap // (2 * n * 2 ** n)
    assert service.replay_matches(estimate)


def test_vpullback_abs_lipschitz_witness():
    n = 4
    estimate = certify_service.abs_lipschitz(v_basis_pullback(n), budget=BUDGET)
    assert estimate.value >= n * math.sqrt(4.0 + 1.0 / n ** 2) - 1e-9


def test_vpullback_monotonicity_exceeds_one():
    estimate = certify_service.monotonicity_constant(v_basis_pullback(2), budget=BUDGET)
    assert estimate.value >= SQRT2 - 1e-9
    f, g = np.asarray(estimate.witness.f), np.asarray(estimate.witness.g)
    assert np.all(f >= 0) and np.all(f <= g + 1e-12)


def test_basis_constant_bounded_by_restriction():
    service = CertifyService(v_basis_pullback(3), budget=BUDGET)
    basis = service.basis_constant()
    restriction = service.restriction_constant(warm=[np.asarray(basis.witness.f)])
    assert 1 <= basis.witness.index <= 3
    assert basis.value <= restriction.value * (1 + 1e-12)


def test_coordinate_bounds_hold():
    report = certify_service.coordinate_bounds(v_basis_pullback(3), budget=BUDGET)
    assert report.holds
    assert [b.atom for b in report.bounds] == [0, 1, 2]


def test_multiplier_and_vnorm_checks_on_bbody(bbody_service):
    restriction = bbody_service.restriction_constant()
    multiplier = bbody_service.multiplier_check(restriction)
    assert multiplier.mode == "strict"
    assert multiplier.violations == 0
    assert multiplier.max_product_ratio <= 4.0

    report = bbody_service.vnorm_equivalence_check(restriction)
    assert report.mode == "strict"
    assert report.bound_violations == 0
    assert report.triangle_violations == 0
    assert report.cone_mismatches == 0
    assert 0.5 <= report.min_ratio and report.max_ratio <= 2.0


def test_simple_monotonicity_strict_and_diagnostic(euclidean):
    strict = certify_service.simple_monotonicity_check(euclidean, samples=2000, dimension=4, budget=BUDGET)
    assert strict.mode == "strict"
    assert strict.violations == 0

    diagnostic = certify_service.simple_monotonicity_check(v_basis_pullback(3), samples=2000, budget=BUDGET)
    assert diagnostic.mode == "diagnostic"


def test_equivalence_with_vnorm(bbody):
    report = certify_service.equivalence_constants(bbody, vnorm(bbody), budget=BUDGET)
    assert report.upper == pytest.approx(SQRT2, abs=1e-6)
    assert report.lower >= 0.5
    assert report.upper <= 2.0


def test_rectangularization_equivalence():
    inner = v_basis_pullback(3)
    service = CertifyService(inner, budget=BUDGET)
    report = service.equivalence_constants(build_oracle(rectangularize(inner)), service.oracle)
    restriction = service.restriction_constant(warm=[np.asarray(report.upper_witness)])
    assert report.lower >= 1.0 - 1e-12
    assert report.upper <= restriction.value * (1 + 1e-9)


def test_replay_reproduces_each_constant(bbody_service):
    for estimate in (
        bbody_service.restriction_constant(),
        bbody_service.basis_constant(),
        bbody_service.monotonicity_constant(),
        bbody_service.unconditional_constant(),
        bbody_service.ideal_constant(),
        bbody_service.abs_lipschitz(),
    ):
        assert certify_service.replay_estimate(bbody_service.spec, estimate) == pytest.approx(
            estimate.value, rel=4 * settings.gauge_tol
        )


def test_budget_never_decreases_estimates():
    spec = v_basis_pullback(3)
    values = [certify_service.unconditional_constant(spec, budget=b, seed=1).value for b in (1000, 2000, 3000)]
    assert values == sorted(values)


@pytest.mark.parametrize("spec_name", [
    "bbody", "euclidean", "vpullback", "bbody-vnorm", "weighted-pnorm",
    "rectangularized-vpullback", "rectangularized-bbody", "scaled-vpullback",
])
def test_analysis_audit_passes(spec_name, bbody):
    spec, dimension = {
        "bbody": (bbody, None),
        "euclidean": (pnorm_spec(2.0), 3),
        "vpullback": (v_basis_pullback(3), None),
        "bbody-vnorm": (vnorm(bbody), None),
        "weighted-pnorm": (pnorm_spec(1.5, [1.0, 2.0, 0.5]), None),
        "rectangularized-vpullback": (rectangularize(v_basis_pullback(3)), None),
        "rectangularized-bbody": (rectangularize(bbody), None),
        "scaled-vpullback": (scaled(2.0, v_basis_pullback(3)), None),
    }[spec_name]
    report = certify_service.analyze(spec, dimension=dimension, budget=BUDGET, seed=0)
    failed = [check.name for check in report.relations if check.asserted and not check.holds]
    assert failed == []
    assert report.audit_passed
    assert report.schema_version == "latticelab/1"
    assert report.verdicts["rectangular"].holds


def test_bbody_analysis_report(bbody):
    report = certify_service.analyze(bbody, budget=BUDGET, seed=0)
    constants = report.constants
    assert constants["restriction"].value == pytest.approx(1.0, abs=1e-6)
    assert constants["ideal"].value == pytest.approx(SQRT2, abs=1e-6)
    assert constants["unconditional"].value == pytest.approx(SQRT2, abs=1e-6)
    assert constants["monotonicity"].value == pytest.approx(1.0, abs=1e-6)
    assert report.riesz_violation is not None
    assert report.verdicts["strictly_rectangular"].holds
    assert not report.verdicts["riesz"].holds
    assert report.verdicts["riesz"].certified
    assert report.config.dimension == 2


def test_vpullback_analysis_report():
    report = certify_service.analyze(v_basis_pullback(4), budget=BUDGET, seed=0)
    restriction = report.constants["restriction"]
    assert restriction.value >= 4.0 - 1e-9
    assert not report.verdicts["strictly_rectangular"].holds
    assert report.vnorm_equivalence.mode == "diagnostic"
    assert report.multiplier.mode == "diagnostic"


def test_analysis_is_deterministic(bbody):
    first = dump_report_json(certify_service.analyze(bbody, budget=BUDGET, seed=3))
    second = dump_report_json(certify_service.analyze(bbody, budget=BUDGET, seed=3))
    assert first == second


def test_parallel_analysis_equals_serial():
    spec = v_basis_pullback(3)
    serial = certify_service.analyze(spec, budget=2 * BUDGET, seed=1, jobs=1)
    parallel = certify_service.analyze(spec, budget=2 * BUDGET, seed=1, jobs=4)
    assert dump_report_json(serial) == dump_report_json(parallel)


def test_unbounded_body_is_degenerate():
    spec = parse_norm_spec({"type": "gauge", "body": {"prim": "slab", "a": [1.0, 0.0], "c": 1.0}})
    with pytest.raises(UnboundedDirectionError):
        certify_service.analyze(spec, budget=BUDGET)


def test_report_witness_reproduces_restriction():
    report = certify_service.analyze(v_basis_pullback(2), budget=BUDGET)
    witness = report.constants["restriction"].witness
    norm = build_oracle(v_basis_pullback(2))
    ratio = norm(Func(witness.f) * AtomSet.of(2, witness.atoms).mask) / norm(witness.f)
    assert ratio == pytest.approx(report.constants["restriction"].value, rel=1e-9)
