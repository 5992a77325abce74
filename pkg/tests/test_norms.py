import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, DimensionTooLargeError, SpecParseError, SpecValidationError
from app.lattice.functions import AtomSet, Func, MeasureSpace, all_subsets, restrict
from app.lattice.norms import (
    build_oracle, evaluation_slack, infer_dimension, lp_spec, pnorm_spec, rectangularize, scaled,
    spec_depth, v_basis_pullback, vnorm
)
from app.schemas.schemas import dump_norm_spec, parse_norm_spec


def test_pnorm_values():
    assert build_oracle(pnorm_spec(2.0), 2)([3.0, 4.0]) == pytest.approx(5.0)
    assert build_oracle(pnorm_spec(1.0), 3)([1.0, -2.0, 3.0]) == pytest.approx(6.0)
    assert build_oracle(parse_norm_spec({"type": "pnorm", "p": "inf"}), 3)([1.0, -7.0, 3.0]) == 7.0


def test_weighted_pnorm_is_lp_of_measure():
    space = MeasureSpace((0.25, 4.0))
    norm = build_oracle(lp_spec(space, 2.0))
    f = [2.0, 1.0]
    assert norm(f) == pytest.approx(math.sqrt(space.integrate(np.square(f))))


def test_evaluate_many_matches_single_rows():
    norm = build_oracle(v_basis_pullback(5))
    X = np.random.default_rng(3).standard_normal((20, 5))
    batch = norm.evaluate_many(X)
    assert batch.tolist() == pytest.approx([norm(row) for row in X], rel=1e-12)


finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


@hyp_settings(max_examples=300, deadline=None)
@given(f=arrays(np.float64, 4, elements=finite), g=arrays(np.float64, 4, elements=finite), c=finite)
def test_pullback_norm_axioms(f, g, c):
    norm = build_oracle(v_basis_pullback(4))
    nf, ng = norm(f), norm(g)
    assert nf >= 0.0
    assert_allclose(norm(c * f), abs(c) * nf, rtol=1e-9, atol=1e-9)
    assert norm(f + g) <= (nf + ng) * (1 + 1e-9) + 1e-9
    if np.max(np.abs(f)) >= 1e-6:
        assert nf > 0.0


@pytest.mark.parametrize("k", range(1, 65))
def test_v_basis_norms(k):
    n = 64
    norm = build_oracle(v_basis_pullback(n))
    v_k = Func.indicator(AtomSet.of(n, range(k)))
    assert norm(v_k) == pytest.approx(1.0 / k, rel=1e-12)


def test_v_basis_small_values():
    norm = build_oracle(v_basis_pullback(2))
    assert norm([0.0, 1.0]) == pytest.approx(math.sqrt(5.0) / 2, rel=1e-12)
    assert norm([-1.0, 1.0]) == pytest.approx(math.sqrt(17.0) / 2, rel=1e-12)


def test_bbody_gauge_norm(bbody):
    norm = build_oracle(bbody)
    assert norm.dimension == 2
    assert norm([1.0, 1.0]) == pytest.approx(math.sqrt(2.0), abs=1e-9)
    assert norm([-1.0, 1.0]) == pytest.approx(2.0, abs=1e-9)


def test_vnorm_of_bbody(bbody):
    norm = build_oracle(vnorm(bbody))
    assert norm([-1.0, 1.0]) == pytest.approx(math.sqrt(2.0), abs=1e-9)


def test_scaled_norm(euclidean):
    assert build_oracle(scaled(3.0, euclidean), 2)([3.0, 4.0]) == pytest.approx(15.0)


def test_rectangularized_is_max_over_restrictions():
    inner = v_basis_pullback(3)
    rect = build_oracle(rectangularize(inner))
    base = build_oracle(inner)
    f = Func([1.0, -2.0, 0.5])
    expected = max(base(restrict(f, atoms)) for atoms in all_subsets(3))
    assert rect(f) == pytest.approx(expected, rel=1e-12)
    assert build_oracle(rectangularize(v_basis_pullback(2)))([1.0, 1.0]) == pytest.approx(math.sqrt(5.0) / 2)


def test_rectangularized_contract():
    """‖f‖ ≤ ‖f‖_r and restriction never increases ‖·‖_r"""
    n = 4
    inner = build_oracle(v_basis_pullback(n))
    rect = build_oracle(rectangularize(v_basis_pullback(n)))
    X = np.random.default_rng(7).standard_normal((200, n))
    assert np.all(inner.evaluate_many(X) <= rect.evaluate_many(X) * (1 + 1e-12))
    r = rect.evaluate_many(X)
    for atoms in all_subsets(n):
        assert np.all(rect.evaluate_many(X * atoms.mask) <= r * (1 + 1e-12))


def test_rectangularized_cap(mocker):
    mocker.patch.object(settings, "rectangularize_cap", 3)
    with pytest.raises(DimensionTooLargeError):
        build_oracle(rectangularize(pnorm_spec(2.0)), 4)


def test_sampled_rectangularization_is_lower_bound():
    inner = v_basis_pullback(6)
    exact = build_oracle(rectangularize(inner))
    sampled = build_oracle(rectangularize(inner, mode="sampled", samples=16))
    X = np.random.default_rng(0).standard_normal((50, 6))
    assert np.all(sampled.evaluate_many(X) <= exact.evaluate_many(X) * (1 + 1e-12))
    assert not sampled.restriction_contractive


def test_structural_flags(bbody, euclidean):
    assert build_oracle(euclidean, 3).sign_invariant
    assert build_oracle(euclidean, 3).restriction_contractive
    assert not build_oracle(bbody).sign_invariant
    assert build_oracle(vnorm(bbody)).sign_invariant
    assert build_oracle(rectangularize(v_basis_pullback(3))).restriction_contractive
    assert build_oracle(scaled(2.0, euclidean), 3).sign_invariant


def test_infer_dimension(bbody, euclidean):
    assert infer_dimension(bbody) == 2
    assert infer_dimension(euclidean) is None
    assert infer_dimension(rectangularize(v_basis_pullback(5))) == 5


def test_dimension_errors(bbody, euclidean):
    with pytest.raises(SpecValidationError):
        build_oracle(euclidean)
    with pytest.raises(DimensionMismatchError):
        build_oracle(bbody, 3)
    with pytest.raises(DimensionMismatchError):
        build_oracle(euclidean, 2)([1.0, 2.0, 3.0])
    with pytest.raises(DimensionMismatchError):
        build_oracle(pnorm_spec(2.0, weights=[1.0, 2.0]), 3)


def test_singular_pullback_rejected():
    spec = parse_norm_spec({"type": "pullback", "matrix": [[1, 1], [1, 1]], "inner": {"type": "pnorm"}})
    with pytest.raises(SpecValidationError):
        build_oracle(spec)


def test_spec_depth_limit(euclidean):
    spec = euclidean
    for _ in range(settings.max_spec_depth):
        spec = scaled(1.0, spec)
    assert spec_depth(spec) == settings.max_spec_depth + 1
    with pytest.raises(SpecValidationError):
        build_oracle(spec, 2)


def test_parse_errors():
    with pytest.raises(SpecParseError) as exc:
        parse_norm_spec("{not json")
    assert exc.value.exit_code == 2
    with pytest.raises(SpecValidationError) as exc:
        parse_norm_spec({"type": "pnorm", "p": 0.5})
    assert exc.value.exit_code == 3
    with pytest.raises(SpecValidationError):
        parse_norm_spec({"type": "nosuch"})
    with pytest.raises(SpecValidationError):
        parse_norm_spec({"type": "pnorm", "extra": 1})


def test_spec_json_round_trip(bbody):
    data = dump_norm_spec(rectangularize(vnorm(bbody)))
    assert dump_norm_spec(parse_norm_spec(data)) == data
    assert dump_norm_spec(parse_norm_spec({"type": "pnorm", "p": "inf"}))["p"] == "inf"


def test_evaluation_slack(bbody, euclidean):
    assert evaluation_slack(euclidean) == settings.replay_tol
    assert evaluation_slack(vnorm(bbody)) == max(settings.replay_tol, 4 * settings.gauge_tol)


@pytest.mark.parametrize("name", ["bbody", "euclidean", "vpullback4"])
def test_vnorm_is_idempotent(name, request):
    spec = request.getfixturevalue(name)
    dimension = infer_dimension(spec) or 4
    once = build_oracle(vnorm(spec), dimension)
    twice = build_oracle(vnorm(vnorm(spec)), dimension)
    X = np.random.default_rng(11).standard_normal((500, dimension)) * 3.0
    assert_allclose(twice.evaluate_many(X), once.evaluate_many(X), rtol=1e-12)
