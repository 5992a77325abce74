"""Large random suites for the inequalities every suite norm must satisfy.

Skip them with `pytest -m "not slow"`.
"""
import numpy as np
import pytest

from app.lattice.functions import subset_masks
from app.lattice.norms import (
    bbody_spec, build_oracle, evaluation_slack, pnorm_spec, rectangularize, v_basis_pullback, vnorm
)

pytestmark = pytest.mark.slow

LARGE = 100_000
MEDIUM = 10_000
SMALL = 1_000

SUITE = {
    "pnorm": (pnorm_spec(2.0), 3),
    "weighted-pnorm": (pnorm_spec(1.5, [1.0, 2.0, 0.5]), None),
    "bbody": (bbody_spec(), None),
    "bbody-vnorm": (vnorm(bbody_spec()), None),
    "vpullback": (v_basis_pullback(4), None),
    "vpullback-rectangularized": (rectangularize(v_basis_pullback(4)), None),
}

# restriction constant 1, so the V-norm and multiplier bounds apply
STRICTLY_RECTANGULAR = ["pnorm", "weighted-pnorm", "bbody", "bbody-vnorm", "vpullback-rectangularized"]


def _oracle(name):
    spec, dimension = SUITE[name]
    return build_oracle(spec, dimension), evaluation_slack(spec)


def _sample(rng, m, n):
    return rng.standard_normal((m, n)) * rng.uniform(0.1, 10.0, size=(m, 1))


@pytest.mark.parametrize("name", list(SUITE))
def test_norm_axioms(name):
    norm, slack = _oracle(name)
    rng = np.random.default_rng(11)
    F = _sample(rng, MEDIUM, norm.dimension)
    G = _sample(rng, MEDIUM, norm.dimension)
    c = rng.uniform(-5.0, 5.0, size=MEDIUM)

    nf, ng = norm.evaluate_many(F), norm.evaluate_many(G)
    assert np.all(nf > 0)
    scaled = norm.evaluate_many(F * c[:, None])
    assert np.all(np.abs(scaled - np.abs(c) * nf) <= slack * np.abs(c) * nf)
    assert np.all(norm.evaluate_many(F + G) <= (nf + ng) * (1 + slack) + 1e-9)
    assert np.all(norm.evaluate_many(np.zeros((3, norm.dimension))) == 0.0)


@pytest.mark.parametrize("name", STRICTLY_RECTANGULAR)
def test_modulus_bounds(name):
    norm, slack = _oracle(name)
    F = _sample(np.random.default_rng(12), LARGE, norm.dimension)
    nf, nabs = norm.evaluate_many(F), norm.evaluate_many(np.abs(F))
    assert np.all(0.5 * nf <= nabs * (1 + slack))
    assert np.all(nabs <= 2.0 * nf * (1 + slack))


def test_bbody_vnorm_triangle_inequality():
    norm = build_oracle(vnorm(bbody_spec()))
    slack = evaluation_slack(vnorm(bbody_spec()))
    rng = np.random.default_rng(13)
    F, G = _sample(rng, LARGE, 2), _sample(rng, LARGE, 2)
    lhs = norm.evaluate_many(F + G)
    rhs = norm.evaluate_many(F) + norm.evaluate_many(G)
    assert np.all(lhs <= rhs * (1 + slack))


def test_bbody_modulus_lipschitz():
    norm = build_oracle(bbody_spec())
    rng = np.random.default_rng(14)
    G, H = _sample(rng, LARGE, 2), _sample(rng, LARGE, 2)
    ratio = norm.evaluate_many(np.abs(G) - np.abs(H)) / norm.evaluate_many(G - H)
    assert ratio.max() <= 4.0 + 1e-6


@pytest.mark.parametrize("name", STRICTLY_RECTANGULAR)
def test_multiplier_inequalities(name):
    norm, slack = _oracle(name)
    rng = np.random.default_rng(15)
    n = norm.dimension
    S = rng.uniform(-1.0, 1.0, size=(MEDIUM, n))
    G = _sample(rng, MEDIUM, n)
    sup = np.abs(S).max(axis=1)

    product = norm.evaluate_many(S * G)
    assert np.all(product <= 4.0 * sup * norm.evaluate_many(G) * (1 + slack))
    modulus = norm.evaluate_many(np.abs(S * G))
    assert np.all(modulus <= sup * norm.evaluate_many(np.abs(G)) * (1 + slack))


def test_pnorm_multiplier_ratio_is_at_most_one():
    norm = build_oracle(pnorm_spec(2.0), 5)
    rng = np.random.default_rng(16)
    S = rng.uniform(-1.0, 1.0, size=(MEDIUM, 5))
    G = rng.standard_normal((MEDIUM, 5))
    ratio = norm.evaluate_many(S * G) / (np.abs(S).max(axis=1) * norm.evaluate_many(G))
    assert ratio.max() <= 1.0 + 1e-12


@pytest.mark.parametrize("name", ["bbody", "pnorm", "vpullback"])
def test_rectangularization_contract(name):
    spec, dimension = SUITE[name]
    norm = build_oracle(spec, dimension)
    rect = build_oracle(rectangularize(spec), dimension)
    slack = evaluation_slack(rectangularize(spec))
    n = norm.dimension
    masks = subset_masks(n).astype(float)
    F = _sample(np.random.default_rng(17), SMALL, n)

    nf, nr = norm.evaluate_many(F), rect.evaluate_many(F)
    assert np.all(nf <= nr * (1 + slack))
    if name != "vpullback":
        # restriction constant 1
        assert np.all(nr <= nf * (1 + 1e-6))

    for mask in masks:
        assert np.all(rect.evaluate_many(F * mask) <= nr * (1 + slack))
