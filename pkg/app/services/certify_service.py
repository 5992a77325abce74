"""Structural constants of a norm, with witnesses, and the audit relating them.

Every constant is a supremum of a scale-invariant ratio. The outer search
over directions is seeded random sampling plus pattern-search refinement, so
the reported values are lower bounds reproduced by their witnesses. Inner
combinatorial loops (atom sets, sign patterns) are enumerated completely up
to ``settings.exhaustive_cap`` atoms.
"""
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import DegenerateNormError
from app.core.logging import get_logger
from app.lattice.functions import AtomSet, Func, SimpleRep, restrict, sign_patterns, subset_masks
from app.lattice.norms import (
    NormOracle, VNormOracle, build_oracle, evaluation_slack, rectangularize, spec_depth
)
from app.schemas.schemas import (
    ConstantEstimate, CoordinateBound, CoordinateBoundsReport, EquivalenceReport, MultiplierReport,
    NormSpec, PropertyReport, RelationCheck, RieszViolation, RunConfigEcho, SimpleMonotonicityReport,
    Verdict, VNormReport, Witness, VNormSpec, dump_norm_spec
)
from app.services.search_service import RatioSearch, block_rng, unit_rows

logger = get_logger(__name__)

# rows x family members per oracle call
_CHUNK = 1 << 18
_FAMILY_CHUNK = 1 << 16
_SAMPLED_FAMILY = 4096
MONOTONE_BOUNDARY_CAP = 10
GRID_CAP = 6
RECTANGULARIZATION_AUDIT_CAP = 10

DIRECTION = "direction"


class SetFamily:
    """Atom sets scanned by an inner loop: all of them, or a fixed sample."""

    def __init__(self, n: int, masks: Optional[np.ndarray] = None):
        self.n = n
        self.masks = masks

    @classmethod
    def all_or_sampled(cls, n: int, seed: int, extra: Sequence[np.ndarray] = ()) -> "SetFamily":
        if n <= settings.exhaustive_cap:
            return cls(n)
        eye = np.eye(n, dtype=bool)
        lower = np.tril(np.ones((n, n), dtype=bool))
        rows = [np.ones((1, n), dtype=bool), eye, ~eye, lower, lower[::-1, ::-1]]
        rows += [np.asarray(m, dtype=bool)[None, :] for m in extra]
        rng = block_rng(seed, "family", 0)
        rows.append(rng.random((_SAMPLED_FAMILY, n)) < 0.5)
        return cls(n, np.vstack(rows))

    @classmethod
    def initial_segments(cls, n: int) -> "SetFamily":
        return cls(n, np.tril(np.ones((n, n), dtype=bool)))

    @property
    def exhaustive(self) -> bool:
        return self.masks is None

    @property
    def size(self) -> int:
        return (1 << self.n) if self.masks is None else len(self.masks)

    def chunks(self) -> Iterator[Tuple[int, np.ndarray]]:
        if self.masks is not None:
            yield 0, self.masks
            return
        for start in range(0, 1 << self.n, _FAMILY_CHUNK):
            yield start, subset_masks(self.n, start, min(1 << self.n, start + _FAMILY_CHUNK))

    def mask(self, index: int) -> np.ndarray:
        if self.masks is not None:
            return self.masks[index]
        return subset_masks(self.n, index, index + 1)[0]


def best_over_family(oracle: NormOracle, X: np.ndarray, family: SetFamily, signs: bool) -> Tuple[np.ndarray, np.ndarray]:
    """Per row of X: max over the family of ‖χ_A x‖ (or of ‖ε_A x‖ with ε = -1 on A)."""
    m, n = X.shape
    best = np.full(m, -np.inf)
    index = np.zeros(m, dtype=np.int64)
    for offset, masks in family.chunks():
        factors = np.where(masks, -1.0, 1.0) if signs else masks.astype(float)
        rows_per_chunk = max(1, _CHUNK // len(factors))
        for start in range(0, m, rows_per_chunk):
            block = X[start:start + rows_per_chunk]
            Y = (block[:, None, :] * factors[None, :, :]).reshape(-1, n)
            vals = oracle.evaluate_many(Y).reshape(block.shape[0], len(factors))
            j = np.argmax(vals, axis=1)
            v = vals[np.arange(block.shape[0]), j]
            window = slice(start, start + block.shape[0])
            better = v > best[window]
            best[window] = np.where(better, v, best[window])
            index[window] = np.where(better, offset + j, index[window])
    return best, index


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.full(num.shape, -np.inf)
    np.divide(num, den, out=out, where=den > 0)
    return out


def direction_seeds(n: int, warm: Sequence[np.ndarray] = ()) -> np.ndarray:
    """Coordinate vectors, segment indicators, and for small n a sign x magnitude grid."""
    eye = np.eye(n)
    lower = np.tril(np.ones((n, n)))
    rows = [eye, lower, _final_segments(n)[1:]]
    rows.append(np.where(np.arange(n) % 2 == 0, 1.0, -1.0)[None, :])
    if n <= GRID_CAP:
        magnitudes = np.array(list(product((1.0, 2.0), repeat=n)))
        signs = sign_patterns(n)
        rows.append((magnitudes[:, None, :] * signs[None, :, :]).reshape(-1, n))
    rows += [np.asarray(w, dtype=float)[None, :] for w in warm]
    return np.vstack(rows)


def _final_segments(n: int) -> np.ndarray:
    return np.triu(np.ones((n, n)))


def _estimate(name: str, value: float, witness: Witness, exhaustive: bool, exact: bool,
              candidates: int, refine_steps: int, notes: Optional[str] = None) -> ConstantEstimate:
    return ConstantEstimate(
        name=name,
        value=value,
        witness=witness,
        method="exhaustive" if exhaustive else "random+refine",
        exact=exact,
        candidates=candidates,
        refine_steps=refine_steps,
        notes=notes,
    )


class CertifyService:
    """Estimators for one norm at one (seed, budget)."""

    def __init__(
        self,
        spec: NormSpec,
        dimension: Optional[int] = None,
        budget: int = None,
        seed: int = None,
        refine_steps: int = None,
        jobs: int = None,
        tol: float = None,
    ):
        self.spec = spec
        self.tol = settings.gauge_tol if tol is None else tol
        self.oracle = build_oracle(spec, dimension, self.tol)
        self.n = self.oracle.dimension
        self.budget = settings.default_budget if budget is None else budget
        self.seed = settings.default_seed if seed is None else seed
        self.refine_steps = settings.refine_steps if refine_steps is None else refine_steps
        self.jobs = settings.jobs if jobs is None else jobs
        self.slack = evaluation_slack(spec)
        self.subsets = SetFamily.all_or_sampled(self.n, self.seed)

    @property
    def lattice_norm(self) -> bool:
        return self.oracle.sign_invariant and self.oracle.restriction_contractive

    def _search(self, objective, tag: str, width: int = None, seeds=None, **kwargs):
        return RatioSearch(
            objective,
            width or self.n,
            tag,
            budget=self.budget,
            seed=self.seed,
            refine_steps=self.refine_steps,
            jobs=self.jobs,
            seeds=seeds,
            **kwargs,
        ).run()

    def _family_objective(self, family: SetFamily, signs: bool):
        def objective(X):
            num, index = best_over_family(self.oracle, X, family, signs)
            return _ratio(num, self.oracle.evaluate_many(X)), index
        return objective

    def _sign_family(self, warm_masks: Sequence[np.ndarray] = ()) -> SetFamily:
        if not warm_masks or self.n <= settings.exhaustive_cap:
            return self.subsets
        return SetFamily.all_or_sampled(self.n, self.seed, warm_masks)

    # Restriction constant
    def restriction_constant(self, warm: Sequence[np.ndarray] = ()) -> ConstantEstimate:
        """sup over f ≠ 0 and A of ‖χ_A f‖ / ‖f‖"""
        result = self._search(
            self._family_objective(self.subsets, signs=False), DIRECTION, seeds=direction_seeds(self.n, warm),
            row_cost=self.subsets.size,
        )
        atoms = np.flatnonzero(self.subsets.mask(result.aux)).tolist()
        estimate = _estimate(
            "restriction", result.value, Witness(f=result.x.tolist(), atoms=atoms),
            self.subsets.exhaustive, self.oracle.restriction_contractive,
            result.candidates, result.refine_steps,
            "closed form: coordinate deletion does not increase the norm"
            if self.oracle.restriction_contractive else None,
        )
        logger.info("Restriction constant estimated", value=estimate.value, candidates=estimate.candidates)
        return estimate

    def basis_constant(self, warm: Sequence[np.ndarray] = ()) -> ConstantEstimate:
        """sup over f ≠ 0 and N of ‖χ_{first N atoms} f‖ / ‖f‖"""
        family = SetFamily.initial_segments(self.n)
        result = self._search(
            self._family_objective(family, signs=False), DIRECTION, seeds=direction_seeds(self.n, warm),
            row_cost=family.size,
        )
        estimate = _estimate(
            "basis", result.value, Witness(f=result.x.tolist(), index=int(result.aux) + 1),
            True, self.oracle.restriction_contractive, result.candidates, result.refine_steps,
        )
        logger.info("Basis constant estimated", value=estimate.value)
        return estimate

    # Monotonicity constant
    def _monotone_pairs(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = self.n
        g = np.abs(X[:, :n])
        u = np.clip(X[:, n:], 0.0, 1.0)
        return g * u, g

    def _monotone_objective(self, X: np.ndarray):
        f, g = self._monotone_pairs(X)
        den = self.oracle.evaluate_many(g)
        scores = _ratio(self.oracle.evaluate_many(f), den)
        aux = np.full(X.shape[0], -1, dtype=np.int64)
        if self.n <= MONOTONE_BOUNDARY_CAP:
            num, index = best_over_family(self.oracle, g, SetFamily(self.n), signs=False)
            boundary = _ratio(num, den)
            better = boundary > scores
            scores = np.where(better, boundary, scores)
            aux = np.where(better, index, aux)
        return scores, aux

    def _monotone_normalize(self, X: np.ndarray) -> np.ndarray:
        n = self.n
        return np.hstack([unit_rows(X[:, :n]), np.clip(X[:, n:], 0.0, 1.0)])

    def _monotone_seeds(self, warm: Sequence[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
        n = self.n
        eye = np.eye(n)
        bases = [np.ones(n)] + list(np.tril(np.ones((n, n)))) + list(eye)
        scales = [np.ones(n), np.full(n, 0.5)] + list(eye) + list(1.0 - eye)
        rows = [np.concatenate([g, u]) for g in bases for u in scales]
        rows += [np.concatenate([np.asarray(g), np.asarray(u)]) for g, u in warm]
        return np.vstack(rows)

    def monotonicity_constant(self, warm: Sequence[Tuple[np.ndarray, np.ndarray]] = ()) -> ConstantEstimate:
        """sup of ‖f‖ / ‖g‖ over 0 ≤ f ≤ g, with f = g ⊙ u for u ∈ [0,1]^n"""
        result = self._search(
            self._monotone_objective, "monotone", width=2 * self.n,
            seeds=self._monotone_seeds(warm),
            sampler=lambda rng, m, width: np.hstack([
                rng.standard_normal((m, width // 2)), rng.random((m, width // 2))
            ]),
            normalize=self._monotone_normalize,
        )
        row = result.x[None, :]
        f, g = self._monotone_pairs(row)
        if result.aux >= 0:
            f = g * SetFamily(self.n).mask(result.aux)
        estimate = _estimate(
            "monotonicity", result.value, Witness(f=f[0].tolist(), g=g[0].tolist()),
            False, self.lattice_norm, result.candidates, result.refine_steps,
        )
        logger.info("Monotonicity constant estimated", value=estimate.value)
        return estimate

    # Sign patterns and multipliers
    def unconditional_constant(self, warm: Sequence[np.ndarray] = (), warm_masks: Sequence[np.ndarray] = ()) -> ConstantEstimate:
        """sup over sign patterns ε and f ≠ 0 of ‖ε ⊙ f‖ / ‖f‖"""
        family = self._sign_family(warm_masks)
        result = self._search(
            self._family_objective(family, signs=True), DIRECTION, seeds=direction_seeds(self.n, warm),
            row_cost=family.size,
        )
        signs = np.where(family.mask(result.aux), -1.0, 1.0)
        estimate = _estimate(
            "unconditional", result.value, Witness(f=result.x.tolist(), signs=signs.tolist()),
            family.exhaustive, self.oracle.sign_invariant, result.candidates, result.refine_steps,
            "closed form: the norm ignores signs" if self.oracle.sign_invariant else None,
        )
        logger.info("Unconditional constant estimated", value=estimate.value)
        return estimate

    def ideal_from(self, unconditional: ConstantEstimate,
                   multipliers: Sequence[Tuple[np.ndarray, np.ndarray]] = ()) -> ConstantEstimate:
        """Ideal constant: the sign-pattern optimum, checked against explicit multipliers in [-1,1]^n."""
        best_value = unconditional.value
        witness = Witness(
            f=unconditional.witness.f,
            g=(np.asarray(unconditional.witness.signs) * np.asarray(unconditional.witness.f)).tolist(),
            signs=unconditional.witness.signs,
        )
        for s, m in multipliers:
            s, m = np.asarray(s, dtype=float), np.clip(np.asarray(m, dtype=float), -1.0, 1.0)
            den = self.oracle.evaluate(s)
            if den <= 0:
                continue
            value = self.oracle.evaluate(m * s) / den
            if value > best_value:
                best_value = value
                witness = Witness(f=s.tolist(), g=(m * s).tolist(), signs=m.tolist())
        return ConstantEstimate(
            name="ideal",
            value=best_value,
            witness=witness,
            method=unconditional.method,
            exact=unconditional.exact and self.lattice_norm,
            candidates=unconditional.candidates + len(multipliers),
            refine_steps=unconditional.refine_steps,
        )

    def ideal_constant(self, warm_multipliers: Sequence[Tuple[np.ndarray, np.ndarray]] = ()) -> ConstantEstimate:
        """sup of ‖t‖ / ‖s‖ over |t| ≤ |s|; extreme multipliers are sign patterns"""
        warm = [s for s, _ in warm_multipliers]
        unconditional = self.unconditional_constant(warm)
        estimate = self.ideal_from(unconditional, warm_multipliers)
        logger.info("Ideal constant estimated", value=estimate.value)
        return estimate

    def riesz_from(self, ideal: ConstantEstimate) -> Optional[RieszViolation]:
        if ideal.value <= 1.0 + self.slack:
            return None
        return RieszViolation(f=ideal.witness.g, g=ideal.witness.f, ratio=ideal.value)

    def riesz_violation(self) -> Optional[RieszViolation]:
        """f, g with |f| ≤ |g| and ‖f‖ > ‖g‖, or None if the search finds none"""
        return self.riesz_from(self.ideal_constant())

    # Modulus map
    def _abs_objective(self, X: np.ndarray):
        n = self.n
        g, h = X[:, :n], X[:, n:]
        scores = _ratio(self.oracle.evaluate_many(np.abs(g) - np.abs(h)), self.oracle.evaluate_many(g - h))
        return scores, np.zeros(X.shape[0], dtype=np.int64)

    def abs_lipschitz(self, warm: Sequence[np.ndarray] = ()) -> ConstantEstimate:
        """sup over g ≠ h of ‖|g| - |h|‖ / ‖g - h‖"""
        n = self.n
        eye = np.eye(n)
        shifts = [np.ones(n)] + [np.asarray(w, dtype=float) for w in warm]
        seeds = [np.concatenate([-eye[k] + w, -eye[k]]) for w in shifts for k in range(n)]
        seeds += [np.concatenate([w, np.zeros(n)]) for w in shifts]
        result = self._search(self._abs_objective, "modulus", width=2 * n, seeds=seeds)
        estimate = _estimate(
            "abs_lipschitz", result.value,
            Witness(f=result.x[:n].tolist(), g=result.x[n:].tolist()),
            False, self.lattice_norm, result.candidates, result.refine_steps,
        )
        logger.info("Modulus Lipschitz constant estimated", value=estimate.value)
        return estimate

    # Coordinate functionals
    def _coordinate_search(self, warm: Sequence[np.ndarray] = ()) -> List[Tuple[int, float, np.ndarray, float]]:
        seeds = direction_seeds(self.n, warm)
        out = []
        for k in range(self.n):
            unit = self.oracle.evaluate(Func.basis(self.n, k))
            if unit <= 0:
                raise DegenerateNormError(f"Basis vector e_{k} has norm zero", {"atom": k})

            def objective(X, k=k):
                return _ratio(np.abs(X[:, k]), self.oracle.evaluate_many(X)), np.zeros(X.shape[0], dtype=np.int64)

            result = self._search(objective, DIRECTION, seeds=seeds)
            out.append((k, result.value, result.x, unit))
        return out

    def _coordinate_report(self, found, restriction: ConstantEstimate) -> CoordinateBoundsReport:
        bounds = []
        for k, value, x, unit in found:
            limit = restriction.value / unit
            bounds.append(CoordinateBound(
                atom=k, bound=value, unit_norm=unit, limit=limit,
                holds=value <= limit * (1 + settings.relation_tol), witness=x.tolist(),
            ))
        return CoordinateBoundsReport(
            restriction=restriction.value, bounds=bounds, holds=all(b.holds for b in bounds)
        )

    def coordinate_bounds(self, restriction: Optional[ConstantEstimate] = None) -> CoordinateBoundsReport:
        """sup |f(k)| / ‖f‖ per atom, audited against C / ‖e_k‖"""
        found = self._coordinate_search()
        if restriction is None:
            restriction = self.restriction_constant(warm=[x for _, _, x, _ in found])
        return self._coordinate_report(found, restriction)

    # Randomized checks
    def strictly_rectangular(self, restriction: ConstantEstimate) -> bool:
        return restriction.value <= 1.0 + settings.strict_rect_tol

    def multiplier_check(self, restriction: Optional[ConstantEstimate] = None, pairs: int = None,
                         warm: Sequence[Tuple[np.ndarray, np.ndarray]] = ()) -> MultiplierReport:
        """‖sg‖ ≤ 4‖s‖∞‖g‖ and ‖|sg|‖ ≤ ‖s‖∞‖|g|‖ on random pairs"""
        restriction = restriction or self.restriction_constant()
        strict = self.strictly_rectangular(restriction)
        pairs = self.budget if pairs is None else pairs
        n = self.n

        rng = block_rng(self.seed, "multiplier", 0)
        S = rng.uniform(-1.0, 1.0, (pairs, n))
        G = rng.standard_normal((pairs, n))
        if warm:
            S = np.vstack([S, [s for s, _ in warm]])
            G = np.vstack([G, [g for _, g in warm]])

        sup = np.max(np.abs(S), axis=1)
        product_ratio = _ratio(self.oracle.evaluate_many(S * G), sup * self.oracle.evaluate_many(G))
        modulus_ratio = _ratio(self.oracle.evaluate_many(np.abs(S * G)), sup * self.oracle.evaluate_many(np.abs(G)))

        bad = (product_ratio > 4.0 * (1 + self.slack)) | (modulus_ratio > 1.0 + self.slack)
        worst = int(np.argmax(product_ratio))
        witness_row = int(np.flatnonzero(bad)[0]) if bad.any() else worst
        report = MultiplierReport(
            mode="strict" if strict else "diagnostic",
            pairs=S.shape[0],
            max_product_ratio=float(product_ratio.max()),
            max_modulus_ratio=float(modulus_ratio.max()),
            violations=int(bad.sum()),
            witness=Witness(f=S[witness_row].tolist(), g=G[witness_row].tolist()),
        )
        logger.info("Multiplier check finished", mode=report.mode, violations=report.violations)
        return report

    def vnorm_equivalence_check(self, restriction: Optional[ConstantEstimate] = None,
                                samples: int = None) -> VNormReport:
        """½‖f‖ ≤ ‖|f|‖ ≤ 2‖f‖ (or 1/(2C), 2C), agreement on f ≥ 0, triangle inequality"""
        restriction = restriction or self.restriction_constant()
        strict = self.strictly_rectangular(restriction)
        c = 1.0 if strict else restriction.value
        lower, upper = 1.0 / (2.0 * c), 2.0 * c
        samples = self.budget if samples is None else samples
        n = self.n
        vnorm_oracle = VNormOracle(VNormSpec(inner=self.spec), n, self.oracle)

        rng = block_rng(self.seed, "vnorm", 0)
        F = rng.standard_normal((samples, n))
        H = rng.standard_normal((samples, n))

        norm_f = self.oracle.evaluate_many(F)
        v_f = vnorm_oracle.evaluate_many(F)
        ratio = _ratio(v_f, norm_f)
        out_of_bounds = (ratio < lower * (1 - self.slack)) | (ratio > upper * (1 + self.slack))

        positive = np.abs(F)
        cone_gap = np.abs(vnorm_oracle.evaluate_many(positive) - self.oracle.evaluate_many(positive))
        cone_mismatch = cone_gap > self.slack * np.maximum(1.0, self.oracle.evaluate_many(positive))

        v_h = vnorm_oracle.evaluate_many(H)
        triangle = _ratio(vnorm_oracle.evaluate_many(F + H), v_f + v_h)
        triangle_bad = triangle > 1.0 + self.slack

        witness = None
        if out_of_bounds.any():
            witness = Witness(f=F[np.flatnonzero(out_of_bounds)[0]].tolist())
        elif triangle_bad.any():
            k = np.flatnonzero(triangle_bad)[0]
            witness = Witness(f=F[k].tolist(), g=H[k].tolist())

        report = VNormReport(
            mode="strict" if strict else "diagnostic",
            samples=samples,
            lower_factor=lower,
            upper_factor=upper,
            min_ratio=float(ratio.min()),
            max_ratio=float(ratio.max()),
            bound_violations=int(out_of_bounds.sum()),
            cone_mismatches=int(cone_mismatch.sum()),
            triangle_violations=int(triangle_bad.sum()),
            worst_triangle_ratio=float(triangle.max()),
            witness=witness,
        )
        logger.info(
            "V-norm check finished", mode=report.mode,
            bound_violations=report.bound_violations, triangle_violations=report.triangle_violations,
        )
        return report

    def simple_monotonicity_check(self, restriction: Optional[ConstantEstimate] = None,
                                  samples: int = None, pieces: int = 4) -> SimpleMonotonicityReport:
        """‖Σ a_j χ_{A_j} f‖ ≤ ‖Σ b_j χ_{A_j} f‖ for f ≥ 0, disjoint A_j and 0 ≤ a_j ≤ b_j"""
        restriction = restriction or self.restriction_constant()
        strict = self.strictly_rectangular(restriction)
        samples = settings.check_samples if samples is None else samples
        n = self.n

        rng = block_rng(self.seed, "simple", 0)
        base = np.abs(rng.standard_normal((samples, n)))
        # label 0 leaves the atom out of every piece
        labels = rng.integers(0, pieces + 1, (samples, n))
        hi = rng.random((samples, pieces + 1))
        lo = hi * rng.random((samples, pieces + 1))
        hi[:, 0] = lo[:, 0] = 0.0
        rows = np.arange(samples)[:, None]
        small = lo[rows, labels] * base
        large = hi[rows, labels] * base

        ratio = _ratio(self.oracle.evaluate_many(small), self.oracle.evaluate_many(large))
        bad = ratio > 1.0 + self.slack

        witness = None
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            f = Func(base[k])
            sets = [AtomSet.from_mask(labels[k] == j) for j in range(1, pieces + 1)]
            small_rep = SimpleRep(f, tuple((lo[k, j + 1], atoms) for j, atoms in enumerate(sets)))
            large_rep = SimpleRep(f, tuple((hi[k, j + 1], atoms) for j, atoms in enumerate(sets)))
            witness = Witness(f=small_rep.evaluate().to_json(), g=large_rep.evaluate().to_json())

        finite = ratio[np.isfinite(ratio)]
        report = SimpleMonotonicityReport(
            mode="strict" if strict else "diagnostic",
            samples=samples,
            max_ratio=float(finite.max()) if finite.size else 0.0,
            violations=int(bad.sum()),
            witness=witness,
        )
        logger.info("Simple-function monotonicity check finished", mode=report.mode, violations=report.violations)
        return report

    def equivalence_constants(self, first: NormOracle, second: NormOracle, warm: Sequence[np.ndarray] = (),
                              budget: int = None) -> EquivalenceReport:
        """lower, upper with lower·‖f‖_second ≤ ‖f‖_first ≤ upper·‖f‖_second"""
        seeds = direction_seeds(self.n, warm)
        budget = self.budget if budget is None else budget

        def up(X):
            return _ratio(first.evaluate_many(X), second.evaluate_many(X)), np.zeros(X.shape[0], dtype=np.int64)

        def down(X):
            return _ratio(second.evaluate_many(X), first.evaluate_many(X)), np.zeros(X.shape[0], dtype=np.int64)

        kwargs = dict(budget=budget, seed=self.seed, refine_steps=self.refine_steps, jobs=self.jobs, seeds=seeds)
        upper = RatioSearch(up, self.n, "equivalence-upper", **kwargs).run()
        lower = RatioSearch(down, self.n, "equivalence-lower", **kwargs).run()
        return EquivalenceReport(
            lower=1.0 / lower.value,
            upper=upper.value,
            lower_witness=lower.x.tolist(),
            upper_witness=upper.x.tolist(),
            candidates=upper.candidates + lower.candidates,
        )

    # Witness replay
    def replay_estimate(self, estimate: ConstantEstimate) -> float:
        """Recompute an estimate's ratio from its witness alone."""
        w = estimate.witness
        norm = self.oracle.evaluate
        if estimate.name == "restriction":
            return norm(restrict(w.f, AtomSet.of(self.n, w.atoms))) / norm(w.f)
        if estimate.name == "basis":
            return norm(restrict(w.f, AtomSet.of(self.n, range(w.index)))) / norm(w.f)
        if estimate.name == "monotonicity":
            return norm(w.f) / norm(w.g)
        if estimate.name in ("ideal", "unconditional"):
            return norm(np.asarray(w.signs) * np.asarray(w.f)) / norm(w.f)
        if estimate.name == "abs_lipschitz":
            g, h = np.asarray(w.f), np.asarray(w.g)
            return norm(np.abs(g) - np.abs(h)) / norm(g - h)
        raise ValueError(f"No replay rule for estimate '{estimate.name}'")

    def replay_matches(self, estimate: ConstantEstimate) -> bool:
        replayed = self.replay_estimate(estimate)
        return abs(replayed - estimate.value) <= self.slack * max(1.0, abs(estimate.value))

    # Relations
    def relations_audit(
        self,
        constants: Dict[str, ConstantEstimate],
        riesz: Optional[RieszViolation],
        coordinate: Optional[CoordinateBoundsReport] = None,
        multiplier: Optional[MultiplierReport] = None,
        vnorm_report: Optional[VNormReport] = None,
        simple: Optional[SimpleMonotonicityReport] = None,
        rectangularization: Optional[EquivalenceReport] = None,
    ) -> List[RelationCheck]:
        tol = settings.relation_tol
        r = constants["restriction"].value
        k = constants["unconditional"].value
        ideal = constants["ideal"].value
        mono = constants["monotonicity"].value
        strict = r <= 1.0 + settings.strict_rect_tol

        def le(name, lhs, rhs, a, b, asserted=True, detail=""):
            return RelationCheck(
                name=name, lhs=lhs, rhs=rhs, lhs_value=a, rhs_value=b,
                holds=a <= b + tol * max(1.0, abs(b)), asserted=asserted, detail=detail,
            )

        checks = [
            le("restriction<=ideal", "restriction", "ideal", r, ideal),
            le("unconditional<=ideal", "unconditional", "ideal", k, ideal),
            le("ideal<=unconditional", "ideal", "unconditional", ideal, k, detail="sign patterns are the extreme multipliers"),
            le("restriction<=(1+unconditional)/2", "restriction", "(1+unconditional)/2", r, (1 + k) / 2),
            le("monotonicity<=ideal", "monotonicity", "ideal", mono, ideal),
        ]
        if "basis" in constants:
            checks.append(le("basis<=restriction", "basis", "restriction", constants["basis"].value, r))

        checks.append(RelationCheck(
            name="no_riesz_violation=>ideal~1", lhs="riesz_violation", rhs="ideal",
            lhs_value=None if riesz is None else riesz.ratio, rhs_value=ideal,
            holds=riesz is not None or ideal <= 1 + tol,
        ))
        checks.append(RelationCheck(
            name="ideal>1=>riesz_violation", lhs="ideal", rhs="riesz_violation",
            lhs_value=ideal, rhs_value=None if riesz is None else riesz.ratio,
            holds=ideal <= 1 + tol or riesz is not None,
        ))
        checks.append(le(
            "monotonicity~1", "monotonicity", "1", mono, 1.0, asserted=strict,
            detail="strictly rectangular norms are monotone" if strict else "not strictly rectangular",
        ))

        if "abs_lipschitz" in constants:
            lip = constants["abs_lipschitz"].value
            checks.append(le(
                "abs_lipschitz<=4*C^2*monotonicity", "abs_lipschitz", "4*restriction^2*monotonicity",
                lip, 4 * r * r * mono, asserted=strict,
                detail="" if strict else "lower-bound constants on the right side",
            ))

        if coordinate is not None:
            checks.append(RelationCheck(
                name="coordinate_bounds", lhs="|f(k)|/‖f‖", rhs="restriction/‖e_k‖",
                holds=coordinate.holds,
                detail=", ".join(f"{b.atom}:{b.bound:.6g}<={b.limit:.6g}" for b in coordinate.bounds),
            ))
        if rectangularization is not None:
            checks.append(le("norm<=rectangularized", "1", "lower", 1.0, rectangularization.lower))
            checks.append(le("rectangularized<=C*norm", "upper", "restriction", rectangularization.upper, r))
        if multiplier is not None:
            checks.append(RelationCheck(
                name="multiplier_bounds", lhs="violations", rhs="0",
                lhs_value=float(multiplier.violations), rhs_value=0.0,
                holds=multiplier.violations == 0, asserted=multiplier.mode == "strict",
                detail=f"max ‖sg‖/(‖s‖∞‖g‖) = {multiplier.max_product_ratio:.6g}",
            ))
        if vnorm_report is not None:
            checks.append(RelationCheck(
                name="vnorm_equivalence", lhs="violations", rhs="0",
                lhs_value=float(vnorm_report.bound_violations + vnorm_report.triangle_violations), rhs_value=0.0,
                holds=vnorm_report.bound_violations + vnorm_report.triangle_violations + vnorm_report.cone_mismatches == 0,
                asserted=vnorm_report.mode == "strict",
                detail=f"ratio range [{vnorm_report.min_ratio:.6g}, {vnorm_report.max_ratio:.6g}]",
            ))
        if simple is not None:
            checks.append(RelationCheck(
                name="simple_function_monotonicity", lhs="violations", rhs="0",
                lhs_value=float(simple.violations), rhs_value=0.0,
                holds=simple.violations == 0, asserted=simple.mode == "strict",
            ))

        for name, estimate in constants.items():
            replayed = self.replay_estimate(estimate)
            checks.append(RelationCheck(
                name=f"replay:{name}", lhs="witness ratio", rhs="reported value",
                lhs_value=replayed, rhs_value=estimate.value,
                holds=abs(replayed - estimate.value) <= self.slack * max(1.0, abs(estimate.value)),
            ))

        for check in checks:
            if check.asserted and not check.holds:
                logger.warning("Relation audit failure", relation=check.name, lhs=check.lhs_value, rhs=check.rhs_value)
        return checks

    # Full pipeline
    def analyze(self) -> PropertyReport:
        logger.info("Analysis started", dimension=self.n, seed=self.seed, budget=self.budget, jobs=self.jobs)
        n = self.n

        coordinates = self._coordinate_search()
        coordinate_witnesses = [x for _, _, x, _ in coordinates]
        basis = self.basis_constant(warm=coordinate_witnesses)

        warm = coordinate_witnesses + [np.asarray(basis.witness.f)]
        rectangularization = None
        if n <= RECTANGULARIZATION_AUDIT_CAP and spec_depth(self.spec) < settings.max_spec_depth:
            rect_oracle = build_oracle(rectangularize(self.spec), n, self.tol)
            rectangularization = self.equivalence_constants(
                rect_oracle, self.oracle, warm=warm, budget=min(self.budget, 2 * settings.search_block_size)
            )
            warm.append(np.asarray(rectangularization.upper_witness))

        restriction = self.restriction_constant(warm=warm)
        coordinate = self._coordinate_report(coordinates, restriction)
        monotonicity = self.monotonicity_constant()

        restriction_mask = AtomSet.of(n, restriction.witness.atoms).mask.astype(float)
        mono_f, mono_g = np.asarray(monotonicity.witness.f), np.asarray(monotonicity.witness.g)
        mono_u = np.divide(mono_f, mono_g, out=np.zeros(n), where=mono_g > 0)
        basis_mask = AtomSet.of(n, range(basis.witness.index)).mask.astype(float)
        multipliers = [
            (np.asarray(restriction.witness.f), restriction_mask),
            (mono_g, mono_u),
            (np.asarray(basis.witness.f), basis_mask),
        ]
        unconditional = self.unconditional_constant(
            warm=[s for s, _ in multipliers], warm_masks=[m > 0.5 for _, m in multipliers]
        )
        ideal = self.ideal_from(unconditional, multipliers)
        riesz = self.riesz_from(ideal)

        abs_lipschitz = self.abs_lipschitz(warm=[np.asarray(restriction.witness.f), np.asarray(ideal.witness.f)])
        multiplier = self.multiplier_check(
            restriction, warm=[(restriction_mask, np.asarray(restriction.witness.f))]
        )
        vnorm_report = self.vnorm_equivalence_check(restriction)
        simple = self.simple_monotonicity_check(restriction)

        constants = {
            "restriction": restriction,
            "basis": basis,
            "monotonicity": monotonicity,
            "ideal": ideal,
            "unconditional": unconditional,
            "abs_lipschitz": abs_lipschitz,
        }
        relations = self.relations_audit(
            constants, riesz, coordinate, multiplier, vnorm_report, simple, rectangularization
        )
        audit_passed = all(check.holds for check in relations if check.asserted)

        strict = self.strictly_rectangular(restriction)
        verdicts = {
            "strictly_rectangular": Verdict(
                holds=strict, constant=restriction.value, certified=(not strict) or restriction.exact
            ),
            "rectangular": Verdict(holds=True, constant=restriction.value, certified=True),
            "monotone": Verdict(holds=True, constant=monotonicity.value, certified=monotonicity.exact),
            "riesz": Verdict(holds=riesz is None, constant=ideal.value, certified=riesz is not None or ideal.exact),
            "ideal": Verdict(holds=True, constant=ideal.value, certified=ideal.exact),
            "unconditional": Verdict(holds=True, constant=unconditional.value, certified=unconditional.exact),
        }

        notes = [
            "Constants are lower bounds reproduced by their witnesses; exact=true marks closed forms.",
            "A space on finitely many atoms has the subsequence property, so rectangular(C) is the finite-scale verdict.",
        ]
        if not self.subsets.exhaustive:
            notes.append(f"n > {settings.exhaustive_cap}: atom sets and sign patterns were sampled.")
        if rectangularization is None:
            notes.append(f"Rectangularization audit skipped (n > {RECTANGULARIZATION_AUDIT_CAP} or spec too deep).")

        report = PropertyReport(
            config=RunConfigEcho(
                spec=dump_norm_spec(self.spec), dimension=n, seed=self.seed, budget=self.budget,
                refine_steps=self.refine_steps, tol=self.tol,
            ),
            constants=constants,
            verdicts=verdicts,
            riesz_violation=riesz,
            coordinate_bounds=coordinate,
            multiplier=multiplier,
            vnorm_equivalence=vnorm_report,
            simple_monotonicity=simple,
            relations=relations,
            audit_passed=audit_passed,
            notes=notes,
        )
        logger.info(
            "Analysis finished", dimension=n, audit_passed=audit_passed,
            restriction=restriction.value, unconditional=unconditional.value,
        )
        return report


# Module-level entry points
def restriction_constant(spec: NormSpec, budget: int = None, seed: int = None, **kwargs) -> ConstantEstimate:
    return CertifyService(spec, budget=budget, seed=seed, **kwargs).restriction_constant()


def basis_constant(spec: NormSpec, budget: int = None, seed: int = None, **kwargs) -> ConstantEstimate:
    return CertifyService(spec, budget=budget, seed=seed, **kwargs).basis_constant()


def monotonicity_constant(spec: NormSpec, budget: int = None, seed: int = None, **kwargs) -> ConstantEstimate:
    return CertifyService(spec, budget=budget, seed=seed, **kwargs).monotonicity_constant()


def riesz_violation(spec: NormSpec, budget: int = None, seed: int = None, **kwargs) -> Optional[RieszViolation]:
    return CertifyService(spec, budget=budget, seed=seed, **kwargs).riesz_violation()


def ideal_constant(spec: NormSpec, budget: int = None, seed: int = None, **kwargs) -> ConstantEstimate:
    return CertifyService(spec, budget=budget, seed=seed, **kwargs).ideal_constant()


def unconditional_constant(spec: NormSpec, budget: int = None, seed: int = None, **kwargs) -> ConstantEstimate:
    return CertifyService(spec, budget=budget, seed=seed, **kwargs).unconditional_constant()


def abs_lipschitz(spec: NormSpec, budget: int = None, seed: int = None, **kwargs) -> ConstantEstimate:
    return CertifyService(spec, budget=budget, seed=seed, **kwargs).abs_lipschitz()


def multiplier_check(spec: NormSpec, budget: int = None, seed: int = None, **kwargs) -> MultiplierReport:
    return CertifyService(spec, budget=budget, seed=seed, **kwargs).multiplier_check()


def coordinate_bounds(spec: NormSpec, budget: int = None, seed: int = None, **kwargs) -> CoordinateBoundsReport:
    return CertifyService(spec, budget=budget, seed=seed, **kwargs).coordinate_bounds()


def vnorm_equivalence_check(spec: NormSpec, budget: int = None, seed: int = None, **kwargs) -> VNormReport:
    return CertifyService(spec, budget=budget, seed=seed, **kwargs).vnorm_equivalence_check()


def simple_monotonicity_check(spec: NormSpec, samples: int = None, seed: int = None, **kwargs) -> SimpleMonotonicityReport:
    return CertifyService(spec, seed=seed, **kwargs).simple_monotonicity_check(samples=samples)


def equivalence_constants(spec_a: NormSpec, spec_b: NormSpec, dimension: Optional[int] = None,
                          budget: int = None, seed: int = None, **kwargs) -> EquivalenceReport:
    service = CertifyService(spec_a, dimension=dimension, budget=budget, seed=seed, **kwargs)
    return service.equivalence_constants(service.oracle, build_oracle(spec_b, service.n, service.tol))


def analyze(spec: NormSpec, dimension: Optional[int] = None, budget: int = None, seed: int = None, **kwargs) -> PropertyReport:
    return CertifyService(spec, dimension=dimension, budget=budget, seed=seed, **kwargs).analyze()


def relations_audit(spec: NormSpec, constants: Dict[str, ConstantEstimate], riesz: Optional[RieszViolation] = None,
                    **kwargs) -> List[RelationCheck]:
    return CertifyService(spec, **kwargs).relations_audit(constants, riesz)


def replay_estimate(spec: NormSpec, estimate: ConstantEstimate, **kwargs) -> float:
    return CertifyService(spec, **kwargs).replay_estimate(estimate)
