"""Norm oracles built from declarative specs.

Every oracle evaluates a whole batch of functions at once (rows of an
(m, n) array); ``evaluate`` is the single-row convenience wrapper. Oracles
hold no mutable state after construction and can be shared between threads.
"""
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from app.core.config import settings
from app.core.exceptions import (
    DimensionMismatchError, DimensionTooLargeError, SpecValidationError
)
from app.core.logging import get_logger
from app.lattice.bodies import body_dimension, compile_body, gauge_many
from app.lattice.functions import ArrayLike, as_values, subset_masks
from app.schemas.schemas import (
    BallPrimitive, BodyCombination, GaugeSpec, NormSpec, PNormSpec, PullbackSpec,
    RectangularizedSpec, ScaledSpec, SignPrimitive, SlabPrimitive, VNormSpec
)

logger = get_logger(__name__)

# rows x subsets evaluated per inner call
_CHUNK = 1 << 18
SAMPLED_SUBSETS_DEFAULT = 4096


class NormOracle(ABC):
    """Evaluation contract shared by every norm variant."""

    # structural facts that hold exactly, used to flag closed-form estimates
    sign_invariant = False
    restriction_contractive = False

    def __init__(self, spec: NormSpec, dimension: int):
        self.spec = spec
        self.dimension = dimension

    @abstractmethod
    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        """Norms of the rows of X."""

    def evaluate(self, f: ArrayLike) -> float:
        values = as_values(f, self.dimension)
        return float(self.evaluate_many(values[None, :])[0])

    def __call__(self, f: ArrayLike) -> float:
        return self.evaluate(f)

    def _rows(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dimension:
            raise DimensionMismatchError(
                f"Expected functions on {self.dimension} atoms, got {X.shape[1]}",
                {"expected": self.dimension, "got": X.shape[1]},
            )
        return X


class PNormOracle(NormOracle):
    sign_invariant = True
    restriction_contractive = True

    def __init__(self, spec: PNormSpec, dimension: int):
        super().__init__(spec, dimension)
        self.p = spec.p
        if spec.weights is None:
            self.weights = np.ones(dimension)
        else:
            if len(spec.weights) != dimension:
                raise DimensionMismatchError(
                    "pnorm weights do not match the dimension",
                    {"expected": dimension, "got": len(spec.weights)},
                )
            self.weights = np.asarray(spec.weights, dtype=float)

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        X = self._rows(X)
        return np.linalg.norm(X * self.weights, ord=self.p, axis=1)


class PullbackOracle(NormOracle):
    """‖f‖ = ‖T⁻¹f‖_inner where the columns of T are the basis functions."""

    def __init__(self, spec: PullbackSpec, dimension: int, inner: NormOracle):
        super().__init__(spec, dimension)
        matrix = np.asarray(spec.matrix, dtype=float)
        if matrix.shape != (dimension, dimension):
            raise DimensionMismatchError(
                "pullback matrix does not match the dimension",
                {"expected": dimension, "got": matrix.shape[0]},
            )
        if inner.dimension != dimension:
            raise DimensionMismatchError(
                "pullback inner norm has the wrong dimension",
                {"expected": dimension, "got": inner.dimension},
            )
        self.inner = inner
        self.lu = lu_factor(matrix, check_finite=True)
        if np.any(np.diag(self.lu[0]) == 0):
            raise SpecValidationError("pullback matrix is singular", {"matrix": spec.matrix})

        condition = float(np.linalg.cond(matrix))
        if condition > settings.condition_warning:
            logger.warning("Ill-conditioned pullback matrix", condition=condition, dimension=dimension)

    def coefficients(self, X: np.ndarray) -> np.ndarray:
        X = self._rows(X)
        return lu_solve(self.lu, X.T).T

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        return self.inner.evaluate_many(self.coefficients(X))


class GaugeOracle(NormOracle):
    def __init__(self, spec: GaugeSpec, dimension: int, tol: float = None):
        super().__init__(spec, dimension)
        self.contains = compile_body(spec.body, dimension)
        self.tol = settings.gauge_tol if tol is None else tol

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        return gauge_many(self.contains, self._rows(X), self.tol)


class RectangularizedOracle(NormOracle):
    """‖f‖_r = max over atom sets A of ‖χ_A f‖_inner."""

    restriction_contractive = True

    def __init__(self, spec: RectangularizedSpec, dimension: int, inner: NormOracle):
        super().__init__(spec, dimension)
        self.inner = inner
        self.mode = spec.mode or "exact"

        if self.mode == "exact":
            if dimension > settings.rectangularize_cap:
                raise DimensionTooLargeError(
                    f"Exact rectangularization enumerates 2^{dimension} sets; "
                    f"the limit is n <= {settings.rectangularize_cap}. Select mode 'sampled' to approximate.",
                    {"dimension": dimension, "cap": settings.rectangularize_cap},
                )
            self.masks = None
        else:
            self.restriction_contractive = False
            count = spec.samples or SAMPLED_SUBSETS_DEFAULT
            rng = np.random.default_rng(0)
            fixed = np.vstack([np.ones((1, dimension), dtype=bool), np.eye(dimension, dtype=bool)])
            self.masks = np.vstack([fixed, rng.random((count, dimension)) < 0.5]).astype(float)
            logger.warning(
                "Sampled rectangularization is a lower bound only", dimension=dimension, subsets=len(self.masks)
            )

    def _max_over(self, X: np.ndarray, masks: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0])
        rows_per_chunk = max(1, _CHUNK // len(masks))
        for start in range(0, X.shape[0], rows_per_chunk):
            block = X[start:start + rows_per_chunk]
            Y = (block[:, None, :] * masks[None, :, :]).reshape(-1, self.dimension)
            vals = self.inner.evaluate_many(Y).reshape(block.shape[0], len(masks))
            out[start:start + block.shape[0]] = vals.max(axis=1)
        return out

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        X = self._rows(X)
        if self.masks is not None:
            return self._max_over(X, self.masks)

        n = self.dimension
        if (1 << n) <= (1 << 16):
            return self._max_over(X, subset_masks(n).astype(float))

        out = np.zeros(X.shape[0])
        for i, row in enumerate(X):
            support = np.flatnonzero(row)
            k = support.size
            if k == 0:
                continue
            best = 0.0
            for start in range(0, 1 << k, 1 << 16):
                local = subset_masks(k, start, min(1 << k, start + (1 << 16)))
                Y = np.zeros((local.shape[0], n))
                Y[:, support] = np.where(local, row[support], 0.0)
                best = max(best, float(self.inner.evaluate_many(Y).max()))
            out[i] = best
        return out


class VNormOracle(NormOracle):
    """‖f‖_V = ‖|f|‖_inner"""

    sign_invariant = True

    def __init__(self, spec: VNormSpec, dimension: int, inner: NormOracle):
        super().__init__(spec, dimension)
        self.inner = inner

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        return self.inner.evaluate_many(np.abs(self._rows(X)))


class ScaledOracle(NormOracle):
    def __init__(self, spec: ScaledSpec, dimension: int, inner: NormOracle):
        super().__init__(spec, dimension)
        self.inner = inner
        self.c = spec.c
        self.sign_invariant = inner.sign_invariant
        self.restriction_contractive = inner.restriction_contractive

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        return self.c * self.inner.evaluate_many(self._rows(X))


def infer_dimension(spec: NormSpec) -> Optional[int]:
    """Dimension fixed by the spec itself, or None if it fits any n."""
    if isinstance(spec, PNormSpec):
        return len(spec.weights) if spec.weights is not None else None
    if isinstance(spec, PullbackSpec):
        inner = infer_dimension(spec.inner)
        if inner is not None and inner != len(spec.matrix):
            raise DimensionMismatchError(
                "pullback matrix and inner norm disagree on the dimension",
                {"expected": len(spec.matrix), "got": inner},
            )
        return len(spec.matrix)
    if isinstance(spec, GaugeSpec):
        return body_dimension(spec.body)
    return infer_dimension(spec.inner)


def spec_depth(spec: NormSpec) -> int:
    inner = getattr(spec, "inner", None)
    return 1 if inner is None else 1 + spec_depth(inner)


def _build(spec: NormSpec, n: int, tol: Optional[float]) -> NormOracle:
    if isinstance(spec, PNormSpec):
        return PNormOracle(spec, n)
    if isinstance(spec, GaugeSpec):
        return GaugeOracle(spec, n, tol)
    inner = _build(spec.inner, n, tol)
    if isinstance(spec, PullbackSpec):
        return PullbackOracle(spec, n, inner)
    if isinstance(spec, RectangularizedSpec):
        return RectangularizedOracle(spec, n, inner)
    if isinstance(spec, VNormSpec):
        return VNormOracle(spec, n, inner)
    if isinstance(spec, ScaledSpec):
        return ScaledOracle(spec, n, inner)
    raise SpecValidationError(f"Unknown norm spec {type(spec).__name__}")


def build_oracle(spec: NormSpec, dimension: Optional[int] = None, tol: Optional[float] = None) -> NormOracle:
    """Validate a spec against a dimension and compile it into an oracle.

    ``tol`` is the bisection tolerance of any gauge in the tree.
    """
    depth = spec_depth(spec)
    if depth > settings.max_spec_depth:
        raise SpecValidationError(
            f"Norm spec nests {depth} levels; the limit is {settings.max_spec_depth}",
            {"depth": depth, "limit": settings.max_spec_depth},
        )

    inferred = infer_dimension(spec)
    if dimension is not None and inferred is not None and dimension != inferred:
        raise DimensionMismatchError(
            f"Spec has dimension {inferred} but {dimension} was requested",
            {"expected": inferred, "got": dimension},
        )
    n = dimension if dimension is not None else inferred
    if n is None:
        raise SpecValidationError("Spec does not fix a dimension; pass one explicitly")
    if n < 1:
        raise SpecValidationError("Dimension must be positive")
    return _build(spec, n, tol)


def evaluate(oracle: NormOracle, f: ArrayLike) -> float:
    return oracle.evaluate(f)


def rectangularize(inner: NormSpec, mode: Optional[str] = None, samples: Optional[int] = None) -> RectangularizedSpec:
    return RectangularizedSpec(inner=inner, mode=mode, samples=samples)


def vnorm(inner: NormSpec) -> VNormSpec:
    return VNormSpec(inner=inner)


def scaled(c: float, inner: NormSpec) -> ScaledSpec:
    return ScaledSpec(c=c, inner=inner)


# Canonical specs
def pnorm_spec(p: float = 2.0, weights=None) -> PNormSpec:
    return PNormSpec(p=p, weights=weights)


def lp_spec(space, p: float = 2.0) -> PNormSpec:
    """L^p(μ) norm of a measure space as a weighted p-norm."""
    return PNormSpec(p=p, weights=space.lp_weights(p))


def v_basis_pullback(n: int) -> PullbackSpec:
    """‖Σ a_k v_k‖ = ‖(a_k / k)‖₂ with v_k = e_1 + ... + e_k."""
    matrix = [[1.0 if i <= k else 0.0 for k in range(n)] for i in range(n)]
    return PullbackSpec(
        matrix=matrix,
        inner=PNormSpec(p=2.0, weights=[1.0 / (k + 1) for k in range(n)]),
    )


def bbody_spec() -> GaugeSpec:
    """Unit disc on the quadrants where xy ≥ 0, the slab |y - x| ≤ 1 where xy ≤ 0."""
    body = BodyCombination(op="union", children=[
        BodyCombination(op="intersection", children=[
            SignPrimitive(prim="sign", i=0, j=1, rel="geq"),
            BallPrimitive(prim="ball", r=1.0),
        ]),
        BodyCombination(op="intersection", children=[
            SignPrimitive(prim="sign", i=0, j=1, rel="leq"),
            SlabPrimitive(prim="slab", a=[-1.0, 1.0], c=1.0),
        ]),
    ])
    return GaugeSpec(body=body)


def has_gauge(spec: NormSpec) -> bool:
    if isinstance(spec, GaugeSpec):
        return True
    inner = getattr(spec, "inner", None)
    return inner is not None and has_gauge(inner)


def evaluation_slack(spec: NormSpec) -> float:
    """Relative slack for comparing two evaluations of the same norm."""
    if has_gauge(spec):
        return max(settings.replay_tol, 4 * settings.gauge_tol)
    return settings.replay_tol

