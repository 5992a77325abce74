"""Symmetric convex bodies given by membership predicates, and their gauges.

A body is a union/intersection tree of primitive regions. The only thing a
body exposes is membership, so the gauge inf{λ > 0 : x/λ ∈ B} is found by
bracketing along the ray with powers of two and then bisecting.
"""
from typing import Callable, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import (
    DimensionMismatchError, NotAbsorbingError, SpecValidationError, UnboundedDirectionError
)
from app.core.logging import get_logger
from app.lattice.functions import ArrayLike, as_values
from app.schemas.schemas import (
    BallPrimitive, BodyCombination, BodyDiagnosticsReport, BodySpec, HalfspacePrimitive,
    SignPrimitive, SlabPrimitive
)

logger = get_logger(__name__)

Membership = Callable[[np.ndarray], np.ndarray]

BRACKET_OK = 0
BRACKET_UNBOUNDED = 1
BRACKET_NOT_ABSORBING = 2

MAX_BISECTIONS = 200


def _vector(a, n: int, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.size != n:
        raise DimensionMismatchError(
            f"{what} normal has length {a.size}, expected {n}", {"expected": n, "got": a.size}
        )
    return a


def compile_body(body: BodySpec, n: int) -> Membership:
    """Turn a body tree into a vectorised predicate over the rows of an (m, n) array."""
    if isinstance(body, BodyCombination):
        children = [compile_body(child, n) for child in body.children]
        if body.op == "union":
            return lambda X: np.logical_or.reduce([child(X) for child in children])
        return lambda X: np.logical_and.reduce([child(X) for child in children])

    if isinstance(body, BallPrimitive):
        r = body.r
        return lambda X: np.linalg.norm(X, axis=1) <= r

    if isinstance(body, SlabPrimitive):
        a, c = _vector(body.a, n, "slab"), body.c
        return lambda X: np.abs(X @ a) <= c

    if isinstance(body, HalfspacePrimitive):
        a, c = _vector(body.a, n, "halfspace"), body.c
        return lambda X: X @ a <= c

    if isinstance(body, SignPrimitive):
        if max(body.i, body.j) >= n:
            raise DimensionMismatchError(
                f"sign region uses coordinates ({body.i}, {body.j}) but n={n}",
                {"expected": n, "got": max(body.i, body.j) + 1},
            )
        i, j = body.i, body.j
        if body.rel == "geq":
            return lambda X: X[:, i] * X[:, j] >= 0
        return lambda X: X[:, i] * X[:, j] <= 0

    raise SpecValidationError(f"Unknown body node {type(body).__name__}")


def body_dimension(body: BodySpec):
    """Dimension forced by the body's primitives, or None when any n works."""
    if isinstance(body, BodyCombination):
        dims = {d for d in (body_dimension(child) for child in body.children) if d is not None}
        if len(dims) > 1:
            raise DimensionMismatchError(
                "Body primitives disagree on the dimension", {"dimensions": sorted(dims)}
            )
        return dims.pop() if dims else None
    if isinstance(body, (SlabPrimitive, HalfspacePrimitive)):
        return len(body.a)
    return None


def bracket_rays(contains: Membership, X: np.ndarray, cap_log2: int = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bracket the gauge of each nonzero row between powers of two.

    Returns (lo, hi, status) with x/hi ∈ B and x/lo ∉ B for rows whose status
    is BRACKET_OK.
    """
    cap_log2 = settings.gauge_scale_cap_log2 if cap_log2 is None else cap_log2
    m = X.shape[0]
    lo = np.zeros(m)
    hi = np.full(m, np.inf)
    status = np.full(m, BRACKET_OK)

    inside = contains(X)
    hi[inside] = 1.0
    lo[~inside] = 1.0

    shrinking = np.flatnonzero(inside)
    for k in range(1, cap_log2 + 1):
        if shrinking.size == 0:
            break
        lam = 2.0 ** -k
        ins = contains(X[shrinking] / lam)
        hi[shrinking[ins]] = lam
        lo[shrinking[~ins]] = lam
        shrinking = shrinking[ins]
    status[shrinking] = BRACKET_UNBOUNDED

    growing = np.flatnonzero(~inside)
    for k in range(1, cap_log2 + 1):
        if growing.size == 0:
            break
        lam = 2.0 ** k
        ins = contains(X[growing] / lam)
        hi[growing[ins]] = lam
        lo[growing[~ins]] = lam
        growing = growing[~ins]
    status[growing] = BRACKET_NOT_ABSORBING

    return lo, hi, status


def bisect_rays(contains: Membership, X: np.ndarray, lo: np.ndarray, hi: np.ndarray, tol) -> np.ndarray:
    """Bisect each bracket down to its tolerance (a scalar or one value per row)."""
    lo, hi = lo.copy(), hi.copy()
    tol = np.broadcast_to(np.asarray(tol, dtype=float), lo.shape)
    active = np.flatnonzero(hi - lo > tol)
    for _ in range(MAX_BISECTIONS):
        if active.size == 0:
            break
        mid = 0.5 * (lo[active] + hi[active])
        stuck = (mid <= lo[active]) | (mid >= hi[active])
        ins = contains(X[active] / mid[:, None])
        hi[active] = np.where(ins, mid, hi[active])
        lo[active] = np.where(ins, lo[active], mid)
        active = active[~stuck & (hi[active] - lo[active] > tol[active])]
    return 0.5 * (lo + hi)


def gauge_many(contains: Membership, X: np.ndarray, tol: float = None) -> np.ndarray:
    """Minkowski functional of every row of X; zero rows map to exactly 0.

    Each row is gauged along its unit direction and scaled back by its
    Euclidean length, so the scale cap bounds the body rather than the input.
    The error is at most tol absolute and at most tol relative to the gauge
    of the unit direction.
    """
    tol = settings.gauge_tol if tol is None else tol
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.zeros(X.shape[0])
    nonzero = np.flatnonzero(np.any(X != 0, axis=1))
    if nonzero.size == 0:
        return out

    Y = X[nonzero]
    length = np.linalg.norm(Y, axis=1)
    U = Y / length[:, None]
    lo, hi, status = bracket_rays(contains, U)
    if np.any(status == BRACKET_UNBOUNDED):
        row = Y[np.argmax(status == BRACKET_UNBOUNDED)]
        raise UnboundedDirectionError(
            "unbounded direction: the body contains the whole ray", {"direction": row.tolist()}
        )
    if np.any(status == BRACKET_NOT_ABSORBING):
        row = Y[np.argmax(status == BRACKET_NOT_ABSORBING)]
        raise NotAbsorbingError(
            "not absorbing: the ray never enters the body", {"direction": row.tolist()}
        )
    unit_tol = tol / np.maximum(length, 1.0)
    out[nonzero] = length * bisect_rays(contains, U, lo, hi, unit_tol)
    return out


def gauge(body: BodySpec, x: ArrayLike, tol: float = None) -> float:
    """inf{λ > 0 : x/λ ∈ body}, within ±tol"""
    if tol is not None and not tol > 0:
        raise SpecValidationError("gauge tolerance must be positive")
    values = as_values(x)
    contains = compile_body(body, values.size)
    return float(gauge_many(contains, values[None, :], tol)[0])


def _unit_rows(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    U = rng.standard_normal((m, n))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def body_diagnostics(body: BodySpec, dimension: int, samples: int = None, seed: int = 0) -> BodyDiagnosticsReport:
    """Sampling evidence for symmetry, convexity, boundedness and absorption.

    A clean report is evidence, not proof.
    """
    samples = settings.diagnostics_samples if samples is None else samples
    n = dimension
    contains = compile_body(body, n)
    rng = np.random.default_rng(seed)

    # rays: coordinate axes first, then random directions
    U = np.vstack([np.eye(n), -np.eye(n), _unit_rows(rng, max(64, samples // 8), n)])
    lo, hi, status = bracket_rays(contains, U)
    ok = status == BRACKET_OK
    unbounded = np.flatnonzero(status == BRACKET_UNBOUNDED)
    not_absorbing = status == BRACKET_NOT_ABSORBING

    gauges = bisect_rays(contains, U[ok], lo[ok], hi[ok], settings.gauge_tol)
    inradius = float(1.0 / np.max(gauges)) if gauges.size else 0.0
    absorbing = bool(not np.any(not_absorbing) and inradius > 0)
    if absorbing:
        absorbing = bool(np.all(contains(0.5 * inradius * U)))

    box_radius = float(np.clip(2.0 / np.min(gauges), 1e-6, 1e6)) if gauges.size else 4.0

    # symmetry
    P = rng.uniform(-box_radius, box_radius, (samples, n))
    member = contains(P)
    asym = np.flatnonzero(member != contains(-P))

    # convexity: midpoints of sampled members and of points just inside the boundary
    pairs = []
    members = P[member]
    half = members.shape[0] // 2
    if half:
        pairs.append((members[:half], members[half:2 * half]))
    if gauges.size:
        Q = (1.0 - 1e-6) * U[ok] / gauges[:, None]
        half = Q.shape[0] // 2
        if half:
            pairs.append((Q[:half], Q[half:2 * half]))

    convexity_violations = 0
    convexity_witness = None
    for A, B in pairs:
        mid = 0.5 * (A + B)
        bad = np.flatnonzero(~contains(mid))
        convexity_violations += int(bad.size)
        if bad.size and convexity_witness is None:
            k = bad[0]
            convexity_witness = [A[k].tolist(), B[k].tolist(), mid[k].tolist()]

    report = BodyDiagnosticsReport(
        samples=samples,
        box_radius=box_radius,
        symmetry_violations=int(asym.size),
        symmetry_witness=P[asym[0]].tolist() if asym.size else None,
        convexity_violations=convexity_violations,
        convexity_witness=convexity_witness,
        unbounded_directions=int(unbounded.size),
        unbounded_witness=U[unbounded[0]].tolist() if unbounded.size else None,
        absorbing=absorbing,
        inradius_estimate=inradius,
        passed=bool(asym.size == 0 and convexity_violations == 0 and unbounded.size == 0 and absorbing),
    )
    logger.info("Body diagnostics finished", dimension=n, samples=samples, passed=report.passed)
    return report
