"""Finite measure spaces and real functions on their atoms.

Atoms are indexed from 0. Every type here is an immutable value; the
operations are pure and can run concurrently without locking.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, List, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import DimensionMismatchError, SpecValidationError

ArrayLike = Union[Sequence[float], np.ndarray, "Func"]


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class MeasureSpace:
    """Atoms {0..n-1} with strictly positive weights."""

    weights: Tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) < 1:
            raise SpecValidationError("A measure space needs at least one atom")
        w = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise SpecValidationError(
                "Atom weights must be finite and strictly positive",
                {"weights": list(self.weights)},
            )
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @classmethod
    def uniform(cls, n: int) -> "MeasureSpace":
        return cls(tuple([1.0] * n))

    @classmethod
    def dyadic(cls, n: int) -> "MeasureSpace":
        """μ({k}) = 2^-(k+1), the usual choice for sequence spaces"""
        return cls(tuple(2.0 ** -(k + 1) for k in range(n)))

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def total_measure(self) -> float:
        return float(sum(self.weights))

    def measure(self, atoms: "AtomSet") -> float:
        _check_dims(self.n, atoms.n)
        return float(sum(self.weights[k] for k in atoms.members))

    def integrate(self, f: ArrayLike) -> float:
        values = as_values(f, self.n)
        return float(np.dot(np.asarray(self.weights), values))

    def lp_weights(self, p: float) -> List[float]:
        """Coordinate weights turning a weighted p-norm into the L^p(μ) norm."""
        if np.isinf(p):
            return [1.0] * self.n
        return [w ** (1.0 / p) for w in self.weights]

    def to_json(self) -> dict:
        return {"weights": list(self.weights)}

    @classmethod
    def from_json(cls, data: dict) -> "MeasureSpace":
        return cls(tuple(data["weights"]))


@dataclass(frozen=True)
class AtomSet:
    n: int
    members: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        members = frozenset(int(k) for k in self.members)
        bad = [k for k in members if k < 0 or k >= self.n]
        if bad:
            raise DimensionMismatchError(
                f"Atom indices out of range for n={self.n}", {"indices": sorted(bad)}
            )
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, n: int, indices: Iterable[int]) -> "AtomSet":
        return cls(n, frozenset(indices))

    @classmethod
    def full(cls, n: int) -> "AtomSet":
        return cls(n, frozenset(range(n)))

    @classmethod
    def empty(cls, n: int) -> "AtomSet":
        return cls(n, frozenset())

    @classmethod
    def from_mask(cls, mask: Sequence[bool]) -> "AtomSet":
        mask = np.asarray(mask, dtype=bool)
        return cls(len(mask), frozenset(np.flatnonzero(mask).tolist()))

    @classmethod
    def positive_set(cls, f: ArrayLike) -> "AtomSet":
        """{k : f(k) ≥ 0}"""
        values = as_values(f)
        return cls.from_mask(values >= 0)

    def _other(self, other: "AtomSet") -> frozenset:
        _check_dims(self.n, other.n)
        return other.members

    def union(self, other: "AtomSet") -> "AtomSet":
        return AtomSet(self.n, self.members | self._other(other))

    def intersection(self, other: "AtomSet") -> "AtomSet":
        return AtomSet(self.n, self.members & self._other(other))

    def difference(self, other: "AtomSet") -> "AtomSet":
        return AtomSet(self.n, self.members - self._other(other))

    def complement(self) -> "AtomSet":
        return AtomSet(self.n, frozenset(range(self.n)) - self.members)

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def isdisjoint(self, other: "AtomSet") -> bool:
        return self.members.isdisjoint(self._other(other))

    def __contains__(self, k: int) -> bool:
        return k in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __bool__(self) -> bool:
        return bool(self.members)

    @property
    def mask(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        out[list(self.members)] = True
        return out

    def indices(self) -> List[int]:
        return sorted(self.members)

    def to_json(self) -> List[int]:
        return self.indices()

    @classmethod
    def from_json(cls, n: int, data: Sequence[int]) -> "AtomSet":
        return cls.of(n, data)


def all_subsets(n: int) -> Iterator[AtomSet]:
    """Every subset of {0..n-1}, by size then lexicographically."""
    for size in range(n + 1):
        for combo in combinations(range(n), size):
            yield AtomSet(n, frozenset(combo))


def subset_masks(n: int, start: int = 0, stop: int = None) -> np.ndarray:
    """Rows are the binary masks of the integers start..stop-1 (bit k = atom k)."""
    stop = (1 << n) if stop is None else stop
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


def sign_patterns(n: int, start: int = 0, stop: int = None) -> np.ndarray:
    """Rows of ±1; pattern code c has -1 exactly where bit k of c is set."""
    return np.where(subset_masks(n, start, stop), -1.0, 1.0)


class Func:
    """A real function on the atoms, stored as a read-only float vector."""

    __slots__ = ("_values",)

    def __init__(self, values: ArrayLike):
        if isinstance(values, Func):
            arr = values.values
        else:
            arr = np.array(values, dtype=float).reshape(-1)
            if arr.size == 0:
                raise SpecValidationError("A function needs at least one atom")
            if not np.all(np.isfinite(arr)):
                raise SpecValidationError("Function values must be finite")
            _frozen(arr)
        object.__setattr__(self, "_values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Func is immutable")

    @classmethod
    def zeros(cls, n: int) -> "Func":
        return cls(np.zeros(n))

    @classmethod
    def indicator(cls, atoms: AtomSet) -> "Func":
        return cls(atoms.mask.astype(float))

    @classmethod
    def basis(cls, n: int, k: int) -> "Func":
        e = np.zeros(n)
        e[k] = 1.0
        return cls(e)

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        return self._values.size

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Func):
            _check_dims(self.n, other.n)
            return other.values
        return other

    def __add__(self, other) -> "Func":
        return Func(self._values + self._coerce(other))

    def __sub__(self, other) -> "Func":
        return Func(self._values - self._coerce(other))

    def __mul__(self, other) -> "Func":
        return Func(self._values * self._coerce(other))

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self) -> "Func":
        return Func(-self._values)

    def __abs__(self) -> "Func":
        return Func(np.abs(self._values))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Func):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self._values, other.values))

    def __hash__(self) -> int:
        return hash(self._values.tobytes())

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self._values.tolist())

    def __repr__(self) -> str:
        return f"Func({self._values.tolist()})"

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self._values)))

    def to_json(self) -> List[float]:
        return self._values.tolist()


def _check_dims(expected: int, got: int) -> None:
    if expected != got:
        raise DimensionMismatchError(
            f"Dimension mismatch: expected {expected}, got {got}",
            {"expected": expected, "got": got},
        )


def as_values(f: ArrayLike, n: int = None) -> np.ndarray:
    """Float vector view of f, checked against n when given."""
    values = f.values if isinstance(f, Func) else np.asarray(f, dtype=float).reshape(-1)
    if n is not None:
        _check_dims(n, values.size)
    return values


def restrict(f: ArrayLike, atoms: AtomSet) -> Func:
    """χ_A f"""
    values = as_values(f, atoms.n)
    return Func(np.where(atoms.mask, values, 0.0))


def abs_parts(f: ArrayLike) -> Tuple[Func, Func, Func]:
    """(|f|, f⁺, f⁻) with f⁺ = f·χ_{f≥0} and f⁻ = |f|·χ_{f<0}."""
    values = as_values(f)
    nonneg = values >= 0
    pos = np.where(nonneg, values, 0.0)
    neg = np.where(nonneg, 0.0, -values)
    return Func(np.abs(values)), Func(pos), Func(neg)


def pointwise_max(f: ArrayLike, g: ArrayLike) -> Func:
    fv = as_values(f)
    return Func(np.maximum(fv, as_values(g, fv.size)))


@dataclass(frozen=True)
class SimpleRep:
    """Σ_m b_m · base·χ_{B_m}, an element of span{base·χ_A}."""

    base: Func
    pieces: Tuple[Tuple[float, AtomSet], ...] = ()

    def __post_init__(self):
        pieces = tuple((float(b), atoms) for b, atoms in self.pieces)
        for _, atoms in pieces:
            _check_dims(self.base.n, atoms.n)
        object.__setattr__(self, "pieces", pieces)

    @property
    def n(self) -> int:
        return self.base.n

    def coefficient_field(self) -> np.ndarray:
        """Per-atom sum of the coefficients whose set contains the atom, in piece order."""
        coeffs = np.zeros(self.n)
        for b, atoms in self.pieces:
            mask = atoms.mask
            coeffs[mask] = coeffs[mask] + b
        return coeffs

    def evaluate(self) -> Func:
        return Func(self.coefficient_field() * self.base.values)

    def is_disjoint(self) -> bool:
        seen = set()
        for _, atoms in self.pieces:
            if seen & atoms.members:
                return False
            seen |= atoms.members
        return True

    def normalize(self) -> "SimpleRep":
        """Drop zero coefficients and empty sets, merge equal coefficients of a
        disjoint representation, and order pieces by their smallest atom."""
        pieces = [(b, atoms) for b, atoms in self.pieces if b != 0.0 and atoms]
        if self.is_disjoint():
            merged = {}
            for b, atoms in pieces:
                merged[b] = merged[b] | atoms if b in merged else atoms
            pieces = list(merged.items())
        pieces.sort(key=lambda piece: min(piece[1].members))
        return SimpleRep(self.base, tuple(pieces))

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json(),
            "pieces": [{"coefficient": b, "set": atoms.to_json()} for b, atoms in self.pieces],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SimpleRep":
        base = Func(data["base"])
        return cls(
            base,
            tuple((p["coefficient"], AtomSet.of(base.n, p["set"])) for p in data["pieces"]),
        )


def disjointify(rep: SimpleRep) -> SimpleRep:
    """Rewrite rep over pairwise disjoint sets.

    Pieces are folded one at a time: every current set C_j is split into
    C_j \\ B (keeping c_j) and C_j ∩ B (getting c_j + b), and the part of B
    outside all current sets is appended with coefficient b. Empty sets are
    dropped; zero coefficients are kept.
    """
    current: List[Tuple[float, AtomSet]] = []
    for b, atoms in rep.pieces:
        if not atoms:
            continue
        folded: List[Tuple[float, AtomSet]] = []
        covered = AtomSet.empty(rep.n)
        for c, block in current:
            covered = covered | block
            inside = block & atoms
            if not inside:
                folded.append((c, block))
                continue
            outside = block - atoms
            if outside:
                folded.append((c, outside))
            folded.append((c + b, inside))
        leftover = atoms - covered
        if leftover:
            folded.append((b, leftover))
        current = folded
    return SimpleRep(rep.base, tuple(current))
