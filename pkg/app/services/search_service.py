"""Seeded, blockwise maximization of scale-invariant ratios.

The budget is split into fixed-size blocks. Block b draws its candidates
from a generator seeded by (seed, stream tag, b), keeps its best candidate
and refines it by coordinate pattern search. Blocks are independent, so they
run on a thread pool and the reduction (max, ties to the lowest block) gives
the same answer for any number of workers. A larger budget only appends
blocks, so estimates never decrease with the budget.
"""
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import DegenerateNormError
from app.core.logging import get_logger

logger = get_logger(__name__)

# (m, width) -> (scores, aux); non-finite scores mark degenerate candidates
Objective = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]
Sampler = Callable[[np.random.Generator, int, int], np.ndarray]
Normalizer = Callable[[np.ndarray], np.ndarray]

MIN_STEP = 1e-9
INITIAL_STEP = 0.5


def stream_id(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def block_rng(seed: int, tag: str, block: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream_id(tag), block])


def unit_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)


def gaussian_directions(rng: np.random.Generator, m: int, width: int) -> np.ndarray:
    return unit_rows(rng.standard_normal((m, width)))


@dataclass
class SearchResult:
    value: float
    x: np.ndarray
    aux: int
    candidates: int
    refine_steps: int


@dataclass
class _BlockBest:
    block: int
    value: float
    x: Optional[np.ndarray]
    aux: int
    candidates: int
    refine_steps: int


class RatioSearch:
    """Maximize objective(x) over directions x of a fixed width."""

    def __init__(
        self,
        objective: Objective,
        width: int,
        tag: str,
        budget: int = None,
        seed: int = None,
        refine_steps: int = None,
        jobs: int = None,
        seeds: Optional[Sequence[Sequence[float]]] = None,
        sampler: Sampler = gaussian_directions,
        normalize: Normalizer = unit_rows,
        row_cost: int = 1,
    ):
        self.objective = objective
        self.width = width
        self.tag = tag
        self.budget = settings.default_budget if budget is None else budget
        self.seed = settings.default_seed if seed is None else seed
        self.refine_steps = settings.refine_steps if refine_steps is None else refine_steps
        self.jobs = settings.jobs if jobs is None else jobs
        self.block_size = settings.search_block_size
        self.sampler = sampler
        self.normalize = normalize
        self.row_cost = max(1, row_cost)

        if seeds is not None and len(seeds):
            self.seeds = normalize(np.atleast_2d(np.asarray(seeds, dtype=float)))
        else:
            self.seeds = np.zeros((0, width))

    @property
    def blocks(self) -> int:
        return max(1, math.ceil(self.budget / self.block_size))

    @property
    def step_limit(self) -> int:
        """Refinement steps per block, capped by settings.refine_work_cap."""
        affordable = settings.refine_work_cap // (2 * self.width * self.row_cost)
        return min(self.refine_steps, max(1, affordable))

    def _refine(self, x: np.ndarray, value: float, aux: int) -> Tuple[np.ndarray, float, int, int]:
        step = INITIAL_STEP
        steps = 0
        axes = np.arange(self.width)
        for _ in range(self.step_limit):
            if step < MIN_STEP:
                break
            neighbours = np.repeat(x[None, :], 2 * self.width, axis=0)
            neighbours[2 * axes, axes] += step
            neighbours[2 * axes + 1, axes] -= step
            neighbours = self.normalize(neighbours)
            scores, extra = self.objective(neighbours)
            steps += 1

            better = np.flatnonzero(scores > value)
            if better.size:
                k = better[0]
                x, value, aux = neighbours[k], float(scores[k]), int(extra[k])
            else:
                step *= 0.5
        return x, value, aux, steps

    def _run_block(self, block: int) -> _BlockBest:
        rng = block_rng(self.seed, self.tag, block)
        X = self.normalize(self.sampler(rng, self.block_size, self.width))
        if block == 0 and self.seeds.shape[0]:
            X = np.vstack([self.seeds, X])

        scores, aux = self.objective(X)
        scores = np.where(np.isfinite(scores), scores, -np.inf)
        best = int(np.argmax(scores))
        if not np.isfinite(scores[best]):
            return _BlockBest(block, -math.inf, None, -1, X.shape[0], 0)

        x, value, extra, steps = self._refine(X[best].copy(), float(scores[best]), int(aux[best]))
        return _BlockBest(block, value, x, extra, X.shape[0], steps)

    def run(self) -> SearchResult:
        if self.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as executor:
                results: List[_BlockBest] = list(executor.map(self._run_block, range(self.blocks)))
        else:
            results = [self._run_block(block) for block in range(self.blocks)]

        winner = None
        for result in results:
            if result.x is not None and (winner is None or result.value > winner.value):
                winner = result

        candidates = sum(r.candidates for r in results)
        if winner is None:
            raise DegenerateNormError(
                f"No finite ratio found while searching '{self.tag}'",
                {"tag": self.tag, "candidates": candidates},
            )

        logger.debug(
            "Ratio search finished",
            tag=self.tag, value=winner.value, block=winner.block, candidates=candidates,
        )
        return SearchResult(
            value=winner.value,
            x=winner.x,
            aux=winner.aux,
            candidates=candidates,
            refine_steps=sum(r.refine_steps for r in results),
        )
