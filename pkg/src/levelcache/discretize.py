"""Turn a continuous popularity law into levels; optimize access degrees.

Both searches are exhaustive over small candidate sets: level boundaries over
a quantile lattice of the popularity distribution, degree tuples over the box
{1..d_max}^L filtered by the average-degree budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement, product
from typing import Sequence

import numpy as np

from .model import LevelSpec, MULTI_USER, SystemSpec, make_spec
from .rates import multiuser_rate


@dataclass(frozen=True)
class LevelSplit:
    """A division of popularity-sorted files into levels.

    ``boundaries`` are the cut indices (a cut at c separates files [0, c) from
    [c, ...)); ``spec`` is the induced system and ``objective`` its
    memory-sharing rate at the evaluation memory.
    """

    boundaries: tuple
    spec: SystemSpec
    objective: float


def _cut_candidates(weights: np.ndarray, lattice: int) -> list:
    """Candidate cut indices: mass quantiles united with index quantiles.

    Mass quantiles resolve the popular head finely (where a heavy-tailed law
    concentrates); index quantiles keep the long tail splittable.
    """
    n = len(weights)
    cum = np.cumsum(weights) / weights.sum()
    marks = np.arange(1, lattice) / lattice
    by_mass = np.searchsorted(cum, marks) + 1
    by_index = np.round(marks * n).astype(int)
    cand = {int(c) for c in np.concatenate([by_mass, by_index]) if 1 <= c <= n - 1}
    return sorted(cand)


def _induced_spec(weights: np.ndarray, cuts: Sequence, caches: int,
                  total_users: int) -> SystemSpec | None:
    """Build the level system a cut tuple induces; None if nothing is requestable.

    Per-level user totals are the rounded user mass, with the rounding
    remainder assigned to the most popular level; empty or userless segments
    are dropped (they would neither store nor request anything).
    """
    n = len(weights)
    edges = [0, *cuts, n]
    sizes = np.diff(edges)
    total_mass = weights.sum()
    masses = np.array([weights[edges[i]:edges[i + 1]].sum() / total_mass for i in range(len(sizes))])

    totals = np.round(total_users * masses)
    totals[0] += total_users - totals.sum()
    levels = []
    for size, users in zip(sizes, totals):
        if size <= 0 or users <= 0:
            continue
        levels.append(LevelSpec(files=int(size), users_per_cache=float(users) / caches, degree=1))
    if not levels:
        return None
    return make_spec(MULTI_USER, caches, levels)


def split_levels(weights: Sequence, levels: int, caches: int, memory: float,
                 total_users: int, allow_empty: bool = False,
                 lattice: int = 200) -> LevelSplit:
    """Exhaustively search cut positions minimizing the memory-sharing rate.

    ``weights`` must be sorted descending.  With ``allow_empty`` cuts may
    coincide, so the optimum is nonincreasing in the level count.  Ties go to
    the first (lexicographically smallest) cut tuple.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) == 0 or np.any(w <= 0):
        raise ValueError("weights must be a nonempty positive vector")
    if np.any(np.diff(w) > 1e-12 * w.max()):
        raise ValueError("weights must be sorted descending")
    if levels < 1:
        raise ValueError("need at least one level")

    candidates = _cut_candidates(w, lattice)
    if levels - 1 > len(candidates):
        raise ValueError(
            f"{levels} levels need {levels - 1} cuts but the lattice offers {len(candidates)}"
        )

    chooser = combinations_with_replacement if allow_empty else combinations
    best: LevelSplit | None = None
    for cuts in chooser(candidates, levels - 1):
        spec = _induced_spec(w, cuts, caches, total_users)
        if spec is None:
            continue
        objective = multiuser_rate(spec, memory).total
        if best is None or objective < best.objective - 1e-12:
            best = LevelSplit(boundaries=tuple(cuts), spec=spec, objective=objective)
    if best is None:
        raise ValueError("no admissible split found")
    return best


def optimize_access(spec: SystemSpec, memory: float, d_max: int, d_avg: float) -> tuple:
    """Exhaustive search over degree tuples under max- and average-degree budgets.

    Minimizes the memory-sharing rate at ``memory`` subject to d_i <= d_max
    and sum(U_i d_i)/sum(U_i) <= d_avg; ties go to the lexicographically
    smallest tuple.  Degrees above the cache count are never feasible.
    """
    if not spec.is_multi_user:
        raise ValueError("optimize_access requires a multi-user spec")
    if d_max < 1 or d_avg < 1:
        raise ValueError("degree budgets must be >= 1")
    U = spec.users
    total_u = sum(U)

    best_rate, best_tuple = None, None
    for degrees in product(range(1, min(d_max, spec.caches) + 1), repeat=spec.num_levels):
        if sum(u * d for u, d in zip(U, degrees)) > d_avg * total_u + 1e-9:
            continue
        trial = make_spec(
            MULTI_USER,
            spec.caches,
            [
                LevelSpec(files=lv.files, users_per_cache=lv.users_per_cache, degree=d)
                for lv, d in zip(spec.levels, degrees)
            ],
            spec.level_separation,
        )
        rate = multiuser_rate(trial, memory).total
        if best_rate is None or rate < best_rate - 1e-9:
            best_rate, best_tuple = rate, degrees
    if best_tuple is None:
        raise ValueError("no feasible degree tuple under the given budgets")
    return best_tuple
