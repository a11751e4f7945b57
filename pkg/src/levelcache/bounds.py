"""Information-theoretic lower bounds, gap computation, and the small-example oracle.

The multi-user bound combines one cut-set bound per level: with t-cache
groups, b broadcasts per group, and s_i groups dedicated to level i, the
optimal rate satisfies

    R*(M) >= sum_i lambda_i * min((s_i*t - d_i + 1) * U_i, N_i / (s_i*b)) - (t/b) * M,

valid whenever s_i*t lies in {d_i, ..., floor(K/2)}; lambda_i is 1 when
s_i*t = d_i and 1/2 otherwise.  Candidate parameters come from four published
closed-form recipes plus a separable grid search.  The single-user bound is a
single cut-set bound over all levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, floor, inf, sqrt
from typing import Sequence

import numpy as np

from .model import SystemSpec
from .partition import aggregates, interval_table, mtilde, partition_at, _refine
from .rates import multiuser_rate, singleuser_rate

#: Grid-search caps: t up to min(K, MAX_T); b on a geometric ladder up to 2**MAX_B_EXP.
#: Larger b only helps until the per-level terms fall below the total-content
#: scale, so the ladder cap is not binding for realistic instances.
MAX_T = 8
MAX_B_EXP = 20


class InvalidBoundParams(ValueError):
    """Lower-bound parameters violating a Lemma constraint; names the constraint."""


@dataclass(frozen=True)
class BoundParams:
    """A (t, b, {s_i}) tuple for the multi-user bound, with its lambda values."""

    t: int
    b: int
    s: tuple
    lam: tuple
    origin: str = "UserSupplied"

    @staticmethod
    def build(spec: SystemSpec, t: int, b: int, s: Sequence, origin: str) -> "BoundParams":
        lam = tuple(1.0 if s_i * t == d else 0.5 for s_i, d in zip(s, spec.degrees))
        return BoundParams(t=t, b=b, s=tuple(int(x) for x in s), lam=lam, origin=origin)


def validate_bound_params(spec: SystemSpec, params: BoundParams) -> None:
    K = spec.caches
    if not (1 <= params.t <= K):
        raise InvalidBoundParams(f"t must be in 1..{K}, got {params.t}")
    if params.b < 1:
        raise InvalidBoundParams(f"b must be >= 1, got {params.b}")
    if len(params.s) != spec.num_levels:
        raise InvalidBoundParams(f"need one s per level, got {len(params.s)}")
    half = K // 2
    for i, (s_i, d) in enumerate(zip(params.s, spec.degrees)):
        if s_i < 1:
            raise InvalidBoundParams(f"s[{i}] must be positive, got {s_i}")
        if not (d <= s_i * params.t <= half):
            raise InvalidBoundParams(
                f"s[{i}]*t = {s_i * params.t} outside {{d_i..floor(K/2)}} = {{{d}..{half}}}"
            )
    for i, (lam, s_i, d) in enumerate(zip(params.lam, params.s, spec.degrees)):
        expect = 1.0 if s_i * params.t == d else 0.5
        if lam != expect:
            raise InvalidBoundParams(f"lambda[{i}] must be {expect} for s*t vs d")


def cut_fractions(spec: SystemSpec, params: BoundParams) -> tuple:
    """Exact usable fraction of the K averaged cut-set bounds per level.

    Only (K - (s_i*t - d_i))/K of the K cyclic cuts can decode a full file
    batch without contradictory demands; the published final form rounds this
    down to 1/2 (1 when s_i*t = d_i) for clean constants.  The exact fraction
    is what numeric gap evaluation needs to reproduce the reported gaps.
    """
    K = spec.caches
    return tuple(
        (K - (s_i * params.t - d)) / K for s_i, d in zip(params.s, spec.degrees)
    )


def multiuser_lower_bound(spec: SystemSpec, memory: float, params: BoundParams,
                          exact_fraction: bool = False) -> float:
    """Evaluate the combined cut-set bound; clamped at zero (R* >= 0 always).

    With ``exact_fraction`` the per-level weights are the proof's exact usable
    cut fractions instead of the rounded {1, 1/2} values; both are valid lower
    bounds and the exact form is never weaker.
    """
    if not spec.is_multi_user:
        raise ValueError("multiuser_lower_bound requires a multi-user spec")
    validate_bound_params(spec, params)
    N, U, d = spec.files, spec.users, spec.degrees
    t, b = params.t, params.b
    weights = cut_fractions(spec, params) if exact_fraction else params.lam
    value = -t / b * memory
    for i in range(spec.num_levels):
        s_i = params.s[i]
        value += weights[i] * min((s_i * t - d[i] + 1) * U[i], N[i] / (s_i * b))
    return max(value, 0.0)


def _best_separable_s(spec: SystemSpec, memory: float, t: int, b_grid: np.ndarray,
                      exact_fraction: bool = False):
    """For fixed t, pick each s_i to maximize its own term, per b on the grid.

    The bound is a sum of independent per-level terms minus (t/b)M, so the
    per-level argmax over the full admissible range is jointly optimal.
    Returns (values, choices): per-b bound values and per-b s vectors, or None
    when some level has no admissible s.
    """
    K = spec.caches
    half = K // 2
    N, U, d = spec.files, spec.users, spec.degrees
    total = np.zeros(len(b_grid))
    choices = np.zeros((spec.num_levels, len(b_grid)), dtype=int)
    for i in range(spec.num_levels):
        s_lo = -(-d[i] // t)  # ceil
        s_hi = half // t
        if s_lo > s_hi:
            return None
        s = np.arange(s_lo, s_hi + 1)
        if exact_fraction:
            lam = (K - (s * t - d[i])) / K
        else:
            lam = np.where(s * t == d[i], 1.0, 0.5)
        users_side = (s * t - d[i] + 1) * U[i]
        files_side = N[i] / (s[:, None] * b_grid[None, :])
        term = lam[:, None] * np.minimum(users_side[:, None], files_side)
        pick = np.argmax(term, axis=0)
        total += term[pick, np.arange(len(b_grid))]
        choices[i] = s[pick]
    total -= (t / b_grid) * memory
    return total, choices


def _recipe_candidates(spec: SystemSpec, memory: float) -> list:
    """Instantiate the four published parameter recipes at this memory.

    Case 0 (small cache count): full-storage frontier level.  Case 1a (no
    near-full level, some level fully stored) and Case 1b (nothing fully
    stored) key off the scaled memory; Case 2 handles a near-full level.
    Recipes whose values violate the constraints are dropped by the caller.
    """
    out = []
    N, U, d, K = spec.files, spec.users, spec.degrees, spec.caches
    L = spec.num_levels
    beta = float(spec.level_separation)

    # Case 0: the level whose full-storage frontier contains M.
    prefix = 0.0
    star = None
    for i in range(L):
        if prefix <= memory <= prefix + N[i] / d[i]:
            star = i
            break
        prefix += N[i] / d[i]
    if star is not None:
        b = ceil(N[star] / (d[star] * U[star]))
        out.append(BoundParams.build(spec, t=1, b=max(b, 1), s=list(d), origin="Case0"))

    table = interval_table(spec)
    part = partition_at(table, memory)
    mt = mtilde(spec, memory, part)
    if part.I and mt > 0:
        ref = _refine(spec, part, mt)
        delta = spec.max_degree / beta

        # Case 1a: t=1, fractional-cache cuts for H, scaled-memory cuts for I.
        s = [0] * L
        for h in part.H:
            s[h] = K // 8
        for i in part.I:
            s[i] = floor(sqrt(N[i] / U[i]) / (8.0 * mt))
        for j in part.J:
            s[j] = d[j]
        b = floor(delta * mt * mt)
        if b >= 1 and all(x >= 1 for x in s):
            out.append(BoundParams.build(spec, t=1, b=b, s=s, origin="Case1a"))

        # Case 1b: everything keyed to the most popular partially-stored level.
        lead = min(part.I)  # canonical order: lowest index = most popular
        ratio = sqrt(N[lead] / U[lead])
        t = floor(ratio / (32.0 * mt))
        b = floor(8.0 * mt * ratio)
        if t >= 1 and b >= 1:
            s = [0] * L
            for h in part.H:
                s[h] = floor(2.0 * K * mt / ratio)
            for i in part.I:
                s[i] = floor(2.0 * sqrt((N[i] / U[i]) / (N[lead] / U[lead])))
            for j in part.J:
                s[j] = d[j]
            if all(x >= 1 for x in s):
                out.append(BoundParams.build(spec, t=t, b=b, s=s, origin="Case1b"))

        # Case 2: a level sits within a separation factor of full storage.
        if ref.I1:
            g1, g2 = 2.965, 0.482
            near = min(ref.I1)
            b = ceil(N[near] / (d[near] * U[near]))
            s = [0] * L
            for h in part.H:
                s[h] = floor(2.0 * beta * K)
            for i in part.I:
                if i in ref.I1:
                    continue
                s[i] = floor(
                    g1 * beta * sqrt(N[i] / U[i]) / mt
                    + g2 * d[near] * sqrt((U[near] / N[near]) / (U[i] / N[i]))
                )
            s[near] = d[near]
            for j in part.J:
                s[j] = d[j]
            if b >= 1 and all(x >= 1 for x in s):
                out.append(BoundParams.build(spec, t=1, b=b, s=s, origin="Case2"))

    return out


def _b_ladder() -> np.ndarray:
    """Geometric b grid up to 2**MAX_B_EXP, quarter-octave steps.

    Integer b values; quarter-octave spacing keeps the (t/b)M-versus-terms
    trade-off within a few percent of the continuous optimum.
    """
    raw = {int(round(2 ** (e / 4))) for e in range(4 * MAX_B_EXP + 1)}
    return np.array(sorted(raw), dtype=float)


def candidate_params(spec: SystemSpec, memory: float, exact_fraction: bool = False) -> list:
    """All bound parameters worth trying at this memory.

    The published recipes (kept only when their constraints hold) followed by
    the grid family: t in {1..min(K, 8)}, b on the geometric ladder, s_i chosen
    per level by the separable argmax.  The trivial tuple (t=1, s_i=d_i, b=1)
    is part of the grid whenever it is admissible at all.
    """
    if not spec.is_multi_user:
        raise ValueError("candidate_params requires a multi-user spec")
    out = []
    trivial = BoundParams.build(spec, t=1, b=1, s=list(spec.degrees), origin="GridSearch")
    for cand in [*_recipe_candidates(spec, memory), trivial]:
        try:
            validate_bound_params(spec, cand)
        except InvalidBoundParams:
            continue
        out.append(cand)

    b_grid = _b_ladder()
    for t in range(1, min(spec.caches, MAX_T) + 1):
        best = _best_separable_s(spec, memory, t, b_grid, exact_fraction)
        if best is None:
            continue
        values, choices = best
        # One candidate per t is enough away from the optimum; keep the whole
        # ladder only where it matters by deduplicating identical s vectors.
        seen = set()
        order = np.argsort(values)[::-1]
        for k in order:
            key = (int(b_grid[k]), tuple(choices[:, k]))
            if key in seen:
                continue
            seen.add(key)
            out.append(BoundParams.build(spec, t=t, b=key[0], s=choices[:, k], origin="GridSearch"))
    return out


def best_multiuser_lower_bound(spec: SystemSpec, memory: float, exact_fraction: bool = True):
    """Maximize the bound over all candidates; first-listed wins ties.

    Evaluates with the exact cut fractions by default (what the reported
    numeric gaps require).  Returns ``(value, params)``; params is None in the
    degenerate geometry where no admissible tuple exists (some
    d_i > floor(K/2)), in which case only the trivial bound R* >= 0 remains.
    """
    best_value, best_params = 0.0, None
    for cand in candidate_params(spec, memory, exact_fraction):
        value = multiuser_lower_bound(spec, memory, cand, exact_fraction)
        if value > best_value:
            best_value, best_params = value, cand
    return best_value, best_params


@dataclass(frozen=True)
class SUBoundParams:
    """Single-user cut parameters: s_i caches per level outside J, s_J caches
    decoding n_J files from the J levels collectively, b broadcasts."""

    b: int
    s: tuple
    s_J: int
    n_J: int
    origin: str = "UserSupplied"


def _su_default_params(spec: SystemSpec, memory: float) -> SUBoundParams:
    from .rates import su_partition

    N, Ku = spec.files, spec.users
    L = spec.num_levels
    if memory < 1 / 6:
        return SUBoundParams(b=1, s=tuple(Ku), s_J=0, n_J=0, origin="Appendix")

    part = su_partition(spec, memory)
    b = ceil(6 * memory)
    s = [0] * L
    for g in part.G:
        s[g] = 1
    for h in part.H:
        s[h] = ceil(Ku[h] / 6)
    for i in part.I:
        s[i] = min(ceil(N[i] / (6 * memory)), Ku[i])
    n_j = part.N_J
    if n_j == 0 or memory >= n_j:
        s_j = 0
    elif memory < n_j / 6:
        s_j = ceil(n_j / (6 * memory))
    else:
        s_j = 1
    return SUBoundParams(b=b, s=tuple(s), s_J=s_j, n_J=int(min(n_j, s_j * b)), origin="Appendix")


def singleuser_lower_bound(spec: SystemSpec, memory: float,
                           params: SUBoundParams | None = None) -> float:
    """Single cut-set bound over S = sum(s_i) + s_J caches and b broadcasts:

        R*(M) >= sum_{i not in J} s_i * (min(1, N_i/(s_i*b)) - M/b)
                 + s_J * (n_J/(s_J*b) - M/b),

    clamped at zero.  Default parameters follow the published recipe keyed to
    whether the memory is below 1/6, and the piecewise choice of s_J.
    """
    if spec.is_multi_user:
        raise ValueError("singleuser_lower_bound requires a single-user spec")
    if params is None:
        params = _su_default_params(spec, memory)
    else:
        if params.b < 1:
            raise InvalidBoundParams(f"b must be >= 1, got {params.b}")
        if len(params.s) != spec.num_levels:
            raise InvalidBoundParams("need one s per level")
        if any(x < 0 for x in params.s) or params.s_J < 0:
            raise InvalidBoundParams("cache counts must be nonnegative")
        for i, (s_i, k_i) in enumerate(zip(params.s, spec.users)):
            if s_i > k_i:
                raise InvalidBoundParams(f"s[{i}] = {s_i} exceeds level users {k_i}")
        if sum(params.s) + params.s_J > spec.caches:
            raise InvalidBoundParams("cut uses more caches than exist")
        if params.n_J > params.s_J * params.b:
            raise InvalidBoundParams("n_J exceeds s_J * b decodable files")

    b = params.b
    value = 0.0
    for i, s_i in enumerate(params.s):
        if s_i == 0:
            continue
        value += s_i * (min(1.0, spec.files[i] / (s_i * b)) - memory / b)
    if params.s_J > 0:
        value += params.s_J * (params.n_J / (params.s_J * b) - memory / b)
    return max(value, 0.0)


@dataclass(frozen=True)
class GapRow:
    memory: float
    achievable: float
    lower: float
    ratio: float
    origin: str


def gap(spec: SystemSpec, grid: Sequence) -> list:
    """Achievable rate, best lower bound, and their ratio per grid point.

    The ratio is inf when the bound is zero but the rate is not, and 1 when
    both vanish (the scheme is exactly optimal there).
    """
    if not grid:
        raise ValueError("memory grid must be nonempty")
    rows = []
    for m in grid:
        if spec.is_multi_user:
            ach = multiuser_rate(spec, m).total
            lower, params = best_multiuser_lower_bound(spec, m)
            origin = params.origin if params is not None else "none"
        else:
            ach = singleuser_rate(spec, m).total
            lower = singleuser_lower_bound(spec, m)
            origin = "Appendix"
        if lower > 0:
            ratio = ach / lower
        elif ach <= 1e-12:
            ratio = 1.0
        else:
            ratio = inf
        rows.append(GapRow(m, ach, lower, ratio, origin))
    return rows


class OutOfModelError(ValueError):
    """Inputs outside the regime a closed-form result covers."""


def small_example_optimum(memory: float, n2: int = 4) -> float:
    """Exact optimal rate for the two-cache, three-user worked example.

    Two popular files (one single-access user per cache) and ``n2 >= 4``
    unpopular files served through one user accessing both caches.  The
    trade-off is the maximum of four linear pieces, clamped at zero.
    """
    if memory < 0:
        raise ValueError(f"memory must be nonnegative, got {memory}")
    if n2 < 4:
        raise OutOfModelError(f"the exact characterization assumes n2 >= 4, got {n2}")
    pieces = (
        3.0 - 2.0 * memory,
        2.5 - memory,
        2.0 - 0.5 * memory,
        1.0 - (memory - 2.0) / (n2 / 2.0),
    )
    return max(*pieces, 0.0)
