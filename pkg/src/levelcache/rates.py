"""Achievable-rate computation for both setups plus baseline schemes.

Multi-user: memory-sharing — split the cache across levels with
:func:`levelcache.partition.allocate` and run an independent single-level
coded subsystem per level.  Single-user: clustering — give all memory to the
levels worth storing and serve them as one super-level.  Baselines: uncoded
LFU, coded LFU, uniform memory-sharing, and the prior-knowledge reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import inf, sqrt
from typing import Iterable, Sequence

from .model import SystemSpec
from .partition import Allocation, Partition, aggregates, allocate
from .single_level import single_level_rate


@dataclass(frozen=True)
class SUPartition:
    """Single-user level classification at a given memory.

    ``Hprime`` keeps levels too unpopular to store (M < N/K_i); the rest form
    the clustered super-level ``Iprime``.  G/H/I/J is the finer split used by
    the closed-form bound: G small-audience unstored levels (at most 5 users),
    H large-audience unstored levels, I partially stored, J close to or past
    full storage (M > N_j/6); ``N_J`` is the total file count of J.
    """

    Hprime: frozenset
    Iprime: frozenset
    G: frozenset
    H: frozenset
    I: frozenset
    J: frozenset
    N_J: float


@dataclass(frozen=True)
class RateBreakdown:
    """Total rate plus per-level contributions and setup-specific extras.

    Multi-user fills ``approx`` (the compact approximation
    sum_H K*U_h + S_I^2/(M - T_J) - sum_I d_i*U_i, clamped at zero and +inf
    when M <= T_J) and ``upper_bounds`` (per-level closed-form caps on the same
    scheme).  Single-user fills ``refined_bound`` (+ its G/H/I/J terms) and the
    prior-knowledge reference rate (+ its terms, for termwise comparison).
    """

    total: float
    per_level: tuple
    partition_used: object
    allocation: Allocation | None = None
    approx: float | None = None
    upper_bounds: tuple | None = None
    refined_bound: float | None = None
    refined_terms: tuple | None = None
    prior_rate: float | None = None
    prior_terms: tuple | None = None


def multiuser_rate(spec: SystemSpec, memory: float) -> RateBreakdown:
    """Memory-sharing rate: per level, the single-level rate at its allocation."""
    if not spec.is_multi_user:
        raise ValueError("multiuser_rate requires a multi-user spec")
    alloc = allocate(spec, memory)
    N, U, d, K = spec.files, spec.users, spec.degrees, spec.caches

    per_level = tuple(
        single_level_rate(alloc.per_level[i], K, N[i], U[i], d[i])
        for i in range(spec.num_levels)
    )
    total = sum(per_level)

    part = alloc.partition
    ref = alloc.refined
    agg_i = aggregates(spec, part.I)
    agg_j = aggregates(spec, part.J)
    beta = float(spec.level_separation)

    effective = memory - agg_j.T + agg_i.V  # equals mtilde * S_I
    bounds = []
    for i in range(spec.num_levels):
        if i in part.H:
            bounds.append(K * U[i])
        elif i in part.J:
            bounds.append(0.0)
        elif i in ref.I1:
            rest = sum(sqrt(N[k] * U[k]) for k in part.I if k not in ref.I1)
            linear = (1.0 / beta) * d[i] * U[i] * (1.0 - (memory - agg_j.T) / (N[i] / d[i]))
            cross = (1.0 / beta) * d[i] * U[i] * rest / sqrt(N[i] * U[i])
            bounds.append(linear + cross)
        else:
            bounds.append(2.0 * agg_i.S * sqrt(N[i] * U[i]) / effective)

    if agg_i.S == 0:
        approx = float(sum(K * U[h] for h in part.H))
    elif memory - agg_j.T <= 0:
        approx = inf
    else:
        approx = (
            sum(K * U[h] for h in part.H)
            + agg_i.S**2 / (memory - agg_j.T)
            - sum(d[i] * U[i] for i in part.I)
        )
    approx = max(approx, 0.0)

    return RateBreakdown(
        total=total,
        per_level=per_level,
        partition_used=part,
        allocation=alloc,
        approx=approx,
        upper_bounds=tuple(bounds),
    )


def su_partition(spec: SystemSpec, memory: float) -> SUPartition:
    """Classify single-user levels at this memory."""
    if spec.is_multi_user:
        raise ValueError("su_partition requires a single-user spec")
    N = spec.files
    Ku = spec.users
    hprime = frozenset(i for i in range(spec.num_levels) if memory < N[i] / Ku[i])
    iprime = frozenset(range(spec.num_levels)) - hprime
    G = frozenset(
        i for i in range(spec.num_levels)
        if memory < N[i] / Ku[i] and Ku[i] <= 5 and memory <= N[i] / 6
    )
    H = frozenset(i for i in range(spec.num_levels) if memory < N[i] / Ku[i] and Ku[i] >= 6)
    I = frozenset(i for i in range(spec.num_levels) if N[i] / Ku[i] <= memory <= N[i] / 6)
    J = frozenset(i for i in range(spec.num_levels) if memory > N[i] / 6)
    return SUPartition(hprime, iprime, G, H, I, J, N_J=float(sum(N[j] for j in J)))


def _su_j_cap(n_j: float, memory: float) -> float:
    """Piecewise cap on the clustered-J term [N_J/M - 1]^+."""
    if n_j == 0 or memory >= n_j:
        return 0.0
    if memory < n_j / 6:
        return n_j / memory if memory > 0 else inf
    return 6.0 * (1.0 - memory / n_j)


def singleuser_rate(spec: SystemSpec, memory: float) -> RateBreakdown:
    """Clustering rate: unstored levels unicast, the rest served as one super-level.

    Also reports the G/H/I/J closed-form bound with the piecewise J cap and the
    prior-knowledge reference rate (total level separation given a known user
    profile).  The clustered term is attributed to levels proportionally to
    their file counts so the per-level column sums to the total.
    """
    if spec.is_multi_user:
        raise ValueError("singleuser_rate requires a single-user spec")
    part = su_partition(spec, memory)
    N, Ku = spec.files, spec.users

    n_cluster = sum(N[i] for i in part.Iprime)
    cluster_rate = max(n_cluster / memory - 1.0, 0.0) if part.Iprime else 0.0
    per_level = []
    for i in range(spec.num_levels):
        if i in part.Hprime:
            per_level.append(float(Ku[i]))
        else:
            per_level.append(cluster_rate * N[i] / n_cluster)
    total = sum(Ku[h] for h in part.Hprime) + cluster_rate

    g_term = 5.0 * len(part.G)
    h_term = float(sum(Ku[h] for h in part.H))
    i_term = sum(N[i] for i in part.I) / memory if part.I else 0.0
    j_term = _su_j_cap(part.N_J, memory)
    refined = g_term + h_term + i_term + j_term

    prior = 0.0
    for i in range(spec.num_levels):
        stored = max(1.0 - memory / N[i], 0.0)
        load = Ku[i] if memory == 0 else min(Ku[i], N[i] / memory)
        prior += load * stored
    prior_j = 6.0 * sum(max(1.0 - memory / N[j], 0.0) for j in part.J)

    return RateBreakdown(
        total=total,
        per_level=tuple(per_level),
        partition_used=part,
        refined_bound=refined,
        refined_terms=(g_term, h_term, i_term, j_term),
        prior_rate=prior,
        prior_terms=(g_term, h_term, i_term, prior_j),
    )


def _level_user_totals(spec: SystemSpec) -> tuple:
    if spec.is_multi_user:
        return tuple(spec.caches * u for u in spec.users)
    return tuple(spec.users)


def lfu_rate(spec: SystemSpec, memory: float, coded: bool = False) -> float:
    """Rate of the LFU baselines.

    Uncoded LFU fills the cache with whole files in popularity order (at most
    one boundary file stored fractionally, costing 1 - fraction per request)
    and unicasts every miss; the worst case requests as many distinct unstored
    files per level as there are level users.  Coded LFU allocates the same way
    level-wise (most popular levels fully stored, one boundary level partially)
    but delivers each level with the coded single-level scheme.
    """
    if memory < 0:
        raise ValueError(f"memory must be nonnegative, got {memory}")
    N, d, K = spec.files, spec.degrees, spec.caches
    users = _level_user_totals(spec)

    if coded:
        remaining = memory
        total = 0.0
        for i in range(spec.num_levels):
            cap = N[i] / d[i]
            give = min(remaining, cap)
            remaining -= give
            if spec.is_multi_user:
                total += single_level_rate(give, K, N[i], spec.users[i], d[i])
            else:
                # Single-user analog: the level's own caches run the basic scheme.
                total += single_level_rate(give, users[i], N[i], 1, 1)
        return total

    remaining = memory
    total = 0.0
    for i in range(spec.num_levels):
        give = min(remaining, float(N[i]))
        remaining -= give
        whole = int(give)
        fraction = give - whole
        unstored = N[i] - whole - (1 if fraction > 0 else 0)
        want = users[i]
        hit_full = min(want, unstored)
        total += hit_full
        if fraction > 0 and want > unstored:
            total += 1.0 - fraction
    return total


def uniform_sharing_rate(spec: SystemSpec, memory: float) -> float:
    """Popularity-blind baseline: every file gets the same amount of memory."""
    if not spec.is_multi_user:
        raise ValueError("uniform_sharing_rate requires a multi-user spec")
    per_file = memory / sum(spec.files)
    return sum(
        single_level_rate(per_file * N, spec.caches, N, U, d)
        for N, U, d in zip(spec.files, spec.users, spec.degrees)
    )


#: Column order of the curve CSV; absent schemes are left empty.
CURVE_SCHEMES = ("ms", "lfu", "coded_lfu", "uniform", "su", "prior")


def rate_curve(spec: SystemSpec, grid: Sequence, schemes: Iterable | None = None) -> list:
    """Evaluate the setup's schemes over a sorted memory grid.

    Returns one ``(memory, {scheme: rate})`` row per grid point.  Multi-user
    specs fill ms/lfu/coded_lfu/uniform, single-user specs su/lfu/prior.
    """
    if any(grid[i] > grid[i + 1] for i in range(len(grid) - 1)):
        raise ValueError("memory grid must be sorted ascending")
    if spec.is_multi_user:
        default = ("ms", "lfu", "coded_lfu", "uniform")
    else:
        default = ("su", "lfu", "prior")
    wanted = tuple(schemes) if schemes is not None else default
    unknown = set(wanted) - set(CURVE_SCHEMES)
    if unknown:
        raise ValueError(f"unknown scheme(s): {sorted(unknown)}")

    rows = []
    for m in grid:
        row: dict = {}
        if "ms" in wanted:
            row["ms"] = multiuser_rate(spec, m).total
        if "su" in wanted:
            su = singleuser_rate(spec, m)
            row["su"] = su.total
            if "prior" in wanted:
                row["prior"] = su.prior_rate
        elif "prior" in wanted:
            row["prior"] = singleuser_rate(spec, m).prior_rate
        if "lfu" in wanted:
            row["lfu"] = lfu_rate(spec, m, coded=False)
        if "coded_lfu" in wanted:
            row["coded_lfu"] = lfu_rate(spec, m, coded=True)
        if "uniform" in wanted:
            row["uniform"] = uniform_sharing_rate(spec, m)
        rows.append((m, row))
    return rows
