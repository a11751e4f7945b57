"""Memory-feasible partitions and the per-level memory allocation.

For a given cache memory M the levels split into H (no memory), I (partial
memory), and J (fully stored).  The split is characterized by threshold
inequalities on the scaled memory ``mtilde = (M - T_J + V_I) / S_I`` and can be
precomputed for every M at once: sorting the 2L per-level thresholds yields at
most 2L+1 memory intervals, each with a fixed partition, in O(L^2) arithmetic.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from math import inf, isinf, sqrt
from typing import Iterable

from .model import SystemSpec

#: Relative tolerance for threshold comparisons; the thresholds involve square
#: roots, so exact rational arithmetic is unavailable.
REL_TOL = 1e-12


def _rel_close(a: float, b: float, tol: float = REL_TOL) -> float:
    return tol * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class Partition:
    """Disjoint level-index sets covering all levels: none / partial / full memory."""

    H: frozenset
    I: frozenset
    J: frozenset

    def sets(self):
        return self.H, self.I, self.J


@dataclass(frozen=True)
class RefinedPartition:
    """Subdivision of I by memory regime.

    I0 holds levels still below one file-share per cache, I1 levels within a
    separation factor of full storage, Iprime the rest.  When the separation
    condition holds and caches >= D/beta these are disjoint and |I1| <= 1;
    otherwise I0 and I1 may overlap and a warning is attached.
    """

    H: frozenset
    I0: frozenset
    Iprime: frozenset
    I1: frozenset
    J: frozenset
    warnings: tuple = ()


@dataclass(frozen=True)
class AggregateStats:
    """Level-subset aggregates used throughout: S (geometric size sum
    sqrt(N_i U_i)), T (full-storage cost sum N_i/d_i), V (per-cache share
    sum N_i/K)."""

    S: float
    T: float
    V: float


def aggregates(spec: SystemSpec, subset: Iterable) -> AggregateStats:
    N, U, d, K = spec.files, spec.users, spec.degrees, spec.caches
    idx = list(subset)
    return AggregateStats(
        S=sum(sqrt(N[i] * U[i]) for i in idx),
        T=sum(N[i] / d[i] for i in idx),
        V=sum(N[i] / K for i in idx),
    )


def mtilde(spec: SystemSpec, memory: float, partition: Partition) -> float:
    """Scaled memory (M - T_J + V_I) / S_I; +inf when I is empty."""
    agg_i = aggregates(spec, partition.I)
    agg_j = aggregates(spec, partition.J)
    if agg_i.S == 0:
        return inf
    return (memory - agg_j.T + agg_i.V) / agg_i.S


@dataclass(frozen=True)
class ThresholdEntry:
    """One sorted promotion point: kind 'm' moves the level H->I, 'M' moves it I->J."""

    value: float
    kind: str
    level: int


@dataclass(frozen=True)
class IntervalTable:
    """Partition of the whole memory axis into intervals [Y_t, Y_{t+1}).

    ``boundaries[t]`` is the memory at which ``partitions[t]`` starts being the
    feasible partition; the final implicit boundary is +inf.  The last listed
    boundary equals the full-storage point sum(N_i/d_i).
    """

    thresholds: tuple
    boundaries: tuple
    partitions: tuple
    full_storage: float


def _level_thresholds(spec: SystemSpec):
    """Per-level promotion values: (1/K)sqrt(N/U) for H->I and
    (1/d + 1/K)sqrt(N/U) for I->J."""
    K = spec.caches
    low, high = [], []
    for N, U, d in zip(spec.files, spec.users, spec.degrees):
        if U <= 0:
            raise ValueError("levels must have positive user counts")
        r = sqrt(N / U)
        low.append(r / K)
        high.append((1.0 / d + 1.0 / K) * r)
    return low, high


def interval_table(spec: SystemSpec) -> IntervalTable:
    """Run the three-step table construction.

    Step 1 sorts the 2L thresholds (H->I promotions before I->J promotions at
    equal value, lower level index first) and replays the promotions to get the
    partition sequence.  Step 2 maps each threshold x_t to the memory boundary
    ``Y_t = x_t * S_I + T_J - V_I`` evaluated with the partition of the
    interval that starts at x_t.  Step 3 is the lookup, served by
    :func:`partition_at`.
    """
    if not spec.is_multi_user:
        raise ValueError("interval tables are defined for the multi-user setup")
    low, high = _level_thresholds(spec)
    L = spec.num_levels
    entries = [ThresholdEntry(low[i], "m", i) for i in range(L)]
    entries += [ThresholdEntry(high[i], "M", i) for i in range(L)]
    entries.sort(key=lambda e: (e.value, 0 if e.kind == "m" else 1, e.level))

    H, I, J = set(range(L)), set(), set()
    partitions, boundaries = [], []
    prev_y = 0.0
    for entry in entries:
        if entry.kind == "m":
            H.discard(entry.level)
            I.add(entry.level)
        else:
            I.discard(entry.level)
            J.add(entry.level)
        part = Partition(frozenset(H), frozenset(I), frozenset(J))
        agg_i = aggregates(spec, I)
        agg_j = aggregates(spec, J)
        y = entry.value * agg_i.S + agg_j.T - agg_i.V
        # Y_1 is identically zero and the sequence is nondecreasing; repair
        # the sub-REL_TOL float wiggle so lookups stay consistent.
        y = max(y, prev_y, 0.0)
        prev_y = y
        partitions.append(part)
        boundaries.append(y)

    full = sum(N / d for N, d in zip(spec.files, spec.degrees))
    return IntervalTable(
        thresholds=tuple(entries),
        boundaries=tuple(boundaries),
        partitions=tuple(partitions),
        full_storage=full,
    )


def partition_at(table: IntervalTable, memory: float) -> Partition:
    """Look up the feasible partition for a memory value (right-open intervals)."""
    if memory < 0:
        raise ValueError(f"memory must be nonnegative, got {memory}")
    t = bisect_right(table.boundaries, memory) - 1
    if t < 0:
        t = 0
    return table.partitions[t]


@dataclass(frozen=True)
class LevelCheck:
    level: int
    member_of: str
    ok: bool
    slack: float


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    mtilde: float
    per_level: tuple
    notes: tuple = ()


def check_m_feasible(spec: SystemSpec, memory: float, partition: Partition) -> FeasibilityReport:
    """Independent check of the defining inequalities of a feasible partition.

    Evaluates, against ``mtilde``: strictly below (1/K)sqrt(N/U) for H, inside
    [(1/K)sqrt(N/U), (1/d+1/K)sqrt(N/U)] for I, strictly above for J.  At exact
    threshold values both neighboring partitions satisfy the definition, so
    boundary equality within tolerance passes.  Serves as the oracle for
    :func:`interval_table`.
    """
    L = spec.num_levels
    members = sorted(partition.H | partition.I | partition.J)
    if members != list(range(L)) or len(partition.H) + len(partition.I) + len(partition.J) != L:
        raise ValueError("partition must cover every level exactly once")

    low, high = _level_thresholds(spec)
    agg_j = aggregates(spec, partition.J)
    notes: list[str] = []

    if not partition.I:
        # With no partially-stored level the definition degenerates: only the
        # everything-in-J partition at or beyond full storage is feasible.
        full = sum(N / d for N, d in zip(spec.files, spec.degrees))
        feasible = not partition.H and memory >= agg_j.T - _rel_close(memory, agg_j.T)
        if memory < full - _rel_close(memory, full):
            notes.append("I empty although memory does not cover full storage")
        checks = tuple(
            LevelCheck(i, "H" if i in partition.H else "J", i in partition.J, -inf if i in partition.H else inf)
            for i in range(L)
        )
        return FeasibilityReport(feasible and not notes, inf, checks, tuple(notes))

    mt = mtilde(spec, memory, partition)
    checks = []
    for i in range(L):
        if i in partition.H:
            slack = low[i] - mt
            ok = mt < low[i] + _rel_close(mt, low[i])
            member = "H"
        elif i in partition.I:
            slack = min(mt - low[i], high[i] - mt)
            ok = (mt >= low[i] - _rel_close(mt, low[i])) and (mt <= high[i] + _rel_close(mt, high[i]))
            member = "I"
        else:
            slack = mt - high[i]
            ok = mt > high[i] - _rel_close(mt, high[i])
            member = "J"
        checks.append(LevelCheck(i, member, ok, slack))
    feasible = all(c.ok for c in checks)
    return FeasibilityReport(feasible, mt, tuple(checks), tuple(notes))


@dataclass(frozen=True)
class Allocation:
    """Absolute memory given to each level, with the partitions that produced it.

    Invariants: each entry is in [0, N_i/d_i] and the entries sum to
    min(memory, full storage); all levels get zero at M = 0.
    """

    memory: float
    per_level: tuple
    partition: Partition
    refined: RefinedPartition


def _refine(spec: SystemSpec, partition: Partition, mt: float) -> RefinedPartition:
    K = spec.caches
    beta = float(spec.level_separation)
    i0, i1 = set(), set()
    for i in partition.I:
        r = sqrt(spec.files[i] / spec.users[i])
        if mt < (2.0 / K) * r:
            i0.add(i)
        if mt > (beta / spec.degrees[i] + 1.0 / K) * r:
            i1.add(i)
    iprime = set(partition.I) - i0 - i1
    warnings = ()
    if len(i1) > 1:
        warnings = (
            f"{len(i1)} levels within a separation factor of full storage; "
            "possible only when the level-separation condition fails",
        )
    return RefinedPartition(
        H=partition.H,
        I0=frozenset(i0),
        Iprime=frozenset(iprime),
        I1=frozenset(i1),
        J=partition.J,
        warnings=warnings,
    )


def refine(spec: SystemSpec, memory: float) -> RefinedPartition:
    """Classify the partially-stored levels by memory regime at this M."""
    part = partition_at(interval_table(spec), memory)
    return _refine(spec, part, mtilde(spec, memory, part))


def allocate(spec: SystemSpec, memory: float) -> Allocation:
    """Split the cache memory across levels.

    H levels get zero, J levels their full-storage cost N/d, and each I level
    ``sqrt(N_i U_i) * mtilde - N_i/K``: memory per file proportional to the
    square root of the level's popularity.
    """
    table = interval_table(spec)
    part = partition_at(table, memory)
    mt = mtilde(spec, memory, part)
    N, U, d, K = spec.files, spec.users, spec.degrees, spec.caches

    per_level = []
    for i in range(spec.num_levels):
        cap = N[i] / d[i]
        if i in part.H:
            share = 0.0
        elif i in part.J:
            share = cap
        else:
            share = sqrt(N[i] * U[i]) * mt - N[i] / K
        if share < -1e-9 * max(1.0, memory):
            raise AssertionError(f"negative allocation {share} at level {i} (memory {memory})")
        if share > cap + 1e-9 * max(1.0, cap):
            raise AssertionError(f"allocation {share} exceeds full storage {cap} at level {i}")
        per_level.append(min(max(share, 0.0), cap))

    expected = min(memory, table.full_storage)
    total = sum(per_level)
    if abs(total - expected) > 1e-9 * max(1.0, expected):
        raise AssertionError(f"allocation sums to {total}, expected {expected}")

    return Allocation(
        memory=memory,
        per_level=tuple(per_level),
        partition=part,
        refined=_refine(spec, part, mt),
    )
