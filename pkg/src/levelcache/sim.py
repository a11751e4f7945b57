"""Bit-exact placement and XOR delivery simulation.

Placement stores, per cache and level, a uniformly random fixed-size subset of
the bits of that cache's color class, so the per-cache memory budget is a hard
cap rather than a high-probability event.  Delivery serves each (level, group,
color) subsystem with the subset-XOR scheme: for every user subset, XOR the
bits each member misses but all other members cache.  Every user's decode is
replayed from its accessed caches plus the transcript alone and compared to
the ground-truth file bits.

All randomness flows from one 64-bit seed through counter-based generators
keyed by role (content / placement counts / placement positions), so results
are reproducible regardless of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import floor
from typing import Mapping, Sequence

import numpy as np

from .model import SystemSpec, make_spec, LevelSpec, MULTI_USER
from .partition import Allocation, allocate
from .rates import multiuser_rate
from .single_level import ColoringPlan, GeometryError, coloring_plan

_MASK64 = (1 << 64) - 1
_TAG_CONTENT = 0x11
_TAG_COUNTS = 0x22
_TAG_MASK = 0x33
_TAG_TRIAL = 0x44


class DecodeFailure(RuntimeError):
    """A replayed decode did not reproduce the requested file bit-for-bit."""

    def __init__(self, user, bit_index):
        self.user = user
        self.bit_index = bit_index
        super().__init__(f"user {user} failed to decode bit {bit_index}")


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _stream(seed: int, *words: int) -> np.random.Generator:
    """Independent deterministic generator for (seed, role, indices...)."""
    k = seed & _MASK64
    for w in words:
        k = _splitmix64(k ^ (int(w) & _MASK64))
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, k]))


@dataclass
class Placement:
    """Cache contents for one seeded placement round.

    ``counts[(cache, level)][n]`` is how many bits of file n's like-colored
    subfile the cache stores; the positions themselves and the ground-truth
    file bits are derived lazily from the seed, so large-catalog levels cost
    memory only for the files delivery actually touches.
    """

    spec: SystemSpec
    allocation: Allocation
    file_bits: int
    seed: int
    counts: Mapping
    stored_per_cache: tuple
    _masks: dict = field(default_factory=dict, repr=False)
    _contents: dict = field(default_factory=dict, repr=False)

    def subfile_bits(self, level: int) -> int:
        return self.file_bits // self.spec.degrees[level]

    def cache_color(self, cache: int, level: int) -> int:
        return cache % self.spec.degrees[level]

    def content(self, level: int, file: int) -> np.ndarray:
        """Ground-truth bits of one file (concatenated color subfiles)."""
        key = (level, file)
        if key not in self._contents:
            gen = _stream(self.seed, _TAG_CONTENT, level, file)
            self._contents[key] = gen.integers(0, 2, size=self.file_bits, dtype=np.uint8)
        return self._contents[key]

    def subfile(self, level: int, file: int, color: int) -> np.ndarray:
        fsub = self.subfile_bits(level)
        return self.content(level, file)[color * fsub:(color + 1) * fsub]

    def mask(self, cache: int, level: int, file: int) -> np.ndarray:
        """Which bits of the file's like-colored subfile this cache stores.

        The placement descriptor is public knowledge; only cache *contents*
        (bit values) are private to the caches.
        """
        key = (cache, level, file)
        if key not in self._masks:
            fsub = self.subfile_bits(level)
            cnt = int(self.counts[(cache, level)][file])
            out = np.zeros(fsub, dtype=bool)
            if cnt:
                gen = _stream(self.seed, _TAG_MASK, cache, level, file)
                out[gen.choice(fsub, size=cnt, replace=False)] = True
            self._masks[key] = out
        return self._masks[key]

    def cached_values(self, cache: int, level: int, file: int) -> np.ndarray:
        """Bit values the cache holds for this file (its color's subfile only)."""
        color = self.cache_color(cache, level)
        return self.subfile(level, file, color)[self.mask(cache, level, file)]


def place(spec: SystemSpec, allocation: Allocation, file_bits: int, seed: int) -> Placement:
    """Fill every cache with fixed-size uniform samples of its color classes.

    Level i with allocation a_i stores, in each cache, exactly
    ``floor(a_i * file_bits)`` bits drawn uniformly from the
    N_i * file_bits/d_i like-colored bits.  Requires d_i | caches and
    d_i | file_bits so color classes and subfiles are equal-sized.
    """
    if not spec.is_multi_user:
        raise ValueError("place requires a multi-user spec")
    K = spec.caches
    for i, d in enumerate(spec.degrees):
        if K % d != 0:
            raise GeometryError(f"level {i}: degree {d} does not divide caches {K}")
        if file_bits % d != 0:
            raise GeometryError(f"level {i}: degree {d} does not divide file size {file_bits}")

    budget = allocation.memory * file_bits
    targets = []
    for i, (N, d) in enumerate(zip(spec.files, spec.degrees)):
        q = allocation.per_level[i] * d / N
        if q > 1 + 1e-9:
            raise AssertionError(f"level {i}: sampling fraction {q} exceeds 1")
        q = min(q, 1.0)
        targets.append(floor(q * N * (file_bits // d)))
    # Hard memory cap: float wiggle in the allocation must never oversubscribe.
    while sum(targets) > floor(budget + 1e-9):
        targets[int(np.argmax(targets))] -= 1

    counts = {}
    for level, (N, target) in enumerate(zip(spec.files, targets)):
        fsub = file_bits // spec.degrees[level]
        n_files = int(N)
        for cache in range(K):
            if target == 0:
                counts[(cache, level)] = np.zeros(n_files, dtype=np.int64)
            elif target == n_files * fsub:
                counts[(cache, level)] = np.full(n_files, fsub, dtype=np.int64)
            else:
                gen = _stream(seed, _TAG_COUNTS, cache, level)
                counts[(cache, level)] = gen.multivariate_hypergeometric(
                    [fsub] * n_files, target
                ).astype(np.int64)

    stored = tuple(sum(targets) for _ in range(K))
    return Placement(
        spec=spec,
        allocation=allocation,
        file_bits=file_bits,
        seed=seed,
        counts=counts,
        stored_per_cache=stored,
    )


@dataclass(frozen=True)
class RequestVector:
    """Requested file per user; users are (level, window start, slot)."""

    per_level: Mapping
    all_distinct: bool = True

    def file_for(self, level: int, window: int, slot: int) -> int:
        return int(self.per_level[level][window, slot])


def worst_case_requests(spec: SystemSpec) -> RequestVector:
    """All-distinct demands per level, assigned lexicographically by (window, slot).

    When a level has fewer files than users (files_vs_users regularity
    violated) the assignment wraps around and the result is flagged.
    """
    if not spec.is_multi_user:
        raise ValueError("worst_case_requests requires a multi-user spec")
    per_level = {}
    distinct = True
    for i, (N, U) in enumerate(zip(spec.files, spec.users)):
        n_users = spec.caches * int(U)
        idx = np.arange(n_users)
        if n_users > N:
            distinct = False
            idx = idx % int(N)
        per_level[i] = idx.reshape(spec.caches, int(U))
    return RequestVector(per_level=per_level, all_distinct=distinct)


@dataclass(frozen=True)
class DeliveryResult:
    transmissions: tuple
    total_bits: int
    decoded_ok: Mapping
    empirical_rate: float


class _PublicRaw:
    """Bits broadcast uncoded so far, with their transmitted values.

    Keyed by (level, file, color); singleton payloads are deduplicated against
    this record so a file requested by several users is unicast once, and any
    user may read the recorded values (they were broadcast in the clear).
    """

    def __init__(self):
        self._sent: dict = {}
        self._vals: dict = {}

    def mask(self, key, fsub: int) -> np.ndarray:
        if key not in self._sent:
            self._sent[key] = np.zeros(fsub, dtype=bool)
            self._vals[key] = np.zeros(fsub, dtype=np.uint8)
        return self._sent[key]

    def add(self, key, sel: np.ndarray, payload: np.ndarray):
        self.mask(key, len(sel))[sel] = True
        self._vals[key][sel] = payload

    def values(self, key, fsub: int):
        self.mask(key, fsub)
        return self._sent[key], self._vals[key]


def _subset_order(size: int):
    """All nonempty member subsets, decreasing size, lexicographic within size."""
    subsets = []
    for mask in range(1, 1 << size):
        members = tuple(v for v in range(size) if mask >> v & 1)
        subsets.append(members)
    subsets.sort(key=lambda s: (-len(s), s))
    return subsets


def _serve_subsystem(placement: Placement, level: int, color: int, label: str,
                     member_caches: Sequence, member_files: Sequence,
                     public: _PublicRaw, transcript: list) -> list:
    """Run subset-XOR delivery for one group of users on like-colored caches.

    Returns, per member, the decoded subfile (replayed from the member's own
    cache, the public raw record, and the transcript payloads).  Every bit a
    member misses is cached at some subset T of the other members' caches and
    is delivered exactly once, by the subset T + {member}.
    """
    G = len(member_caches)
    fsub = placement.subfile_bits(level)

    # Membership codes are public: bit positions of member u's file, encoded by
    # which member caches store them.  The member's own cache bit is always 0
    # on its missing positions.
    codes = []
    for u in range(G):
        code = np.zeros(fsub, dtype=np.uint32)
        for v in range(G):
            code |= placement.mask(member_caches[v], level, member_files[u]).astype(np.uint32) << v
        codes.append(code)

    own_mask = [placement.mask(member_caches[u], level, member_files[u]) for u in range(G)]
    local = []  # records of this subsystem's transmissions, for the replay below
    for subset in _subset_order(G):
        sels = {}
        for u in subset:
            want = np.uint32(sum(1 << v for v in subset if v != u))
            sel = codes[u] == want
            if len(subset) == 1:
                sel &= ~public.mask((level, member_files[u], color), fsub)
            sels[u] = sel
        length = max(int(s.sum()) for s in sels.values())
        if length == 0:
            continue
        # Encode: XOR of the members' needed bit values, zero-padded to the
        # longest operand.  The server knows all file contents.
        payload = np.zeros(length, dtype=np.uint8)
        for u in subset:
            vals = placement.subfile(level, member_files[u], color)[sels[u]]
            payload[: len(vals)] ^= vals
        if len(subset) == 1:
            u = subset[0]
            public.add((level, member_files[u], color), sels[u], payload[: int(sels[u].sum())])
        transcript.append((f"{label}/S={'+'.join(map(str, subset))}", length, payload, subset, sels))
        local.append((payload, subset, sels))

    # Decode replay: each member sees only its own cache contents, the
    # broadcast payloads, and the public placement descriptor (masks).
    decoded = []
    for u in range(G):
        out = np.zeros(fsub, dtype=np.uint8)
        have = own_mask[u].copy()
        out[have] = placement.cached_values(member_caches[u], level, member_files[u])
        pub_mask, pub_vals = public.values((level, member_files[u], color), fsub)
        fill = pub_mask & ~have
        out[fill] = pub_vals[fill]
        have |= fill
        for payload, subset, sels in local:
            if u not in subset:
                continue
            mine = sels[u]
            if not mine.any():
                continue
            acc = payload.copy()
            for v in subset:
                if v == u:
                    continue
                # Operand v is cached at every member cache but v's, in
                # particular at u's; read those values through u's own cache.
                sel_v = sels[v]
                mask_at_u = placement.mask(member_caches[u], level, member_files[v])
                if not bool(np.all(mask_at_u[sel_v])):
                    raise AssertionError("XOR operand not present in a co-member cache")
                held = np.zeros(fsub, dtype=np.uint8)
                held[mask_at_u] = placement.cached_values(member_caches[u], level, member_files[v])
                vals_v = held[sel_v]
                acc[: len(vals_v)] ^= vals_v
            n = int(mine.sum())
            out[mine] = acc[:n]
            have |= mine
        decoded.append((out, have))
    return decoded


def deliver(spec: SystemSpec, placement: Placement, requests: RequestVector) -> DeliveryResult:
    """Broadcast and verify one full delivery round.

    Serves each (level, group, color) subsystem in canonical order and then
    checks every user's assembled file against the ground truth; a mismatch
    raises :class:`DecodeFailure` with the failing (user, bit) witness.
    """
    K = spec.caches
    public = _PublicRaw()
    transcript: list = []
    recovered: dict = {}

    for level, (N, U, d) in enumerate(zip(spec.files, spec.users, spec.degrees)):
        plan = coloring_plan(K, int(U), d)
        fsub = placement.subfile_bits(level)
        for g_index, group in enumerate(plan.groups):
            for color in range(d):
                caches = [plan.color_cache_of(w, color) for w, _ in group]
                files = [requests.file_for(level, w, u) for w, u in group]
                label = f"lvl{level}/grp{g_index}/col{color}"
                decoded = _serve_subsystem(
                    placement, level, color, label, caches, files, public, transcript
                )
                for (w, u), (bits, have) in zip(group, decoded):
                    recovered.setdefault((level, w, u), {})[color] = (bits, have)

    decoded_ok = {}
    for level, (N, U, d) in enumerate(zip(spec.files, spec.users, spec.degrees)):
        fsub = placement.subfile_bits(level)
        for w in range(K):
            for u in range(int(U)):
                user = (level, w, u)
                file = requests.file_for(level, w, u)
                truth = placement.content(level, file)
                parts = recovered[user]
                ok = True
                for color in range(d):
                    bits, have = parts[color]
                    if not bool(have.all()):
                        missing = int(np.flatnonzero(~have)[0])
                        raise DecodeFailure(user, color * fsub + missing)
                    if not bool(np.array_equal(bits, truth[color * fsub:(color + 1) * fsub])):
                        bad = int(np.flatnonzero(bits != truth[color * fsub:(color + 1) * fsub])[0])
                        raise DecodeFailure(user, color * fsub + bad)
                decoded_ok[user] = ok

    total_bits = sum(length for _, length, _, _, _ in transcript)
    return DeliveryResult(
        transmissions=tuple((label, length) for label, length, _, _, _ in transcript),
        total_bits=total_bits,
        decoded_ok=decoded_ok,
        empirical_rate=total_bits / placement.file_bits,
    )


@dataclass(frozen=True)
class SimReport:
    analytic_rate: float
    empirical_mean: float
    empirical_max: float
    decode_failures: int
    trials: int
    seed: int
    all_distinct: bool = True


def simulate(spec: SystemSpec, memory: float, file_bits: int, seed: int, trials: int) -> SimReport:
    """Worst-case-demand simulation over consecutive seeds."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    alloc = allocate(spec, memory)
    requests = worst_case_requests(spec)
    analytic = multiuser_rate(spec, memory).total
    rates = []
    for trial in range(trials):
        placement = place(spec, alloc, file_bits, seed + trial)
        result = deliver(spec, placement, requests)
        rates.append(result.empirical_rate)
    return SimReport(
        analytic_rate=analytic,
        empirical_mean=float(np.mean(rates)),
        empirical_max=float(np.max(rates)),
        decode_failures=0,
        trials=trials,
        seed=seed,
        all_distinct=requests.all_distinct,
    )


def _greedy_rows(aps: np.ndarray, files: np.ndarray):
    """Split same-level users into rows with at most one user per cache.

    Users are taken in arrival order per cache, so row j holds the (j+1)-th
    user of every cache that has one.
    """
    by_cache: dict = {}
    for ap, f in zip(aps, files):
        by_cache.setdefault(int(ap), []).append(int(f))
    rows = []
    depth = max((len(v) for v in by_cache.values()), default=0)
    for j in range(depth):
        row = [(ap, fs[j]) for ap, fs in sorted(by_cache.items()) if len(fs) > j]
        rows.append(row)
    return rows


def simulate_stochastic(popularity: Sequence, caches: int, users: int, memory: float,
                        file_bits: int, seed: int, trials: int,
                        split: int | None = None) -> SimReport:
    """Random user profile over a two-level discretization of a popularity law.

    Each user independently picks an access point uniformly and a file by the
    popularity weights.  Placement memory-shares on the split's average level
    popularity; delivery greedily rows up same-level users and serves each row
    with the subset-XOR scheme.  The analytic reference is the symmetric
    fixed-profile rate of the split.
    """
    weights = np.asarray(popularity, dtype=float)
    if weights.ndim != 1 or len(weights) < 1 or np.any(weights <= 0):
        raise ValueError("popularity must be a nonempty positive weight vector")
    if np.any(np.diff(weights) > 0):
        raise ValueError("popularity weights must be sorted descending")
    probs = weights / weights.sum()
    n_files = len(weights)

    if split is None:
        from .discretize import split_levels

        best = split_levels(weights, 2, caches, memory, users, allow_empty=True)
        split = best.boundaries[0] if best.boundaries else n_files
    if not (0 <= split <= n_files):
        raise ValueError(f"split index {split} out of range")

    seg_sizes = [s for s in (split, n_files - split) if s > 0]
    cuts = np.cumsum([0] + seg_sizes)
    masses = [float(probs[cuts[i]:cuts[i + 1]].sum()) for i in range(len(seg_sizes))]
    eff_levels = [
        LevelSpec(files=int(n), users_per_cache=users * m / caches, degree=1)
        for n, m in zip(seg_sizes, masses)
        if users * m / caches > 0
    ]
    eff_spec = make_spec(MULTI_USER, caches, eff_levels)
    analytic = multiuser_rate(eff_spec, memory).total
    alloc = allocate(eff_spec, memory)

    emp = []
    for trial in range(trials):
        placement = place(eff_spec, alloc, file_bits, seed + trial)
        gen = _stream(seed + trial, _TAG_TRIAL)
        aps = gen.integers(0, caches, size=users)
        glob = gen.choice(n_files, size=users, p=probs)
        public = _PublicRaw()
        transcript: list = []
        total_users = 0
        for level in range(eff_spec.num_levels):
            lo, hi = cuts[level], cuts[level + 1]
            in_level = (glob >= lo) & (glob < hi)
            if not in_level.any():
                continue
            rows = _greedy_rows(aps[in_level], glob[in_level] - lo)
            for r_index, row in enumerate(rows):
                caches_r = [ap for ap, _ in row]
                files_r = [f for _, f in row]
                label = f"lvl{level}/row{r_index}"
                decoded = _serve_subsystem(
                    placement, level, 0, label, caches_r, files_r, public, transcript
                )
                for (ap, f), (bits, have) in zip(row, decoded):
                    total_users += 1
                    if not bool(have.all()):
                        raise DecodeFailure((level, ap, f), int(np.flatnonzero(~have)[0]))
                    truth = placement.subfile(level, f, 0)
                    if not bool(np.array_equal(bits, truth)):
                        bad = int(np.flatnonzero(bits != truth)[0])
                        raise DecodeFailure((level, ap, f), bad)
        emp.append(sum(length for _, length, _, _, _ in transcript) / file_bits)

    return SimReport(
        analytic_rate=analytic,
        empirical_mean=float(np.mean(emp)),
        empirical_max=float(np.max(emp)),
        decode_failures=0,
        trials=trials,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Exact corner-point schemes for the two-cache, three-user worked example.

SMALL_CORNERS = ("M0", "Mhalf", "M1", "M2", "Mfull")


@dataclass(frozen=True)
class SmallExampleResult:
    corner: str
    memory: float
    rate: float
    broadcast_bits: int
    vectors_checked: int
    decoded_ok: bool


def _half(bits: np.ndarray, part: int) -> np.ndarray:
    h = len(bits) // 2
    return bits[part * h:(part + 1) * h]


def small_example_scheme(corner: str, n2: int, file_bits: int, seed: int = 0) -> SmallExampleResult:
    """Build one corner scheme of the two-cache example and verify it bit-exactly.

    Two popular files (users 1 and 2, one cache each) and ``n2`` unpopular
    files (user 3, both caches).  Every request vector must decode and the
    broadcast size is constant per corner: 3F, 2F, 1.5F, F, 0 for memories
    0, 1/2, 1, 2, 2 + n2/2 respectively.
    """
    from .bounds import OutOfModelError

    if n2 < 4:
        raise OutOfModelError(f"the worked example assumes n2 >= 4, got {n2}")
    if corner not in SMALL_CORNERS:
        raise ValueError(f"unknown corner {corner!r}; expected one of {SMALL_CORNERS}")
    if file_bits % 2:
        raise GeometryError("file size must be even (popular files are halved)")

    F = file_bits
    gen = _stream(seed, _TAG_CONTENT, 0xE0)
    popular = [gen.integers(0, 2, size=F, dtype=np.uint8) for _ in range(2)]
    unpopular = [gen.integers(0, 2, size=F, dtype=np.uint8) for _ in range(n2)]

    memory = {"M0": 0.0, "Mhalf": 0.5, "M1": 1.0, "M2": 2.0, "Mfull": 2.0 + n2 / 2.0}[corner]

    # Cache contents per corner; each entry is a labeled bit vector.
    if corner == "M0":
        z1: dict = {}
        z2: dict = {}
    elif corner == "Mhalf":
        z1 = {"xa": _half(popular[0], 0) ^ _half(popular[1], 0)}
        z2 = {"xb": _half(popular[0], 1) ^ _half(popular[1], 1)}
    elif corner == "M1":
        z1 = {"a0": _half(popular[0], 0), "a1": _half(popular[1], 0)}
        z2 = {"b0": _half(popular[0], 1), "b1": _half(popular[1], 1)}
    elif corner == "M2":
        z1 = {"w0": popular[0], "w1": popular[1]}
        z2 = {"w0": popular[0], "w1": popular[1]}
    else:  # Mfull
        z1 = {"w0": popular[0], "w1": popular[1]}
        z2 = {"w0": popular[0], "w1": popular[1]}
        for k in range(n2):
            z1[f"u{k}a"] = _half(unpopular[k], 0)
            z2[f"u{k}b"] = _half(unpopular[k], 1)

    for z, m in ((z1, memory), (z2, memory)):
        stored = sum(len(v) for v in z.values())
        if stored > m * F + 1e-9:
            raise AssertionError(f"cache stores {stored} bits, budget {m * F}")

    sizes = set()
    checked = 0
    for r1 in range(2):
        for r2 in range(2):
            for r3 in range(n2):
                broadcast = _encode_small(corner, popular, unpopular, r1, r2, r3)
                size = sum(len(v) for v in broadcast.values())
                sizes.add(size)
                got1 = _decode_small_popular(corner, r1, r2, z1, broadcast, own=1)
                got2 = _decode_small_popular(corner, r2, r1, z2, broadcast, own=2)
                got3 = _decode_small_unpopular(corner, r3, z1, z2, broadcast)
                for user, got, want in ((1, got1, popular[r1]), (2, got2, popular[r2]),
                                        (3, got3, unpopular[r3])):
                    if not np.array_equal(got, want):
                        bad = int(np.flatnonzero(got != want)[0])
                        raise DecodeFailure((corner, user, (r1, r2, r3)), bad)
                checked += 1

    if len(sizes) != 1:
        raise AssertionError(f"broadcast size varies across request vectors: {sorted(sizes)}")
    size = sizes.pop()
    return SmallExampleResult(
        corner=corner,
        memory=memory,
        rate=size / F,
        broadcast_bits=size,
        vectors_checked=checked,
        decoded_ok=True,
    )


def _encode_small(corner, popular, unpopular, r1, r2, r3) -> dict:
    if corner == "M0":
        return {"f1": popular[r1], "f2": popular[r2], "f3": unpopular[r3]}
    if corner == "Mhalf":
        return {
            "f3": unpopular[r3],
            "b_r1": _half(popular[r1], 1),
            "a_r2": _half(popular[r2], 0),
        }
    if corner == "M1":
        return {"f3": unpopular[r3], "xor": _half(popular[r1], 1) ^ _half(popular[r2], 0)}
    if corner == "M2":
        return {"f3": unpopular[r3]}
    return {}


def _decode_small_popular(corner, r_own, r_other, z, broadcast, own: int) -> np.ndarray:
    """Recover the popular file a single-cache user requested.

    ``own`` is 1 for the user at the first cache (stores 'a' halves at the M1
    corner) and 2 for the second cache.  Only ``z`` (the accessed cache) and
    the broadcast are read.
    """
    if corner == "M0":
        return broadcast["f1"] if own == 1 else broadcast["f2"]
    if corner in ("M2", "Mfull"):
        return z[f"w{r_own}"]
    if corner == "M1":
        # Own cache holds this user's color half of both files; the XOR part
        # plus the co-user's cached half yields the missing half.
        if own == 1:
            a_own = z[f"a{r_own}"]
            b_own = broadcast["xor"] ^ z[f"a{r_other}"]
            return np.concatenate([a_own, b_own])
        b_own = z[f"b{r_own}"]
        a_own = broadcast["xor"] ^ z[f"b{r_other}"]
        return np.concatenate([a_own, b_own])
    # Mhalf: the cache stores one coded half-combination; the broadcast carries
    # one raw half for each user, and the coded cache content supplies the rest.
    if own == 1:
        b_own = broadcast["b_r1"]
        if r_other == r_own:
            a_own = broadcast["a_r2"]
        else:
            a_own = z["xa"] ^ broadcast["a_r2"]
        return np.concatenate([a_own, b_own])
    a_own = broadcast["a_r2"]
    if r_other == r_own:
        b_own = broadcast["b_r1"]
    else:
        b_own = z["xb"] ^ broadcast["b_r1"]
    return np.concatenate([a_own, b_own])


def _decode_small_unpopular(corner, r3, z1, z2, broadcast) -> np.ndarray:
    if corner == "Mfull":
        return np.concatenate([z1[f"u{r3}a"], z2[f"u{r3}b"]])
    return broadcast["f3"]
