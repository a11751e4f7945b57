"""Shared fixtures: canned systems from the worked examples, seeded generators."""

from __future__ import annotations

import numpy as np
import pytest

from levelcache.model import (
    LevelSpec,
    MULTI_USER,
    SINGLE_USER,
    SULevelSpec,
    make_spec,
    parse_spec,
)

FIXTURE_JSON = (
    '{"setup":"multi-user","caches":4,"levels":['
    '{"files":16,"users_per_cache":4,"degree":1},'
    '{"files":64,"users_per_cache":1,"degree":1}]}'
)

# The three gap-evaluation systems and the two baseline-comparison systems.
GAP_SPECS = {
    "k10_multiaccess": (
        '{"setup":"multi-user","caches":10,"levels":['
        '{"files":500,"users_per_cache":9,"degree":1},'
        '{"files":1500,"users_per_cache":5,"degree":3},'
        '{"files":8000,"users_per_cache":1,"degree":5}]}'
    ),
    "k20_single_access": (
        '{"setup":"multi-user","caches":20,"levels":['
        '{"files":200,"users_per_cache":10,"degree":1},'
        '{"files":20000,"users_per_cache":5,"degree":1},'
        '{"files":800000,"users_per_cache":1,"degree":1}]}'
    ),
    "k20_multiaccess": (
        '{"setup":"multi-user","caches":20,"levels":['
        '{"files":200,"users_per_cache":10,"degree":1},'
        '{"files":20000,"users_per_cache":5,"degree":2},'
        '{"files":800000,"users_per_cache":1,"degree":3}]}'
    ),
}

LFU_MU_JSON = (
    '{"setup":"multi-user","caches":30,"levels":['
    '{"files":600,"users_per_cache":20,"degree":1},'
    '{"files":1000,"users_per_cache":10,"degree":1}]}'
)
LFU_SU_JSON = (
    '{"setup":"single-user","caches":45,"levels":['
    '{"files":500,"users":30},{"files":1000,"users":15}]}'
)


@pytest.fixture
def fixture_spec():
    return parse_spec(FIXTURE_JSON)


@pytest.fixture
def su_example():
    return parse_spec(LFU_SU_JSON)


def full_storage(spec) -> float:
    return sum(n / d for n, d in zip(spec.files, spec.degrees))


def random_mu_spec(rng: np.random.Generator, max_levels=4, max_caches=30,
                   max_degree=None) -> object:
    """Arbitrary multi-user system; no regularity guarantees."""
    K = int(rng.integers(2, max_caches + 1))
    L = int(rng.integers(1, max_levels + 1))
    levels = []
    for _ in range(L):
        d_cap = min(max_degree or K, K)
        d = int(rng.integers(1, d_cap + 1))
        U = int(rng.integers(1, 6))
        N = int(rng.integers(1, 40)) * max(U, 1)
        levels.append(LevelSpec(files=N, users_per_cache=U, degree=d))
    return make_spec(MULTI_USER, K, levels)


def random_regular_mu_spec(rng: np.random.Generator, max_levels=3, max_caches=30,
                           allow_multiaccess=True) -> object:
    """Multi-user system satisfying both regularity conditions.

    Level popularities are spaced by at least (separation threshold)^2 so the
    sqrt-ratio condition holds with margin; files >= caches * users per level.
    """
    K = int(rng.integers(2, max_caches + 1))
    L = int(rng.integers(1, max_levels + 1))
    degrees = [
        int(rng.integers(1, min(3, K) + 1)) if allow_multiaccess else 1 for _ in range(L)
    ]
    D = max(degrees)
    sep = (198 * D) ** 2
    levels = []
    ratio = 1.0
    for i in range(L):
        U = int(rng.integers(1, 4))
        # files per user grows by >= sep per level so adjacent sqrt-popularity
        # ratios clear D/beta even after integer rounding.
        per_user = K * float(rng.integers(1, 4)) * ratio
        N = int(np.ceil(per_user * U))
        levels.append(LevelSpec(files=N, users_per_cache=U, degree=degrees[i]))
        ratio *= sep * float(rng.uniform(1.1, 2.0))
    return make_spec(MULTI_USER, K, levels)


def random_su_spec(rng: np.random.Generator, max_levels=4, max_caches=40) -> object:
    """Single-user system satisfying files >= users per level."""
    L = int(rng.integers(1, max_levels + 1))
    counts = [int(rng.integers(1, 12)) for _ in range(L)]
    K = sum(counts)
    levels = []
    for k in counts:
        N = k * int(rng.integers(1, 50))
        levels.append(SULevelSpec(files=N, users_total=k))
    return make_spec(SINGLE_USER, K, levels)


def random_sim_spec(rng: np.random.Generator) -> object:
    """Small system with d | caches and d | 2^k, safe for bit-level simulation."""
    K = int(rng.choice([4, 6, 8]))
    L = int(rng.integers(1, 3))
    levels = []
    for _ in range(L):
        d = int(rng.choice([x for x in (1, 2, 4) if K % x == 0]))
        U = int(rng.integers(1, 4))
        N = int(K * U * rng.integers(1, 5))
        levels.append(LevelSpec(files=N, users_per_cache=U, degree=d))
    return make_spec(MULTI_USER, K, levels)


def memory_grid(spec, rng: np.random.Generator, count: int) -> list:
    """Random memory values spanning the trade-off, endpoints included."""
    full = full_storage(spec)
    inner = rng.uniform(0, full * 1.05, size=max(count - 2, 0))
    return [0.0, *sorted(float(m) for m in inner), full]


def zipf_weights(n: int, exponent: float) -> np.ndarray:
    ranks = np.arange(1, n + 1, dtype=float)
    return ranks ** -exponent
