import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelcache.single_level import (
    GeometryError,
    basic_rate,
    coloring_plan,
    single_level_rate,
)


def test_basic_rate_examples():
    assert basic_rate(0, 4, 16) == 4
    assert basic_rate(16, 4, 16) == 0
    assert basic_rate(2, 4, 8) == pytest.approx(3.0)


def test_basic_rate_rejects_negative_memory():
    with pytest.raises(ValueError):
        basic_rate(-1, 4, 16)


def test_single_level_rate_examples():
    assert single_level_rate(0, 7, 100, 3, 2) == 21
    assert single_level_rate(8, 4, 16, 3, 2) == 0  # memory = files/degree
    assert single_level_rate(14, 4, 16, 4, 1) == pytest.approx(4 / 7)


@given(
    memory=st.floats(0, 100),
    caches=st.integers(1, 20),
    files=st.integers(1, 200),
    users=st.integers(1, 10),
)
@settings(max_examples=200)
def test_degree_one_reduces_to_basic(memory, caches, files, users):
    if memory <= files:
        assert single_level_rate(memory, caches, files, users, 1) == pytest.approx(
            users * basic_rate(memory, caches, files)
        )


@given(
    caches=st.integers(1, 20),
    files=st.integers(1, 200),
    users=st.integers(1, 10),
    degree=st.integers(1, 4),
    data=st.data(),
)
@settings(max_examples=200)
def test_rate_nonincreasing_in_memory(caches, files, users, degree, data):
    m1 = data.draw(st.floats(0, 300))
    m2 = data.draw(st.floats(0, 300))
    lo, hi = sorted((m1, m2))
    assert single_level_rate(lo, caches, files, users, degree) >= (
        single_level_rate(hi, caches, files, users, degree) - 1e-9
    )


def test_coloring_plan_examples():
    plan = coloring_plan(4, 3, 2)
    assert plan.colors == 2
    assert len(plan.groups) == 6
    assert all(len(g) == 2 for g in plan.groups)

    flat = coloring_plan(6, 2, 1)
    assert flat.colors == 1
    assert len(flat.groups) == 2
    assert all(len(g) == 6 for g in flat.groups)

    tri = coloring_plan(6, 1, 3)
    assert tri.colors == 3
    assert len(tri.groups) == 3
    assert all(len(g) == 2 for g in tri.groups)


def test_coloring_plan_rejects_nondividing_degree():
    with pytest.raises(GeometryError):
        coloring_plan(10, 1, 3)


@pytest.mark.parametrize("caches,users,degree", [(4, 3, 2), (6, 1, 3), (8, 2, 4), (5, 2, 1)])
def test_coloring_plan_invariants(caches, users, degree):
    plan = coloring_plan(caches, users, degree)
    seen = set()
    for group in plan.groups:
        windows = []
        for w, u in group:
            assert (w, u) not in seen
            seen.add((w, u))
            windows.append({(w + k) % caches for k in range(degree)})
        # Disjoint windows tiling all caches.
        union = set().union(*windows)
        assert len(union) == caches
        assert sum(len(w) for w in windows) == caches
        # Each window covers every color exactly once.
        for win in windows:
            assert sorted(plan.cache_color[k] for k in win) == list(range(degree))
    assert len(seen) == caches * users


@pytest.mark.parametrize("caches,users,degree", [(4, 3, 2), (6, 1, 3), (8, 2, 2)])
def test_color_cache_lookup(caches, users, degree):
    plan = coloring_plan(caches, users, degree)
    for w in range(caches):
        window = [(w + k) % caches for k in range(degree)]
        for color in range(degree):
            k = plan.color_cache_of(w, color)
            assert k in window
            assert plan.cache_color[k] == color


@given(
    caches_over_degree=st.integers(1, 6),
    degree=st.integers(1, 4),
    users=st.integers(1, 5),
    files=st.integers(1, 100),
    frac=st.floats(0, 1),
)
@settings(max_examples=150)
def test_broadcast_accounting_identity(caches_over_degree, degree, users, files, frac):
    """dU groups x d colors x a basic run on subfiles reproduces the level rate."""
    caches = caches_over_degree * degree
    memory = frac * files / degree
    per_subsystem = basic_rate(min(degree * memory, files), caches_over_degree, files)
    composed = degree * users * per_subsystem
    assert composed == pytest.approx(
        single_level_rate(memory, caches, files, users, degree), abs=1e-9
    )
