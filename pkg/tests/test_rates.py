import numpy as np
import pytest

from levelcache.model import SULevelSpec, SINGLE_USER, make_spec, parse_spec
from levelcache.partition import aggregates
from levelcache.rates import (
    lfu_rate,
    multiuser_rate,
    rate_curve,
    singleuser_rate,
    su_partition,
    uniform_sharing_rate,
)

from conftest import (
    LFU_MU_JSON,
    LFU_SU_JSON,
    full_storage,
    memory_grid,
    random_mu_spec,
    random_regular_mu_spec,
    random_su_spec,
)


def test_fixture_rate_breakdown(fixture_spec):
    r = multiuser_rate(fixture_spec, 16)
    assert r.per_level == pytest.approx((4 / 7, 3.875))
    assert r.total == pytest.approx(4 / 7 + 3.875)
    assert r.allocation.per_level == pytest.approx((14.0, 2.0))
    # Compact approximation: S_I^2/(M - T_J) - sum d_i U_i with H empty.
    assert r.approx == pytest.approx(16**2 / 16 - 5)


def test_rate_endpoints(fixture_spec):
    assert multiuser_rate(fixture_spec, 0).total == pytest.approx(20.0)
    assert multiuser_rate(fixture_spec, 80).total == 0.0
    assert multiuser_rate(fixture_spec, 500).total == 0.0


def test_total_is_sum_of_levels():
    rng = np.random.default_rng(5)
    for _ in range(50):
        spec = random_mu_spec(rng)
        for m in memory_grid(spec, rng, 8):
            r = multiuser_rate(spec, m)
            assert r.total == pytest.approx(sum(r.per_level))
            assert all(x >= 0 for x in r.per_level)


def test_level_bounds_dominate_on_regular_specs():
    """Per-level closed-form caps hold where the separation condition holds."""
    rng = np.random.default_rng(13)
    for _ in range(40):
        spec = random_regular_mu_spec(rng)
        for m in memory_grid(spec, rng, 15):
            r = multiuser_rate(spec, m)
            for rate, cap in zip(r.per_level, r.upper_bounds):
                assert rate <= cap + 1e-9 * max(1.0, cap), (spec, m)
            assert r.total <= sum(r.upper_bounds) + 1e-9


def test_approx_bracketed_by_closed_form_cap():
    """Compact approximation stays under the per-level cap sum when no partial
    level sits in a boundary regime (I0 = I1 = empty; in the I0 corner the
    1/(M - T_J) term saturates and the approximation overshoots by design)."""
    rng = np.random.default_rng(17)
    checked = 0
    for _ in range(80):
        spec = random_regular_mu_spec(rng)
        for m in memory_grid(spec, rng, 16):
            r = multiuser_rate(spec, m)
            part = r.partition_used
            refined = r.allocation.refined
            agg_i = aggregates(spec, part.I)
            agg_j = aggregates(spec, part.J)
            if refined.I1 or refined.I0 or m <= agg_j.T or not part.I:
                continue
            cap = sum(spec.caches * spec.users[h] for h in part.H)
            cap += 2 * agg_i.S**2 / (m - agg_j.T + agg_i.V)
            assert r.approx <= cap + 1e-9 * max(1.0, cap)
            checked += 1
    assert checked > 50


def test_su_examples(su_example):
    r100 = singleuser_rate(su_example, 100)
    assert r100.total == pytest.approx(14.0)
    assert r100.partition_used.Hprime == frozenset()
    r30 = singleuser_rate(su_example, 30)
    assert r30.total == pytest.approx(15 + 500 / 30 - 1)
    assert r30.partition_used.Hprime == frozenset({1})
    assert singleuser_rate(su_example, 1500).total == 0.0
    assert singleuser_rate(su_example, 0).total == 45.0


def test_su_per_level_sums_to_total(su_example):
    for m in (0, 10, 30, 100, 400, 1600):
        r = singleuser_rate(su_example, m)
        assert sum(r.per_level) == pytest.approx(r.total)


def test_su_definition_partition(su_example):
    # At M=100: the 500-file level is past files/6, the 1000-file level mid-range.
    part = su_partition(su_example, 100)
    assert part.J == frozenset({0})
    assert part.I == frozenset({1})
    assert part.N_J == 500
    covered = part.G | part.H | part.I | part.J
    assert covered == frozenset({0, 1})


def test_su_rate_within_refined_bound_slack():
    """Theorem rate <= G/H/I/J bound + 1 (the dropped unit of the J regrouping)."""
    rng = np.random.default_rng(29)
    for _ in range(120):
        spec = random_su_spec(rng)
        total_files = sum(spec.files)
        for m in [0.0, *np.random.default_rng(1).uniform(0, 1.2 * total_files, 10)]:
            r = singleuser_rate(spec, m)
            assert r.total <= r.refined_bound + 1 + 1e-9, (spec, m)


def test_su_prior_terms_match_refined_terms():
    """G, H, and I contributions of the two closed forms are term-identical."""
    rng = np.random.default_rng(41)
    for _ in range(60):
        spec = random_su_spec(rng)
        for m in np.random.default_rng(2).uniform(0, 1.2 * sum(spec.files), 8):
            r = singleuser_rate(spec, m)
            assert r.refined_terms[:3] == pytest.approx(r.prior_terms[:3])


def test_prior_rate_endpoints(su_example):
    assert singleuser_rate(su_example, 0).prior_rate == 45.0
    # Known profile: with memory above every level's file count the rate is 0.
    assert singleuser_rate(su_example, 1000).prior_rate == 0.0


def test_lfu_examples():
    spec = parse_spec(LFU_MU_JSON)
    assert lfu_rate(spec, 600) == pytest.approx(300.0)
    assert lfu_rate(spec, 0) == pytest.approx(900.0)
    assert lfu_rate(spec, 1600) == 0.0
    assert lfu_rate(spec, 1600, coded=True) == 0.0


def test_lfu_fractional_boundary_file_is_continuous():
    spec = parse_spec(LFU_MU_JSON)
    # Between 599 and 600 the last level-1 file fills gradually.
    r0, r1 = lfu_rate(spec, 599.0), lfu_rate(spec, 599.5)
    assert r0 - r1 == pytest.approx(0.5)
    grid = np.linspace(0, 1700, 400)
    vals = [lfu_rate(spec, float(m)) for m in grid]
    steps = np.abs(np.diff(vals))
    assert steps.max() <= (grid[1] - grid[0]) + 1e-9


def test_coded_lfu_never_worse_than_uncoded():
    spec = parse_spec(LFU_MU_JSON)
    for m in (0, 100, 400, 800, 1200, 1599):
        assert lfu_rate(spec, m, coded=True) <= lfu_rate(spec, m) + 1e-9


def test_sharing_beats_both_baselines_on_three_level_example():
    """On the 100-cache three-level system, popularity-aware sharing beats
    coded LFU and uniform sharing by a factor >= 6 somewhere on the grid."""
    spec = parse_spec(
        '{"setup":"multi-user","caches":100,"levels":['
        '{"files":2000,"users_per_cache":20,"degree":1},'
        '{"files":5000,"users_per_cache":10,"degree":1},'
        '{"files":50000,"users_per_cache":5,"degree":1}]}'
    )
    best_coded, best_uniform = 0.0, 0.0
    for m in np.linspace(1, 57000, 120):
        ms = multiuser_rate(spec, float(m)).total
        if ms <= 0:
            continue
        best_coded = max(best_coded, lfu_rate(spec, float(m), coded=True) / ms)
        best_uniform = max(best_uniform, uniform_sharing_rate(spec, float(m)) / ms)
    assert best_coded >= 6.0
    assert best_uniform >= 6.0


def test_uniform_sharing(fixture_spec):
    assert uniform_sharing_rate(fixture_spec, 16) == pytest.approx(16.0)
    assert uniform_sharing_rate(fixture_spec, 0) == pytest.approx(20.0)


def test_uniform_sharing_single_level_equals_memory_sharing():
    spec = parse_spec(
        '{"setup":"multi-user","caches":4,"levels":[{"files":16,"users_per_cache":4,"degree":1}]}'
    )
    for m in (0, 3, 7, 12, 16):
        assert uniform_sharing_rate(spec, m) == pytest.approx(multiuser_rate(spec, m).total)


def test_curve_multi_user_schemes():
    spec = parse_spec(LFU_MU_JSON)
    grid = [0, 200, 400, 800, 1600]
    rows = rate_curve(spec, grid)
    assert [m for m, _ in rows] == grid
    ms = [row["ms"] for _, row in rows]
    assert all(a >= b - 1e-9 for a, b in zip(ms, ms[1:]))
    for _, row in rows:
        assert set(row) == {"ms", "lfu", "coded_lfu", "uniform"}
        assert row["ms"] <= row["lfu"] + 1e-9  # sharing dominates uncoded LFU


def test_curve_single_user_schemes(su_example):
    rows = rate_curve(su_example, [0, 50, 100, 800])
    for _, row in rows:
        assert set(row) == {"su", "lfu", "prior"}
        assert row["su"] <= row["lfu"] + 1e-9


def test_curve_rejects_unsorted_grid(fixture_spec):
    with pytest.raises(ValueError):
        rate_curve(fixture_spec, [5, 1])
    with pytest.raises(ValueError):
        rate_curve(fixture_spec, [1, 5], schemes=("nope",))


def test_sharing_dominates_lfu_on_comparison_examples(su_example):
    mu = parse_spec(LFU_MU_JSON)
    for m in np.linspace(0, 1600, 33):
        assert multiuser_rate(mu, float(m)).total <= lfu_rate(mu, float(m)) + 1e-9
    for m in np.linspace(0, 1500, 31):
        assert singleuser_rate(su_example, float(m)).total <= lfu_rate(su_example, float(m)) + 1e-9
