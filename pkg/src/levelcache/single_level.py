"""Closed-form single-level rates and the multi-access coloring construction.

Everything above this layer treats a popularity level as an independent
single-level caching subsystem, so these are the primitives the whole planner
composes.
"""

from __future__ import annotations

from dataclasses import dataclass


class GeometryError(ValueError):
    """Unsupported cache-access geometry (e.g. degree does not divide caches)."""


def basic_rate(memory: float, caches: int, files: float) -> float:
    """Achievable broadcast rate for the basic setup: one user per cache, degree 1.

    Evaluates ``min(files/memory, caches) * (1 - memory/files)`` with the
    continuous extension ``min(files/0, caches) = caches`` at zero memory, and
    clamped to ``[0, caches]``.
    """
    if memory < 0:
        raise ValueError(f"memory must be nonnegative, got {memory}")
    if memory >= files:
        return 0.0
    load = caches if memory == 0 else min(files / memory, caches)
    rate = load * (1.0 - memory / files)
    return min(max(rate, 0.0), float(caches))


def single_level_rate(memory: float, caches: int, files: float,
                      users_per_cache: float, degree: int) -> float:
    """Rate of one level with multiple users per cache and multi-access.

    ``users_per_cache * min(files/memory, caches) * (1 - degree*memory/files)``
    with the same zero-memory convention as :func:`basic_rate` and the last
    factor clamped at zero: once every cache holds ``files/degree`` worth of
    content, any ``degree`` consecutive caches reconstruct all files.
    """
    if memory < 0:
        raise ValueError(f"memory must be nonnegative, got {memory}")
    remaining = 1.0 - degree * memory / files
    if remaining <= 0:
        return 0.0
    load = caches if memory == 0 else min(files / memory, caches)
    return users_per_cache * load * remaining


@dataclass(frozen=True)
class ColoringPlan:
    """Cyclic cache coloring plus the user grouping it induces.

    ``cache_color[k] = k mod colors``.  Each group holds ``caches/colors``
    users, identified as (window start, user slot), whose access windows are
    pairwise disjoint and jointly tile all caches; consequently every user's
    window covers exactly one cache of each color.
    """

    colors: int
    cache_color: tuple
    groups: tuple

    def color_cache_of(self, window_start: int, color: int) -> int:
        """The unique cache of ``color`` inside the window starting at ``window_start``."""
        caches = len(self.cache_color)
        return (window_start + (color - window_start) % self.colors) % caches


def coloring_plan(caches: int, users_per_cache: int, degree: int) -> ColoringPlan:
    """Build the coloring construction for one level.

    Users of a level with access degree d are indexed by (window start w,
    slot u); the group of user (w, u) is (w mod d, u), which collects the
    caches/d users whose windows tile the cache ring.  Requires d | caches.
    """
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    if caches % degree != 0:
        raise GeometryError(
            f"degree {degree} does not divide caches {caches}; "
            "the cyclic coloring needs equal-size color classes"
        )
    cache_color = tuple(k % degree for k in range(caches))
    groups = tuple(
        tuple((w, u) for w in range(residue, caches, degree))
        for residue in range(degree)
        for u in range(users_per_cache)
    )
    return ColoringPlan(colors=degree, cache_color=cache_color, groups=groups)
