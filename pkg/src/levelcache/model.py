"""Problem-instance data model, JSON parsing, and regularity validation.

A system is described by K caches and a list of popularity levels.  In the
multi-user setup every window of ``degree`` consecutive caches serves
``users_per_cache`` users of that level; in the single-user setup each cache
hosts exactly one user and only the per-level user totals are known.

Levels are kept in canonical order: popularity (users per file) nonincreasing,
ties broken by position in the input document.  The original input ordering is
retained so output can be labeled the way the user wrote the spec.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Any, Iterable, Mapping, Sequence

MULTI_USER = "multi-user"
SINGLE_USER = "single-user"

#: Default level-separation factor used by the regularity check.
DEFAULT_SEPARATION = Fraction(1, 198)


class SpecError(ValueError):
    """A malformed system-spec document.  ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class LevelSpec:
    """One multi-user popularity level.

    ``files`` is the number of equally popular files, ``users_per_cache`` the
    number of level users attached to each window of ``degree`` consecutive
    caches.  JSON input requires integers; fractional ``users_per_cache`` is
    tolerated when constructed programmatically (e.g. by the discretizer).
    """

    files: float
    users_per_cache: float
    degree: int = 1

    def __post_init__(self):
        if self.files <= 0:
            raise SpecError("files", f"must be positive, got {self.files}")
        if self.users_per_cache <= 0:
            raise SpecError("users_per_cache", f"must be positive, got {self.users_per_cache}")
        if self.degree < 1:
            raise SpecError("degree", f"must be >= 1, got {self.degree}")

    @property
    def popularity(self) -> float:
        return self.users_per_cache / self.files


@dataclass(frozen=True)
class SULevelSpec:
    """One single-user popularity level: ``users_total`` of the K users request it."""

    files: int
    users_total: int

    def __post_init__(self):
        if self.files <= 0:
            raise SpecError("files", f"must be positive, got {self.files}")
        if self.users_total <= 0:
            raise SpecError("users", f"must be positive, got {self.users_total}")

    @property
    def popularity(self) -> float:
        return self.users_total / self.files


@dataclass(frozen=True)
class SystemSpec:
    """A full problem instance in canonical (popularity-sorted) form."""

    caches: int
    kind: str
    levels: tuple
    level_separation: Fraction = DEFAULT_SEPARATION
    #: canonical position -> position in the input document
    original_order: tuple = ()

    def __post_init__(self):
        if self.caches < 1:
            raise SpecError("caches", f"must be >= 1, got {self.caches}")
        if self.kind not in (MULTI_USER, SINGLE_USER):
            raise SpecError("setup", f"unknown setup {self.kind!r}")
        if not self.levels:
            raise SpecError("levels", "must be nonempty")
        if self.level_separation <= 0:
            raise SpecError("beta", "must be positive")
        if self.kind == MULTI_USER:
            for lv in self.levels:
                if not isinstance(lv, LevelSpec):
                    raise SpecError("levels", "multi-user spec requires multi-user levels")
                if lv.degree > self.caches:
                    raise SpecError("degree", f"degree {lv.degree} exceeds caches {self.caches}")
        else:
            for lv in self.levels:
                if not isinstance(lv, SULevelSpec):
                    raise SpecError("levels", "single-user spec requires single-user levels")
            total = sum(lv.users_total for lv in self.levels)
            if total != self.caches:
                raise SpecError("users", f"user totals sum to {total}, expected caches={self.caches}")
        pops = [lv.popularity for lv in self.levels]
        if any(pops[i] < pops[i + 1] for i in range(len(pops) - 1)):
            raise SpecError("levels", "levels must be sorted by popularity (use make_spec)")
        if not self.original_order:
            object.__setattr__(self, "original_order", tuple(range(len(self.levels))))

    # -- derived views ----------------------------------------------------

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def is_multi_user(self) -> bool:
        return self.kind == MULTI_USER

    @property
    def max_degree(self) -> int:
        if self.is_multi_user:
            return max(lv.degree for lv in self.levels)
        return 1

    @property
    def files(self) -> tuple:
        return tuple(lv.files for lv in self.levels)

    @property
    def users(self) -> tuple:
        """Users per cache (multi-user) or per-level totals (single-user)."""
        if self.is_multi_user:
            return tuple(lv.users_per_cache for lv in self.levels)
        return tuple(lv.users_total for lv in self.levels)

    @property
    def degrees(self) -> tuple:
        if self.is_multi_user:
            return tuple(lv.degree for lv in self.levels)
        return tuple(1 for _ in self.levels)

    def separation_threshold(self) -> float:
        """Minimum sqrt-popularity ratio, D / beta, required between adjacent levels."""
        return self.max_degree / float(self.level_separation)


def make_spec(kind: str, caches: int, levels: Iterable, beta: Fraction = DEFAULT_SEPARATION) -> SystemSpec:
    """Canonicalize and build a :class:`SystemSpec` from unsorted levels."""
    levels = list(levels)

    def _users(lv):
        return lv.users_per_cache if isinstance(lv, LevelSpec) else lv.users_total

    # Exact ties matter for the stable index tie-break, so compare popularity
    # as rationals whenever the inputs are integers.
    exact = all(isinstance(lv.files, int) and isinstance(_users(lv), int) for lv in levels)

    def pop_key(item):
        idx, lv = item
        pop = Fraction(_users(lv), lv.files) if exact else lv.popularity
        return (-pop, idx)

    order = [idx for idx, _ in sorted(enumerate(levels), key=pop_key)]
    return SystemSpec(
        caches=caches,
        kind=kind,
        levels=tuple(levels[i] for i in order),
        level_separation=beta,
        original_order=tuple(order),
    )


def _require(obj: Mapping, key: str, where: str) -> Any:
    if key not in obj:
        raise SpecError(key, f"missing in {where}")
    return obj[key]


def _positive_int(value: Any, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError(field, f"must be an integer, got {value!r}")
    if value < 1:
        raise SpecError(field, f"must be >= 1, got {value}")
    return value


def parse_spec(text: str) -> SystemSpec:
    """Parse a system-spec JSON document into a canonical :class:`SystemSpec`.

    Schema: ``{"setup": "multi-user"|"single-user", "caches": int,
    "beta": "1/198" (optional), "levels": [...]}`` where a multi-user level is
    ``{"files": int, "users_per_cache": int, "degree": int}`` and a single-user
    level is ``{"files": int, "users": int}``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("json", f"malformed document: {exc}") from None
    if not isinstance(doc, dict):
        raise SpecError("json", "top level must be an object")

    setup = _require(doc, "setup", "top level")
    if setup not in (MULTI_USER, SINGLE_USER):
        raise SpecError("setup", f"must be '{MULTI_USER}' or '{SINGLE_USER}', got {setup!r}")
    caches = _positive_int(_require(doc, "caches", "top level"), "caches")

    beta = DEFAULT_SEPARATION
    if "beta" in doc:
        try:
            beta = Fraction(str(doc["beta"]))
        except (ValueError, ZeroDivisionError):
            raise SpecError("beta", f"not a rational: {doc['beta']!r}") from None
        if beta <= 0:
            raise SpecError("beta", "must be positive")

    raw_levels = _require(doc, "levels", "top level")
    if not isinstance(raw_levels, list) or not raw_levels:
        raise SpecError("levels", "must be a nonempty array")

    levels = []
    for n, raw in enumerate(raw_levels):
        where = f"levels[{n}]"
        if not isinstance(raw, dict):
            raise SpecError(where, "must be an object")
        files = _positive_int(_require(raw, "files", where), f"{where}.files")
        if setup == MULTI_USER:
            users = _positive_int(_require(raw, "users_per_cache", where), f"{where}.users_per_cache")
            degree = _positive_int(_require(raw, "degree", where), f"{where}.degree")
            if degree > caches:
                raise SpecError(f"{where}.degree", f"degree {degree} exceeds caches {caches}")
            levels.append(LevelSpec(files=files, users_per_cache=users, degree=degree))
        else:
            users = _positive_int(_require(raw, "users", where), f"{where}.users")
            levels.append(SULevelSpec(files=files, users_total=users))

    return make_spec(setup, caches, levels, beta)


def to_json(spec: SystemSpec, indent: int | None = None) -> str:
    """Serialize back to the input schema, restoring the original level order."""
    slots: list = [None] * spec.num_levels
    for canonical_pos, original_pos in enumerate(spec.original_order):
        slots[original_pos] = spec.levels[canonical_pos]
    if spec.is_multi_user:
        levels = [
            {"files": lv.files, "users_per_cache": lv.users_per_cache, "degree": lv.degree}
            for lv in slots
        ]
    else:
        levels = [{"files": lv.files, "users": lv.users_total} for lv in slots]
    doc = {
        "setup": spec.kind,
        "caches": spec.caches,
        "beta": str(spec.level_separation),
        "levels": levels,
    }
    return json.dumps(doc, indent=indent)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the regularity checks.  Violations are warnings, never fatal."""

    satisfied: Mapping
    ratios: tuple
    beta: Fraction
    threshold: float
    warnings: tuple

    @property
    def all_satisfied(self) -> bool:
        return all(self.satisfied.values())


def validate(spec: SystemSpec) -> ValidationReport:
    """Check the two regularity conditions.

    ``files_vs_users``: every level has at least as many files as users
    (N_i >= K*U_i multi-user, N_i >= K_i single-user).  ``separation``: every
    adjacent pair of canonical levels has sqrt-popularity ratio >= D/beta.
    Constant-gap guarantees downstream are void when a condition fails; the
    achievability formulas remain well defined either way.
    """
    warnings: list[str] = []
    K = spec.caches

    if spec.is_multi_user:
        fv_ok = all(lv.files >= K * lv.users_per_cache for lv in spec.levels)
        if not fv_ok:
            bad = [i for i, lv in enumerate(spec.levels) if lv.files < K * lv.users_per_cache]
            warnings.append(
                f"files_vs_users violated at level(s) {bad}: need files >= caches * users_per_cache"
            )
    else:
        fv_ok = all(lv.files >= lv.users_total for lv in spec.levels)
        if not fv_ok:
            bad = [i for i, lv in enumerate(spec.levels) if lv.files < lv.users_total]
            warnings.append(f"files_vs_users violated at level(s) {bad}: need files >= users")

    pops = [lv.popularity for lv in spec.levels]
    ratios = tuple(sqrt(pops[i] / pops[i + 1]) for i in range(len(pops) - 1))
    threshold = spec.separation_threshold()
    sep_ok = all(r >= threshold for r in ratios)
    if not sep_ok:
        close = [i for i, r in enumerate(ratios) if r < threshold]
        warnings.append(
            f"separation below D/beta = {threshold:g} between adjacent pair(s) {close}; "
            "multi-user constant-gap guarantees are void (consider merging near-equal levels)"
        )

    return ValidationReport(
        satisfied={"files_vs_users": fv_ok, "separation": sep_ok},
        ratios=ratios,
        beta=spec.level_separation,
        threshold=threshold,
        warnings=tuple(warnings),
    )
