"""Multi-level coded caching: allocations, rates, bounds, and bit-exact simulation."""

from .model import (
    DEFAULT_SEPARATION,
    LevelSpec,
    MULTI_USER,
    SINGLE_USER,
    SpecError,
    SULevelSpec,
    SystemSpec,
    ValidationReport,
    make_spec,
    parse_spec,
    to_json,
    validate,
)
from .single_level import ColoringPlan, GeometryError, basic_rate, coloring_plan, single_level_rate
from .partition import (
    AggregateStats,
    Allocation,
    IntervalTable,
    Partition,
    RefinedPartition,
    aggregates,
    allocate,
    check_m_feasible,
    interval_table,
    mtilde,
    partition_at,
    refine,
)
from .rates import (
    RateBreakdown,
    SUPartition,
    lfu_rate,
    multiuser_rate,
    rate_curve,
    singleuser_rate,
    su_partition,
    uniform_sharing_rate,
)
from .bounds import (
    BoundParams,
    GapRow,
    InvalidBoundParams,
    OutOfModelError,
    SUBoundParams,
    best_multiuser_lower_bound,
    candidate_params,
    gap,
    multiuser_lower_bound,
    singleuser_lower_bound,
    small_example_optimum,
)
from .sim import (
    DecodeFailure,
    DeliveryResult,
    Placement,
    RequestVector,
    SimReport,
    SmallExampleResult,
    deliver,
    place,
    simulate,
    simulate_stochastic,
    small_example_scheme,
    worst_case_requests,
)
from .discretize import LevelSplit, optimize_access, split_levels

__version__ = "0.1.0"
