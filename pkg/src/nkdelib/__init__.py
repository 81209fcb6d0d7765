"""nkdelib: multiagent deliberation on NK fitness landscapes.

Agents with heterogeneous beliefs alternate between compartmentalized
local search and probabilistic integration toward a random proposer; a
decision maker harvests the best configuration discovered along the way.
The experiments module reproduces the solution-diversity curves over the
integration rate, its schedule, landscape ruggedness and belief alignment.
"""

from .deliberation import (
    AgentState,
    AlphaSchedule,
    DeliberationParams,
    DeliberationTrace,
    RoundRecord,
    alpha_at,
    dm_select,
    integrate,
    is_consensus,
    local_search,
    local_search_path,
    neighborhood,
    run_deliberation,
    select_proposer,
    write_trace_csv,
)
from .experiments import (
    Condition,
    ConditionResult,
    ConditionStats,
    ExperimentResult,
    ExperimentSpec,
    ScheduleComparison,
    bootstrap_mean_ci,
    compare_schedules,
    derive_run_seed,
    paired_one_sided_pvalue,
    run_batch,
    sweep_alpha,
)
from .landscape import (
    MAX_ENUMERABLE_N,
    BeliefStructure,
    Configuration,
    NKLandscape,
    build_beliefs,
    build_nk_landscape,
    dump_landscape,
    enumerate_local_peaks,
    fitness,
    fitness_table,
    global_optimum,
    load_landscape,
    perceived_fitness,
)
from .metrics import RunSummary, distinct_solutions, summarize_run

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "AlphaSchedule",
    "BeliefStructure",
    "Condition",
    "ConditionResult",
    "ConditionStats",
    "Configuration",
    "DeliberationParams",
    "DeliberationTrace",
    "ExperimentResult",
    "ExperimentSpec",
    "MAX_ENUMERABLE_N",
    "NKLandscape",
    "RoundRecord",
    "RunSummary",
    "ScheduleComparison",
    "alpha_at",
    "bootstrap_mean_ci",
    "build_beliefs",
    "build_nk_landscape",
    "compare_schedules",
    "derive_run_seed",
    "distinct_solutions",
    "dm_select",
    "dump_landscape",
    "enumerate_local_peaks",
    "fitness",
    "fitness_table",
    "global_optimum",
    "integrate",
    "is_consensus",
    "load_landscape",
    "local_search",
    "local_search_path",
    "neighborhood",
    "paired_one_sided_pvalue",
    "perceived_fitness",
    "run_batch",
    "run_deliberation",
    "select_proposer",
    "summarize_run",
    "sweep_alpha",
    "write_trace_csv",
]
