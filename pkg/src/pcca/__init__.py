"""Predictor-corrector collision avoidance.

Barrier-constrained least-distance QP controllers for planar double
integrators, a deterministic fixed-step simulator, and a small CLI. See
README.md for the scenario file format and the command-line interface.
"""
from .barrier import (
    BarrierTerms,
    ConstraintRow,
    DegenerateGeometryError,
    in_reduced_admissible_set,
    pair_barrier,
    rcbf_row_rel1,
    rcbf_row_rel2,
    stacked_pair_row,
)
from .controllers import (
    DEFAULT_LQR_GAINS,
    InfeasibleConstraintsError,
    LqrGains,
    PccaMemory,
    build_centralized_problem,
    build_pcca_problem,
    centralized_step,
    decentralized_step,
    lqr_baseline,
    pcca_step,
    pursuer_controller,
    two_agent_closed_form,
)
from .core import (
    AgentConfig,
    AgentSpec,
    AgentState,
    BarrierParams,
    Controller,
    ObservationMode,
    Scenario,
    ScenarioParseError,
    ScenarioValidationError,
    load_scenario,
    load_scenario_file,
    save_scenario,
    scenario_digest,
    validate_scenario,
)
from .qp import (
    INFEASIBLE,
    OPTIMAL,
    QpDegeneracyError,
    QpProblem,
    QpSolution,
    brute_force_oracle,
    solve,
    solve_single_row_closed_form,
)
from .sim import (
    MarginBracketError,
    SimulationAbort,
    SweepRow,
    Trace,
    dt_sweep,
    margin_required,
    metrics,
    replay_controls,
    run_scenario,
    step_dynamics,
)

__version__ = "0.1.0"
