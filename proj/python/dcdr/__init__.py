"""Reward-based request deferral for data-center demand response."""

from ._dcdr import *  # noqa: F401,F403
from ._dcdr import (
    BillingModel,
    DemandInput,
    FleetModel,
    Mode,
    ShutdownParams,
    Tolerances,
    TurbineCurve,
    baseline_cost,
    build_base_program,
    build_renewable_program,
    build_shutdown_program,
    run_experiment,
    solve,
    verify_solution,
)

__version__ = "0.1.0"
