"""Python access to the dse simulation core."""

from ._dse import (
    ConfigError,
    Error,
    Schedule,
    Scenario,
    SensorModel,
    SimulationLog,
    Summary,
    TeamEvent,
    TeamGraph,
    algebraic_connectivity,
    delay_bound,
    format_number,
    load_scenario,
    parse_scenario,
    run,
    strategies,
    summarize,
    summary_json,
    validate_schedule,
    write_run_outputs,
)

__all__ = [
    "ConfigError",
    "Error",
    "Schedule",
    "Scenario",
    "SensorModel",
    "SimulationLog",
    "Summary",
    "TeamEvent",
    "TeamGraph",
    "algebraic_connectivity",
    "delay_bound",
    "format_number",
    "load_scenario",
    "parse_scenario",
    "run",
    "strategies",
    "summarize",
    "summary_json",
    "validate_schedule",
    "write_run_outputs",
]
