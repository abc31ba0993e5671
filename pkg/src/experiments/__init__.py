from .scenario import (
    ScenarioError,
    ScenarioParseError,
    MissingFieldError,
    DanglingIdError,
    IncompleteHopMatrixError,
    InvalidValueError,
    parse_scenario,
    load_scenario,
    bundled_scenario,
    resolve_scenario,
)
from .cli import (
    cmd_validate,
    cmd_run,
    cmd_compare,
    main,
)

__all__ = [
    "ScenarioError",
    "ScenarioParseError",
    "MissingFieldError",
    "DanglingIdError",
    "IncompleteHopMatrixError",
    "InvalidValueError",
    "parse_scenario",
    "load_scenario",
    "bundled_scenario",
    "resolve_scenario",
    "cmd_validate",
    "cmd_run",
    "cmd_compare",
    "main",
]
