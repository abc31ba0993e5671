from .core import (
    ControllerState,
    SwitchState,
    Topology,
    MigrationTriple,
    MigrationAction,
    MigrationPolicy,
)
from .baselines import PolicyKind, make_policy
from .costs import CostModel, DelayModel
from .rl import RlConfig, RlLbm
from .sim import Scenario, TrafficProfile, RoundRecord, run, records_to_table

__all__ = [
    "ControllerState",
    "SwitchState",
    "Topology",
    "MigrationTriple",
    "MigrationAction",
    "MigrationPolicy",
    "PolicyKind",
    "make_policy",
    "CostModel",
    "DelayModel",
    "RlConfig",
    "RlLbm",
    "Scenario",
    "TrafficProfile",
    "RoundRecord",
    "run",
    "records_to_table",
]
