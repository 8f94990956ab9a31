"""Longitudinal platoon simulator for commercial and 5G-connected ACC."""

from .addons import AddOnConfig, GripConfig, GripEstimate
from .connectivity import ChannelConfig, V2vMessage
from .controller import AccConfig, AccController, ControlMode, RangeMeasurement
from .dynamics import LagModel, VehicleState
from .metrics import MetricsReport, evaluate, traffic_flow_capacity
from .scenario import (ScenarioSpec, SimTrace, build_braking_scenario, build_oscillatory_scenario,
                       run)

__version__ = "0.1.0"

__all__ = [
    "AccConfig", "AccController", "AddOnConfig", "ChannelConfig", "ControlMode", "GripConfig",
    "GripEstimate", "LagModel", "MetricsReport", "RangeMeasurement", "ScenarioSpec", "SimTrace",
    "V2vMessage", "VehicleState", "build_braking_scenario", "build_oscillatory_scenario",
    "evaluate", "run", "traffic_flow_capacity",
]
