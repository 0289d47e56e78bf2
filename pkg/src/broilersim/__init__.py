"""Deterministic broiler-house monitoring pipeline simulation.

Plant model -> sensor node (ADC + threshold controller) -> serial line
protocol -> gateway with retrying uplink -> token-authenticated
telemetry service with CSV export, analytics, and an operator command
channel, all advanced on one virtual clock.
"""

from .envsim import Disturbance, EnvParams, EnvState, refill_feeder, step_env
from .sensornode import (ActuatorState, AdcCode, ControlConfig, SensorSample,
                         SensorSpec, adc_to_celsius, code_to_kg, control_step,
                         encode_frame, read_lm35, read_loadcell)
from .gateway import (CloudCredentials, DecodeCarry, DecodeStats, LinkConfig,
                      SerialLink, Uplink, decode_stream)
from .service import OperatorCommand, TelemetryPoint, TelemetryStore, default_store
from .analysis import daily_mean, filter_interval, import_csv
from .scenario import Scenario, load as load_scenario
from .runner import SimulationRun, execute

__version__ = "0.1.0"

__all__ = [
    "ActuatorState", "AdcCode", "CloudCredentials", "ControlConfig",
    "DecodeCarry", "DecodeStats", "Disturbance", "EnvParams", "EnvState",
    "LinkConfig", "OperatorCommand", "Scenario", "SensorSample", "SensorSpec",
    "SerialLink", "SimulationRun", "TelemetryPoint", "TelemetryStore",
    "Uplink", "adc_to_celsius", "code_to_kg", "control_step", "daily_mean",
    "decode_stream", "default_store", "encode_frame", "execute",
    "filter_interval", "import_csv", "load_scenario", "read_lm35",
    "read_loadcell", "refill_feeder", "step_env",
]
