"""Discrete-event simulation of the read/copy/kernel streaming pipelines."""

from .export import SCHEDULE_HEADER, parse_schedule_csv, schedule_to_csv, schedule_to_json_dict
from .kernels import PY_KERNELS, active_backend, jit_kernels
from .metrics import SimMetrics, schedule_metrics
from .sim import (
    BufferConfig,
    OpKind,
    Schedule,
    ScheduleEvent,
    UnschedulableError,
    minimum_config,
    profile_arrays,
    simulate,
)
from .validate import ValidationReport, validate_schedule

__all__ = [
    "BufferConfig",
    "OpKind",
    "PY_KERNELS",
    "SCHEDULE_HEADER",
    "Schedule",
    "ScheduleEvent",
    "SimMetrics",
    "UnschedulableError",
    "ValidationReport",
    "active_backend",
    "jit_kernels",
    "minimum_config",
    "parse_schedule_csv",
    "profile_arrays",
    "schedule_metrics",
    "schedule_to_csv",
    "schedule_to_json_dict",
    "simulate",
    "validate_schedule",
]
