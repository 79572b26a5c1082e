"""layerstream: layer-granularity DNN parameter streaming toolkit.

Models the read/copy/kernel pipelines that stream model parameters from
disk during inference, evaluates their closed-form memory/delay behavior,
simulates the schedules event by event, sweeps the memory-delay tradeoff,
and replays schedules against a real disk with concurrent worker stages.
"""

from .formulas import ArchKind, ClosedFormMetrics, closed_form, table2_memory_reduction
from .trace import (
    LayerProfile,
    ModelTrace,
    SynthSpec,
    TraceError,
    TraceStats,
    mean_profile,
    parse_trace,
    serialize_trace,
    synthesize_trace,
    trace_stats,
)

__version__ = "0.1.0"

__all__ = [
    "ArchKind",
    "ClosedFormMetrics",
    "LayerProfile",
    "ModelTrace",
    "SynthSpec",
    "TraceError",
    "TraceStats",
    "closed_form",
    "mean_profile",
    "parse_trace",
    "serialize_trace",
    "synthesize_trace",
    "table2_memory_reduction",
    "trace_stats",
    "__version__",
]
