"""Disk-backed emulation of the streaming pipelines with real concurrency."""

from .export import REPORT_HEADER, parse_report_csv, report_to_csv, report_to_json_dict
from .harness import (
    ChecksumError,
    DeviationReport,
    RunReport,
    calibrate_spin,
    compare_run_to_sim,
    resimulate_with_measured_reads,
    run_emulated,
)
from .packfile import (
    HEADER_BYTES,
    MAGIC,
    RECORD_BYTES,
    PackedLayer,
    PackedModel,
    PackFormatError,
    check_trace_match,
    layer_payload,
    pack_model,
    read_header,
    verify_model,
)
from .rings import Allocation, RingAllocator

__all__ = [
    "Allocation",
    "ChecksumError",
    "DeviationReport",
    "HEADER_BYTES",
    "MAGIC",
    "PackFormatError",
    "PackedLayer",
    "PackedModel",
    "RECORD_BYTES",
    "REPORT_HEADER",
    "RingAllocator",
    "RunReport",
    "calibrate_spin",
    "check_trace_match",
    "compare_run_to_sim",
    "layer_payload",
    "pack_model",
    "parse_report_csv",
    "read_header",
    "report_to_csv",
    "report_to_json_dict",
    "resimulate_with_measured_reads",
    "run_emulated",
    "verify_model",
]
