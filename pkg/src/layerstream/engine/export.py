"""Schedule serialization: CSV rows and the JSON variant with metrics."""

from __future__ import annotations

from dataclasses import asdict

from ..formulas import ArchKind
from .metrics import SimMetrics, schedule_metrics
from .sim import OpKind, Schedule, ScheduleEvent

SCHEDULE_HEADER = "op,layer,release_us,start_us,end_us"

_OP_ORDER = {OpKind.READ: 0, OpKind.COPY: 1, OpKind.KERNEL: 2}


def schedule_to_csv(schedule: Schedule) -> str:
    rows = [SCHEDULE_HEADER]
    for e in sorted(schedule.events, key=lambda e: (e.start_us, _OP_ORDER[e.op], e.layer)):
        rows.append(f"{e.op.value},{e.layer},{e.release_us},{e.start_us},{e.end_us}")
    return "\n".join(rows) + "\n"


def parse_schedule_csv(content: str, arch: ArchKind) -> Schedule:
    """Rebuild a Schedule from exported CSV; peaks require a validation replay."""
    lines = content.splitlines()
    if not lines or lines[0].strip() != SCHEDULE_HEADER:
        raise ValueError(f"bad schedule header, expected {SCHEDULE_HEADER!r}")
    events = []
    for rowno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"row {rowno}: expected 5 fields, got {len(parts)}")
        try:
            op = OpKind(parts[0])
            layer, rel, start, end = (int(p) for p in parts[1:])
        except ValueError:
            raise ValueError(f"row {rowno}: malformed schedule row {line!r}") from None
        events.append(ScheduleEvent(op, layer, rel, start, end))
    if not events:
        raise ValueError("schedule has no events")
    kernels = [e for e in events if e.op is OpKind.KERNEL]
    makespan = max(e.end_us for e in events)
    gpu_idle = 0
    if kernels:
        gpu_idle = (max(e.end_us for e in kernels) - min(e.start_us for e in kernels)) - sum(
            e.end_us - e.start_us for e in kernels
        )
    return Schedule(
        arch=arch,
        events=tuple(events),
        makespan_us=makespan,
        peak_cpu_bytes=0,
        peak_gpu_bytes=0,
        peak_shared_bytes=0,
        gpu_idle_us=gpu_idle,
    )


def schedule_to_json_dict(schedule: Schedule, metrics: SimMetrics | None = None) -> dict:
    """Schedule plus its metrics block as plain JSON-ready data."""
    metrics = metrics or schedule_metrics(schedule)
    return {
        "arch": schedule.arch.value,
        "makespan_us": schedule.makespan_us,
        "events": [
            {
                "op": e.op.value,
                "layer": e.layer,
                "release_us": e.release_us,
                "start_us": e.start_us,
                "end_us": e.end_us,
            }
            for e in sorted(schedule.events, key=lambda e: (e.start_us, _OP_ORDER[e.op], e.layer))
        ],
        "metrics": {
            **{k: v for k, v in asdict(metrics).items() if k != "kernel_start_latency_us"},
            "kernel_start_latency_us": list(metrics.kernel_start_latency_us),
        },
    }
