"""RunReport serialization: the schedule CSV shape plus a verified column."""

from __future__ import annotations

from ..engine.export import _OP_ORDER
from ..engine.sim import OpKind, ScheduleEvent
from ..formulas import ArchKind
from .harness import RunReport

REPORT_HEADER = "op,layer,release_us,start_us,end_us,verified"


def report_to_csv(report: RunReport) -> str:
    verified = {i + 1: ok for i, ok in enumerate(report.verified)}
    rows = [REPORT_HEADER]
    for e in sorted(report.events, key=lambda e: (e.start_us, _OP_ORDER[e.op], e.layer)):
        flag = str(verified[e.layer]).lower() if e.op is OpKind.KERNEL else ""
        rows.append(f"{e.op.value},{e.layer},{e.release_us},{e.start_us},{e.end_us},{flag}")
    return "\n".join(rows) + "\n"


def parse_report_csv(content: str, arch: ArchKind) -> RunReport:
    lines = content.splitlines()
    if not lines or lines[0].strip() != REPORT_HEADER:
        raise ValueError(f"bad report header, expected {REPORT_HEADER!r}")
    events = []
    verified: dict[int, bool] = {}
    for rowno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ValueError(f"row {rowno}: expected 6 fields, got {len(parts)}")
        try:
            op = OpKind(parts[0])
            layer, rel, start, end = (int(p) for p in parts[1:5])
        except ValueError:
            raise ValueError(f"row {rowno}: malformed report row {line!r}") from None
        events.append(ScheduleEvent(op, layer, rel, start, end))
        if op is OpKind.KERNEL:
            if parts[5] not in ("true", "false"):
                raise ValueError(f"row {rowno}: bad verified flag {parts[5]!r}")
            verified[layer] = parts[5] == "true"
    if not events:
        raise ValueError("report has no events")
    n = max(e.layer for e in events)
    return RunReport(
        arch=arch,
        events=tuple(events),
        makespan_us=max(e.end_us for e in events),
        verified=tuple(verified.get(i, False) for i in range(1, n + 1)),
        peak_cpu_bytes=0,
        peak_gpu_bytes=0,
        peak_shared_bytes=0,
        direct_io=False,
        spin_granularity_ns=0,
        warnings=(),
    )


def report_to_json_dict(report: RunReport) -> dict:
    return {
        "arch": report.arch.value,
        "makespan_us": report.makespan_us,
        "direct_io": report.direct_io,
        "spin_granularity_ns": report.spin_granularity_ns,
        "peak_cpu_bytes": report.peak_cpu_bytes,
        "peak_gpu_bytes": report.peak_gpu_bytes,
        "peak_shared_bytes": report.peak_shared_bytes,
        "verified": list(report.verified),
        "warnings": list(report.warnings),
        "events": [
            {
                "op": e.op.value,
                "layer": e.layer,
                "release_us": e.release_us,
                "start_us": e.start_us,
                "end_us": e.end_us,
            }
            for e in sorted(report.events, key=lambda e: (e.start_us, _OP_ORDER[e.op], e.layer))
        ],
    }
