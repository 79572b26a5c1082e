"""Derived metrics for a schedule: busy/idle per resource, latencies, peaks."""

from __future__ import annotations

from dataclasses import dataclass

from .sim import OpKind, Schedule


@dataclass(frozen=True)
class SimMetrics:
    makespan_us: int
    read_busy_us: int
    copy_busy_us: int
    kernel_busy_us: int
    read_idle_us: int
    copy_idle_us: int
    gpu_idle_us: int  # execution-engine idle between first kernel start and last kernel end
    peak_cpu_bytes: int
    peak_gpu_bytes: int
    peak_shared_bytes: int
    kernel_start_latency_us: tuple[int, ...]  # per layer: kernel start minus kernel release


def _busy_idle(schedule: Schedule, op: OpKind) -> tuple[int, int]:
    events = schedule.events_for(op)
    if not events:
        return 0, 0
    busy = sum(e.end_us - e.start_us for e in events)
    window = max(e.end_us for e in events) - min(e.start_us for e in events)
    return busy, window - busy


def schedule_metrics(schedule: Schedule) -> SimMetrics:
    """Summarize a schedule; works for simulated and measured event sets."""
    read_busy, read_idle = _busy_idle(schedule, OpKind.READ)
    copy_busy, copy_idle = _busy_idle(schedule, OpKind.COPY)
    kernel_busy, kernel_idle = _busy_idle(schedule, OpKind.KERNEL)
    latencies = tuple(e.start_us - e.release_us for e in schedule.events_for(OpKind.KERNEL))
    return SimMetrics(
        makespan_us=schedule.makespan_us,
        read_busy_us=read_busy,
        copy_busy_us=copy_busy,
        kernel_busy_us=kernel_busy,
        read_idle_us=read_idle,
        copy_idle_us=copy_idle,
        gpu_idle_us=kernel_idle,
        peak_cpu_bytes=schedule.peak_cpu_bytes,
        peak_gpu_bytes=schedule.peak_gpu_bytes,
        peak_shared_bytes=schedule.peak_shared_bytes,
        kernel_start_latency_us=latencies,
    )
