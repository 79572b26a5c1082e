"""Deterministic event simulator for the four streaming pipeline policies.

Builds int64 duration arrays from a layer profile, runs the selected policy
kernel, and assembles a timestamped Schedule. All simulations share the
release rules: same-kind requests release in layer order, a copy releases
only after its read completes, a kernel only after its copy (or read, in
the two-stage pipeline), and a release reserves space in its target buffer:
CPU bytes are taken at read release and returned at kernel release; GPU
bytes are taken at copy release and returned at kernel completion; the
two-stage pipeline uses one shared pool taken at read release and returned
at kernel completion.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..formulas import ArchKind
from ..trace import LayerProfile
from .kernels import ACTIVE_KERNELS

_CLOCK_LIMIT = 2**62  # headroom below int64 for the simulation clock


class UnschedulableError(ValueError):
    """A layer cannot be staged under the given buffer capacities."""


class OpKind(enum.Enum):
    READ = "R"
    COPY = "C"
    KERNEL = "K"


_ROW = {OpKind.READ: 0, OpKind.COPY: 1, OpKind.KERNEL: 2}
_ROW_KIND = {v: k for k, v in _ROW.items()}


@dataclass(frozen=True)
class BufferConfig:
    """Staging capacities in bytes; unused sides stay 0 for an architecture."""

    cpu_capacity_bytes: int = 0
    gpu_capacity_bytes: int = 0
    shared_capacity_bytes: int = 0

    def __post_init__(self) -> None:
        for name in ("cpu_capacity_bytes", "gpu_capacity_bytes", "shared_capacity_bytes"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def three_stage(cls, cpu_bytes: int, gpu_bytes: int) -> "BufferConfig":
        return cls(cpu_capacity_bytes=cpu_bytes, gpu_capacity_bytes=gpu_bytes)

    @classmethod
    def two_stage(cls, shared_bytes: int) -> "BufferConfig":
        return cls(shared_capacity_bytes=shared_bytes)


@dataclass(frozen=True)
class ScheduleEvent:
    op: OpKind
    layer: int  # 1-based
    release_us: int
    start_us: int
    end_us: int


@dataclass(frozen=True)
class Schedule:
    """Complete event schedule of one simulated (or measured) inference pass."""

    arch: ArchKind
    events: tuple[ScheduleEvent, ...]
    makespan_us: int
    peak_cpu_bytes: int
    peak_gpu_bytes: int
    peak_shared_bytes: int
    gpu_idle_us: int

    def events_for(self, op: OpKind) -> list[ScheduleEvent]:
        """Events of one kind in layer order."""
        return sorted((e for e in self.events if e.op is op), key=lambda e: e.layer)


def profile_arrays(profile: list[LayerProfile]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(sizes, reads, copies, kernels) as int64 arrays."""
    n = len(profile)
    sizes = np.empty(n, np.int64)
    reads = np.empty(n, np.int64)
    copies = np.empty(n, np.int64)
    kernels = np.empty(n, np.int64)
    for idx, layer in enumerate(profile):
        sizes[idx] = layer.size_bytes
        reads[idx] = layer.read_us
        copies[idx] = layer.copy_us
        kernels[idx] = layer.kernel_us
    return sizes, reads, copies, kernels


def minimum_config(arch: ArchKind, smax: int) -> BufferConfig:
    """Smallest capacities the architecture can run with."""
    if arch is ArchKind.SYNCHRONOUS:
        return BufferConfig.three_stage(2 * smax, 2 * smax)
    if arch is ArchKind.TWO_STAGE:
        return BufferConfig.two_stage(smax)
    if arch in (ArchKind.SEQUENTIAL, ArchKind.ASYNCHRONOUS):
        return BufferConfig.three_stage(smax, smax)
    raise ValueError(f"no staging buffers in {arch.label}")


def check_config(arch: ArchKind, config: BufferConfig, sizes: np.ndarray) -> None:
    """Reject configurations under which some layer can never be staged."""
    smax = int(sizes.max())
    if arch is ArchKind.TWO_STAGE:
        if config.shared_capacity_bytes < smax:
            bad = int(np.argmax(sizes > config.shared_capacity_bytes)) + 1
            raise UnschedulableError(
                f"unschedulable layer {bad}: size {int(sizes[bad - 1])} exceeds "
                f"shared capacity {config.shared_capacity_bytes}"
            )
        return
    need = 2 * smax if arch is ArchKind.SYNCHRONOUS else smax
    for side, cap in (("cpu", config.cpu_capacity_bytes), ("gpu", config.gpu_capacity_bytes)):
        if cap < need:
            bad = int(np.argmax(2 * sizes > cap if arch is ArchKind.SYNCHRONOUS else sizes > cap)) + 1
            detail = "double-buffered size 2*" if arch is ArchKind.SYNCHRONOUS else "size "
            raise UnschedulableError(
                f"unschedulable layer {bad}: {detail}{int(sizes[bad - 1])} exceeds "
                f"{side} capacity {cap}"
            )


def simulate(profile: list[LayerProfile], arch: ArchKind, config: BufferConfig) -> Schedule:
    """Run one pipeline policy over a profile and return its full schedule.

    Preloading has no schedule (all loading happens before inference); ask
    formulas.closed_form for its metrics instead.
    """
    if not profile:
        raise ValueError("empty profile")
    if arch is ArchKind.PRELOADING:
        raise ValueError("preloading has no schedule; evaluate it with closed_form")
    sizes, reads, copies, kernels = profile_arrays(profile)
    if int(reads.sum() + copies.sum() + kernels.sum()) >= _CLOCK_LIMIT:
        raise OverflowError("total durations overflow the 64-bit microsecond clock")
    check_config(arch, config, sizes)

    peak_shared = 0
    if arch is ArchKind.SEQUENTIAL:
        rel, start, end, peak_cpu, peak_gpu = ACTIVE_KERNELS["sequential"](sizes, reads, copies, kernels)
    elif arch is ArchKind.SYNCHRONOUS:
        # capacities beyond the structural double buffers are ignored
        rel, start, end, peak_cpu, peak_gpu = ACTIVE_KERNELS["synchronous"](sizes, reads, copies, kernels)
    elif arch is ArchKind.ASYNCHRONOUS:
        rel, start, end, peak_cpu, peak_gpu = ACTIVE_KERNELS["async"](
            sizes, reads, copies, kernels, config.cpu_capacity_bytes, config.gpu_capacity_bytes
        )
    else:  # two-stage
        rel, start, end, peak = ACTIVE_KERNELS["two_stage"](
            sizes, reads, kernels, config.shared_capacity_bytes
        )
        peak_cpu, peak_gpu, peak_shared = 0, 0, int(peak)

    events = _assemble_events(rel, start, end)
    n = len(profile)
    makespan = int(end[2, n - 1])
    gpu_idle = int((end[2, n - 1] - start[2, 0]) - kernels.sum())
    return Schedule(
        arch=arch,
        events=events,
        makespan_us=makespan,
        peak_cpu_bytes=int(peak_cpu),
        peak_gpu_bytes=int(peak_gpu),
        peak_shared_bytes=peak_shared,
        gpu_idle_us=gpu_idle,
    )


def _assemble_events(rel: np.ndarray, start: np.ndarray, end: np.ndarray) -> tuple[ScheduleEvent, ...]:
    events = []
    n = rel.shape[1]
    for row in range(3):
        kind = _ROW_KIND[row]
        for idx in range(n):
            if rel[row, idx] < 0:
                continue
            events.append(
                ScheduleEvent(kind, idx + 1, int(rel[row, idx]), int(start[row, idx]), int(end[row, idx]))
            )
    events.sort(key=lambda e: (e.start_us, _ROW[e.op], e.layer))
    return tuple(events)
