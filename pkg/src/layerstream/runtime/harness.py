"""Wall-clock emulation: stream a packed model from disk through real
concurrent pipeline stages.

Four roles cooperate: the scheduler (this thread) releases requests under
exactly the engine's rules; a reader pulls layer extents sequentially from
the file into the CPU-side ring; a copier moves bytes into the GPU-surrogate
ring (absent in the two-stage pipeline); an executor busy-waits each layer's
kernel duration while checksumming the staged bytes in place. A staged
region is recycled only at the free points the engine's accounting defines,
so any premature recycling corrupts a checksum and is caught.

Copy and kernel stages pad their real work (memcpy, CRC pass) up to the
trace's stated durations with a calibrated spin, so a re-simulation fed
with measured read durations is directly comparable to the measured run.
Timed waits below roughly 50 us are unreliable (scheduling noise exceeds
them); all timestamps come from one monotonic clock.
"""

from __future__ import annotations

import mmap
import os
import queue
import threading
import time
import zlib
from dataclasses import dataclass

import numpy as np

from ..engine.sim import BufferConfig, OpKind, Schedule, ScheduleEvent, check_config
from ..formulas import ArchKind
from ..trace import LayerProfile, ModelTrace, mean_profile
from .packfile import PackedModel, check_trace_match, read_header
from .rings import Allocation, RingAllocator

_R, _C, _K = 0, 1, 2
_ALIGN = 4096
_SLEEP_BULK_NS = 2_000_000  # sleep() off all but the last millisecond
_STALL_TIMEOUT_S = 120.0


class ChecksumError(RuntimeError):
    """A staged layer's bytes did not match its packed checksum."""

    def __init__(self, layers: list[int], report: "RunReport"):
        super().__init__(f"checksum mismatch on layers {layers}")
        self.layers = layers
        self.report = report


def calibrate_spin(samples: int = 500) -> int:
    """Median nanoseconds per yield iteration of the spin loop."""
    costs = []
    for _ in range(5):
        t0 = time.monotonic_ns()
        for _ in range(samples):
            time.sleep(0)
        costs.append((time.monotonic_ns() - t0) // samples)
    costs.sort()
    return costs[len(costs) // 2]


def _spin_until(deadline_ns: int) -> None:
    while True:
        now = time.monotonic_ns()
        if now >= deadline_ns:
            return
        remaining = deadline_ns - now
        if remaining > _SLEEP_BULK_NS:
            time.sleep((remaining - 1_000_000) / 1e9)
        else:
            time.sleep(0)  # yield so other pipeline stages keep moving


@dataclass
class _Req:
    layer: int  # 0-based
    size: int
    file_offset: int = 0
    src: tuple = ()
    dst: tuple = ()
    crc: int = 0
    pad_us: int = 0


class _Worker(threading.Thread):
    """One exclusive resource: executes queued requests FIFO, one at a time."""

    def __init__(self, row: int, name: str, completions: "queue.SimpleQueue"):
        super().__init__(name=name, daemon=True)
        self.row = row
        self.requests: queue.SimpleQueue = queue.SimpleQueue()
        self.completions = completions

    def submit(self, req: _Req) -> None:
        self.requests.put(req)

    def stop(self) -> None:
        self.requests.put(None)

    def run(self) -> None:
        while True:
            req = self.requests.get()
            if req is None:
                return
            start = time.monotonic_ns()
            try:
                ok = self.execute(req)
                err = None
            except Exception as exc:  # surfaced by the scheduler
                ok, err = False, f"{type(exc).__name__}: {exc}"
            self.completions.put((self.row, req.layer, start, time.monotonic_ns(), ok, err))

    def execute(self, req: _Req) -> bool:
        raise NotImplementedError


class _Reader(_Worker):
    def __init__(self, completions, fd: int, ring: bytearray, direct: bool, bounce_bytes: int):
        super().__init__(_R, "layerstream-reader", completions)
        self.fd = fd
        self.ring = ring
        self.direct = direct
        self.bounce = mmap.mmap(-1, bounce_bytes) if direct else None

    def execute(self, req: _Req) -> bool:
        if req.size == 0:
            return True
        if self.direct:
            self._read_direct(req)
        else:
            self._read_cached(req)
        return True

    def _read_cached(self, req: _Req) -> None:
        cursor = req.file_offset
        for seg_off, seg_len in req.dst:
            view = memoryview(self.ring)[seg_off : seg_off + seg_len]
            pos = 0
            while pos < seg_len:
                n = os.preadv(self.fd, [view[pos:]], cursor + pos)
                if n <= 0:
                    raise IOError(f"short read at offset {cursor + pos}")
                pos += n
            cursor += seg_len

    def _read_direct(self, req: _Req) -> None:
        # O_DIRECT needs aligned offset/length/buffer; bounce then place
        a0 = req.file_offset & ~(_ALIGN - 1)
        span = ((req.file_offset + req.size + _ALIGN - 1) & ~(_ALIGN - 1)) - a0
        needed = req.file_offset + req.size - a0
        mv = memoryview(self.bounce)[:span]
        pos = 0
        while pos < needed:
            n = os.preadv(self.fd, [mv[pos:]], a0 + pos)
            if n <= 0:
                raise IOError(f"short direct read at offset {a0 + pos}")
            pos += n
        src = memoryview(self.bounce)[req.file_offset - a0 : req.file_offset - a0 + req.size]
        done = 0
        for seg_off, seg_len in req.dst:
            memoryview(self.ring)[seg_off : seg_off + seg_len] = src[done : done + seg_len]
            done += seg_len


class _Copier(_Worker):
    def __init__(self, completions, src_ring: bytearray, dst_ring: bytearray):
        super().__init__(_C, "layerstream-copier", completions)
        self.src_ring = src_ring
        self.dst_ring = dst_ring

    def execute(self, req: _Req) -> bool:
        deadline = time.monotonic_ns() + req.pad_us * 1000
        _copy_segments(self.src_ring, req.src, self.dst_ring, req.dst)
        _spin_until(deadline)
        return True


class _Executor(_Worker):
    def __init__(self, completions, ring: bytearray):
        super().__init__(_K, "layerstream-executor", completions)
        self.ring = ring

    def execute(self, req: _Req) -> bool:
        deadline = time.monotonic_ns() + req.pad_us * 1000
        crc = 0
        for seg_off, seg_len in req.src:
            crc = zlib.crc32(memoryview(self.ring)[seg_off : seg_off + seg_len], crc)
        _spin_until(deadline)
        return crc == req.crc


def _copy_segments(src_ring, src_segs, dst_ring, dst_segs) -> None:
    si = 0
    s_off, s_rem = (src_segs[0] if src_segs else (0, 0))
    for d_off, d_rem in dst_segs:
        while d_rem:
            if s_rem == 0:
                si += 1
                s_off, s_rem = src_segs[si]
            n = min(s_rem, d_rem)
            memoryview(dst_ring)[d_off : d_off + n] = memoryview(src_ring)[s_off : s_off + n]
            s_off += n
            s_rem -= n
            d_off += n
            d_rem -= n


@dataclass(frozen=True)
class RunReport:
    """Measured schedule of one emulated pass plus integrity verdicts."""

    arch: ArchKind
    events: tuple[ScheduleEvent, ...]
    makespan_us: int
    verified: tuple[bool, ...]
    peak_cpu_bytes: int
    peak_gpu_bytes: int
    peak_shared_bytes: int
    direct_io: bool
    spin_granularity_ns: int
    warnings: tuple[str, ...]

    @property
    def all_verified(self) -> bool:
        return all(self.verified)

    def measured_read_us(self) -> list[int]:
        reads = sorted((e for e in self.events if e.op is OpKind.READ), key=lambda e: e.layer)
        return [e.end_us - e.start_us for e in reads]

    def as_schedule(self) -> Schedule:
        kernels = [e for e in self.events if e.op is OpKind.KERNEL]
        gpu_idle = (max(e.end_us for e in kernels) - min(e.start_us for e in kernels)) - sum(
            e.end_us - e.start_us for e in kernels
        )
        return Schedule(
            arch=self.arch,
            events=self.events,
            makespan_us=self.makespan_us,
            peak_cpu_bytes=self.peak_cpu_bytes,
            peak_gpu_bytes=self.peak_gpu_bytes,
            peak_shared_bytes=self.peak_shared_bytes,
            gpu_idle_us=gpu_idle,
        )


def _open_model(path: str, direct_io: bool | None) -> tuple[int, bool, list[str]]:
    warnings = []
    if direct_io is None or direct_io:
        flags = os.O_RDONLY | getattr(os, "O_DIRECT", 0)
        if getattr(os, "O_DIRECT", 0):
            try:
                fd = os.open(path, flags)
                probe = mmap.mmap(-1, _ALIGN)
                try:
                    os.preadv(fd, [probe], 0)
                    return fd, True, warnings
                except OSError as exc:
                    os.close(fd)
                    warnings.append(f"direct reads unavailable ({exc}); falling back to cached reads")
                finally:
                    probe.close()
            except OSError as exc:
                warnings.append(f"direct reads unavailable ({exc}); falling back to cached reads")
        else:
            warnings.append("platform lacks O_DIRECT; falling back to cached reads")
        if direct_io:
            warnings.append("direct I/O was requested explicitly but is unavailable")
    else:
        warnings.append("cached reads selected; timings include page-cache effects")
    return os.open(path, os.O_RDONLY), False, warnings


class _EmulatedRun:
    def __init__(self, model: PackedModel, profile: list[LayerProfile], arch: ArchKind,
                 config: BufferConfig, fd: int, direct: bool, contiguous: bool):
        self.model = model
        self.profile = profile
        self.arch = arch
        self.n = len(profile)
        self.sizes = [l.size_bytes for l in profile]
        smax = max(self.sizes)

        self.completions: queue.SimpleQueue = queue.SimpleQueue()
        self.rel = np.full((3, self.n), -1, np.int64)
        self.start = np.full((3, self.n), -1, np.int64)
        self.end = np.full((3, self.n), -1, np.int64)
        self.done = np.zeros((3, self.n), bool)
        self.ok = [True] * self.n
        self.errors: list[str] = []
        self.allocs: dict[tuple[int, int], Allocation] = {}

        bounce = ((smax + 2 * _ALIGN) // _ALIGN) * _ALIGN
        total = sum(self.sizes)
        if arch is ArchKind.TWO_STAGE:
            self.shared_ring = RingAllocator(config.shared_capacity_bytes, contiguous)
            shared_buf = bytearray(config.shared_capacity_bytes)
            self.cpu_ring = self.shared_ring  # reads stage into the shared pool
            self.cpu_buf = shared_buf
            self.gpu_ring = None
            self.reader = _Reader(self.completions, fd, shared_buf, direct, bounce)
            self.copier = None
            self.executor = _Executor(self.completions, shared_buf)
        else:
            cpu_cap = config.cpu_capacity_bytes or total
            gpu_cap = config.gpu_capacity_bytes or total
            if arch is ArchKind.PRELOADING:
                cpu_cap = gpu_cap = total
            self.shared_ring = None
            self.cpu_ring = RingAllocator(cpu_cap, contiguous)
            self.gpu_ring = RingAllocator(gpu_cap, contiguous)
            self.cpu_buf = bytearray(cpu_cap)
            gpu_buf = bytearray(gpu_cap)
            self.reader = _Reader(self.completions, fd, self.cpu_buf, direct, bounce)
            self.copier = _Copier(self.completions, self.cpu_buf, gpu_buf)
            self.executor = _Executor(self.completions, gpu_buf)
        self.workers = [w for w in (self.reader, self.copier, self.executor) if w]
        self.t0 = 0

    # -- time ------------------------------------------------------------
    def now_us(self) -> int:
        return (time.monotonic_ns() - self.t0) // 1000

    # -- releases (the engine's accounting rules) ------------------------
    def can_stage_read(self, i: int) -> bool:
        return self.cpu_ring.can_allocate(self.sizes[i])

    def release_read(self, i: int) -> None:
        alloc = self.cpu_ring.allocate(self.sizes[i])
        self.allocs[(_R, i)] = alloc
        self.rel[_R, i] = self.now_us()
        self.reader.submit(_Req(i, self.sizes[i], file_offset=self.model.layers[i].offset,
                                dst=alloc.segments))

    def can_stage_copy(self, j: int) -> bool:
        return self.gpu_ring.can_allocate(self.sizes[j])

    def release_copy(self, j: int) -> None:
        alloc = self.gpu_ring.allocate(self.sizes[j])
        self.allocs[(_C, j)] = alloc
        self.rel[_C, j] = self.now_us()
        self.copier.submit(_Req(j, self.sizes[j], src=self.allocs[(_R, j)].segments,
                                dst=alloc.segments, pad_us=self.profile[j].copy_us))

    def release_kernel(self, k: int) -> None:
        self.rel[_K, k] = self.now_us()
        if self.arch is ArchKind.TWO_STAGE:
            segs = self.allocs[(_R, k)].segments
        else:
            self.cpu_ring.free_oldest()  # CPU bytes come back at kernel release
            segs = self.allocs[(_C, k)].segments
        self.executor.submit(_Req(k, self.sizes[k], src=segs,
                                  crc=self.model.layers[k].crc32,
                                  pad_us=self.profile[k].kernel_us))

    def free_for_kernel_completion(self, h: int) -> None:
        # GPU (or shared) bytes come back once the kernel has finished
        ring = self.shared_ring if self.arch is ArchKind.TWO_STAGE else self.gpu_ring
        ring.free_oldest()

    # -- completion observation ------------------------------------------
    def observe(self) -> bool:
        moved = False
        while True:
            try:
                row, layer, start_ns, end_ns, ok, err = self.completions.get_nowait()
            except queue.Empty:
                return moved
            self.start[row, layer] = (start_ns - self.t0) // 1000
            self.end[row, layer] = (end_ns - self.t0) // 1000
            self.done[row, layer] = True
            if row == _K:
                self.ok[layer] = bool(ok)
            if err:
                self.errors.append(f"layer {layer + 1}: {err}")
            moved = True

    def wait_progress(self, deadline: float) -> None:
        if time.monotonic() > deadline:
            raise RuntimeError("emulation stalled: no completions within timeout")
        time.sleep(0)

    # -- policies ----------------------------------------------------------
    def run_policy(self) -> None:
        for w in self.workers:
            w.start()
        self.t0 = time.monotonic_ns()
        try:
            if self.arch is ArchKind.SEQUENTIAL:
                self._run_sequential()
            elif self.arch is ArchKind.SYNCHRONOUS:
                self._run_synchronous()
            elif self.arch is ArchKind.ASYNCHRONOUS:
                self._run_async()
            elif self.arch is ArchKind.TWO_STAGE:
                self._run_two_stage()
            else:
                self._run_preloading()
        finally:
            for w in self.workers:
                w.stop()
            for w in self.workers:
                w.join(timeout=30)
        if self.errors:
            raise RuntimeError("; ".join(self.errors[:4]))

    def _wait_done(self, row: int, layer: int) -> None:
        deadline = time.monotonic() + _STALL_TIMEOUT_S
        while not self.done[row, layer]:
            if self.observe():
                deadline = time.monotonic() + _STALL_TIMEOUT_S
            else:
                self.wait_progress(deadline)
            if self.errors:
                raise RuntimeError("; ".join(self.errors[:4]))

    def _run_sequential(self) -> None:
        for i in range(self.n):
            self.release_read(i)
            self._wait_done(_R, i)
            self.release_copy(i)
            self._wait_done(_C, i)
            self.release_kernel(i)
            self._wait_done(_K, i)
            self.free_for_kernel_completion(i)

    def _run_synchronous(self) -> None:
        for t in range(1, self.n + 3):
            ri, ci, ki = t - 1, t - 2, t - 3
            if 0 <= t - 4 < self.n:
                self.free_for_kernel_completion(t - 4)  # finished last cycle
            if 0 <= ki < self.n:
                self.release_kernel(ki)  # frees its CPU slot first
            if 0 <= ri < self.n:
                self.release_read(ri)
            if 0 <= ci < self.n:
                self.release_copy(ci)
            for row, idx in ((_R, ri), (_C, ci), (_K, ki)):
                if 0 <= idx < self.n:
                    self._wait_done(row, idx)
        self.free_for_kernel_completion(self.n - 1)  # the loop freed layers up to n-2

    def _run_async(self) -> None:
        h = i = j = k = 0
        deadline = time.monotonic() + _STALL_TIMEOUT_S
        while k < self.n or h < self.n:
            moved = self.observe()
            if h < k and self.done[_K, h]:
                self.free_for_kernel_completion(h)
                h += 1
                moved = True
            if i < self.n and self.can_stage_read(i):
                self.release_read(i)
                i += 1
                moved = True
            if j < i and self.done[_R, j] and self.can_stage_copy(j):
                self.release_copy(j)
                j += 1
                moved = True
            if k < j and self.done[_C, k]:
                self.release_kernel(k)
                k += 1
                moved = True
            if self.errors:
                raise RuntimeError("; ".join(self.errors[:4]))
            if moved:
                deadline = time.monotonic() + _STALL_TIMEOUT_S
            else:
                self.wait_progress(deadline)

    def _run_two_stage(self) -> None:
        h = i = k = 0
        deadline = time.monotonic() + _STALL_TIMEOUT_S
        while k < self.n or h < self.n:
            moved = self.observe()
            if h < k and self.done[_K, h]:
                self.free_for_kernel_completion(h)
                h += 1
                moved = True
            if i < self.n and self.can_stage_read(i):
                self.release_read(i)
                i += 1
                moved = True
            if k < i and self.done[_R, k]:
                self.release_kernel(k)
                k += 1
                moved = True
            if self.errors:
                raise RuntimeError("; ".join(self.errors[:4]))
            if moved:
                deadline = time.monotonic() + _STALL_TIMEOUT_S
            else:
                self.wait_progress(deadline)

    def _run_preloading(self) -> None:
        # baseline: all reads, then all copies, then all kernels
        for i in range(self.n):
            self.release_read(i)
            self._wait_done(_R, i)
        for j in range(self.n):
            self.release_copy(j)
            self._wait_done(_C, j)
        for k in range(self.n):
            self.release_kernel(k)
            self._wait_done(_K, k)
            self.free_for_kernel_completion(k)

    # -- report ------------------------------------------------------------
    def report(self, direct: bool, spin_ns: int, warnings: list[str]) -> RunReport:
        events = []
        kinds = (OpKind.READ, OpKind.COPY, OpKind.KERNEL)
        for row in range(3):
            for idx in range(self.n):
                if self.rel[row, idx] < 0:
                    continue
                events.append(ScheduleEvent(kinds[row], idx + 1, int(self.rel[row, idx]),
                                            int(self.start[row, idx]), int(self.end[row, idx])))
        events.sort(key=lambda e: (e.start_us, e.op.value, e.layer))
        makespan = max(e.end_us for e in events)
        if self.arch is ArchKind.TWO_STAGE:
            peaks = (0, 0, self.shared_ring.peak_bytes)
        else:
            peaks = (self.cpu_ring.peak_bytes, self.gpu_ring.peak_bytes, 0)
        return RunReport(
            arch=self.arch,
            events=tuple(events),
            makespan_us=makespan,
            verified=tuple(self.ok),
            peak_cpu_bytes=peaks[0],
            peak_gpu_bytes=peaks[1],
            peak_shared_bytes=peaks[2],
            direct_io=direct,
            spin_granularity_ns=spin_ns,
            warnings=tuple(warnings),
        )


def run_emulated(model_file: str, trace: ModelTrace, arch: ArchKind, config: BufferConfig,
                 direct_io: bool | None = None, contiguous: bool = False) -> RunReport:
    """Stream the packed model through one pipeline architecture for real.

    Raises ChecksumError if any staged layer fails verification (the
    report, with verdicts, rides on the exception). Config capacities are
    validated before any file is opened; preloading runs as a baseline
    with whole-model buffers regardless of config.
    """
    profile = mean_profile(trace)
    sizes = np.array([l.size_bytes for l in profile], np.int64)
    if arch is not ArchKind.PRELOADING:
        check_config(arch, config, sizes)

    model = read_header(model_file)
    check_trace_match(model, trace)
    spin_ns = calibrate_spin()
    fd, direct, warnings = _open_model(model_file, direct_io)
    if any(l.copy_us and l.copy_us < 50 for l in profile) or any(
        l.kernel_us and l.kernel_us < 50 for l in profile
    ):
        warnings.append("some target durations are under 50 us; timed waits at that scale are unreliable")
    try:
        run = _EmulatedRun(model, profile, arch, config, fd, direct, contiguous)
        run.run_policy()
    finally:
        os.close(fd)
    report = run.report(direct, spin_ns, warnings)
    if not report.all_verified:
        failed = [i + 1 for i, ok in enumerate(report.verified) if not ok]
        raise ChecksumError(failed, report)
    return report


@dataclass(frozen=True)
class DeviationReport:
    """Where a measured run diverged from a simulated schedule."""

    makespan_delta_us: int  # measured minus simulated
    makespan_rel: float
    max_start_delta_us: int
    max_end_delta_us: int
    peak_delta_bytes: int
    op_deltas: tuple[tuple[str, int, int, int], ...]  # (op, layer, dstart, dend)


def compare_run_to_sim(report: RunReport, schedule: Schedule) -> DeviationReport:
    """Per-operation timing deltas between a run and a schedule."""
    if report.arch is not schedule.arch:
        raise ValueError(f"architecture mismatch: {report.arch.label} vs {schedule.arch.label}")
    run_events = {(e.op, e.layer): e for e in report.events}
    sim_events = {(e.op, e.layer): e for e in schedule.events}
    if set(run_events) != set(sim_events):
        raise ValueError("event shape mismatch between run and schedule")
    deltas = []
    for key in sorted(sim_events, key=lambda k: (k[1], k[0].value)):
        r, s = run_events[key], sim_events[key]
        deltas.append((key[0].value, key[1], r.start_us - s.start_us, r.end_us - s.end_us))
    makespan_delta = report.makespan_us - schedule.makespan_us
    rel = makespan_delta / schedule.makespan_us if schedule.makespan_us else 0.0
    peak_delta = max(
        abs(report.peak_cpu_bytes - schedule.peak_cpu_bytes),
        abs(report.peak_gpu_bytes - schedule.peak_gpu_bytes),
        abs(report.peak_shared_bytes - schedule.peak_shared_bytes),
    )
    return DeviationReport(
        makespan_delta_us=makespan_delta,
        makespan_rel=rel,
        max_start_delta_us=max(abs(d[2]) for d in deltas),
        max_end_delta_us=max(abs(d[3]) for d in deltas),
        peak_delta_bytes=peak_delta,
        op_deltas=tuple(deltas),
    )


def resimulate_with_measured_reads(report: RunReport, trace: ModelTrace,
                                   config: BufferConfig) -> Schedule:
    """Re-run the engine with the run's own measured read durations."""
    from ..engine.sim import simulate

    profile = mean_profile(trace)
    measured = report.measured_read_us()
    patched = [
        LayerProfile(l.index, l.size_bytes, measured[i], l.copy_us, l.kernel_us)
        for i, l in enumerate(profile)
    ]
    return simulate(patched, report.arch, config)
