"""Memory-delay tradeoff: sweep buffer capacity upward and find minimal delay.

Capacities grow from the architecture minimum in steps of delta up to the
model size; every step simulates each trace iteration and records the
delay spread. The minimal-delay point is then found by rescanning the
recorded curve from the smallest capacity, so ties break toward less
memory. For the three-stage asynchronous pipeline the CPU and GPU
capacities grow in lockstep and the reported memory is their sum; the
two-stage pipeline sweeps its single shared capacity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import BufferConfig, simulate
from .formulas import ArchKind
from .trace import ModelTrace, round_half_up

CURVE_HEADER = "capacity_bytes,memory_bytes,mean_delay_us,min_delay_us,max_delay_us"


@dataclass(frozen=True)
class SweepSpec:
    """Capacity sweep parameters; start/max default to the architecture bounds."""

    arch: ArchKind
    delta_bytes: int
    start_bytes: int | None = None
    max_bytes: int | None = None

    def __post_init__(self) -> None:
        if self.arch not in (ArchKind.ASYNCHRONOUS, ArchKind.TWO_STAGE):
            raise ValueError("sweeps apply to the asynchronous and two-stage pipelines only")
        if self.delta_bytes <= 0:
            raise ValueError("delta_bytes must be positive")

    def resolve(self, smax: int, total: int) -> tuple[int, int]:
        start = self.start_bytes if self.start_bytes is not None else smax
        top = self.max_bytes if self.max_bytes is not None else total
        if start < smax:
            raise ValueError(f"start capacity {start} is below the largest layer {smax}")
        if top < start:
            raise ValueError(f"max capacity {top} is below start capacity {start}")
        return start, top


@dataclass(frozen=True)
class TradeoffPoint:
    capacity_bytes: int  # per-buffer capacity
    memory_bytes: int  # total staging memory at this point
    mean_delay_us: int
    min_delay_us: int
    max_delay_us: int


@dataclass(frozen=True)
class TradeoffCurve:
    arch: ArchKind
    points: tuple[TradeoffPoint, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class MinimalDelayPoint:
    capacity_bytes: int
    memory_bytes: int
    mean_delay_us: int


def _capacities(start: int, top: int, delta: int) -> list[int]:
    caps = list(range(start, top + 1, delta))
    if caps[-1] != top:
        caps.append(top)  # final point clamps to max
    return caps


def sweep(trace: ModelTrace, spec: SweepSpec) -> TradeoffCurve:
    """Simulate every trace iteration at each capacity step."""
    first = trace.iterations[0]
    smax = max(l.size_bytes for l in first)
    total = sum(l.size_bytes for l in first)
    start, top = spec.resolve(smax, total)

    points = []
    for cap in _capacities(start, top, spec.delta_bytes):
        if spec.arch is ArchKind.ASYNCHRONOUS:
            config = BufferConfig.three_stage(cap, cap)
            memory = 2 * cap
        else:
            config = BufferConfig.two_stage(cap)
            memory = cap
        delays = [
            simulate(list(iteration), spec.arch, config).makespan_us
            for iteration in trace.iterations
        ]
        points.append(
            TradeoffPoint(
                capacity_bytes=cap,
                memory_bytes=memory,
                mean_delay_us=round_half_up(sum(delays), len(delays)),
                min_delay_us=min(delays),
                max_delay_us=max(delays),
            )
        )

    for prev, cur in zip(points, points[1:]):
        # deterministic engine: more capacity can only release earlier
        assert cur.mean_delay_us <= prev.mean_delay_us, (
            f"delay increased with capacity: {prev} -> {cur}"
        )
    return TradeoffCurve(arch=spec.arch, points=tuple(points))


def minimal_delay_point(curve: TradeoffCurve) -> MinimalDelayPoint:
    """First (smallest-capacity) point attaining the curve's minimum mean delay."""
    if not curve.points:
        raise ValueError("empty curve")
    best = min(p.mean_delay_us for p in curve.points)
    for p in curve.points:
        if p.mean_delay_us == best:
            return MinimalDelayPoint(p.capacity_bytes, p.memory_bytes, p.mean_delay_us)
    raise AssertionError("unreachable")


def curve_to_csv(curve: TradeoffCurve) -> str:
    rows = [CURVE_HEADER]
    for p in curve.points:
        rows.append(f"{p.capacity_bytes},{p.memory_bytes},{p.mean_delay_us},{p.min_delay_us},{p.max_delay_us}")
    return "\n".join(rows) + "\n"


def parse_curve_csv(content: str, arch: ArchKind) -> TradeoffCurve:
    lines = content.splitlines()
    if not lines or lines[0].strip() != CURVE_HEADER:
        raise ValueError(f"bad curve header, expected {CURVE_HEADER!r}")
    points = []
    for rowno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        try:
            cap, mem, mean, lo, hi = (int(p) for p in line.split(","))
        except ValueError:
            raise ValueError(f"row {rowno}: malformed curve row {line!r}") from None
        points.append(TradeoffPoint(cap, mem, mean, lo, hi))
    return TradeoffCurve(arch=arch, points=tuple(points))
