"""Per-layer timing traces: parsing, validation, statistics, and synthesis.

A trace is the workload every other module consumes: N layers, each with a
parameter size and read/copy/kernel durations, measured over M iterations.
Sizes are model properties and must agree across iterations; durations vary.
All times are integer microseconds and all sizes integer bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TRACE_HEADER = "iter,layer,size_bytes,read_us,copy_us,kernel_us"


class TraceError(ValueError):
    """Malformed or inconsistent trace content."""


def round_half_up(total: int, count: int) -> int:
    # exact integer half-up: floor(total/count + 1/2)
    return (2 * total + count) // (2 * count)


@dataclass(frozen=True)
class LayerProfile:
    """One layer: parameter size plus read, copy, and kernel durations."""

    index: int
    size_bytes: int
    read_us: int
    copy_us: int
    kernel_us: int

    def __post_init__(self) -> None:
        if self.index < 1:
            raise TraceError(f"layer index must be >= 1, got {self.index}")
        for name in ("size_bytes", "read_us", "copy_us", "kernel_us"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise TraceError(f"layer {self.index}: {name} must be a non-negative integer, got {v!r}")


@dataclass(frozen=True)
class TraceStats:
    """Aggregate statistics over a trace's mean profile."""

    n_layers: int
    total_size_bytes: int
    max_layer_bytes: int
    total_read_us: int
    total_copy_us: int
    total_kernel_us: int


@dataclass(frozen=True)
class ModelTrace:
    """N layers x M iterations of layer profiles, validated on construction."""

    name: str
    iterations: tuple[tuple[LayerProfile, ...], ...]

    def __post_init__(self) -> None:
        if len(self.iterations) < 1:
            raise TraceError("empty trace")
        n = len(self.iterations[0])
        if n < 1:
            raise TraceError("empty trace")
        for m, layers in enumerate(self.iterations, start=1):
            if len(layers) != n:
                raise TraceError(f"iteration {m} has {len(layers)} layers, expected {n}")
            for idx, layer in enumerate(layers, start=1):
                if layer.index != idx:
                    raise TraceError(f"iteration {m}: expected layer {idx}, got {layer.index}")
                if layer.size_bytes != self.iterations[0][idx - 1].size_bytes:
                    raise TraceError(f"size mismatch at layer {idx}")
        if all(l.size_bytes == 0 for l in self.iterations[0]):
            raise TraceError("trace has no layer with size_bytes > 0")

    @property
    def n_layers(self) -> int:
        return len(self.iterations[0])

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)


def parse_trace(content: str, name: str = "trace") -> ModelTrace:
    """Parse trace CSV text into a validated ModelTrace.

    Format: header line ``iter,layer,size_bytes,read_us,copy_us,kernel_us``,
    then rows sorted by iter then layer, both 1-based and contiguous.
    """
    lines = content.splitlines()
    if not lines:
        raise TraceError("empty trace")
    if lines[0].strip() != TRACE_HEADER:
        raise TraceError(f"row 1: bad header {lines[0].strip()!r}, expected {TRACE_HEADER!r}")

    iterations: list[list[LayerProfile]] = []
    for rowno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise TraceError(f"row {rowno}: malformed row, expected 6 fields, got {len(parts)}")
        try:
            it, layer, size, r, c, k = (int(p) for p in parts)
        except ValueError:
            raise TraceError(f"row {rowno}: malformed row, non-integer field in {line!r}") from None
        cur = len(iterations)
        if it == cur + 1:
            if layer != 1:
                raise TraceError(f"row {rowno}: expected layer 1 at start of iter {it}, got {layer}")
            iterations.append([])
        elif it != cur or cur == 0:
            raise TraceError(f"row {rowno}: non-contiguous iter {it}, expected {max(cur, 1)} or {cur + 1}")
        expected_layer = len(iterations[-1]) + 1
        if layer != expected_layer:
            raise TraceError(f"row {rowno}: expected layer {expected_layer}, got {layer}")
        try:
            iterations[-1].append(LayerProfile(layer, size, r, c, k))
        except TraceError as e:
            raise TraceError(f"row {rowno}: {e}") from None

    if not iterations:
        raise TraceError("empty trace")
    return ModelTrace(name=name, iterations=tuple(tuple(it) for it in iterations))


def serialize_trace(trace: ModelTrace) -> str:
    """Inverse of parse_trace; emits UTF-8 text with LF line endings."""
    out = [TRACE_HEADER]
    for m, layers in enumerate(trace.iterations, start=1):
        for l in layers:
            out.append(f"{m},{l.index},{l.size_bytes},{l.read_us},{l.copy_us},{l.kernel_us}")
    return "\n".join(out) + "\n"


def mean_profile(trace: ModelTrace) -> list[LayerProfile]:
    """Per-layer mean durations across iterations, rounded half-up to whole us."""
    m = trace.n_iterations
    profile = []
    for idx in range(trace.n_layers):
        layers = [it[idx] for it in trace.iterations]
        profile.append(
            LayerProfile(
                index=idx + 1,
                size_bytes=layers[0].size_bytes,
                read_us=round_half_up(sum(l.read_us for l in layers), m),
                copy_us=round_half_up(sum(l.copy_us for l in layers), m),
                kernel_us=round_half_up(sum(l.kernel_us for l in layers), m),
            )
        )
    return profile


def trace_stats(trace: ModelTrace) -> TraceStats:
    """Stats over the mean profile: totals, largest layer, per-operation sums."""
    prof = mean_profile(trace)
    return TraceStats(
        n_layers=len(prof),
        total_size_bytes=sum(l.size_bytes for l in prof),
        max_layer_bytes=max(l.size_bytes for l in prof),
        total_read_us=sum(l.read_us for l in prof),
        total_copy_us=sum(l.copy_us for l in prof),
        total_kernel_us=sum(l.kernel_us for l in prof),
    )


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for deterministic trace synthesis.

    Layer sizes are log-normal (long-tailed); durations are affine in size:
    ``overhead + rate * size_bytes``, with the kernel getting a base term.
    """

    n_layers: int
    seed: int = 0
    size_median_bytes: float = 1_000_000.0
    size_sigma: float = 1.2
    read_us_per_byte: float = 0.001
    read_overhead_us: float = 50.0
    copy_us_per_byte: float = 0.0004
    copy_overhead_us: float = 20.0
    kernel_base_us: float = 200.0
    kernel_us_per_byte: float = 0.004

    def __post_init__(self) -> None:
        if self.n_layers < 1:
            raise TraceError(f"n_layers must be >= 1, got {self.n_layers}")
        if not 0 <= self.seed < 2**64:
            raise TraceError("seed must fit in 64 bits")
        if self.size_median_bytes <= 0 or self.size_sigma < 0:
            raise TraceError("size distribution parameters must be positive")
        for name in ("read_us_per_byte", "read_overhead_us", "copy_us_per_byte",
                     "copy_overhead_us", "kernel_base_us", "kernel_us_per_byte"):
            if getattr(self, name) < 0:
                raise TraceError(f"{name} must be >= 0")


def synthesize_trace(spec: SynthSpec, name: str | None = None) -> ModelTrace:
    """Generate a trace deterministically from spec (same seed, same bytes)."""
    rng = np.random.default_rng(spec.seed)
    sizes = rng.lognormal(mean=math.log(spec.size_median_bytes), sigma=spec.size_sigma,
                          size=spec.n_layers)
    sizes = np.floor(sizes + 0.5).astype(np.int64)
    sizes[sizes < 0] = 0
    if int(sizes.max()) == 0:
        sizes[0] = 1  # a trace must carry at least one parameterized layer

    def affine(overhead: float, rate: float, base: float = 0.0) -> np.ndarray:
        return np.floor(base + overhead + rate * sizes.astype(np.float64) + 0.5).astype(np.int64)

    reads = affine(spec.read_overhead_us, spec.read_us_per_byte)
    copies = affine(spec.copy_overhead_us, spec.copy_us_per_byte)
    kernels = affine(0.0, spec.kernel_us_per_byte, base=spec.kernel_base_us)

    layers = tuple(
        LayerProfile(i + 1, int(sizes[i]), int(reads[i]), int(copies[i]), int(kernels[i]))
        for i in range(spec.n_layers)
    )
    return ModelTrace(name=name or f"synth-{spec.seed}", iterations=(layers,))
