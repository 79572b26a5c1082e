"""Closed-form delay and memory for the five streaming architectures.

These evaluators double as oracles for the event simulator: the synchronous
closed-form delay must match the simulated makespan exactly, and the memory
expressions define each architecture's minimum staging capacity.

Memory model per architecture (s = layer sizes, smax = largest):
  preloading    delay = sum(k_i)                 memory = 2 * sum(s_i)
  sequential    delay = sum(r_i + c_i + k_i)     memory = 2 * smax
  synchronous   delay = cycle-sum (see below)    memory = 4 * smax
  asynchronous  delay: none in closed form       memory = 2 * smax
  two-stage     delay: none in closed form       memory = smax

The synchronous delay is the sum over pipeline cycles t = 1..N+2 of
max(r_t, c_{t-1}, k_{t-2}), where out-of-range indices contribute zero.
Displayed megabytes are decimal (1 MB = 10**6 bytes); all math is in bytes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .trace import LayerProfile


class ArchKind(enum.Enum):
    """The five pipeline architectures."""

    PRELOADING = "pre"
    SEQUENTIAL = "seq"
    SYNCHRONOUS = "sync"
    ASYNCHRONOUS = "async"
    TWO_STAGE = "2s"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_flag(cls, flag: str) -> "ArchKind":
        try:
            return cls(flag.strip().lower())
        except ValueError:
            valid = ", ".join(a.value for a in cls)
            raise ValueError(f"unknown architecture {flag!r}, expected one of: {valid}") from None


_LABELS = {
    ArchKind.PRELOADING: "Pre",
    ArchKind.SEQUENTIAL: "Seq",
    ArchKind.SYNCHRONOUS: "Sync",
    ArchKind.ASYNCHRONOUS: "Async",
    ArchKind.TWO_STAGE: "2S",
}


@dataclass(frozen=True)
class ClosedFormMetrics:
    """Closed-form result; delay_us is None where only simulation can tell."""

    delay_us: int | None
    memory_bytes: int


def synchronous_delay_us(profile: list[LayerProfile]) -> int:
    """Cycle-sum delay of the synchronous pipeline, generalized to any N."""
    n = len(profile)
    r = [l.read_us for l in profile]
    c = [l.copy_us for l in profile]
    k = [l.kernel_us for l in profile]

    def at(seq: list[int], i: int) -> int:
        return seq[i] if 0 <= i < n else 0

    total = 0
    for t in range(1, n + 3):  # cycle t runs R_t, C_{t-1}, K_{t-2}
        total += max(at(r, t - 1), at(c, t - 2), at(k, t - 3))
    return total


def closed_form(arch: ArchKind, profile: list[LayerProfile]) -> ClosedFormMetrics:
    """Evaluate delay (where defined) and staging memory for one architecture."""
    if not profile:
        raise ValueError("empty profile")
    total = sum(l.size_bytes for l in profile)
    smax = max(l.size_bytes for l in profile)

    if arch is ArchKind.PRELOADING:
        return ClosedFormMetrics(sum(l.kernel_us for l in profile), 2 * total)
    if arch is ArchKind.SEQUENTIAL:
        return ClosedFormMetrics(sum(l.read_us + l.copy_us + l.kernel_us for l in profile), 2 * smax)
    if arch is ArchKind.SYNCHRONOUS:
        return ClosedFormMetrics(synchronous_delay_us(profile), 4 * smax)
    if arch is ArchKind.ASYNCHRONOUS:
        return ClosedFormMetrics(None, 2 * smax)
    if arch is ArchKind.TWO_STAGE:
        return ClosedFormMetrics(None, smax)
    raise ValueError(f"unknown architecture {arch!r}")


def table2_memory_reduction(arch: ArchKind, profile: list[LayerProfile]) -> float:
    """Signed memory change vs preloading, percent, one decimal (negative = saving)."""
    if arch is ArchKind.PRELOADING:
        raise ValueError("memory reduction is measured against the preloading baseline")
    mem = closed_form(arch, profile).memory_bytes
    base = closed_form(ArchKind.PRELOADING, profile).memory_bytes
    return round(100.0 * (mem / base - 1.0), 1)
