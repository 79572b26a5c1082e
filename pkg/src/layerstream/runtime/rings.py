"""FIFO ring-buffer byte allocator for the staging buffers.

Allocations happen strictly in layer order and are freed in the same
order, so the live region is always one contiguous (possibly wrapped)
span. By default an allocation may wrap as two segments; strict mode
instead skips the tail remainder (counted as padding) so every
allocation is one contiguous segment, which can delay allocations
beyond what plain free-byte counters predict.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

Segment = tuple[int, int]  # (offset, length)


@dataclass(frozen=True)
class Allocation:
    segments: tuple[Segment, ...]
    padding: int  # skipped tail bytes (strict mode only)

    @property
    def total(self) -> int:
        return sum(length for _, length in self.segments) + self.padding


class RingAllocator:
    def __init__(self, capacity: int, contiguous: bool = False):
        if capacity <= 0:
            raise ValueError("ring capacity must be positive")
        self.capacity = capacity
        self.contiguous = contiguous
        self._head = 0  # next byte to hand out
        self._free = capacity
        self._live: deque[Allocation] = deque()
        self.peak_bytes = 0

    @property
    def used(self) -> int:
        return self.capacity - self._free

    def _plan(self, n: int) -> Allocation | None:
        if n == 0:
            return Allocation((), 0)
        if not self._live and self._free == self.capacity:
            # empty ring: restart from offset 0 so strict mode cannot wedge
            head = 0
        else:
            head = self._head
        tail_room = self.capacity - head
        if n <= tail_room:
            if n > self._free:
                return None
            return Allocation(((head, n),), 0)
        if self.contiguous:
            if n + tail_room > self._free or n > self.capacity:
                return None
            return Allocation(((0, n),), tail_room)
        if n > self._free:
            return None
        return Allocation(((head, tail_room), (0, n - tail_room)), 0)

    def can_allocate(self, n: int) -> bool:
        return self._plan(n) is not None

    def allocate(self, n: int) -> Allocation:
        plan = self._plan(n)
        if plan is None:
            raise MemoryError(f"ring cannot stage {n} bytes (free {self._free}/{self.capacity})")
        if not self._live and self._free == self.capacity:
            self._head = 0
        if plan.segments:
            last_off, last_len = plan.segments[-1]
            self._head = (last_off + last_len) % self.capacity
        self._free -= plan.total
        self._live.append(plan)
        if self.used > self.peak_bytes:
            self.peak_bytes = self.used
        return plan

    def free_oldest(self) -> Allocation:
        """Release the oldest live allocation (FIFO recycling)."""
        if not self._live:
            raise RuntimeError("free with no live allocation")
        alloc = self._live.popleft()
        self._free += alloc.total
        return alloc
