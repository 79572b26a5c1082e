"""Schedule checking: ordering, completion, and buffer-ledger constraints.

Violations are data, not exceptions: the report carries every failed check.
The ledger replay coalesces events that share a timestamp and checks the
buffer state at each instant's boundary; this mirrors the scheduler's
release semantics, where all actions at one timestamp form a single
fixpoint and zero-duration chains may reserve and free within it.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..formulas import ArchKind
from ..trace import LayerProfile
from .sim import BufferConfig, OpKind, Schedule, ScheduleEvent


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def clean(self) -> bool:
        return not self.violations

    @property
    def first(self) -> str | None:
        return self.violations[0] if self.violations else None

    def __str__(self) -> str:
        return "clean" if self.clean else self.violations[0]


_DUR_FIELD = {OpKind.READ: "read_us", OpKind.COPY: "copy_us", OpKind.KERNEL: "kernel_us"}


def validate_schedule(
    schedule: Schedule,
    profile: list[LayerProfile],
    config: BufferConfig,
    check_durations: bool = True,
) -> ValidationReport:
    """Check every schedule invariant; set check_durations=False for measured runs."""
    n = len(profile)
    two_stage = schedule.arch is ArchKind.TWO_STAGE
    bad: list[str] = []

    by_kind: dict[OpKind, dict[int, ScheduleEvent]] = {k: {} for k in OpKind}
    for e in schedule.events:
        if not 1 <= e.layer <= n:
            bad.append(f"{e.op.value}{e.layer}: layer out of range 1..{n}")
            continue
        if e.layer in by_kind[e.op]:
            bad.append(f"duplicate event {e.op.value}{e.layer}")
            continue
        by_kind[e.op][e.layer] = e

    for kind in OpKind:
        if kind is OpKind.COPY and two_stage:
            if by_kind[kind]:
                bad.append("copy events present in a two-stage schedule")
            continue
        missing = [i for i in range(1, n + 1) if i not in by_kind[kind]]
        if missing:
            bad.append(f"missing {kind.value} event for layer {missing[0]}")

    for kind, events in by_kind.items():
        ordered = [events[i] for i in sorted(events)]
        for e in ordered:
            if not e.release_us <= e.start_us <= e.end_us:
                bad.append(f"{kind.value}{e.layer}: release/start/end not ordered at t={e.release_us}")
            if check_durations:
                dur = getattr(profile[e.layer - 1], _DUR_FIELD[kind])
                if e.end_us - e.start_us != dur:
                    bad.append(
                        f"{kind.value}{e.layer}: duration {e.end_us - e.start_us} != profile {dur}"
                    )
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.layer != prev.layer + 1:
                continue  # gap already reported as missing
            if cur.release_us < prev.release_us:
                bad.append(f"release order violated: {kind.value}{cur.layer} before {kind.value}{prev.layer}")
            if cur.start_us < prev.start_us:
                bad.append(f"start order violated: {kind.value}{cur.layer} before {kind.value}{prev.layer}")
            if cur.start_us < prev.end_us:
                bad.append(
                    f"resource overlap: {kind.value}{cur.layer} starts at t={cur.start_us} "
                    f"before {kind.value}{prev.layer} ends at t={prev.end_us}"
                )

    # completion constraints: a request releases only after its upstream op ends
    for layer in range(1, n + 1):
        r = by_kind[OpKind.READ].get(layer)
        c = by_kind[OpKind.COPY].get(layer)
        k = by_kind[OpKind.KERNEL].get(layer)
        if two_stage:
            if r and k and k.release_us < r.end_us:
                bad.append(f"completion constraint R{layer}->K{layer} violated at t={k.release_us}")
        else:
            if r and c and c.release_us < r.end_us:
                bad.append(f"completion constraint R{layer}->C{layer} violated at t={c.release_us}")
            if c and k and k.release_us < c.end_us:
                bad.append(f"completion constraint C{layer}->K{layer} violated at t={k.release_us}")

    bad.extend(_replay_ledgers(schedule, profile, config, by_kind))
    return ValidationReport(tuple(bad))


def _replay_ledgers(
    schedule: Schedule,
    profile: list[LayerProfile],
    config: BufferConfig,
    by_kind: dict[OpKind, dict[int, ScheduleEvent]],
) -> list[str]:
    """Re-derive reservations from events; flag overflow or negative state."""
    sizes = {l.index: l.size_bytes for l in profile}
    two_stage = schedule.arch is ArchKind.TWO_STAGE
    deltas: list[tuple[int, str, int]] = []  # (time, buffer, signed bytes)

    if two_stage:
        for e in by_kind[OpKind.READ].values():
            deltas.append((e.release_us, "shared", sizes[e.layer]))
        for e in by_kind[OpKind.KERNEL].values():
            deltas.append((e.end_us, "shared", -sizes[e.layer]))
        caps = {"shared": config.shared_capacity_bytes}
    else:
        for e in by_kind[OpKind.READ].values():
            deltas.append((e.release_us, "cpu", sizes[e.layer]))
        for e in by_kind[OpKind.COPY].values():
            deltas.append((e.release_us, "gpu", sizes[e.layer]))
        for e in by_kind[OpKind.KERNEL].values():
            deltas.append((e.release_us, "cpu", -sizes[e.layer]))
            deltas.append((e.end_us, "gpu", -sizes[e.layer]))
        caps = {"cpu": config.cpu_capacity_bytes, "gpu": config.gpu_capacity_bytes}

    used = {name: 0 for name in caps}
    bad = []
    deltas.sort(key=lambda d: d[0])
    pos = 0
    while pos < len(deltas):
        t = deltas[pos][0]
        while pos < len(deltas) and deltas[pos][0] == t:
            _, buf, delta = deltas[pos]
            used[buf] += delta
            pos += 1
        for buf, val in used.items():
            if val > caps[buf]:
                bad.append(f"{buf.upper()} buffer overflow at t={t}: reserved {val} > capacity {caps[buf]}")
                return bad
            if val < 0:
                bad.append(f"{buf.upper()} buffer ledger negative at t={t}: {val}")
                return bad
    return bad
