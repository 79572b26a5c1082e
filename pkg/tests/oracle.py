"""Brute-force tick-stepped schedule oracle, independent of the engine.

Advances a clock one microsecond at a time. At every tick it runs a
fixpoint: idle resources begin their oldest queued request, finished
requests complete, and the policy releases whatever its rules allow, one
request per kind per pass in the order (free-on-kernel-completion, read,
copy, kernel). Deliberately naive so that it shares no structure with the
event-jumping engine it checks; only usable for small traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from layerstream.formulas import ArchKind
from layerstream.trace import LayerProfile

R, C, K = 0, 1, 2


@dataclass
class _Op:
    kind: int
    layer: int  # 0-based
    dur: int
    release: int = -1
    start: int = -1
    end: int = -1


@dataclass
class _Resource:
    queue: list = field(default_factory=list)
    current: _Op | None = None


@dataclass
class OracleResult:
    makespan: int
    ops: dict  # (kind, layer0) -> _Op


def _run(profile, release_pass, kinds, max_ticks):
    n = len(profile)
    ops = {}
    for idx in range(n):
        durs = (profile[idx].read_us, profile[idx].copy_us, profile[idx].kernel_us)
        for kind in kinds:
            ops[(kind, idx)] = _Op(kind, idx, durs[kind])
    resources = {kind: _Resource() for kind in kinds}
    finished = {key: False for key in ops}
    state = {"t": 0}

    def release(kind, idx):
        op = ops[(kind, idx)]
        op.release = state["t"]
        resources[kind].queue.append(op)

    done_kernels = 0
    for t in range(max_ticks + 1):
        state["t"] = t
        progress = True
        while progress:
            progress = False
            for kind in kinds:
                res = resources[kind]
                if res.current is not None and res.current.end <= t:
                    finished[(res.current.kind, res.current.layer)] = True
                    if res.current.kind == K:
                        done_kernels += 1
                    res.current = None
                    progress = True
                if res.current is None and res.queue:
                    op = res.queue.pop(0)
                    op.start = t
                    op.end = t + op.dur
                    res.current = op
                    progress = True
            if release_pass(t, finished, release):
                progress = True
        if done_kernels == len(profile):
            return OracleResult(max(op.end for op in ops.values()), ops)
    raise AssertionError(f"oracle did not finish within {max_ticks} ticks")


def oracle_simulate(profile: list[LayerProfile], arch: ArchKind,
                    cpu_cap: int = 0, gpu_cap: int = 0, shared_cap: int = 0) -> OracleResult:
    n = len(profile)
    sizes = [l.size_bytes for l in profile]
    budget = sum(l.read_us + l.copy_us + l.kernel_us for l in profile) + 8

    if arch is ArchKind.SEQUENTIAL:
        chain = [(kind, idx) for idx in range(n) for kind in (R, C, K)]
        pos = {"next": 0}

        def seq_pass(t, finished, release):
            if pos["next"] >= len(chain):
                return False
            kind, idx = chain[pos["next"]]
            prev = chain[pos["next"] - 1] if pos["next"] else None
            if prev is None or finished[prev]:
                release(kind, idx)
                pos["next"] += 1
                return True
            return False

        return _run(profile, seq_pass, (R, C, K), budget)

    if arch is ArchKind.SYNCHRONOUS:
        cyc = {"t": 1}

        def cycle_ops(tc):
            present = []
            if 0 <= tc - 1 < n:
                present.append((R, tc - 1))
            if 0 <= tc - 2 < n:
                present.append((C, tc - 2))
            if 0 <= tc - 3 < n:
                present.append((K, tc - 3))
            return present

        released_cycle = {"upto": 0}

        def sync_pass(t, finished, release):
            if cyc["t"] > n + 2:
                return False
            current = cycle_ops(cyc["t"])
            if released_cycle["upto"] < cyc["t"]:
                for kind, idx in current:
                    release(kind, idx)
                released_cycle["upto"] = cyc["t"]
                return True
            if all(finished[key] for key in current):
                cyc["t"] += 1
                return sync_pass(t, finished, release)
            return False

        return _run(profile, sync_pass, (R, C, K), budget)

    if arch is ArchKind.ASYNCHRONOUS:
        st = {"h": 0, "i": 0, "j": 0, "k": 0, "bc": cpu_cap, "bg": gpu_cap}

        def async_pass(t, finished, release):
            moved = False
            if st["h"] < st["k"] and finished[(K, st["h"])]:
                st["bg"] += sizes[st["h"]]
                st["h"] += 1
                moved = True
            if st["i"] < n and st["bc"] >= sizes[st["i"]]:
                release(R, st["i"])
                st["bc"] -= sizes[st["i"]]
                st["i"] += 1
                moved = True
            if st["j"] < st["i"] and finished[(R, st["j"])] and st["bg"] >= sizes[st["j"]]:
                release(C, st["j"])
                st["bg"] -= sizes[st["j"]]
                st["j"] += 1
                moved = True
            if st["k"] < st["j"] and finished[(C, st["k"])]:
                release(K, st["k"])
                st["bc"] += sizes[st["k"]]
                st["k"] += 1
                moved = True
            return moved

        return _run(profile, async_pass, (R, C, K), budget)

    if arch is ArchKind.TWO_STAGE:
        st = {"h": 0, "i": 0, "k": 0, "b": shared_cap}

        def two_stage_pass(t, finished, release):
            moved = False
            if st["h"] < st["k"] and finished[(K, st["h"])]:
                st["b"] += sizes[st["h"]]
                st["h"] += 1
                moved = True
            if st["i"] < n and st["b"] >= sizes[st["i"]]:
                release(R, st["i"])
                st["b"] -= sizes[st["i"]]
                st["i"] += 1
                moved = True
            if st["k"] < st["i"] and finished[(R, st["k"])]:
                release(K, st["k"])
                st["k"] += 1
                moved = True
            return moved

        return _run(profile, two_stage_pass, (R, K), budget)

    raise ValueError(f"oracle does not model {arch}")
