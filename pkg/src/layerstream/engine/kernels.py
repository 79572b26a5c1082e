"""Scheduler inner loops over int64 arrays, JIT-compiled when numba is on.

Each kernel simulates one pipeline policy over a fixed layer profile and
returns per-operation (release, start, end) times plus peak buffer usage.
Event arrays have shape (3, n): row 0 = read, 1 = copy, 2 = kernel; -1
marks an operation that does not exist (copies in the two-stage pipeline).

The backend is chosen at import time from LAYERSTREAM_BACKEND:
  "numba"  - require numba, JIT every kernel (default when importable)
  "python" - pure-Python/numpy loops, no compilation
Unset picks numba when available and falls back to python otherwise.
"""

from __future__ import annotations

import os

import numpy as np

_STALLED = "scheduler stalled: release blocked with no pending completion"
_I64_MAX = 0x7FFFFFFFFFFFFFFF


def _sequential_pipeline(sizes, reads, copies, kernels):
    # strict chain: R1 C1 K1 R2 ... each release at the previous completion
    n = sizes.shape[0]
    rel = np.full((3, n), -1, np.int64)
    start = np.full((3, n), -1, np.int64)
    end = np.full((3, n), -1, np.int64)
    t = np.int64(0)
    cpu_used = np.int64(0)
    gpu_used = np.int64(0)
    peak_cpu = np.int64(0)
    peak_gpu = np.int64(0)
    for i in range(n):
        rel[0, i] = t
        start[0, i] = t
        end[0, i] = t + reads[i]
        t = end[0, i]
        cpu_used += sizes[i]  # reserved at read release
        if cpu_used > peak_cpu:
            peak_cpu = cpu_used
        rel[1, i] = t
        start[1, i] = t
        end[1, i] = t + copies[i]
        t = end[1, i]
        gpu_used += sizes[i]  # reserved at copy release
        if gpu_used > peak_gpu:
            peak_gpu = gpu_used
        rel[2, i] = t
        start[2, i] = t
        end[2, i] = t + kernels[i]
        t = end[2, i]
        cpu_used -= sizes[i]  # freed at kernel release
        gpu_used -= sizes[i]  # freed at kernel completion
    return rel, start, end, peak_cpu, peak_gpu


def _synchronous_pipeline(sizes, reads, copies, kernels):
    # cycle t holds R_t, C_{t-1}, K_{t-2}; the next cycle starts when all done
    n = sizes.shape[0]
    rel = np.full((3, n), -1, np.int64)
    start = np.full((3, n), -1, np.int64)
    end = np.full((3, n), -1, np.int64)
    big_t = np.int64(0)
    cpu_used = np.int64(0)
    gpu_used = np.int64(0)
    peak_cpu = np.int64(0)
    peak_gpu = np.int64(0)
    for t in range(1, n + 3):
        ri = t - 1
        ci = t - 2
        ki = t - 3
        # boundary frees precede the cycle's reservations (double buffering)
        if 0 <= t - 4 < n:
            gpu_used -= sizes[t - 4]  # previous cycle's kernel completed
        if 0 <= ki < n:
            cpu_used -= sizes[ki]  # freed when its kernel is released
        cycle = np.int64(0)
        if 0 <= ri < n:
            rel[0, ri] = big_t
            start[0, ri] = big_t
            end[0, ri] = big_t + reads[ri]
            cpu_used += sizes[ri]
            if cpu_used > peak_cpu:
                peak_cpu = cpu_used
            if reads[ri] > cycle:
                cycle = reads[ri]
        if 0 <= ci < n:
            rel[1, ci] = big_t
            start[1, ci] = big_t
            end[1, ci] = big_t + copies[ci]
            gpu_used += sizes[ci]
            if gpu_used > peak_gpu:
                peak_gpu = gpu_used
            if copies[ci] > cycle:
                cycle = copies[ci]
        if 0 <= ki < n:
            rel[2, ki] = big_t
            start[2, ki] = big_t
            end[2, ki] = big_t + kernels[ki]
            if kernels[ki] > cycle:
                cycle = kernels[ki]
        big_t += cycle
    return rel, start, end, peak_cpu, peak_gpu


def _async_pipeline(sizes, reads, copies, kernels, cpu_cap, gpu_cap):
    # greedy earliest release; free counters gate reads (CPU) and copies (GPU)
    n = sizes.shape[0]
    rel = np.full((3, n), -1, np.int64)
    start = np.full((3, n), -1, np.int64)
    end = np.full((3, n), -1, np.int64)
    res_free = np.zeros(3, np.int64)  # next idle time of each exclusive resource
    b_c = np.int64(cpu_cap)
    b_g = np.int64(gpu_cap)
    peak_cpu = np.int64(0)
    peak_gpu = np.int64(0)
    h = 0  # foremost released kernel not yet freed from GPU
    i = 0  # next read to release
    j = 0  # next copy to release
    k = 0  # next kernel to release
    t = np.int64(0)
    while k < n:
        progress = True
        while progress:
            # one release per kind per pass, in Algorithm-1 body order
            progress = False
            if h < k and end[2, h] <= t:
                b_g += sizes[h]
                h += 1
                progress = True
            if i < n and b_c >= sizes[i]:
                rel[0, i] = t
                s = t if t > res_free[0] else res_free[0]
                start[0, i] = s
                end[0, i] = s + reads[i]
                res_free[0] = end[0, i]
                b_c -= sizes[i]
                if cpu_cap - b_c > peak_cpu:
                    peak_cpu = cpu_cap - b_c
                i += 1
                progress = True
            if j < i and b_g >= sizes[j] and end[0, j] <= t:
                rel[1, j] = t
                s = t if t > res_free[1] else res_free[1]
                start[1, j] = s
                end[1, j] = s + copies[j]
                res_free[1] = end[1, j]
                b_g -= sizes[j]
                if gpu_cap - b_g > peak_gpu:
                    peak_gpu = gpu_cap - b_g
                j += 1
                progress = True
            if k < j and end[1, k] <= t:
                rel[2, k] = t
                s = t if t > res_free[2] else res_free[2]
                start[2, k] = s
                end[2, k] = s + kernels[k]
                res_free[2] = end[2, k]
                b_c += sizes[k]  # CPU bytes freed at kernel release
                k += 1
                progress = True
        if k >= n:
            break
        nxt = np.int64(_I64_MAX)
        if h < k and end[2, h] > t and end[2, h] < nxt:
            nxt = end[2, h]
        if j < i and end[0, j] > t and end[0, j] < nxt:
            nxt = end[0, j]
        if k < j and end[1, k] > t and end[1, k] < nxt:
            nxt = end[1, k]
        if nxt == _I64_MAX:
            raise RuntimeError(_STALLED)
        t = nxt
    return rel, start, end, peak_cpu, peak_gpu


def _two_stage_pipeline(sizes, reads, kernels, shared_cap):
    # zero-copy variant: no copy stage, one shared counter freed at kernel end
    n = sizes.shape[0]
    rel = np.full((3, n), -1, np.int64)
    start = np.full((3, n), -1, np.int64)
    end = np.full((3, n), -1, np.int64)
    res_free = np.zeros(2, np.int64)
    b = np.int64(shared_cap)
    peak = np.int64(0)
    h = 0
    i = 0
    k = 0
    t = np.int64(0)
    while k < n:
        progress = True
        while progress:
            progress = False
            if h < k and end[2, h] <= t:
                b += sizes[h]
                h += 1
                progress = True
            if i < n and b >= sizes[i]:
                rel[0, i] = t
                s = t if t > res_free[0] else res_free[0]
                start[0, i] = s
                end[0, i] = s + reads[i]
                res_free[0] = end[0, i]
                b -= sizes[i]
                if shared_cap - b > peak:
                    peak = shared_cap - b
                i += 1
                progress = True
            if k < i and end[0, k] <= t:
                rel[2, k] = t
                s = t if t > res_free[1] else res_free[1]
                start[2, k] = s
                end[2, k] = s + kernels[k]
                res_free[1] = end[2, k]
                k += 1
                progress = True
        if k >= n:
            break
        nxt = np.int64(_I64_MAX)
        if h < k and end[2, h] > t and end[2, h] < nxt:
            nxt = end[2, h]
        if k < i and end[0, k] > t and end[0, k] < nxt:
            nxt = end[0, k]
        if nxt == _I64_MAX:
            raise RuntimeError(_STALLED)
        t = nxt
    return rel, start, end, peak


PY_KERNELS = {
    "sequential": _sequential_pipeline,
    "synchronous": _synchronous_pipeline,
    "async": _async_pipeline,
    "two_stage": _two_stage_pipeline,
}


def jit_kernels() -> dict:
    """Compile every kernel with numba (raises ImportError without numba)."""
    from numba import njit

    return {name: njit(cache=True)(fn) for name, fn in PY_KERNELS.items()}


def _select_backend() -> tuple[str, dict]:
    choice = os.environ.get("LAYERSTREAM_BACKEND", "").strip().lower()
    if choice not in ("", "numba", "python"):
        raise ValueError(f"LAYERSTREAM_BACKEND must be 'numba' or 'python', got {choice!r}")
    if choice == "python":
        return "python", PY_KERNELS
    try:
        return "numba", jit_kernels()
    except ImportError:
        if choice == "numba":
            raise
        return "python", PY_KERNELS


BACKEND, ACTIVE_KERNELS = _select_backend()


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
