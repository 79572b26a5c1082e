"""Seeded random trace corpora for the property suites.

Sizes are long-tailed (log-normal); durations are loosely size-correlated
with additive noise and occasional zeros, exercising zero-duration and
zero-size corner cases. Everything is deterministic per seed.
"""

from __future__ import annotations

import numpy as np

from layerstream.trace import LayerProfile


def random_profile(rng: np.random.Generator, n_min: int = 1, n_max: int = 300,
                   small_times: bool = False) -> list[LayerProfile]:
    n = int(rng.integers(n_min, n_max + 1))
    sizes = np.floor(rng.lognormal(mean=11.0, sigma=1.5, size=n) + 0.5).astype(np.int64)
    sizes[rng.random(n) < 0.08] = 0  # parameter-less layers
    if sizes.max() == 0:
        sizes[int(rng.integers(0, n))] = int(rng.integers(1, 1_000_000))

    scale = 1e-4 if small_times else 2e-3
    cap = 60 if small_times else 20_000

    def durations(rate: float) -> np.ndarray:
        base = rate * scale * sizes + rng.integers(0, cap // 4, size=n)
        out = np.floor(base + 0.5).astype(np.int64)
        out[rng.random(n) < 0.05] = 0  # zero-duration operations
        return np.minimum(out, cap)

    reads = durations(1.0)
    copies = durations(0.4)
    kernels = durations(2.5)
    return [
        LayerProfile(i + 1, int(sizes[i]), int(reads[i]), int(copies[i]), int(kernels[i]))
        for i in range(n)
    ]


def table1_profile(total_bytes: int, smax_bytes: int, n_layers: int) -> list[LayerProfile]:
    """Deterministic profile hitting an exact (total, largest-layer) pair."""
    assert n_layers >= 1 and smax_bytes <= total_bytes
    rest = total_bytes - smax_bytes
    fill = n_layers - 1
    sizes = [smax_bytes]
    if fill:
        base, rem = divmod(rest, fill)
        assert base + 1 <= smax_bytes, "filler layers would exceed the stated maximum"
        sizes += [base + 1] * rem + [base] * (fill - rem)
    return [LayerProfile(i + 1, s, 1, 1, 1) for i, s in enumerate(sizes)]
