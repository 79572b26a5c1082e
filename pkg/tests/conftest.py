"""Shared fixtures: the T3 reference trace and corpus helpers."""

from __future__ import annotations

import pytest

from layerstream.trace import ModelTrace, parse_trace

T3_CSV = """iter,layer,size_bytes,read_us,copy_us,kernel_us
1,1,4000000,4000,2000,5000
1,2,2000000,2000,1000,8000
1,3,1000000,1000,1000,3000
"""

MB = 1_000_000


@pytest.fixture(scope="session")
def t3() -> ModelTrace:
    return parse_trace(T3_CSV, name="T3")


@pytest.fixture(scope="session")
def t3_profile(t3):
    from layerstream.trace import mean_profile

    return mean_profile(t3)
