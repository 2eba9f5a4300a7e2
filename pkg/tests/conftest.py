import os

import numpy as np
import pytest

from bitrel.models.schemas import NodeFunction, Operator, SystemSpec, SystemType
from bitrel.services.bitseries import BitSeries, Weighting
from bitrel.services.sysgen import draw_system, sample_traces


@pytest.fixture(name="rng")
def rng_fixture():
    return np.random.default_rng(20240521)


@pytest.fixture(name="uniform4")
def uniform4_fixture() -> Weighting:
    return Weighting.uniform(4)


@pytest.fixture(name="series")
def series_fixture():
    """Build a BitSeries from a 0/1 string."""
    return BitSeries.from_bits


@pytest.fixture(name="and_spec")
def and_spec_fixture() -> SystemSpec:
    # src 0..2, dst 3 = AND(0, 2), dst 4 = identity(1)
    return SystemSpec(
        ordinal=0,
        system_type=SystemType.AND,
        m_src=3,
        m_dst=2,
        seed=12345,
        src_density=(0.3, 0.5, 0.6),
        dst_functions=(
            NodeFunction(inputs=(0, 2), ops=(Operator.AND,)),
            NodeFunction(inputs=(1,)),
        ),
    )


@pytest.fixture(name="drawn_system")
def drawn_system_fixture():
    spec = draw_system(7, 4)
    return spec, sample_traces(spec, 500)


@pytest.fixture(name="settings_env")
def settings_env_fixture(monkeypatch):
    """Clear BITREL_* variables so tests see built-in defaults."""
    for key in list(os.environ):
        if key.startswith("BITREL_"):
            monkeypatch.delenv(key)
    return monkeypatch
