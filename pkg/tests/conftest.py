import numpy as np
import pytest

from rthslab.integrator import IntegratorConfig, run_pure_fe
from rthslab.signals import load_default_record, resample
from rthslab.structure import build_sdof

DT = 1.0 / 2048.0

# reference bench setup: story mass, frame stiffness, damping ratio, and the
# brace stiffness in global coordinates that puts the period at 0.294 s
MASS = 1.75
FRAME_K = 176.75
BRACE_K = 622.5376904024424
ZETA = 0.02


@pytest.fixture(scope="session")
def bench_model():
    return build_sdof(MASS, FRAME_K, ZETA, brace_stiffness=BRACE_K)


@pytest.fixture(scope="session")
def bench_integrator(bench_model):
    return IntegratorConfig.for_model(bench_model, DT)


@pytest.fixture(scope="session")
def record_native():
    return load_default_record()


@pytest.fixture(scope="session")
def record_2048(record_native):
    return resample(record_native, DT)


@pytest.fixture(scope="session")
def pure_10s(bench_model, bench_integrator, record_2048):
    n = int(10.0 / DT + 1e-9) + 1
    return run_pure_fe(bench_model, bench_integrator, record_2048, n=n)
