import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from permconc.measures import Measure, uniform
from permconc.permcore import alternating_group, block_product_group, build_local_base, symmetric_group

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def s3():
    return symmetric_group(3)


@pytest.fixture(scope="session")
def s4():
    return symmetric_group(4)


@pytest.fixture(scope="session")
def a4():
    return alternating_group(4)


@pytest.fixture(scope="session")
def s2xs3():
    return block_product_group([2, 3])


def based_uniform(G):
    T = build_local_base(G, G.ell)
    return T, Measure(G, uniform(G).weights, T.fingerprint, "uniform")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE: list[str] = []


def record_acceptance(number: int, ok: bool, seconds: float, budget: float | None, detail: str) -> str:
    status = "PASS" if ok else "FAIL"
    limit = f" (budget {budget:g} s)" if budget else ""
    line = f"criterion {number}: {status} in {seconds:.1f} s{limit}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
