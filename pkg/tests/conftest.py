import pytest

from entropy_execution.model_config import GaussianDist, ModelParams, RiskSpecModel1, RiskSpecModel2


@pytest.fixture
def params():
    """Model 1 benchmark market and agent constants."""
    return ModelParams(gamma=2.5e-7, gamma_M=2.5e-6, eta=2.5e-6, delta=1.25e-4, beta=1.0,
                       sigma_S=10.0, sigma_X=1e5, rho=0.3, horizon=1.0, x0=1e6, s0=100.0)


@pytest.fixture
def prior():
    return GaussianDist(0.0, 1e-8)


@pytest.fixture
def risk1():
    return RiskSpecModel1(-1e-6, -5e-6, 9e-7)


@pytest.fixture
def risk2():
    return RiskSpecModel2(-1e-6, 5e-6, 9e-7)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        entries = RESULTS[number]
        passed = all(e["passed"] for e in entries)
        seconds = sum(e["seconds"] for e in entries)
        detail = "; ".join(f"{e['label']}: {e['detail']}{'' if e['passed'] else ' [FAIL]'}" for e in entries)
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number} ({seconds:.2f} s) {detail}")
