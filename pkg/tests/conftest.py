import pytest

from mitigation_sil.scenario_io import fixture_path, load_fixture

# filled by test_acceptance; printed as one line per criterion at the end
ACCEPTANCE_RESULTS: dict[str, bool] = {}

# the published E[q] vector for the tunnel case, in subsystem order
TUNNEL_TARGETS = [1.2e-4, 9.0e-5, 1.0e-2, 9.0e-5, 1.4e-2, 2.0e-3, 2.0e-3, 2.0e-4, 1.4e-2, 3.6e-2]


@pytest.fixture(scope="session")
def gas():
    return load_fixture("gas")


@pytest.fixture(scope="session")
def tunnel():
    return load_fixture("tunnel")


@pytest.fixture(scope="session")
def gas_path():
    return str(fixture_path("gas"))


@pytest.fixture(scope="session")
def tunnel_path():
    return str(fixture_path("tunnel"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}")
