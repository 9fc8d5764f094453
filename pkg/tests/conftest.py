import pytest

from fuzzyagents.watering import build_watering_system, reference_config, reference_scenario


@pytest.fixture(scope="session")
def cfg():
    return reference_config()


@pytest.fixture
def system(cfg):
    return build_watering_system(cfg)


@pytest.fixture(scope="session")
def scenario():
    return reference_scenario()


_acceptance: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): acceptance criterion reported in the summary")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is not None and call.when == "call":
        _acceptance.append(("PASS" if call.excinfo is None else "FAIL", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if _acceptance:
        terminalreporter.section("acceptance criteria")
        for status, label in _acceptance:
            terminalreporter.write_line(f"{status}  {label}")
