import pytest
from hypothesis import HealthCheck, settings

from pacifier.graph import build_graph

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def p2():
    return build_graph(2, [(0, 1, 1)])


@pytest.fixture
def k3():
    return build_graph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])


@pytest.fixture
def star4():
    return build_graph(4, [(0, 1), (0, 2), (0, 3)])


_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.stash[_CRITERIA] = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("criterion")
    if marker and (report.when == "call" or report.failed):
        number, title = marker.args
        results = item.config.stash[_CRITERIA]
        _, ok, details = results.get(number, (title, True, []))
        text = dict(item.user_properties).get("detail")
        if report.when == "call" and text:
            details = details + [text]
        results[number] = (title, ok and report.passed, details)
    return report


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_CRITERIA]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, ok, details = results[number]
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(f"{line} ({'; '.join(details)})" if details else line)
