import contextlib
import random

import pytest
from hypothesis import HealthCheck, settings

from outerflow.instance import make_instance

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def four_cycle():
    """Unit-capacity 4-cycle with the two crossing unit demands."""
    return make_instance(4, [], 1, [(1, 3, 1), (2, 4, 1)])


@pytest.fixture
def rng():
    return random.Random(12345)


def _results(config):
    if not hasattr(config, "_criteria"):
        config._criteria = {}
    return config._criteria


@pytest.fixture
def criterion(request):
    """``with criterion(k, title) as note:`` records PASS/FAIL for the
    terminal summary; ``note(text)`` attaches a detail string."""
    store = _results(request.config)

    @contextlib.contextmanager
    def run(number, title):
        details = []
        try:
            yield details.append
        except BaseException:
            store[number] = (title, False, "; ".join(details))
            print(f"FAIL criterion {number}: {title}")
            raise
        store[number] = (title, True, "; ".join(details))
        print(f"PASS criterion {number}: {title} ({'; '.join(details)})")

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = _results(config)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        title, ok, detail = store[number]
        verdict = "PASS" if ok else "FAIL"
        line = f"{verdict} {number:>2} {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
