import pytest

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion; the verdict lines print at the end of the run."""
    results = request.config.stash[ACCEPTANCE]

    def record(number, ok, **detail):
        results[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[ACCEPTANCE]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        facts = ", ".join(f"{k}={v}" for k, v in detail.items())
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({facts})")
