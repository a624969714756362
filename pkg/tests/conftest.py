import pytest


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


_LOG = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion; call it with ``(number, title)`` as a context manager."""
    from contextlib import contextmanager

    log = request.config.stash.setdefault(_LOG, {})

    @contextmanager
    def run(number, title):
        try:
            yield
        except BaseException:
            log[number] = f"FAIL  {number}. {title}"
            raise
        log[number] = f"PASS  {number}. {title}"

    return run


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(_LOG, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        terminalreporter.write_line(log[number])
