import contextlib
import time

import pytest

_RESULTS = pytest.StashKey[list]()


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.detail = ""


@pytest.fixture
def criterion(request):
    """``with criterion(n, title) as c:`` records PASS/FAIL for the acceptance summary."""
    results = request.config.stash.setdefault(_RESULTS, [])

    @contextlib.contextmanager
    def record(number, title):
        c = _Criterion(number, title)
        start = time.perf_counter()
        try:
            yield c
        except BaseException as exc:
            results.append((number, title, False, c.detail or f"{type(exc).__name__}: {exc}".splitlines()[0],
                            time.perf_counter() - start))
            raise
        results.append((number, title, True, c.detail, time.perf_counter() - start))

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail, seconds in sorted(results):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {number}: {title} [{seconds:.1f}s] {detail}")
