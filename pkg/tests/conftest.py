import pytest

_RESULTS: dict[int, tuple[str, bool, str]] = {}


class Acceptance:
    """Collects one pass/fail line per acceptance criterion for the terminal summary."""

    def record(self, number: int, title: str, ok: bool, detail: str) -> bool:
        _RESULTS[number] = (title, bool(ok), detail)
        print(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        return bool(ok)


@pytest.fixture(scope="session")
def acceptance():
    return Acceptance()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criteria run at their stated tolerances")


def pytest_collection_modifyitems(config, items):
    for item in items:
        if item.path.name == "test_acceptance.py":
            item.add_marker("acceptance")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        title, ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}: {detail}")
