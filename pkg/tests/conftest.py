import pytest

# (criterion number, passed, detail) recorded by test_acceptance.py
ACCEPTANCE: list[tuple[int, bool, str]] = []


@pytest.fixture
def record():
    def add(n: int, ok: bool, detail: str = "") -> None:
        ACCEPTANCE.append((n, ok, detail))
        print(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    return add


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
