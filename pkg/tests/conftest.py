import pytest

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion.

    Usage: ``with criterion(3, "detail"):`` around the assertions.
    """

    class _Recorder:
        def __init__(self):
            self.detail = ""

        def __call__(self, number, title):
            self.number, self.title = number, title
            return self

        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            ok = exc_type is None
            ACCEPTANCE[self.number] = (ok, self.title, self.detail)
            status = "PASS" if ok else "FAIL"
            print(f"\n[acceptance] criterion {self.number}: {status}  {self.title}"
                  f"  {self.detail}")
            return False

    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(
            f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip())
