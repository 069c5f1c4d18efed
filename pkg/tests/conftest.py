import pytest

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance check: ``acceptance(index, title, checks, headline)``.

    ``headline`` describes a passing result; on failure the first failing
    check is shown instead.  Returns whether every check passed.
    """

    def record(index, title, checks, headline=""):
        failed = [c for c in checks if not c.passed]
        ok = bool(checks) and not failed
        detail = headline if ok else (failed[0].line() if failed else "no checks ran")
        _ACCEPTANCE[index] = (
            f"[{index:2d}/10] {'PASS' if ok else 'FAIL'} {title} "
            f"({len(checks) - len(failed)}/{len(checks)} checks): {detail}"
        )
        print(_ACCEPTANCE[index])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance summary")
    for index in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[index])
