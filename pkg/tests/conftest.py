import os

_ACCEPTANCE_RESULTS = []


def record_criterion(name: str, passed: bool, detail: str) -> None:
    _ACCEPTANCE_RESULTS.append((name, passed, detail))


def acceptance_threads() -> int:
    env = os.environ.get("MAXCORR_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE_RESULTS:
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}  {detail}")
