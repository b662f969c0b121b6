from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

# acceptance checks append (criterion, passed, detail) here; printed after the run
ACCEPTANCE_REPORT = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(ACCEPTANCE_REPORT, key=lambda r: int(r[0].split()[1].rstrip(":"))):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name} {detail}")
