import acceptance_report


def pytest_terminal_summary(terminalreporter):
    if not acceptance_report.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance_report.RESULTS):
        terminalreporter.write_line(acceptance_report.line(number))
    passed = sum(ok for _, ok, _, _ in acceptance_report.RESULTS.values())
    terminalreporter.write_line(f"{passed}/{len(acceptance_report.RESULTS)} criteria passed")
