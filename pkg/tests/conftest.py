_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.outcome == "passed" else report.outcome.upper()
        previous = _ACCEPTANCE_RESULTS.get(name)
        if previous != "FAILED":
            _ACCEPTANCE_RESULTS[name] = "FAIL" if outcome == "FAILED" else outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    from test_acceptance import CRITERIA

    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        tag = name.replace("test_criterion_", "")[:2]
        label = CRITERIA.get(tag, name)
        terminalreporter.write_line(
            f"criterion {tag} [{_ACCEPTANCE_RESULTS[name]}] {label}"
        )
