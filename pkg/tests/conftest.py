import _acceptance_log as log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not log.EXPECTED:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(log.EXPECTED):
        entries = log.RESULTS.get(num, [])
        title = log.TITLES.get(num, "?")
        if not entries:
            terminalreporter.write_line(
                f"[FAIL] criterion {num:2d}: {title} -- not evaluated")
            continue
        ok = all(passed for passed, _ in entries)
        details = "; ".join(detail for _, detail in entries)
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            f"[{status}] criterion {num:2d}: {title} -- {details}")
