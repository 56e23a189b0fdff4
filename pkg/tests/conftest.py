# One verdict line per acceptance criterion, printed after the run summary
# so it survives pytest's output capture.

CRITERIA = (
    ("test_ac1_", "AC1 metric oracle suite"),
    ("test_ac2_", "AC2 similarity oracle"),
    ("test_ac3_", "AC3 router safety"),
    ("test_ac4_", "AC4 session state-machine properties"),
    ("test_ac5_", "AC5 protocol call-count contract"),
    ("test_ac6_", "AC6 directional sanity"),
    ("test_ac7_", "AC7 tm round-trip and retrieval"),
    ("test_ac8_", "AC8 api contract"),
)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    stats = terminalreporter.stats
    outcomes = {}
    for key, verdict in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in stats.get(key, []):
            for prefix, label in CRITERIA:
                if prefix in report.nodeid:
                    # A FAIL on any phase of the test beats an earlier PASS.
                    if outcomes.get(label) != "FAIL":
                        outcomes[label] = verdict
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for _prefix, label in CRITERIA:
        if label in outcomes:
            terminalreporter.write_line(f"{label}: {outcomes[label]}")
