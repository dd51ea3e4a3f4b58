"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import re
from collections import defaultdict

CRITERIA = {
    1: "closed-form reproduction at unit scaling",
    2: "dual-path verification matrix",
    3: "diagonality and trace identity",
    4: "asymptotic slopes of a_12(N)",
    5: "counterexample partial sums",
    6: "bracket continuity bound",
    7: "exp/log/BCDH/log-derivative properties",
    8: "geometry property suite",
}

_outcomes: dict[int, list[tuple[str, bool, str]]] = defaultdict(list)
_NAME = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    match = _NAME.search(report.nodeid)
    if not match:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
        _outcomes[int(match.group(1))].append((match.group(2), report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in CRITERIA.items():
        parts = _outcomes.get(number)
        if not parts:
            continue
        ok = all(passed for _, passed, _ in parts)
        terminalreporter.write_line(f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'}")
        for name, passed, detail in parts:
            line = f"    {'pass' if passed else 'FAIL'} {name}"
            terminalreporter.write_line(line + (f": {detail}" if detail else ""))
