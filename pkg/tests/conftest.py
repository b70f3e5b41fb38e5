import pytest

CRITERIA = {
    1: "ideal-case identity",
    2: "balancing comparison P_V2",
    3: "honest reference-setup metrics at L=0",
    4: "Bob-attack sanction curve",
    5: "Alice-attack sweep",
    6: "fairness equals 1 - |interest| under win transfer",
    7: "Monte Carlo agrees with analytic oracles",
    8: "coincidence rate algebra integer identity",
    9: "reflectivity estimation round trip",
    10: "phase-noise effective visibility",
    11: "SPDC purity, FWHM and coherence length",
    12: "abort surplus from herald dark counts",
}

_outcomes: dict[int, list[bool]] = {}
_details: dict[int, list[str]] = {}


@pytest.fixture
def report(request):
    """Attach measured values to the acceptance summary line of this criterion."""
    marker = request.node.get_closest_marker("acceptance")

    def add(text: str) -> None:
        if marker is not None:
            _details.setdefault(marker.args[0], []).append(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes.setdefault(marker.args[0], []).append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        results = _outcomes.get(number)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        extra = "; ".join(_details.get(number, []))
        line = f"AC{number:>2} {status:<7} {CRITERIA[number]}"
        terminalreporter.write_line(line + (f"  [{extra}]" if extra else ""))
