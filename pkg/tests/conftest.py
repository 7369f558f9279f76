from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from smoothmst.engine import MAX_PAYLOAD_FIELDS, BandwidthViolation, RoundEngine

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# violations raised on purpose by tests marked ``expect_violation``
EXPECTED_VIOLATIONS = {"count": 0}
# criterion label -> (passed, detail), filled by the acceptance suite
CRITERIA: dict[str, tuple[bool, str]] = {}
# independent structural audit of every transmitted batch in the session
STRUCTURE: dict[str, int] = {"batches": 0, "messages": 0, "bad": 0}


def structural_observer(rnd: int, batch) -> None:
    STRUCTURE["batches"] += 1
    STRUCTURE["messages"] += len(batch)
    links = {(u, v) for u, v, _ in batch}
    bad = len(batch) - len(links)
    for _u, _v, msg in batch:
        payload = msg.payload
        if len(payload) > MAX_PAYLOAD_FIELDS or not all(
            x is None or isinstance(x, (int, float)) for x in payload
        ):
            bad += 1
    STRUCTURE["bad"] += bad


if structural_observer not in RoundEngine.default_observers:
    RoundEngine.default_observers.append(structural_observer)


def pytest_configure(config):
    config.addinivalue_line("markers", "expect_violation: test raises BandwidthViolation deliberately")


def pytest_collection_modifyitems(config, items):
    # acceptance last, so its bandwidth tally covers the whole session
    items.sort(key=lambda it: "test_acceptance" in it.nodeid)


@pytest.fixture(autouse=True)
def _bandwidth_guard(request):
    before = BandwidthViolation.raised
    yield
    delta = BandwidthViolation.raised - before
    if request.node.get_closest_marker("expect_violation"):
        EXPECTED_VIOLATIONS["count"] += delta
    elif delta:
        pytest.fail(f"{delta} unexpected BandwidthViolation(s)")


def unexpected_violations() -> int:
    return BandwidthViolation.raised - EXPECTED_VIOLATIONS["count"]


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, (ok, detail) in sorted(CRITERIA.items(), key=lambda kv: int(kv[0].split()[1])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
