import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from frob import cache  # noqa: E402
from frob import modules as md  # noqa: E402
from frob.algebra import PolyRing  # noqa: E402
from frob.modules import QuotientRing  # noqa: E402

import oracles  # noqa: E402

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []

# every resolution built anywhere in the suite is checked for d^2 = 0 and minimality
RESOLUTION_LOG = {"count": 0, "failures": []}


def _observe(res):
    RESOLUTION_LOG["count"] += 1
    if not (res.check_complex() and res.check_minimal()):
        RESOLUTION_LOG["failures"].append(repr(res.module))


md.resolution_observers.append(_observe)
cache.disable()


def ring_A(p=2):
    return QuotientRing(PolyRing(p, ("x", "y")), ["x^2"], name="R_A")


def ring_B(p=2):
    return QuotientRing(PolyRing(p, ("x", "y")), ["x*y"], name="R_B")


T345 = ["y^2 - x*z", "x^3 - y*z", "x^2*y - z^2"]


def ring_C(p=2):
    return QuotientRing(PolyRing(p, ("x", "y", "z"), (3, 4, 5)), T345, minimal_primes=[T345], name="R_C")


RINGS = {"R_A": ring_A, "R_B": ring_B, "R_C": ring_C}


def oracle_ring(R: QuotientRing) -> oracles.GradedRing:
    return oracles.GradedRing(R.p, R.weights, [dict(g.terms) for g in R.ideal.gens])


def oracle_module(M: md.ModulePresentation, ring: oracles.GradedRing | None = None) -> oracles.GradedModule:
    return oracles.GradedModule(ring or oracle_ring(M.ring), M.degrees, [dict(v) for v in M.relations])


@pytest.fixture(params=[2, 3])
def p(request):
    return request.param


@pytest.fixture
def R_A():
    return ring_A(2)


@pytest.fixture
def R_B():
    return ring_B(2)


@pytest.fixture
def R_C():
    return ring_C(2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    terminalreporter.write_line(
        f"resolutions observed: {RESOLUTION_LOG['count']}, structural failures: {len(RESOLUTION_LOG['failures'])}"
    )
