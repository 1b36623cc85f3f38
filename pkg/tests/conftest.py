"""Shared fixtures.  Expensive objects (chains, L^p bundles) are built once per session."""

from fractions import Fraction

import pytest
from hypothesis import settings

from commonhc.constructions import (build_holo_hyperbolic, build_holo_parabolic, build_lp_hyperbolic,
                                    build_lp_parabolic, build_shift_vector)
from commonhc.funcspaces import L2Vector, PiecewiseFunction, dense_family
from commonhc.schedules import gen_add_schedule, gen_mult_schedule

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def mult10():
    return gen_mult_schedule([1.0, 1.0, 1.0], 10)


@pytest.fixture(scope="session")
def add8():
    return gen_add_schedule(8)


@pytest.fixture(scope="session")
def shift_targets():
    return [L2Vector((1.0,)), L2Vector((0.0, 1.0)), L2Vector((0.6, 0.8))]


@pytest.fixture(scope="session")
def shift_bundle(mult10, shift_targets):
    return build_shift_vector(mult10, shift_targets, 5)


@pytest.fixture(scope="session")
def holo_par(add8):
    return build_holo_parabolic(add8, [[1.0], [0.0, 1.0], [0.0, 0.0, 1.0]], 4)


@pytest.fixture(scope="session")
def holo_hyp(mult10):
    return build_holo_hyperbolic(mult10, [[1.0], [0.0, 1.0], [0.0, 0.0, 1.0]], 4, mu_list=[1.0])


@pytest.fixture(scope="session")
def lp_par(add8):
    return build_lp_parabolic(add8, dense_family(3), 5)


@pytest.fixture(scope="session")
def lp_hyp_targets():
    return [PiecewiseFunction.indicator(1, 2), PiecewiseFunction.tent(Fraction(3, 2), Fraction(1, 2)),
            PiecewiseFunction.indicator(-2, -1)]


@pytest.fixture(scope="session")
def lp_hyp(mult10, lp_hyp_targets):
    return build_lp_hyperbolic(mult10, lp_hyp_targets, 6, b_test=[0.0, 1.0])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None and report.when == "call":
        report.user_properties.append(("criterion", mark.args))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            for name, value in getattr(rep, "user_properties", []):
                if name == "criterion":
                    n, title = value
                    lines.append((n, f"criterion {n:2d} {'PASS' if rep.passed else 'FAIL'}  {title}"
                                     f"  ({rep.duration:.2f} s)"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
