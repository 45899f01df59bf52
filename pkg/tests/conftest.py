"""Shared fixtures: reference configurations and reusable heavy solves."""

from __future__ import annotations

from fractions import Fraction

import pytest
from mpmath import mp, mpf
import mpmath.libmp

from hbl import numerics as nu
from hbl.model import BrownianConfig


@pytest.fixture(autouse=True)
def default_precision():
    """Every test starts from the library default precision."""
    nu.set_precision(nu.DEFAULT_PRECISION_BITS)
    yield
    nu.set_precision(nu.DEFAULT_PRECISION_BITS)


@pytest.fixture(scope="session")
def large_sep_config():
    """Large separation: a = (1, -1), b = (0.7, -0.7), T = 1."""
    return BrownianConfig("1", "-1", "0.7", "-0.7")


@pytest.fixture(scope="session")
def small_sep_config():
    """Small separation: a = (0.4, -0.4), b = (0.3, -0.3), T = 1."""
    return BrownianConfig("0.4", "-0.4", "0.3", "-0.3")


@pytest.fixture(scope="session")
def critical_config():
    """Critical separation: a = (1, -1), b = (0.5, -0.5), T = 1."""
    return BrownianConfig("1", "-1", "0.5", "-0.5")


@pytest.fixture(scope="session")
def asym_critical():
    """Asymmetric critical configuration: b2 tuned so that
    (a1-a2)(b1-b2) = (sqrt p1 + sqrt p2)^2 exactly at T = 1."""
    p1 = mpf("0.36")
    p2 = 1 - p1
    a1, a2, b1 = mpf("1.3"), mpf("-0.9"), mpf("0.8")
    b2 = b1 - (mp.sqrt(p1) + mp.sqrt(p2)) ** 2 / (a1 - a2)
    return BrownianConfig(a1, a2, b1, b2, p1, p2)


@pytest.fixture(scope="session")
def hml_solution():
    """One Hastings-McLeod solve shared by every consumer test."""
    from hbl.painleve import solve_hastings_mcleod

    with mp.workprec(nu.DEFAULT_PRECISION_BITS):
        return solve_hastings_mcleod()


def mpf_to_fraction(x) -> Fraction:
    """Exact rational value of an mpf (test oracle helper)."""
    num, den = mpmath.libmp.to_rational(x._mpf_)
    return Fraction(int(num), int(den))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Re-print the acceptance criterion lines after every run."""
    try:
        from test_acceptance import REPORT_LINES
    except ImportError:
        return
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(REPORT_LINES):
            terminalreporter.write_line(line)
