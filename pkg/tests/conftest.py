"""Shared fixtures: expensive ladders and Hecke runs are built once per session."""

from __future__ import annotations

import pytest

from acceptance_log import RESULTS
from strategies import diag
from tempered_spine.equivariant import CoefficientModule
from tempered_spine.hecke import hecke_pair, run_hecke
from tempered_spine.tempered import critical_temperaments



@pytest.fixture(scope="session")
def trivial2():
    return CoefficientModule(2)


@pytest.fixture(scope="session")
def sym10():
    return CoefficientModule.parse("sym:10", 2)


@pytest.fixture(scope="session")
def ladder_2():
    """n=2, a=diag(1,2), with flag contexts so boundary targets work."""
    return critical_temperaments(2, diag(1, 2), boundary=True)


@pytest.fixture(scope="session")
def ladder_3():
    return critical_temperaments(2, diag(1, 3), boundary=True)


@pytest.fixture(scope="session")
def run_t2_trivial(ladder_2, trivial2):
    return run_hecke(hecke_pair(2, ladder_2.a), ladder_2, trivial2, ("interior", "boundary"))


@pytest.fixture(scope="session")
def run_t2_sym10(ladder_2, sym10):
    return run_hecke(hecke_pair(2, ladder_2.a), ladder_2, sym10, ("interior", "boundary"))


@pytest.fixture(scope="session")
def run_t3_sym10(ladder_3, sym10):
    return run_hecke(hecke_pair(2, ladder_3.a), ladder_3, sym10, ("interior", "boundary"))


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
