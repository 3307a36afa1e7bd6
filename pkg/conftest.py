"""
Shared pytest fixtures: small solved states and an isolated run ledger
"""
import pytest

from database import Database
from pipeline import RunManager
from solver import TruncationSpec, solve_jets
from storage import StateStore
from wave import solve_phi


def solved_state(**values):
    state = solve_jets(TruncationSpec.build(**values))
    state.wave = solve_phi(state)
    return state


@pytest.fixture(scope="session")
def kdv_state():
    """r = 2 with T1..T4 to degree 4, strata up to genus 1"""
    return solved_state(r=2, times=4, degree=4, genus_max=1)


@pytest.fixture(scope="session")
def r3_state():
    """r = 3 with T1..T4 to degree 3, strata up to genus 1"""
    return solved_state(r=3, times=4, degree=3, genus_max=1)


@pytest.fixture
def ledger(tmp_path):
    database = Database(f"sqlite:///{tmp_path / 'runs.db'}")
    database.create_tables()
    return database


@pytest.fixture
def manager(ledger, tmp_path):
    return RunManager(database=ledger, store=StateStore(tmp_path))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: solves a wide truncation (deselect with -m 'not slow')")
