"""Shared fixtures: the three bundled example systems."""

from pathlib import Path

import pytest

from modesplit import load_system

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def sys_a():
    return load_system((FIXTURES / "sys_a.json").read_text())


@pytest.fixture(scope="session")
def sys_b():
    return load_system((FIXTURES / "sys_b.json").read_text())


@pytest.fixture(scope="session")
def sys_c():
    return load_system((FIXTURES / "sys_c.json").read_text())


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES
