"""Shared fixtures: builtin setups and their solved scent fields.

Field solves are session-scoped because they are by far the most expensive
setup step and every field is immutable once solved.
"""

import pytest

from schoolsim.experiment import builtin_config
from schoolsim.scent import solve_field

BUILTIN_NAMES = ("config1-left", "config1-right", "config2", "config3")


@pytest.fixture(scope="session")
def config1_left():
    return builtin_config("config1-left")


@pytest.fixture(scope="session")
def config2():
    return builtin_config("config2")


@pytest.fixture(scope="session")
def config3():
    return builtin_config("config3")


@pytest.fixture(scope="session")
def field_config1_left(config1_left):
    return solve_field(config1_left.arena, config1_left.food)


@pytest.fixture(scope="session")
def field_config2(config2):
    return solve_field(config2.arena, config2.food)


@pytest.fixture(scope="session")
def field_config3(config3):
    return solve_field(config3.arena, config3.food)


@pytest.fixture(scope="session")
def all_fields(config1_left, config2, config3,
               field_config1_left, field_config2, field_config3):
    """(name, trial, field) for every builtin pairing."""
    right = builtin_config("config1-right")
    return [
        ("config1-left", config1_left, field_config1_left),
        ("config1-right", right, solve_field(right.arena, right.food)),
        ("config2", config2, field_config2),
        ("config3", config3, field_config3),
    ]
