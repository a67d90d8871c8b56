import numpy as np
import pytest
from hypothesis import settings

from hapsfl.channel import realize_channel
from hapsfl.optimizer.types import Problem
from hapsfl.scenario import generate_scenario
from hapsfl.verify import iteration_constant_for

settings.register_profile("repo", deadline=None, max_examples=40)
settings.load_profile("repo")


def make_problem(K=5, seed=0, round_index=0, **budgets):
    s = generate_scenario(K, seed=seed)
    P = Problem.build(s, realize_channel(s, round_index), iteration_constant_for(s))
    if budgets:
        P = P.with_budgets(**budgets)
    return P


@pytest.fixture
def problem():
    return make_problem()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
