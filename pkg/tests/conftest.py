import numpy as np
import pytest

from eqindex import corpus


@pytest.fixture(scope="session")
def games():
    return corpus()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_game(rng, shape, integer=False):
    """Random game with i.i.d. payoffs; integer payoffs in [-5, 5] if asked."""
    from eqindex import Game

    size = (len(shape),) + tuple(shape)
    if integer:
        pay = rng.integers(-5, 6, size=size).astype(float)
    else:
        pay = rng.normal(size=size)
    return Game.from_array(pay, name="random")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for k, m in sys.modules.items() if k.endswith("test_acceptance") and hasattr(m, "summary_lines")), None)
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
