import pytest

import support


@pytest.fixture(scope="session")
def onesided_corpus():
    """200 generated unsatisfiable CNFs (short clauses only) with width <= 3 primal decompositions."""
    return support.generate(support.onesided_recipes(200))


@pytest.fixture(scope="session")
def longclause_corpus():
    """200 generated instances with one or two long clauses, k <= 3, at most 12 variables."""
    return support.generate(support.longclause_recipes(200))


@pytest.fixture
def say(capsys):
    """Print a line straight to the terminal, bypassing capture."""
    def emit(line):
        with capsys.disabled():
            print("\n" + line)
    return emit
