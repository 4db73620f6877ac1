import pytest

from buyhold.payoff import parse_payoff

BUTTERFLY = "pos(x-90)-2*pos(x-100)+pos(x-110)"


@pytest.fixture(scope="session")
def call():
    return parse_payoff("pos(x-100)")


@pytest.fixture(scope="session")
def put():
    return parse_payoff("pos(100-x)")


@pytest.fixture(scope="session")
def digital():
    return parse_payoff("ind_gt(x,2)")


@pytest.fixture(scope="session")
def butterfly():
    return parse_payoff(BUTTERFLY)


@pytest.fixture(scope="session")
def concave_min():
    return parse_payoff("min(x,50)")
