import pytest

from padic_lift.services.graph import from_successors
from padic_lift.services.padic_core import IntPolynomial
from padic_lift.services.unramified import UnramifiedContext


def poly(*coefficients):
    """Integer polynomial from coefficients, constant term first."""
    return IntPolynomial(coefficients=coefficients)


@pytest.fixture
def swap_graph():
    return from_successors([1, 0])


@pytest.fixture
def example_graph():
    # F(0) = 1, F(1) = 0, F(2) = 1, F(3) = 3
    return from_successors([1, 0, 1, 3])


@pytest.fixture
def gf4():
    return UnramifiedContext.builtin(2, 2, precision=1)
