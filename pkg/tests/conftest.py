import pytest

from anthobs import ParameterSet, SpatialParameterSet


@pytest.fixture(scope="session")
def p():
    """Reference parameter set (study defaults)."""
    return ParameterSet()


@pytest.fixture(scope="session")
def sp(p):
    return SpatialParameterSet(base=p)
