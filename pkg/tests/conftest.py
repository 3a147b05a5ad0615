import pytest

import agres


@pytest.fixture(scope="session")
def ifs14():
    return agres.make_ifs("1/4")


@pytest.fixture(scope="session")
def sol14(ifs14):
    return agres.solve_r(ifs14, 0.5)


@pytest.fixture(scope="session")
def ifs18():
    return agres.make_ifs("1/8")
