import pytest
from mpmath import mp

from noble.bounds import set_precision
from noble.integrals import build_I_table, required_points
from noble.walks import build_nbw_table, build_srw_table

set_precision(40)

# extra points so the monotonicity suite has enough comparable pairs
_MONO_POINTS = [
    (), (1,), (1, 1), (2,), (1, 1, 1), (2, 1), (3,),
    (1, 1, 1, 1), (2, 1, 1), (2, 2), (3, 1), (4,),
]


@pytest.fixture(scope="session")
def table_d9():
    pts = required_points(_MONO_POINTS, 9)
    return build_I_table(9, 4, 10, pts, width_target=mp.mpf(10) ** -13)


@pytest.fixture(scope="session")
def table_d11():
    pts = required_points(_MONO_POINTS, 11)
    return build_I_table(11, 4, 14, pts, width_target=mp.mpf(10) ** -17)


@pytest.fixture(scope="session")
def srw_big_d9():
    return build_srw_table(9, 32)


@pytest.fixture(scope="session")
def srw_big_d11():
    return build_srw_table(11, 18)


@pytest.fixture(scope="session")
def srw_d2():
    return build_srw_table(2, 8)


@pytest.fixture(scope="session")
def srw_d3():
    return build_srw_table(3, 8)


@pytest.fixture(scope="session")
def nbw_d2():
    return build_nbw_table(2, 8)
