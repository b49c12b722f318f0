import pytest

from qlab import quantale as qq
from qlab import suplat as sl
from qlab.hilbmod import duality_module, regular_module, validate_hilbert, QModule

DIAMOND_SWAP = (3, 2, 1, 0)


@pytest.fixture(scope="session")
def two():
    return qq.two()


@pytest.fixture(scope="session")
def chain3():
    return qq.chain3_frame()


@pytest.fixture(scope="session")
def mat2():
    return qq.matrix_quantale(qq.two(), 2)


@pytest.fixture(scope="session")
def M2(mat2):
    return mat2[0]


@pytest.fixture(scope="session")
def diamond_mod():
    """diamond over 2 with <m,n> = 0 iff n <= d(m), d swapping the atoms."""
    return duality_module(qq.two(), sl.diamond(), DIAMOND_SWAP)


@pytest.fixture(scope="session")
def degenerate():
    """3-chain over 2, m <> 1 = m, <m,n> = 1 iff m, n nonzero."""
    A = qq.two()
    mod = QModule(A, sl.chain3(), [[0, 0], [0, 1], [0, 2]], "right")
    return validate_hilbert(mod, [[0, 0, 0], [0, 1, 1], [0, 1, 1]])


@pytest.fixture(scope="session")
def two_mod():
    return regular_module(qq.two())
