import numpy as np
import pytest

from stpolar.stbc import build_stbc, enumerate_codebook

RD_MATRIX_B = (
    complex(1 / np.sqrt(2)),
    (1 / np.sqrt(2)) * np.exp(1j * np.deg2rad(114.29)),
    complex(1 / np.sqrt(2)),
    -1j * (1 / np.sqrt(2)) * np.exp(1j * np.deg2rad(114.29)),
)

OP_MATRIX_B = (
    complex(0.314),
    complex(0.067, 0.381),
    complex(0.314),
    complex(-0.070, 0.384),
)

JD_MATRIX_B = (
    complex(0.765),
    complex(-0.265, 0.587),
    complex(0.765),
    complex(0.587, 0.265),
)


@pytest.fixture(scope="session")
def qpsk_point_cb():
    """Single-symbol QPSK codebook (B=2): the constellation itself."""
    return enumerate_codebook(build_stbc("matrix_c", (), "qpsk", nt=1))


@pytest.fixture(scope="session")
def qam16_point_cb():
    return enumerate_codebook(build_stbc("matrix_c", (), "qam16", nt=1))


@pytest.fixture(scope="session")
def alamouti_qpsk_cb():
    return enumerate_codebook(build_stbc("alamouti", (), "qpsk"))


@pytest.fixture(scope="session")
def alamouti_qam16_cb():
    return enumerate_codebook(build_stbc("alamouti", (), "qam16"))


@pytest.fixture(scope="session")
def matrix_b_rd_cb():
    return enumerate_codebook(build_stbc("matrix_b", RD_MATRIX_B, "qpsk"))


@pytest.fixture(scope="session")
def gc2_qpsk_cb():
    """Two-antenna vector-symbol code over QPSK (B=4)."""
    return enumerate_codebook(build_stbc("matrix_c", (), "qpsk", nt=2))


@pytest.fixture(scope="session")
def gc2_qpsk_tv_cb():
    return enumerate_codebook(build_stbc("matrix_c", (), "qpsk", tv=True, nt=2))


@pytest.fixture(scope="session")
def golden_qpsk_cb():
    return enumerate_codebook(build_stbc("matrix_a", (), "qpsk"))
