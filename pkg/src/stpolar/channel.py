"""Complex MIMO channel, noise, and phase sampling with reproducible streams.

All randomness in the package flows through counter-based Philox streams keyed
by ``(seed, stream_id)``: distinct stream ids give statistically independent
draws without any coordination, so Monte-Carlo loops can be split across
workers in any order and still regenerate bit-identically.

Stream ids are composed from a purpose tag in the top byte plus a counter, so
channel, noise, data, and phase draws of the same experiment never collide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Recorded in every result manifest so outputs are regenerable.
RNG_METHOD = "philox4x64:ziggurat-normal"

_MASK64 = (1 << 64) - 1
_MASK56 = (1 << 56) - 1

# Purpose tags for composed stream ids (top byte of the 64-bit stream id).
STREAM_CHANNEL = 1 << 56
STREAM_NOISE = 2 << 56
STREAM_DATA = 3 << 56
STREAM_PHASE = 4 << 56
STREAM_MC = 5 << 56
STREAM_OPT = 6 << 56


def stream_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Generator for the (seed, stream_id) stream.

    Philox is counter based, so generators for distinct stream ids are
    independent and creation is cheap.
    """
    key = np.array([seed & _MASK64, stream_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over uint64 arrays."""
    z = (x + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(_MASK64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def counter_uniform(seed: int, stream_id: int, index: np.ndarray) -> np.ndarray:
    """Uniform(0,1) numbers addressed by absolute counter index.

    Evaluating position ``i`` costs the same no matter what was drawn before,
    which lets the transmitter and receiver regenerate per-symbol values
    independently.
    """
    idx = np.asarray(index, dtype=np.uint64)
    base = _mix64(np.array([seed & _MASK64], dtype=np.uint64))[0]
    base = base ^ np.uint64((stream_id & _MASK64))
    u = _mix64(idx ^ _mix64(np.full(idx.shape, base, dtype=np.uint64)))
    # 53-bit mantissa for a clean float64 uniform
    return (u >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class NoiseSpec:
    """Total complex noise variance per received sample (N0/2 per dimension)."""

    n0: float

    def __post_init__(self):
        if not (self.n0 > 0):
            raise ValueError(f"noise variance must be positive, got {self.n0}")


@dataclass(frozen=True)
class ChannelBatch:
    """A reproducible batch of i.i.d. CN(0, 1) channel matrices.

    ``matrices`` has shape (count, nt, nr); the batch regenerates
    bit-identically from (seed, stream_id, count).
    """

    nt: int
    nr: int
    count: int
    matrices: np.ndarray
    seed: int
    stream_id: int


def n0_from_snr_db(snr_db: float, l: int = 1) -> float:
    """Noise variance for an Es/N0 per receive antenna, in dB.

    Space-time symbols are normalized to unit mean Frobenius-squared energy
    spread over ``l`` channel uses, so SNR = 1 / (l * N0).
    """
    return 10.0 ** (-snr_db / 10.0) / l


def snr_db_from_n0(n0: float, l: int = 1) -> float:
    """Inverse of :func:`n0_from_snr_db`."""
    return -10.0 * np.log10(n0 * l)


def sample_channel_batch(nt: int, nr: int, count: int, seed: int,
                         stream_id: int = 0) -> ChannelBatch:
    """Draw ``count`` i.i.d. Rayleigh-fading channel matrices.

    Entries are circularly-symmetric complex Gaussian with unit variance
    (1/2 per real dimension). Deterministic in (seed, stream_id).
    """
    if nt < 1 or nr < 1 or count < 1:
        raise ValueError(
            f"dimensions must be >= 1, got nt={nt}, nr={nr}, count={count}")
    rng = stream_rng(seed, STREAM_CHANNEL | (stream_id & _MASK56))
    h = _complex_normal(rng, (count, nt, nr), 1.0)
    return ChannelBatch(nt=nt, nr=nr, count=count, matrices=h,
                        seed=seed, stream_id=stream_id)


def sample_noise(l: int, nr: int, noise: NoiseSpec, seed: int,
                 stream_id: int = 0) -> np.ndarray:
    """One L x Nr matrix of i.i.d. CN(0, n0) noise samples."""
    if l < 1 or nr < 1:
        raise ValueError(f"dimensions must be >= 1, got l={l}, nr={nr}")
    rng = stream_rng(seed, STREAM_NOISE | (stream_id & _MASK56))
    return _complex_normal(rng, (l, nr), noise.n0)


def _complex_normal(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """CN(0, variance) array; real parts drawn before imaginary parts."""
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * scale


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Public helper for internal simulation loops that manage their own rng."""
    return _complex_normal(rng, shape, variance)


def frobenius_sq(m) -> float:
    """Sum of squared magnitudes of all entries."""
    a = np.asarray(getattr(m, "matrix", m))
    return float(np.sum(a.real ** 2 + a.imag ** 2))
