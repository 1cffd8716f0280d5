"""Frame-error-rate simulation of the full code/labelling/decoder chain.

Frames are processed in fixed-size chunks whose random streams depend only on
the chunk index, so results are bit-identical for any degree of parallelism;
the stop rule (error-event quota or frame cap) is applied chunk by chunk in
order and later chunks are discarded.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .channel import (STREAM_CHANNEL, STREAM_DATA, STREAM_NOISE, NoiseSpec,
                      complex_normal, n0_from_snr_db, stream_rng)
from .mapping import SetPartitionMap
from .polar import MlpcmCode, mlpcm_encode
from .stbc import Codebook, tv_phase_block

_CHUNK_FRAMES = 128
_CHUNK_ELEMS = 2_000_000


@dataclass(frozen=True)
class FerResult:
    fer: float
    errors: int
    frames: int
    level_errors: tuple   # frame-error counts attributed per level


def simulate_fer(cb: Codebook, spm: SetPartitionMap, code: MlpcmCode,
                 snr_db: float, max_frames: int, seed: int,
                 min_error_events: int = 100, nr: Optional[int] = None,
                 genie: bool = False, exact: bool = True,
                 threads: int = 1) -> FerResult:
    """Simulate frames until the error quota or the frame cap is reached.

    One channel realization per frame (quasi-static). ``genie`` feeds each
    level the true upper decisions (for diagnostics); ``nr`` defaults to a
    square antenna configuration.
    """
    if max_frames < 1:
        raise ValueError(f"frame cap must be >= 1, got {max_frames}")
    spec = cb.spec
    nr = spec.nt if nr is None else nr
    noise = NoiseSpec(n0_from_snr_db(snr_db, spec.l))
    errors = 0
    frames = 0
    level_errors = np.zeros(code.b, dtype=np.int64)

    def run_chunk(c: int):
        lo = c * _CHUNK_FRAMES
        size = min(_CHUNK_FRAMES, max_frames - lo)
        return _simulate_chunk(cb, spm, code, noise, seed, c, lo, size, nr,
                               genie, exact)

    n_chunks = (max_frames + _CHUNK_FRAMES - 1) // _CHUNK_FRAMES
    c = 0
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        while c < n_chunks:
            wave = list(range(c, min(c + max(1, threads), n_chunks)))
            for fut in [pool.submit(run_chunk, w) for w in wave]:
                errs, cnt, lev = fut.result()
                errors += errs
                frames += cnt
                level_errors += lev
                c += 1
                if errors >= min_error_events or frames >= max_frames:
                    break
            else:
                continue
            break
    return FerResult(fer=errors / frames if frames else 0.0,
                     errors=int(errors), frames=int(frames),
                     level_errors=tuple(int(v) for v in level_errors))


def _simulate_chunk(cb: Codebook, spm: SetPartitionMap, code: MlpcmCode,
                    noise: NoiseSpec, seed: int, chunk_id: int,
                    frame_lo: int, n_frames: int, nr: int, genie: bool,
                    exact: bool):
    spec = cb.spec
    n, b = code.n, code.b
    m = cb.size
    d = spec.l * nr
    perm = np.asarray(spm.perm, dtype=np.int64)
    h = complex_normal(stream_rng(seed, STREAM_CHANNEL | chunk_id),
                       (n_frames, spec.nt, nr), 1.0)
    w = complex_normal(stream_rng(seed, STREAM_NOISE | chunk_id),
                       (n_frames, n, d), noise.n0)
    data = stream_rng(seed, STREAM_DATA | chunk_id).integers(
        0, 2, size=(n_frames, code.k)).astype(np.uint8)
    labels = np.empty((n_frames, n), dtype=np.int64)
    for f in range(n_frames):
        labels[f] = mlpcm_encode(code, data[f])
    idx = perm[labels]
    if spec.tv:
        met = _tv_metrics(cb, h, idx, w, noise.n0, seed, frame_lo)
    else:
        sh = np.matmul(cb.matrices[None], h[:, None]).reshape(n_frames, m, d)
        y = np.take_along_axis(sh, idx[:, :, None], axis=1) + w
        es = np.einsum("cmd,cmd->cm", sh.real, sh.real) + \
            np.einsum("cmd,cmd->cm", sh.imag, sh.imag)
        ey = np.einsum("cnd,cnd->cn", y.real, y.real) + \
            np.einsum("cnd,cnd->cn", y.imag, y.imag)
        g = np.matmul(y, sh.conj().transpose(0, 2, 1))
        met = -(ey[:, :, None] + es[:, None, :] - 2.0 * g.real) / noise.n0
    met_lab = np.ascontiguousarray(
        met[:, :, perm].reshape(n_frames * n, m))

    frozen = np.ones((b, n), dtype=np.uint8)
    vals = np.zeros(n, dtype=np.uint8)
    for lev in range(b):
        frozen[lev, list(code.info_sets[lev])] = 0
    prefixes = np.zeros(n_frames * n, dtype=np.int64)
    ok = np.ones(n_frames, dtype=bool)
    lev_err = np.zeros(b, dtype=np.int64)
    pos = 0
    for lev in range(1, b + 1):
        if genie:
            prefixes = (labels >> (b - lev + 1)).reshape(-1).astype(np.int64)
        llr = kernels.subset_llrs(met_lab, prefixes, lev, b).reshape(
            n_frames, n)
        info = list(code.info_sets[lev - 1])
        k_lev = len(info)
        x_hat = np.empty((n_frames, n), dtype=np.uint8)
        for f in range(n_frames):
            u_hat = kernels.sc_decode(llr[f], frozen[lev - 1], vals, exact)
            x_hat[f] = kernels.polar_transform(u_hat)
            if k_lev and not np.array_equal(u_hat[info],
                                            data[f, pos:pos + k_lev]):
                lev_err[lev - 1] += 1
                ok[f] = False
        pos += k_lev
        if not genie:
            prefixes = ((prefixes.reshape(n_frames, n) << 1)
                        | x_hat).reshape(-1)
    return int((~ok).sum()), n_frames, lev_err


def _tv_metrics(cb: Codebook, h: np.ndarray, idx: np.ndarray, w: np.ndarray,
                n0: float, seed: int, frame_lo: int) -> np.ndarray:
    """Per-symbol effective-channel metrics for time-varying codebooks."""
    spec = cb.spec
    n_frames, n = idx.shape
    m = cb.size
    nr = h.shape[-1]
    phases = tv_phase_block(spec.nt, seed, frame_lo * n,
                            n_frames * n).reshape(n_frames, n, spec.nt)
    he = np.exp(1j * phases)[..., None] * h[:, None, :, :]
    flat_he = he.reshape(n_frames * n, spec.nt, nr)
    mats = cb.matrices.reshape(m, spec.nt)
    flat_idx = idx.reshape(-1)
    flat_w = w.reshape(n_frames * n, -1)
    met = np.empty((n_frames * n, m))
    sub = max(64, _CHUNK_ELEMS // (m * nr))
    for lo in range(0, flat_he.shape[0], sub):
        hi = min(lo + sub, flat_he.shape[0])
        se = np.einsum("mt,ktn->kmn", mats, flat_he[lo:hi],
                       optimize=True).reshape(hi - lo, m, -1)
        y = se[np.arange(hi - lo), flat_idx[lo:hi]] + flat_w[lo:hi]
        es = np.einsum("kmd,kmd->km", se.real, se.real) + \
            np.einsum("kmd,kmd->km", se.imag, se.imag)
        ey = np.einsum("kd,kd->k", y.real, y.real) + \
            np.einsum("kd,kd->k", y.imag, y.imag)
        g = np.matmul(se.conj(), y[:, :, None])[:, :, 0]
        met[lo:hi] = -(ey[:, None] + es - 2.0 * g.real) / n0
    return met.reshape(n_frames, n, m)
