"""Polar component codes and the multilevel encode / multistage decode chain.

Each address-bit level of the labelled codebook carries one binary polar code
of length N; levels are decoded in order, each decision re-encoded and fed to
the next level's demapper. Information sets come from a simulation-based
first-error ranking (genie-corrected priors) or from the outage rate rule
combined with the per-level ranking order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .channel import (STREAM_CHANNEL, STREAM_DATA, STREAM_NOISE, ChannelBatch,
                      NoiseSpec, complex_normal, n0_from_snr_db, stream_rng)
from .errors import NoFeasibleRatesError
from .infotheory import MiSamples, mi_samples, outage_capacity
from .mapping import SetPartitionMap
from .stbc import Codebook, tv_phase_block


def polar_transform(bits) -> np.ndarray:
    """Natural-order polar transform over GF(2); its own inverse."""
    return kernels.polar_transform(np.asarray(bits, dtype=np.uint8))


def sc_decode(llrs, frozen_mask, frozen_values, exact: bool = True):
    """Successive cancellation decoding.

    Returns (u_hat, x_hat): the message-domain estimate with frozen positions
    forced, and its re-encoded codeword.
    """
    u_hat = kernels.sc_decode(np.asarray(llrs, dtype=np.float64),
                              np.asarray(frozen_mask, dtype=np.uint8),
                              np.asarray(frozen_values, dtype=np.uint8),
                              exact)
    return u_hat, kernels.polar_transform(u_hat)


@dataclass(frozen=True)
class MlpcmCode:
    """Multilevel polar code: per-level information sets over N positions."""

    n: int
    b: int
    info_sets: tuple
    design_snr: float
    ranking_seed: int = 0
    ranking_trials: int = 0

    def __post_init__(self):
        if self.n & (self.n - 1):
            raise ValueError(f"block length must be a power of two, got {self.n}")
        if len(self.info_sets) != self.b:
            raise ValueError("need one information set per level")
        for s in self.info_sets:
            if any(not 0 <= i < self.n for i in s):
                raise ValueError("information set index out of range")

    @property
    def k(self) -> int:
        return sum(len(s) for s in self.info_sets)

    @property
    def rates(self) -> tuple:
        return tuple(len(s) / self.n for s in self.info_sets)

    @property
    def r_tot(self) -> float:
        return self.k / (self.n * self.b)


@dataclass(frozen=True)
class BitChannelRanking:
    """First-error-event counts per (level, bit-channel)."""

    error_counts: np.ndarray = field(repr=False)   # (B, N) int64
    trials: int
    snr: float
    seed: int


def rank_bit_channels(spm: SetPartitionMap, cb: Codebook, code_shape,
                      snr: float, trials: int, seed: int,
                      genie: bool = True, nr: Optional[int] = None,
                      first_error_only: bool = False) -> BitChannelRanking:
    """Simulate error events per bit-channel across all levels.

    Every trial sends one random rate-1 multilevel codeword over a fresh
    channel realization and runs the full demap chain. With ``genie`` (the
    default) every prior (upper levels and within-level prefixes) is forced
    correct, so each count reflects that bit-channel alone; otherwise raw
    decisions propagate. ``nr`` defaults to a square antenna configuration.

    By default every genie-corrected error increments its bit-channel, which
    keeps good channels measurable on levels that also contain terrible ones.
    ``first_error_only`` restricts each (trial, level) to the first erroneous
    position; that variant is only informative when per-level error rates are
    small, because earlier bad channels shadow everything behind them.
    """
    n, b = code_shape
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if (1 << b) != cb.size or n & (n - 1):
        raise ValueError("code shape is incompatible with the codebook")
    spec = cb.spec
    nr = spec.nt if nr is None else nr
    noise = NoiseSpec(n0_from_snr_db(snr, spec.l))
    counts = np.zeros((b, n), dtype=np.int64)
    perm = np.asarray(spm.perm, dtype=np.int64)
    no_frozen = np.zeros(n, dtype=np.uint8)
    block = max(1, 8192 // n)
    for t0 in range(0, trials, block):
        nt_blk = min(block, trials - t0)
        cid = t0 // block
        h = complex_normal(stream_rng(seed, STREAM_CHANNEL | cid),
                           (nt_blk, spec.nt, nr), 1.0)
        u = stream_rng(seed, STREAM_DATA | cid).integers(
            0, 2, size=(nt_blk, b, n)).astype(np.uint8)
        w = complex_normal(stream_rng(seed, STREAM_NOISE | cid),
                           (nt_blk, n, spec.l * nr), noise.n0)
        x = np.empty_like(u)
        for t in range(nt_blk):
            for lev in range(b):
                x[t, lev] = kernels.polar_transform(u[t, lev])
        labels = np.zeros((nt_blk, n), dtype=np.int64)
        for lev in range(b):
            labels = (labels << 1) | x[:, lev, :]
        met_lab = _block_metrics_lab(cb, perm, labels, h, w, noise.n0,
                                     tv_seed=seed if spec.tv else None,
                                     symbol_offset=t0 * n)
        prefixes = np.zeros(nt_blk * n, dtype=np.int64)
        for lev in range(1, b + 1):
            llr = kernels.subset_llrs(met_lab, prefixes, lev, b).reshape(
                nt_blk, n)
            if genie:
                next_x = x[:, lev - 1, :]
                for t in range(nt_blk):
                    errs = kernels.sc_genie_errors(llr[t], u[t, lev - 1])
                    if first_error_only:
                        nz = np.nonzero(errs)[0]
                        if nz.size:
                            counts[lev - 1, nz[0]] += 1
                    else:
                        counts[lev - 1] += errs
            else:
                next_x = np.empty((nt_blk, n), dtype=np.uint8)
                for t in range(nt_blk):
                    u_hat = kernels.sc_decode(llr[t], no_frozen, no_frozen)
                    next_x[t] = kernels.polar_transform(u_hat)
                    errs = (u_hat != u[t, lev - 1]).astype(np.uint8)
                    if first_error_only:
                        nz = np.nonzero(errs)[0]
                        if nz.size:
                            counts[lev - 1, nz[0]] += 1
                    else:
                        counts[lev - 1] += errs
            prefixes = ((prefixes.reshape(nt_blk, n) << 1)
                        | next_x).reshape(-1)
    return BitChannelRanking(error_counts=counts, trials=trials, snr=snr,
                             seed=seed)


def _pack_labels(x_levels: np.ndarray) -> np.ndarray:
    """Pack per-level codewords (B, N) into per-symbol labels, level 1 first."""
    b, n = x_levels.shape
    labels = np.zeros(n, dtype=np.int64)
    for lev in range(b):
        labels = (labels << 1) | x_levels[lev]
    return labels


def _block_metrics_lab(cb: Codebook, perm: np.ndarray, labels: np.ndarray,
                       h: np.ndarray, w: np.ndarray, n0: float,
                       tv_seed: Optional[int], symbol_offset: int
                       ) -> np.ndarray:
    """Label-ordered metric rows for a block of frames.

    ``labels`` is (T, N), ``h`` is (T, nt, nr), ``w`` is (T, N, D); frames in
    the block occupy consecutive phase slots starting at ``symbol_offset``.
    """
    t_blk, n = labels.shape
    m = cb.size
    idx = perm[labels]
    if tv_seed is None:
        sh = np.matmul(cb.matrices[None], h[:, None]).reshape(t_blk, m, -1)
        y = np.take_along_axis(sh, idx[:, :, None], axis=1) + w
        es = np.einsum("tmd,tmd->tm", sh.real, sh.real) + \
            np.einsum("tmd,tmd->tm", sh.imag, sh.imag)
        ey = np.einsum("tnd,tnd->tn", y.real, y.real) + \
            np.einsum("tnd,tnd->tn", y.imag, y.imag)
        g = np.matmul(y, sh.conj().transpose(0, 2, 1))
        met = -(ey[:, :, None] + es[:, None, :] - 2.0 * g.real) / n0
    else:
        if cb.spec.l != 1:
            raise ValueError("time-varying wrapper is supported for "
                             "single-slot codes only")
        nr = h.shape[-1]
        phases = tv_phase_block(cb.spec.nt, tv_seed, symbol_offset,
                                t_blk * n).reshape(t_blk, n, cb.spec.nt)
        he = np.exp(1j * phases)[..., None] * h[:, None, :, :]
        flat_he = he.reshape(t_blk * n, cb.spec.nt, nr)
        se = np.einsum("mt,ktn->kmn", cb.matrices.reshape(m, cb.spec.nt),
                       flat_he, optimize=True).reshape(t_blk * n, m, -1)
        y = se[np.arange(t_blk * n), idx.reshape(-1)] + w.reshape(t_blk * n, -1)
        met = _metrics_rows_per_symbol(y, se, n0).reshape(t_blk, n, m)
    return np.ascontiguousarray(met[:, :, perm].reshape(t_blk * n, m))


def _metrics_rows(y: np.ndarray, sh_flat: np.ndarray, n0: float) -> np.ndarray:
    ey = np.einsum("nd,nd->n", y.real, y.real) + \
        np.einsum("nd,nd->n", y.imag, y.imag)
    es = np.einsum("md,md->m", sh_flat.real, sh_flat.real) + \
        np.einsum("md,md->m", sh_flat.imag, sh_flat.imag)
    g = y @ sh_flat.conj().T
    return -(ey[:, None] + es[None, :] - 2.0 * g.real) / n0


def _metrics_rows_per_symbol(y: np.ndarray, se_flat: np.ndarray,
                             n0: float) -> np.ndarray:
    ey = np.einsum("nd,nd->n", y.real, y.real) + \
        np.einsum("nd,nd->n", y.imag, y.imag)
    es = np.einsum("nmd,nmd->nm", se_flat.real, se_flat.real) + \
        np.einsum("nmd,nmd->nm", se_flat.imag, se_flat.imag)
    g = np.matmul(se_flat.conj(), y[:, :, None])[:, :, 0]
    return -(ey[:, None] + es - 2.0 * g.real) / n0


def select_information_sets(rank: BitChannelRanking, k: int) -> MlpcmCode:
    """Pick the k globally most reliable bit-channels (made per-level sets).

    Ties break toward the lower level, then the lower index.
    """
    b, n = rank.error_counts.shape
    if not 0 <= k <= n * b:
        raise ValueError(f"k must be in [0, {n * b}], got {k}")
    order = sorted(((rank.error_counts[lev, i], lev, i)
                    for lev in range(b) for i in range(n)))
    chosen = order[:k]
    sets = [[] for _ in range(b)]
    for _, lev, i in chosen:
        sets[lev].append(i)
    return MlpcmCode(n=n, b=b,
                     info_sets=tuple(tuple(sorted(s)) for s in sets),
                     design_snr=rank.snr, ranking_seed=rank.seed,
                     ranking_trials=rank.trials)


def outage_rule_rates(spm: SetPartitionMap, cb: Codebook, r_tot: float,
                      batch: ChannelBatch, noise: NoiseSpec,
                      m: float = 1.05, mc: int = 256,
                      seed: Optional[int] = None) -> tuple:
    """Component code rates from the outage rule.

    Estimates per-level MI samples over the batch, starts the level outage
    threshold at the joint outage of the target rate, and scales it
    geometrically until the level outage capacities add up to the target.
    """
    if not 0.0 < r_tot < 1.0:
        raise ValueError(f"total rate must be in (0, 1), got {r_tot}")
    if m <= 1.0:
        raise ValueError(f"scale factor must exceed 1, got {m}")
    seed = batch.seed if seed is None else seed
    samples = mi_samples(spm, cb, noise, batch, mc, seed)
    return outage_rule_rates_from_samples(samples, cb.b, r_tot, m)


def outage_rule_rates_from_samples(samples: MiSamples, b: int, r_tot: float,
                                   m: float = 1.05) -> tuple:
    target = r_tot * b
    count = samples.total.shape[0]
    eps = float(np.mean(samples.total < target))
    if eps <= 0.0:
        eps = 1.0 / count
    while True:
        caps = [outage_capacity(samples.values[:, lev], min(eps, 1 - 1e-12))
                for lev in range(b)]
        if sum(caps) >= target:
            return tuple(caps)
        eps *= m
        if eps >= 1.0:
            raise NoFeasibleRatesError(
                f"level capacities never reached {target} bits "
                f"(last sum {sum(caps):.4f})")


def code_from_rates(rates: Sequence[float], rank: BitChannelRanking,
                    k_total: int) -> MlpcmCode:
    """Build a code with given per-level rates, positions from the ranking.

    Per-level sizes are floor(rate * N) with the residual distributed to the
    largest fractional parts (or removed from the smallest when the floors
    overshoot); positions are each level's most reliable bit-channels.
    """
    b, n = rank.error_counts.shape
    if len(rates) != b:
        raise ValueError(f"need {b} rates, got {len(rates)}")
    raw = np.array([min(max(r, 0.0), 1.0) * n for r in rates])
    sizes = np.floor(raw).astype(int)
    frac = raw - sizes
    excess = int(sizes.sum()) - k_total
    order = np.argsort(frac)   # ascending fractional part
    if excess < 0:
        for lev in order[::-1]:
            if excess == 0:
                break
            if sizes[lev] < n:
                sizes[lev] += 1
                excess += 1
    elif excess > 0:
        for lev in order:
            if excess == 0:
                break
            if sizes[lev] > 0:
                sizes[lev] -= 1
                excess -= 1
    if excess != 0:
        raise ValueError(f"cannot allocate {k_total} bits over {b}x{n}")
    sets = []
    for lev in range(b):
        idx = sorted(range(n),
                     key=lambda i: (rank.error_counts[lev, i], i))[:sizes[lev]]
        sets.append(tuple(sorted(idx)))
    return MlpcmCode(n=n, b=b, info_sets=tuple(sets), design_snr=rank.snr,
                     ranking_seed=rank.seed, ranking_trials=rank.trials)


def uniform_rate_code(rank: BitChannelRanking, k_total: int) -> MlpcmCode:
    """Equal-rate allocation (the equal-error-rate baseline)."""
    b, n = rank.error_counts.shape
    if k_total % b:
        raise ValueError(f"{k_total} bits do not split evenly over {b} levels")
    return code_from_rates([k_total / (b * n)] * b, rank, k_total)


def mlpcm_encode(code: MlpcmCode, data) -> np.ndarray:
    """Encode K data bits into N per-symbol labels (level 1 at the MSB)."""
    data = np.asarray(data, dtype=np.uint8)
    if data.size != code.k:
        raise ValueError(f"expected {code.k} data bits, got {data.size}")
    labels = np.zeros(code.n, dtype=np.int64)
    pos = 0
    for lev in range(code.b):
        info = code.info_sets[lev]
        u = np.zeros(code.n, dtype=np.uint8)
        if info:
            u[list(info)] = data[pos:pos + len(info)]
            pos += len(info)
        x = kernels.polar_transform(u)
        labels = (labels << 1) | x
    return labels


def msd_decode(code: MlpcmCode, spm: SetPartitionMap, cb: Codebook, y_seq,
               h, noise: NoiseSpec, tv_seed: Optional[int] = None,
               symbol_offset: int = 0, exact: bool = True) -> np.ndarray:
    """Multistage decoding of one frame; returns the K message bits.

    Level decisions are re-encoded and narrow the demapper's subsets for the
    next level. For time-varying codebooks, ``tv_seed``/``symbol_offset``
    address the shared phase sequence.
    """
    if cb.spec.tv and tv_seed is None:
        raise ValueError("time-varying codebook needs tv_seed")
    if not cb.spec.tv and tv_seed is not None:
        raise ValueError("tv_seed given for a non-time-varying codebook")
    y = np.asarray(y_seq)
    n = y.shape[0]
    if n != code.n:
        raise ValueError(f"expected {code.n} received blocks, got {n}")
    met_lab = _received_metrics_lab(cb, spm, y, np.asarray(h), noise.n0,
                                    tv_seed, symbol_offset)
    bits, _ = _msd_from_metrics(code, met_lab, exact)
    return bits


def _received_metrics_lab(cb: Codebook, spm: SetPartitionMap, y: np.ndarray,
                          h: np.ndarray, n0: float, tv_seed, symbol_offset):
    n = y.shape[0]
    if tv_seed is None:
        flat = np.matmul(cb.matrices, h).reshape(cb.size, -1)
        met = _metrics_rows(y.reshape(n, -1), flat, n0)
    else:
        if cb.spec.l != 1:
            raise ValueError("time-varying wrapper is supported for "
                             "single-slot codes only")
        phases = tv_phase_block(cb.spec.nt, tv_seed, symbol_offset, n)
        he = np.exp(1j * phases)[:, :, None] * h[None, :, :]
        se = np.einsum("mt,ntr->nmr", cb.matrices.reshape(cb.size, -1), he,
                       optimize=True).reshape(n, cb.size, -1)
        met = _metrics_rows_per_symbol(y.reshape(n, -1), se, n0)
    return np.ascontiguousarray(met[:, np.asarray(spm.perm)])


def _msd_from_metrics(code: MlpcmCode, met_lab: np.ndarray,
                      exact: bool = True, genie_labels=None):
    """Sequential level decoding from label-ordered metrics.

    Returns (message bits, decoded labels). With ``genie_labels`` the prefix
    fed to each level comes from the true labels instead of prior decisions.
    """
    n = met_lab.shape[0]
    b = code.b
    prefixes = np.zeros(n, dtype=np.int64)
    out = []
    frozen = np.ones((b, code.n), dtype=np.uint8)
    vals = np.zeros((b, code.n), dtype=np.uint8)
    for lev in range(b):
        frozen[lev, list(code.info_sets[lev])] = 0
    for lev in range(1, b + 1):
        if genie_labels is not None:
            prefixes = (genie_labels >> (b - lev + 1)).astype(np.int64)
        llr = kernels.subset_llrs(met_lab, prefixes, lev, b)
        u_hat = kernels.sc_decode(llr, frozen[lev - 1], vals[lev - 1], exact)
        x_hat = kernels.polar_transform(u_hat)
        out.append(u_hat[list(code.info_sets[lev - 1])])
        if genie_labels is None:
            prefixes = (prefixes << 1) | x_hat
    labels_hat = None
    if genie_labels is None:
        labels_hat = prefixes
    return (np.concatenate(out) if out else np.zeros(0, dtype=np.uint8),
            labels_hat)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def code_to_dict(code: MlpcmCode) -> dict:
    return {"n": code.n, "b": code.b,
            "info_sets": [list(s) for s in code.info_sets],
            "design_snr": code.design_snr,
            "ranking_seed": code.ranking_seed,
            "ranking_trials": code.ranking_trials}


def code_from_dict(d: dict) -> MlpcmCode:
    return MlpcmCode(n=int(d["n"]), b=int(d["b"]),
                     info_sets=tuple(tuple(sorted(s)) for s in d["info_sets"]),
                     design_snr=float(d.get("design_snr", 0.0)),
                     ranking_seed=int(d.get("ranking_seed", 0)),
                     ranking_trials=int(d.get("ranking_trials", 0)))


def code_to_json(code: MlpcmCode) -> str:
    return json.dumps(code_to_dict(code), indent=2, sort_keys=True)


def code_from_json(text: str) -> MlpcmCode:
    return code_from_dict(json.loads(text))
