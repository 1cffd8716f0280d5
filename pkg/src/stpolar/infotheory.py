"""Information measures and outage machinery for space-time codebooks.

Monte-Carlo estimators (likelihood metrics, symbol-wise and level-wise mutual
information, outage probability and capacity) plus the deterministic side:
cutoff rate, Bhattacharyya coefficients (including the exact average over the
time-varying phase wrapper), and the closed-form pairwise-outage bound family
used as labelling measures: exact chi-squared form for single-slot codes,
gamma moment matching for multi-slot codes, and a log-normal fit for
time-varying single-slot codes.

All estimators are pure functions of (inputs, seed): randomness comes from
counter-based streams, so results are reproducible and independent of
evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .channel import (STREAM_MC, ChannelBatch, NoiseSpec, complex_normal,
                      frobenius_sq, stream_rng)
from .errors import DegenerateMomentsError
from .special import gammainc_lower_reg, phi_function
from .stbc import Codebook, DifferenceMatrix

_LN2 = math.log(2.0)

# samples-per-chunk target for metric tensors (keeps peak memory ~tens of MB)
_CHUNK_ELEMS = 2_000_000


# ---------------------------------------------------------------------------
# likelihood metrics
# ---------------------------------------------------------------------------

def log_likelihood(y, s, h, noise: NoiseSpec) -> float:
    """Exact log density of the received block given symbol and channel."""
    y = np.asarray(y)
    s = np.asarray(getattr(s, "matrix", s))
    h = np.asarray(h)
    l, nr = y.shape
    resid = frobenius_sq(y - s @ h)
    return -l * nr * math.log(math.pi * noise.n0) - resid / noise.n0


def _flat_products(matrices: np.ndarray, h: np.ndarray) -> np.ndarray:
    """(M, L*Nr) products S_i H for a shared channel."""
    sh = np.matmul(matrices, h)
    return sh.reshape(sh.shape[0], -1)


def _metrics_shared(y_flat: np.ndarray, sh_flat: np.ndarray,
                    n0: float) -> np.ndarray:
    """Metric rows -(||y - s h||^2)/n0 for samples sharing one channel.

    y_flat: (K, D); sh_flat: (M, D). Gram form keeps this one BLAS call.
    """
    ey = np.einsum("kd,kd->k", y_flat.real, y_flat.real) + \
        np.einsum("kd,kd->k", y_flat.imag, y_flat.imag)
    es = np.einsum("md,md->m", sh_flat.real, sh_flat.real) + \
        np.einsum("md,md->m", sh_flat.imag, sh_flat.imag)
    g = y_flat @ sh_flat.conj().T
    return -(ey[:, None] + es[None, :] - 2.0 * g.real) / n0


def _metrics_per_sample(y_flat: np.ndarray, se_flat: np.ndarray,
                        n0: float) -> np.ndarray:
    """Metric rows when every sample has its own codebook products.

    y_flat: (K, D); se_flat: (K, M, D).
    """
    ey = np.einsum("kd,kd->k", y_flat.real, y_flat.real) + \
        np.einsum("kd,kd->k", y_flat.imag, y_flat.imag)
    es = np.einsum("kmd,kmd->km", se_flat.real, se_flat.real) + \
        np.einsum("kmd,kmd->km", se_flat.imag, se_flat.imag)
    g = np.matmul(se_flat.conj(), y_flat[:, :, None])[:, :, 0]
    return -(ey[:, None] + es - 2.0 * g.real) / n0


def level_llr(y, h, spm, cb: Codebook, level: int, upper_bits,
              noise: NoiseSpec) -> float:
    """LLR of one address bit given decided upper bits, exact subset sums.

    Marginalizes uniformly over the undecided lower levels in the log domain.
    For time-varying codebooks pass the effective channel (phase wrapper
    folded into ``h``).
    """
    b_total = cb.b
    if not 1 <= level <= b_total:
        raise ValueError(f"level must be in [1, {b_total}], got {level}")
    upper_bits = list(upper_bits)
    if len(upper_bits) != level - 1:
        raise ValueError(
            f"expected {level - 1} upper bits, got {len(upper_bits)}")
    y = np.asarray(y)
    met = _metrics_shared(y.reshape(1, -1),
                          _flat_products(cb.matrices, np.asarray(h)),
                          noise.n0)[0]
    met_lab = met[np.asarray(spm.perm)]
    prefix = 0
    for bit in upper_bits:
        prefix = (prefix << 1) | int(bit)
    out = kernels.subset_llrs(met_lab[None, :], np.array([prefix]),
                              level, b_total)
    return float(out[0])


# ---------------------------------------------------------------------------
# Monte-Carlo mutual information
# ---------------------------------------------------------------------------

def _draw_metrics(cb: Codebook, h: np.ndarray, n0: float, mc: int,
                  rng: np.random.Generator):
    """Yield (labels, metrics) chunks for uniformly drawn symbols.

    Draw order per chunk is fixed (indices, noise, phases) so estimators that
    share a stream see identical randomness. Metrics are in natural codebook
    order.
    """
    m = cb.size
    spec = cb.spec
    d = spec.l * h.shape[-1]
    chunk = max(256, min(mc, _CHUNK_ELEMS // m))
    sh_flat = None if spec.tv else _flat_products(cb.matrices, h)
    done = 0
    while done < mc:
        k = min(chunk, mc - done)
        idx = rng.integers(0, m, size=k)
        w = complex_normal(rng, (k, d), n0)
        if spec.tv:
            theta = rng.uniform(0.0, 2.0 * np.pi, size=(k, spec.nt))
            he = np.exp(1j * theta)[:, :, None] * h[None, :, :]
            # matrices (M, Nt) x he (k, Nt, Nr) -> (k, M, Nr)
            se = np.einsum("mt,ktn->kmn", cb.matrices.reshape(m, spec.nt),
                           he, optimize=True)
            se_flat = se.reshape(k, m, -1)
            y = se_flat[np.arange(k), idx] + w
            met = _metrics_per_sample(y, se_flat, n0)
        else:
            y = sh_flat[idx] + w
            met = _metrics_shared(y, sh_flat, n0)
        yield idx, met
        done += k


def mutual_information(cb: Codebook, h, noise: NoiseSpec, mc: int,
                       seed: int) -> float:
    """Symbol-wise mutual information for one channel realization, in bits."""
    if mc < 1:
        raise ValueError(f"sample count must be >= 1, got {mc}")
    rng = stream_rng(seed, STREAM_MC)
    n0 = noise.n0
    h = np.asarray(h)
    b = cb.b
    acc = 0.0
    for idx, met in _draw_metrics(cb, h, n0, mc, rng):
        k = met.shape[0]
        mx = met.max(axis=1)
        lse = mx + np.log(np.exp(met - mx[:, None]).sum(axis=1))
        acc += float(np.sum((met[np.arange(k), idx] - lse) / _LN2 + b))
    return float(min(max(acc / mc, 0.0), b))


def levelwise_mi(spm, cb: Codebook, h, noise: NoiseSpec, mc: int,
                 seed: int) -> np.ndarray:
    """Per-level mutual information with genie-known upper bits, in bits.

    Shares its random stream with :func:`mutual_information`, and the level
    terms telescope, so the level sum reproduces the total estimate exactly.
    """
    total, levels = _levelwise_core(spm, cb, np.asarray(h), noise, mc,
                                    stream_rng(seed, STREAM_MC))
    return levels


def _levelwise_core(spm, cb: Codebook, h, noise: NoiseSpec, mc: int,
                    rng) -> tuple:
    if mc < 1:
        raise ValueError(f"sample count must be >= 1, got {mc}")
    b = cb.b
    perm = np.asarray(spm.perm, dtype=np.int64)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size, dtype=np.int64)
    tot_acc = 0.0
    lev_acc = np.zeros(b)
    for idx, met in _draw_metrics(cb, h, noise.n0, mc, rng):
        met_lab = np.ascontiguousarray(met[:, perm])
        labels = inv[idx]
        t, lv = kernels.mi_terms(met_lab, labels, b)
        tot_acc += float(t.sum())
        lev_acc += lv.sum(axis=0)
    total = min(max(tot_acc / mc, 0.0), b)
    levels = np.clip(lev_acc / mc, 0.0, 1.0)
    return total, levels


@dataclass(frozen=True)
class MiSamples:
    """Per-realization, per-level mutual information draws (bits)."""

    values: np.ndarray   # (count, B), each in [0, 1]
    total: np.ndarray    # (count,), each in [0, B]
    mc: int
    seed: int


def mi_samples(spm, cb: Codebook, noise: NoiseSpec, batch: ChannelBatch,
               mc: int, seed: int) -> MiSamples:
    """Level-wise MI rows for every channel realization in the batch."""
    if batch.count < 1:
        raise ValueError("channel batch is empty")
    b = cb.b
    values = np.empty((batch.count, b))
    total = np.empty(batch.count)
    for r in range(batch.count):
        rng = stream_rng(seed, STREAM_MC | (r & ((1 << 48) - 1)))
        t, lv = _levelwise_core(spm, cb, batch.matrices[r], noise, mc, rng)
        total[r] = t
        values[r] = lv
    return MiSamples(values=values, total=total, mc=mc, seed=seed)


# ---------------------------------------------------------------------------
# outage
# ---------------------------------------------------------------------------

_ESCALATE_SIGMA = 3.2


def outage_probability(cb: Codebook, rate_total: float, noise: NoiseSpec,
                       batch: ChannelBatch, mc: int, seed: int) -> float:
    """Fraction of channel realizations whose mutual information falls
    below the target rate (bits per space-time symbol).

    Per-realization MI is estimated with an escalating sample budget: every
    realization starts at 64 samples and only those whose estimate is within
    ~3 standard errors of the threshold are refined (x4 per stage, up to
    ``mc``). The escalation path is data-determined and seeded, hence
    reproducible for any worker split.
    """
    b = cb.b
    if not 0.0 <= rate_total <= b:
        raise ValueError(f"rate must be in [0, {b}], got {rate_total}")
    if rate_total == 0.0:
        return 0.0
    count = batch.count
    sums = np.zeros(count)
    nums = np.zeros(count, dtype=np.int64)
    sqs = np.zeros(count)
    undecided = np.ones(count, dtype=bool)
    budget = min(64, mc)
    stage = 0
    chunk = 512
    while True:
        active = np.nonzero(undecided)[0]
        for lo in range(0, active.size, chunk):
            rows = active[lo:lo + chunk]
            stream = STREAM_MC | (stage << 44) | (lo // chunk)
            rng = stream_rng(seed, stream)
            t = _batch_total_terms(cb, batch.matrices[rows], noise.n0,
                                   budget, rng)
            sums[rows] += t.sum(axis=1)
            sqs[rows] += (t * t).sum(axis=1)
            nums[rows] += budget
        mean = sums[undecided] / nums[undecided]
        var = np.maximum(
            sqs[undecided] / nums[undecided] - mean ** 2, 1e-12)
        stderr = np.sqrt(var / nums[undecided])
        near = np.abs(mean - rate_total) <= _ESCALATE_SIGMA * stderr
        still = np.zeros(count, dtype=bool)
        still[np.nonzero(undecided)[0][near]] = True
        undecided = still & (nums < mc)
        if not undecided.any():
            break
        budget = min(3 * int(nums[undecided][0]), mc - int(nums[undecided][0]))
        stage += 1
    means = np.clip(sums / np.maximum(nums, 1), 0.0, b)
    return float(np.mean(means < rate_total))


def _batch_total_terms(cb: Codebook, hs: np.ndarray, n0: float, k: int,
                       rng) -> np.ndarray:
    """Total-MI terms, shape (R, k), for R realizations with k samples each."""
    r = hs.shape[0]
    m = cb.size
    spec = cb.spec
    nr = hs.shape[-1]
    d = spec.l * nr
    b = cb.b
    out = np.empty((r, k))
    idx = rng.integers(0, m, size=(r, k))
    w = complex_normal(rng, (r, k, d), n0)
    if spec.tv:
        theta = rng.uniform(0.0, 2.0 * np.pi, size=(r, k, spec.nt))
        he = np.exp(1j * theta)[..., None] * hs[:, None, :, :]
        flat_he = he.reshape(r * k, spec.nt, nr)
        mats = cb.matrices.reshape(m, spec.nt)
        sub = max(1, _CHUNK_ELEMS // (m * max(nr, 1)))
        flat_idx = idx.reshape(-1)
        flat_w = w.reshape(r * k, d)
        flat_out = out.reshape(-1)
        for lo in range(0, r * k, sub):
            hi = min(lo + sub, r * k)
            se = np.einsum("mt,ktn->kmn", mats, flat_he[lo:hi],
                           optimize=True).reshape(hi - lo, m, -1)
            y = se[np.arange(hi - lo), flat_idx[lo:hi]] + flat_w[lo:hi]
            met = _metrics_per_sample(y, se, n0)
            mx = met.max(axis=1)
            lse = mx + np.log(np.exp(met - mx[:, None]).sum(axis=1))
            flat_out[lo:hi] = (met[np.arange(hi - lo), flat_idx[lo:hi]]
                               - lse) / _LN2 + b
    else:
        rows = max(1, _CHUNK_ELEMS // (k * m))
        for lo in range(0, r, rows):
            hi = min(lo + rows, r)
            nb = hi - lo
            # (1, M, L, Nt) @ (nb, 1, Nt, Nr) -> (nb, M, L, Nr)
            sh = np.matmul(cb.matrices[None, :, :, :],
                           hs[lo:hi, None, :, :]).reshape(nb, m, d)
            es = np.einsum("rmd,rmd->rm", sh.real, sh.real) + \
                np.einsum("rmd,rmd->rm", sh.imag, sh.imag)
            y = sh[np.arange(nb)[:, None], idx[lo:hi]] + w[lo:hi]
            ey = np.einsum("rkd,rkd->rk", y.real, y.real) + \
                np.einsum("rkd,rkd->rk", y.imag, y.imag)
            g = np.matmul(y, sh.conj().transpose(0, 2, 1))   # (nb, k, M)
            met = -(ey[:, :, None] + es[:, None, :] - 2.0 * g.real) / n0
            mx = met.max(axis=2)
            lse = mx + np.log(np.exp(met - mx[:, :, None]).sum(axis=2))
            true = np.take_along_axis(
                met, idx[lo:hi, :, None], axis=2)[:, :, 0]
            out[lo:hi] = (true - lse) / _LN2 + b
    return out


def outage_capacity(samples, eps: float) -> float:
    """Empirical eps-quantile (lower order statistic) of MI samples."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"outage level must be in (0, 1), got {eps}")
    s = np.sort(np.asarray(samples, dtype=np.float64))
    if s.size == 0:
        raise ValueError("no samples")
    k = int(math.floor(eps * s.size))
    return float(s[max(k - 1, 0)])


# ---------------------------------------------------------------------------
# cutoff rate and Bhattacharyya coefficients
# ---------------------------------------------------------------------------

def cutoff_rate(cb: Codebook, h, noise: NoiseSpec) -> float:
    """Cutoff rate for uniform priors, closed form (no Monte Carlo)."""
    sh = _flat_products(cb.matrices, np.asarray(h))
    es = np.einsum("md,md->m", sh.real, sh.real) + \
        np.einsum("md,md->m", sh.imag, sh.imag)
    g = sh @ sh.conj().T
    dist = es[:, None] + es[None, :] - 2.0 * g.real
    rho = np.exp(-np.maximum(dist, 0.0) / (4.0 * noise.n0))
    return float(-np.log2(rho.mean()))


def bhattacharyya(d, h, noise: NoiseSpec) -> float:
    """exp(-||Delta H||_F^2 / 4 N0) for one symbol pair."""
    dm = np.asarray(getattr(d, "matrix", d))
    return float(np.exp(-frobenius_sq(dm @ np.asarray(h)) / (4.0 * noise.n0)))


def _ln_i0_exact(x):
    """ln I0(x), series below 30, asymptotic expansion above."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    small = x < 30.0
    if small.any():
        xs = x[small]
        t = (xs / 2.0) ** 2
        term = np.ones_like(xs)
        acc = np.ones_like(xs)
        for k in range(1, 40):
            term = term * t / (k * k)
            acc += term
        out[small] = np.log(acc)
    big = ~small
    if big.any():
        xb = x[big]
        inv = 1.0 / (8.0 * xb)
        corr = 1.0 + inv + 4.5 * inv ** 2 + 37.5 * inv ** 3
        out[big] = xb - 0.5 * np.log(2.0 * np.pi * xb) + np.log(corr)
    return out if out.ndim else float(out)


def bhattacharyya_tv_avg(d, h, noise: NoiseSpec) -> float:
    """Bhattacharyya coefficient averaged over the uniform phase wrapper.

    Exact for two transmit antennas: the cross term averages to a single
    Bessel factor with the receive-antenna sum inside,
    exp(-sum |delta h|^2 / 4N0) * I0(|d1 d2| |sum_nr h1 h2*| / 2N0).
    """
    dm = np.asarray(getattr(d, "matrix", d))
    if dm.shape != (1, 2):
        raise ValueError(
            f"phase-averaged coefficient needs a 1x2 difference, got {dm.shape}")
    h = np.asarray(h)
    d1, d2 = dm[0, 0], dm[0, 1]
    part1 = float(np.sum(np.abs(dm[0][:, None] * h) ** 2))
    cross = abs(d1) * abs(d2) * abs(np.sum(h[0, :] * np.conj(h[1, :])))
    ln_rho = -part1 / (4.0 * noise.n0) + _ln_i0_exact(cross / (2.0 * noise.n0))
    return float(np.exp(ln_rho))


def tv_log_metric_samples(d, noise: NoiseSpec, hs: np.ndarray) -> np.ndarray:
    """4 N0 * (-ln rho_tv) for a batch of channels, shape (K,).

    This is the random variable whose distribution the log-normal bound
    models; ``hs`` has shape (K, 2, Nr).
    """
    dm = np.asarray(getattr(d, "matrix", d))
    d1, d2 = dm[0, 0], dm[0, 1]
    part1 = np.sum(np.abs(dm[0][None, :, None] * hs) ** 2, axis=(1, 2))
    cross = abs(d1) * abs(d2) * np.abs(
        np.sum(hs[:, 0, :] * np.conj(hs[:, 1, :]), axis=1))
    return part1 - 4.0 * noise.n0 * _ln_i0_exact(cross / (2.0 * noise.n0))


# ---------------------------------------------------------------------------
# pairwise outage bounds
# ---------------------------------------------------------------------------

def q_from_rate(r_tot: float) -> float:
    """Bhattacharyya threshold matched to an average per-pair rate."""
    if not 0.0 <= r_tot <= 1.0:
        raise ValueError(f"rate must be in [0, 1], got {r_tot}")
    return 2.0 ** (1.0 - r_tot) - 1.0


def _check_q(q: float) -> None:
    if not 0.0 < q < 1.0:
        raise ValueError(f"threshold q must be in (0, 1), got {q}")


def pairwise_outage_bound_sbc(d, noise: NoiseSpec, q: float,
                              nr: int) -> float:
    """Exact pairwise outage bound for single-slot codes (chi-squared CDF)."""
    _check_q(q)
    dm = np.asarray(getattr(d, "matrix", d))
    if dm.shape[0] != 1:
        raise ValueError(f"single-slot bound needs L=1, got L={dm.shape[0]}")
    dsq = frobenius_sq(dm)
    if dsq <= 0.0:
        raise ValueError("zero difference matrix")
    x = -4.0 * noise.n0 * math.log(q) / dsq
    return gammainc_lower_reg(nr, x)


def pairwise_outage_bound_stbc(d, noise: NoiseSpec, q: float,
                               nr: int) -> float:
    """Gamma moment-matched pairwise outage bound for multi-slot codes."""
    _check_q(q)
    dm = np.asarray(getattr(d, "matrix", d))
    dsq = frobenius_sq(dm)
    if dsq <= 0.0:
        raise ValueError("zero difference matrix")
    mu1 = nr * dsq
    gram = dm @ dm.conj().T
    mu2 = nr * float(np.sum(np.abs(gram) ** 2))
    x = -4.0 * noise.n0 * math.log(q) * mu1 / mu2
    return gammainc_lower_reg(mu1 * mu1 / mu2, x)


@dataclass(frozen=True)
class OmegaMoments:
    """Monte-Carlo moments of the cross-channel coupling Omega."""

    nr: int
    e_omega: float
    e_h2omega: float
    mc: int
    seed: int


@lru_cache(maxsize=64)
def omega_moments(nr: int, mc: int, seed: int) -> OmegaMoments:
    """E[Omega] and E[|h1|^2 Omega] with Omega = |sum_nr h1 h2*|."""
    if mc < 10_000:
        raise ValueError(f"need at least 1e4 samples, got {mc}")
    rng = stream_rng(seed, STREAM_MC)
    h1 = complex_normal(rng, (mc, nr), 1.0)
    h2 = complex_normal(rng, (mc, nr), 1.0)
    omega = np.abs(np.sum(h1 * np.conj(h2), axis=1))
    return OmegaMoments(nr=nr,
                        e_omega=float(omega.mean()),
                        e_h2omega=float((np.abs(h1[:, 0]) ** 2 * omega).mean()),
                        mc=mc, seed=seed)


_LNI0_SEGMENTS = ((0.5, 0.12, 0.0), (1.0, 0.35, -0.12), (2.0, 0.59, -0.37),
                  (4.0, 0.8, -0.81), (math.inf, 0.92, -1.3))


def lni0_coeffs(x: float) -> tuple:
    """Slope/intercept of the piecewise-linear ln I0 segment containing x."""
    if x < 0:
        raise ValueError(f"argument must be nonnegative, got {x}")
    for hi, a1, a2 in _LNI0_SEGMENTS:
        if x <= hi:
            return a1, a2
    raise AssertionError("unreachable")


def ln_bessel_i0_approx(x: float) -> float:
    """Piecewise-linear approximation of ln I0(x); exactly 0 at x = 0."""
    a1, a2 = lni0_coeffs(x)
    return a1 * x + a2 if x > 0 else 0.0


def pairwise_outage_bound_tvsbc(d, noise: NoiseSpec, q: float,
                                moments: OmegaMoments) -> float:
    """Log-normal approximated pairwise outage bound for TV single-slot codes."""
    _check_q(q)
    dm = np.asarray(getattr(d, "matrix", d))
    if dm.shape != (1, 2):
        raise ValueError(
            f"time-varying bound needs a 1x2 difference, got {dm.shape}")
    nr = moments.nr
    n0 = noise.n0
    a1_abs = abs(dm[0, 0])
    a2_abs = abs(dm[0, 1])
    prod = a1_abs * a2_abs
    sq_sum = a1_abs ** 2 + a2_abs ** 2
    quad_sum = a1_abs ** 4 + a2_abs ** 4
    c1, c2 = lni0_coeffs(prod / (2.0 * n0))
    e_om = moments.e_omega
    mu1 = nr * sq_sum - 2.0 * (c1 * prod * e_om + c2)
    mu2 = (nr * quad_sum
           + 4.0 * c1 ** 2 * prod ** 2 * (nr - e_om ** 2)
           - 4.0 * c1 * nr * sq_sum * prod * (moments.e_h2omega - e_om))
    if mu1 <= 0.0 or mu2 <= 0.0:
        raise DegenerateMomentsError(
            f"nonpositive matched moments mu1={mu1:.4g}, mu2={mu2:.4g}")
    t = -4.0 * n0 * math.log(q)
    arg = (math.log(t) + math.log(1.0 / mu1 + mu2 / mu1 ** 3)) \
        / math.sqrt(math.log(1.0 + mu2 / mu1 ** 2))
    return phi_function(arg)


# ---------------------------------------------------------------------------
# distribution-fit quality
# ---------------------------------------------------------------------------

def kl_divergence(p, r) -> float:
    """Discrete KL divergence in bits."""
    p = np.asarray(p, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if p.shape != r.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {r.shape}")
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"p must sum to 1, got {p.sum()}")
    support = p > 0
    if np.any(r[support] <= 0):
        raise ValueError("support mismatch: r has zero mass where p > 0")
    return float(np.sum(p[support] * np.log2(p[support] / r[support])))


def lognormal_histogram_divergence(samples, bins: int = 50) -> float:
    """KL (bits) between a sample histogram and its moment-matched log-normal."""
    x = np.asarray(samples, dtype=np.float64)
    m1 = x.mean()
    var = x.var()
    if m1 <= 0 or var <= 0:
        raise DegenerateMomentsError(
            f"cannot fit a log-normal to mean={m1:.4g}, var={var:.4g}")
    sigma2 = math.log(1.0 + var / m1 ** 2)
    mu = math.log(m1) - sigma2 / 2.0
    sigma = math.sqrt(sigma2)
    counts, edges = np.histogram(x, bins=bins)
    p = counts / counts.sum()
    cdf = np.array([phi_function((math.log(e) - mu) / sigma) if e > 0 else 0.0
                    for e in edges])
    qmass = np.maximum(np.diff(cdf), 1e-300)
    support = p > 0
    return float(np.sum(p[support] * np.log2(p[support] / qmass[support])))


def lognormal_fit_divergence(cb: Codebook, noise: NoiseSpec, mc: int,
                             seed: int, nr: int = 1, bins: int = 50) -> float:
    """Average log-normal fit divergence over all distinct symbol pairs.

    Samples the phase-averaged log metric of every pair over a shared channel
    batch and scores the moment-matched log-normal against its histogram.
    """
    spec = cb.spec
    if not spec.tv or spec.nt != 2 or spec.l != 1:
        raise ValueError("fit quality is defined for time-varying 1x2 codes")
    rng = stream_rng(seed, STREAM_MC)
    hs = complex_normal(rng, (mc, 2, nr), 1.0)
    m = cb.size
    acc = 0.0
    pairs = 0
    for i in range(m - 1):
        for j in range(i + 1, m):
            dm = DifferenceMatrix(matrix=cb.matrices[i] - cb.matrices[j])
            if frobenius_sq(dm) <= 1e-24:
                continue
            samp = tv_log_metric_samples(dm, noise, hs)
            acc += lognormal_histogram_divergence(samp, bins=bins)
            pairs += 1
    if pairs == 0:
        raise ValueError("no distinct symbol pairs")
    return acc / pairs
