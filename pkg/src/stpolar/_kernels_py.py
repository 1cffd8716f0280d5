"""Pure-NumPy implementations of the hot kernels.

Same contracts as the compiled extension (`_ckernels`); selected as a
fallback when the extension is unavailable or disabled. The successive
cancellation recursion additionally supports an op-count instrumentation dict,
which the compiled path does not carry.

Conventions shared by both implementations:

* LLR sign: ln(P(bit=0)/P(bit=1)); nonnegative decides 0.
* ``metrics_lab`` rows hold log-likelihood metrics in LABEL order, i.e.
  column ``lab`` is the metric of the codebook entry whose mapped label is
  ``lab``; subsets of a label prefix are then contiguous slices.
* Polar transform is the natural-order lower-triangular kernel:
  (u1, u2) -> (u1 xor u2, u2), applied recursively.
"""

from __future__ import annotations

import numpy as np

_LN2 = np.log(2.0)

IMPL_NAME = "python"


def polar_transform(bits: np.ndarray) -> np.ndarray:
    """x = u F^{(x) log2 N} over GF(2), natural order; an involution."""
    x = np.array(bits, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    if n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    h = n // 2
    while h >= 1:
        for off in range(0, n, 2 * h):
            x[..., off:off + h] ^= x[..., off + h:off + 2 * h]
        h //= 2
    return x


def _f_pair(a: np.ndarray, b: np.ndarray, exact: bool,
            stats=None) -> np.ndarray:
    sa, sb = np.abs(a), np.abs(b)
    sign = np.where((a >= 0) == (b >= 0), 1.0, -1.0)
    v = sign * np.minimum(sa, sb)
    if exact:
        v = v + np.log1p(np.exp(-(sa + sb))) - np.log1p(np.exp(-np.abs(sa - sb)))
    if stats is not None:
        stats["f"] = stats.get("f", 0) + a.size
    return v


def _g_pair(a: np.ndarray, b: np.ndarray, x_left: np.ndarray,
            stats=None) -> np.ndarray:
    if stats is not None:
        stats["g"] = stats.get("g", 0) + a.size
    return b + (1.0 - 2.0 * x_left.astype(np.float64)) * a


def sc_decode(llr, frozen_mask, frozen_values, exact: bool = True,
              stats=None) -> np.ndarray:
    """Successive cancellation decoding; returns the u-domain estimate."""
    llr = np.asarray(llr, dtype=np.float64)
    frozen_mask = np.asarray(frozen_mask, dtype=np.uint8)
    frozen_values = np.asarray(frozen_values, dtype=np.uint8)
    n = llr.size
    if n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    u = np.zeros(n, dtype=np.uint8)

    def rec(ll: np.ndarray, start: int) -> np.ndarray:
        size = ll.size
        if size == 1:
            if frozen_mask[start]:
                bit = frozen_values[start]
            else:
                bit = np.uint8(0) if ll[0] >= 0 else np.uint8(1)
            u[start] = bit
            return np.array([bit], dtype=np.uint8)
        half = size // 2
        a, b = ll[:half], ll[half:]
        xl = rec(_f_pair(a, b, exact, stats), start)
        xr = rec(_g_pair(a, b, xl, stats), start + half)
        return np.concatenate([xl ^ xr, xr])

    rec(llr, 0)
    return u


def sc_genie_errors(llr, u_true, exact: bool = True) -> np.ndarray:
    """Per-position hard-decision errors under genie-corrected priors.

    Runs the SC recursion with every decision forced to the true bit after
    comparison, so each position is judged with an all-correct prefix.
    """
    llr = np.asarray(llr, dtype=np.float64)
    u_true = np.asarray(u_true, dtype=np.uint8)
    n = llr.size
    if n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    err = np.zeros(n, dtype=np.uint8)

    def rec(ll: np.ndarray, start: int) -> np.ndarray:
        size = ll.size
        if size == 1:
            hard = np.uint8(0) if ll[0] >= 0 else np.uint8(1)
            err[start] = hard != u_true[start]
            return np.array([u_true[start]], dtype=np.uint8)
        half = size // 2
        a, b = ll[:half], ll[half:]
        xl = rec(_f_pair(a, b, exact), start)
        xr = rec(_g_pair(a, b, xl), start + half)
        return np.concatenate([xl ^ xr, xr])

    rec(llr, 0)
    return err


def _logsumexp_rows(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=-1)
    return m + np.log(np.exp(x - m[..., None]).sum(axis=-1))


def subset_llrs(metrics_lab: np.ndarray, prefixes: np.ndarray, b: int,
                n_levels: int) -> np.ndarray:
    """Per-symbol LLR of level ``b`` given decided upper-bit prefixes.

    ``metrics_lab`` is (N, 2^B) in label order; ``prefixes`` holds the b-1
    decided upper bits per symbol as integers.
    """
    metrics_lab = np.asarray(metrics_lab, dtype=np.float64)
    prefixes = np.asarray(prefixes, dtype=np.int64)
    size = 1 << (n_levels - b)
    base = prefixes << (n_levels - b + 1)
    cols = base[:, None] + np.arange(size, dtype=np.int64)[None, :]
    rows = np.arange(metrics_lab.shape[0], dtype=np.int64)[:, None]
    lse0 = _logsumexp_rows(metrics_lab[rows, cols])
    lse1 = _logsumexp_rows(metrics_lab[rows, cols + size])
    return lse0 - lse1


def mi_terms(metrics_lab: np.ndarray, labels: np.ndarray,
             n_levels: int) -> tuple:
    """Per-sample total and per-level mutual-information terms, in bits.

    For sample k with true label l, the level-b term is the log ratio of the
    subset likelihood after and before conditioning on bit b, plus one bit of
    prior; terms telescope so their sum equals the total term exactly.
    """
    metrics_lab = np.asarray(metrics_lab, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    k, m = metrics_lab.shape
    rows = np.arange(k, dtype=np.int64)[:, None]
    levels = np.empty((k, n_levels), dtype=np.float64)
    lse_prev = _logsumexp_rows(metrics_lab)
    total = (metrics_lab[rows[:, 0], labels] - lse_prev) / _LN2 + n_levels
    for b in range(1, n_levels + 1):
        size = 1 << (n_levels - b)
        base = (labels >> (n_levels - b)) << (n_levels - b)
        cols = base[:, None] + np.arange(size, dtype=np.int64)[None, :]
        lse_b = _logsumexp_rows(metrics_lab[rows, cols])
        levels[:, b - 1] = (lse_b - lse_prev) / _LN2 + 1.0
        lse_prev = lse_b
    return total, levels
