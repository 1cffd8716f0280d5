"""Set-partition labelling by pairwise set merging.

The labeller pairs nearest symbol sets stage by stage under a distance floor
tau (the smallest of the per-set most-distant-set values), assigning one
address bit per stage; the first merge stage therefore separates the
farthest-apart candidates and becomes the last-decoded, best-protected level.
Distances can be quantized first (relative gaps below a threshold compare
equal), which lets secondary orderings break ties and markedly improves
unoptimized single-slot codes.

Measures: squared Frobenius norm, determinant criterion, smallest-singular-
value product, and the negated closed-form pairwise outage bounds (larger is
always better-separated).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import MissingContextError
from .channel import NoiseSpec
from .infotheory import (OmegaMoments, pairwise_outage_bound_sbc,
                         pairwise_outage_bound_stbc,
                         pairwise_outage_bound_tvsbc)
from .special import gammainc_lower_reg
from .stbc import Codebook, DifferenceMatrix

MEASURES = ("frobenius", "determinant", "svprod",
            "outage_sbc", "outage_stbc", "outage_tvsbc")


@dataclass(frozen=True)
class MeasureContext:
    """Side information required by the outage-bound measures."""

    noise: Optional[NoiseSpec] = None
    q: Optional[float] = None
    nr: Optional[int] = None
    moments: Optional[OmegaMoments] = None


@dataclass(frozen=True)
class SetPartitionMap:
    """Bijection from B-bit labels to codebook indices.

    ``perm[label]`` is the codebook index transmitted for that label; level 1
    occupies the most significant label bit and is decoded first.
    """

    perm: np.ndarray = field(repr=False)
    b: int
    measure_id: str
    rel_threshold: float

    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.perm.size)
        return inv


def identity_spm(b: int) -> SetPartitionMap:
    """Natural-label mapping (useful as a baseline and in tests)."""
    return SetPartitionMap(perm=np.arange(1 << b, dtype=np.int64), b=b,
                           measure_id="identity", rel_threshold=0.0)


def _require_ctx(measure: str, ctx: Optional[MeasureContext], *fields):
    if ctx is None:
        raise MissingContextError(f"measure {measure!r} needs a context")
    for name in fields:
        if getattr(ctx, name) is None:
            raise MissingContextError(
                f"measure {measure!r} needs context field {name!r}")


def pair_distance(cb: Codebook, i: int, j: int, measure: str,
                  ctx: Optional[MeasureContext] = None) -> float:
    """Separation of two codebook entries; larger means farther apart.

    The outage-bound measures return the negated bound so that larger stays
    better. Symmetric in (i, j); the Frobenius measure of a pair with itself
    is zero.
    """
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}")
    d = cb.matrices[i] - cb.matrices[j]
    if measure == "frobenius":
        return float(np.sum(d.real ** 2 + d.imag ** 2))
    if measure == "determinant":
        g = d @ d.conj().T
        return float(np.linalg.det(g).real)
    if measure == "svprod":
        _require_ctx(measure, ctx, "nr")
        sv = np.linalg.svd(d, compute_uv=False)
        k = min(cb.spec.nt, ctx.nr, sv.size)
        return float(np.prod(np.sort(sv)[:k]))
    dm = DifferenceMatrix(matrix=d)
    if measure == "outage_sbc":
        _require_ctx(measure, ctx, "noise", "q", "nr")
        return -pairwise_outage_bound_sbc(dm, ctx.noise, ctx.q, ctx.nr)
    if measure == "outage_stbc":
        _require_ctx(measure, ctx, "noise", "q", "nr")
        return -pairwise_outage_bound_stbc(dm, ctx.noise, ctx.q, ctx.nr)
    _require_ctx(measure, ctx, "noise", "q", "moments")
    return -pairwise_outage_bound_tvsbc(dm, ctx.noise, ctx.q, ctx.moments)


def distance_matrix(cb: Codebook, measure: str,
                    ctx: Optional[MeasureContext] = None) -> np.ndarray:
    """Full pairwise measure matrix (diagonal is -inf, ignored downstream)."""
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}")
    m = cb.size
    flat = cb.matrices.reshape(m, -1)
    energy = np.einsum("md,md->m", flat.real, flat.real) + \
        np.einsum("md,md->m", flat.imag, flat.imag)
    gram = flat @ flat.conj().T
    fro = energy[:, None] + energy[None, :] - 2.0 * gram.real
    np.fill_diagonal(fro, 0.0)
    fro = np.maximum(fro, 0.0)

    if measure == "frobenius" or (measure == "determinant" and cb.spec.l == 1):
        out = fro.copy()
    elif measure == "determinant":
        out = _det_matrix(cb)
    elif measure == "svprod":
        _require_ctx(measure, ctx, "nr")
        out = np.empty((m, m))
        for i in range(m):
            d = cb.matrices - cb.matrices[i]
            sv = np.linalg.svd(d, compute_uv=False)
            k = min(cb.spec.nt, ctx.nr, sv.shape[1])
            out[i] = np.prod(np.sort(sv, axis=1)[:, :k], axis=1)
    elif measure == "outage_sbc":
        _require_ctx(measure, ctx, "noise", "q", "nr")
        x = np.divide(-4.0 * ctx.noise.n0 * np.log(ctx.q), fro,
                      out=np.full_like(fro, np.inf), where=fro > 0)
        out = -_gammainc_matrix(float(ctx.nr), x)
    elif measure == "outage_stbc":
        _require_ctx(measure, ctx, "noise", "q", "nr")
        out = -_outage_stbc_matrix(cb, fro, ctx)
    else:
        _require_ctx(measure, ctx, "noise", "q", "moments")
        out = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                if j == i:
                    continue
                d = DifferenceMatrix(matrix=cb.matrices[i] - cb.matrices[j])
                out[i, j] = -pairwise_outage_bound_tvsbc(
                    d, ctx.noise, ctx.q, ctx.moments)
    np.fill_diagonal(out, -np.inf)
    return out


def _det_matrix(cb: Codebook) -> np.ndarray:
    """det(Delta Delta^H) for every pair of a two-slot codebook."""
    m, l = cb.size, cb.spec.l
    if l != 2:
        out = np.empty((m, m))
        for i in range(m):
            d = cb.matrices - cb.matrices[i]
            g = np.matmul(d, d.conj().transpose(0, 2, 1))
            out[i] = np.linalg.det(g).real
        return out
    r1 = cb.matrices[:, 0, :]
    r2 = cb.matrices[:, 1, :]

    def row_gram(r):
        e = np.einsum("md,md->m", r.real, r.real) + \
            np.einsum("md,md->m", r.imag, r.imag)
        g = r @ r.conj().T
        return np.maximum(e[:, None] + e[None, :] - 2.0 * g.real, 0.0)

    a = row_gram(r1)
    c = row_gram(r2)
    # b_ij = <r1_i - r1_j, conj(r2_i - r2_j)> = U_ii + U_jj - U_ij - U_ji
    u = r1 @ r2.conj().T
    du = np.diagonal(u)
    bmat = du[:, None] + du[None, :] - u - u.T
    return np.maximum(a * c - np.abs(bmat) ** 2, 0.0)


def _gammainc_matrix(a: float, x: np.ndarray) -> np.ndarray:
    """Elementwise P(a, x); duplicate arguments are evaluated once."""
    vals, inv = np.unique(x, return_inverse=True)
    pv = np.array([1.0 if np.isinf(v) else
                   (0.0 if v <= 0 else gammainc_lower_reg(a, float(v)))
                   for v in vals])
    return pv[inv].reshape(x.shape)


def _outage_stbc_matrix(cb: Codebook, fro: np.ndarray,
                        ctx: MeasureContext) -> np.ndarray:
    m = cb.size
    nr = ctx.nr
    mu1 = nr * fro
    mu2 = np.empty((m, m))
    for i in range(m):
        d = cb.matrices - cb.matrices[i]
        g = np.matmul(d, d.conj().transpose(0, 2, 1))
        mu2[i] = nr * np.sum(np.abs(g) ** 2, axis=(1, 2))
    out = np.empty((m, m))
    t = -4.0 * ctx.noise.n0 * np.log(ctx.q)
    cache: dict = {}
    for i in range(m):
        for j in range(m):
            if i == j or fro[i, j] <= 0:
                out[i, j] = 1.0 if i != j else 0.0
                continue
            key = (round(mu1[i, j], 14), round(mu2[i, j], 14))
            if key not in cache:
                shape = mu1[i, j] ** 2 / mu2[i, j]
                cache[key] = gammainc_lower_reg(
                    shape, t * mu1[i, j] / mu2[i, j])
            out[i, j] = cache[key]
    return out


def quantize_distances(d: np.ndarray, rel_threshold: float) -> np.ndarray:
    """Snap near-equal values to a shared representative.

    Values are scanned in ascending order; each joins the last accepted
    representative when the relative gap |d - d0| / max(|d|, |d0|) falls below
    the threshold, otherwise it becomes a new representative. Threshold zero
    returns the input unchanged.
    """
    if rel_threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {rel_threshold}")
    if rel_threshold == 0.0:
        return d
    finite = np.isfinite(d)
    vals = np.unique(d[finite])
    if vals.size == 0:
        return d
    reps = np.empty_like(vals)
    rep = vals[0]
    for k, v in enumerate(vals):
        denom = max(abs(v), abs(rep))
        if denom > 0 and abs(v - rep) / denom >= rel_threshold:
            rep = v
        reps[k] = rep
    out = d.copy()
    out[finite] = reps[np.searchsorted(vals, d[finite])]
    return out


def set_merge_labeling(cb: Codebook, measure: str,
                       ctx: Optional[MeasureContext] = None,
                       rel_threshold: float = 0.0) -> SetPartitionMap:
    """Build a set-partition map by B stages of nearest-set pairing.

    Stage s pairs each set with its nearest set at (quantized) distance at
    least tau, where tau is the smallest over sets of the distance to the
    most distant set; bit assignments of stage s form level B-s+1. Set-to-set
    distance is the minimum cross-pair member distance. All ties break to the
    lowest index, so the output is deterministic.
    """
    m = cb.size
    b_total = cb.b
    if m != (1 << b_total) or m & (m - 1):
        raise ValueError(f"codebook size must be a power of two, got {m}")
    dist = distance_matrix(cb, measure, ctx)
    labels = np.zeros(m, dtype=np.int64)
    members = [[i] for i in range(m)]
    for stage in range(1, b_total + 1):
        level = b_total - stage + 1
        bitpos = b_total - level   # level b sits at bit (B - b)
        n_sets = len(members)
        dq = quantize_distances(dist, rel_threshold)
        maxima = dq.max(axis=1)
        tau = maxima.min()
        paired = np.zeros(n_sets, dtype=bool)
        new_members = []
        new_index = []
        for s in range(n_sets):
            if paired[s]:
                continue
            paired[s] = True
            row = dq[s].copy()
            row[paired] = -np.inf
            eligible = np.nonzero(row >= tau)[0]
            if eligible.size:
                t = eligible[np.argmin(row[eligible])]
            else:
                candidates = np.nonzero(~paired)[0]
                if candidates.size == 0:
                    raise AssertionError("odd set count during merge")
                t = candidates[np.argmax(row[candidates])]
            paired[t] = True
            for idx in members[t]:
                labels[idx] |= (1 << bitpos)
            new_members.append(members[s] + members[t])
            new_index.append((s, t))
        # min-cross-pair distance between merged sets
        n_new = len(new_members)
        nd = np.full((n_new, n_new), -np.inf)
        for a in range(n_new):
            sa, ta = new_index[a]
            for c in range(a + 1, n_new):
                sc, tc = new_index[c]
                v = min(dist[sa, sc], dist[sa, tc],
                        dist[ta, sc], dist[ta, tc])
                nd[a, c] = nd[c, a] = v
        dist = nd
        members = new_members
    perm = np.empty(m, dtype=np.int64)
    perm[labels] = np.arange(m, dtype=np.int64)
    spm = SetPartitionMap(perm=perm, b=b_total, measure_id=measure,
                          rel_threshold=rel_threshold)
    return spm


def spm_to_dict(spm: SetPartitionMap) -> dict:
    return {"perm": [int(v) for v in spm.perm], "b": spm.b,
            "measure": spm.measure_id, "rel_threshold": spm.rel_threshold}


def spm_from_dict(d: dict) -> SetPartitionMap:
    perm = np.asarray(d["perm"], dtype=np.int64)
    if np.sort(perm).tolist() != list(range(perm.size)):
        raise ValueError("perm is not a bijection")
    return SetPartitionMap(perm=perm, b=int(d["b"]),
                           measure_id=d.get("measure", "unknown"),
                           rel_threshold=float(d.get("rel_threshold", 0.0)))
