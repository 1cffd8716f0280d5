"""Particle-swarm search with adaptive Monte-Carlo budgets.

The swarm shares one channel batch per iteration (common random numbers), and
the per-evaluation sample budget grows as the best value drops, so early
exploration is cheap and the endgame is measured precisely. Used for
outage-based code parameter design, minimum-SNR search, and the joint
code/labelling/polar design loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .channel import (STREAM_OPT, NoiseSpec, n0_from_snr_db,
                      sample_channel_batch, stream_rng)
from .errors import ConstraintError, EvaluationError, TargetNotReachedError
from .infotheory import outage_probability
from .stbc import StbcSpec, build_stbc, enumerate_codebook

DEFAULT_MC_SCHEDULE = ((0.1, 1_000), (0.02, 10_000), (0.0, 100_000))


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 30
    iterations: int = 100
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    mc_schedule: tuple = DEFAULT_MC_SCHEDULE
    seed: int = 0
    init_guess: Optional[tuple] = None

    def __post_init__(self):
        if self.particles < 2:
            raise ValueError(f"need at least 2 particles, got {self.particles}")
        thresholds = [t for t, _ in self.mc_schedule]
        counts = [c for _, c in self.mc_schedule]
        if sorted(thresholds, reverse=True) != thresholds:
            raise ValueError("schedule thresholds must decrease")
        if sorted(counts) != counts or len(set(counts)) != len(counts):
            raise ValueError("sample counts must increase as the best improves")

    def budget(self, best: float) -> int:
        for threshold, count in self.mc_schedule:
            if best >= threshold:
                return count
        return self.mc_schedule[-1][1]


@dataclass(frozen=True)
class SearchSpace:
    """Bounded continuous search box with a vector -> code-spec decoder."""

    lower: np.ndarray
    upper: np.ndarray
    encode: Callable[[np.ndarray], StbcSpec]

    def __post_init__(self):
        if np.any(np.asarray(self.lower) >= np.asarray(self.upper)):
            raise ValueError("lower bounds must be strictly below upper bounds")

    @property
    def dims(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class PsoTracePoint:
    iteration: int
    best_value: float
    best_position: tuple
    sample_count: int


@dataclass(frozen=True)
class PsoResult:
    position: np.ndarray
    value: float
    trace: tuple


def _reflect(x: np.ndarray, v: np.ndarray, lo: np.ndarray,
             up: np.ndarray) -> None:
    """Reflect positions at the box walls in place, flipping velocities."""
    lo_b = np.broadcast_to(lo, x.shape)
    up_b = np.broadcast_to(up, x.shape)
    for _ in range(8):
        below = x < lo_b
        above = x > up_b
        if not (below.any() or above.any()):
            return
        x[below] = 2.0 * lo_b[below] - x[below]
        x[above] = 2.0 * up_b[above] - x[above]
        v[below | above] *= -1.0
    np.clip(x, lo, up, out=x)


def pso_minimize(objective: Callable[[np.ndarray, int, int], float],
                 space: SearchSpace, cfg: PsoConfig) -> PsoResult:
    """Minimize a noisy objective(vector, sample_count, stream_id).

    All particles of one iteration share the stream id (common random
    numbers); the recorded best value never increases; the final best is
    re-evaluated at the largest budget before being reported.
    """
    lo = np.asarray(space.lower, dtype=np.float64)
    up = np.asarray(space.upper, dtype=np.float64)
    dims = space.dims
    rng = stream_rng(cfg.seed, STREAM_OPT)
    x = lo + rng.random((cfg.particles, dims)) * (up - lo)
    if cfg.init_guess is not None:
        guess = np.asarray(cfg.init_guess, dtype=np.float64)
        if guess.shape != (dims,):
            raise ValueError(f"init guess must have {dims} dims")
        x[0] = np.clip(guess, lo, up)
    span = up - lo
    v = (rng.random((cfg.particles, dims)) * 2.0 - 1.0) * span

    def evaluate(pos: np.ndarray, budget: int, stream: int,
                 iteration: int) -> float:
        val = float(objective(pos, budget, stream))
        if math.isnan(val):
            raise EvaluationError(
                f"objective returned NaN at iteration {iteration}",
                position=tuple(pos), iteration=iteration)
        return val

    best_val = math.inf
    budget = cfg.budget(best_val)
    vals = np.array([evaluate(x[i], budget, 0, 0)
                     for i in range(cfg.particles)])
    pbest = x.copy()
    pbest_vals = vals.copy()
    g = int(np.argmin(vals))
    gbest = x[g].copy()
    best_val = float(vals[g])
    trace = [PsoTracePoint(0, best_val, tuple(gbest), budget)]
    for it in range(1, cfg.iterations + 1):
        budget = cfg.budget(best_val)
        r1 = rng.random((cfg.particles, dims))
        r2 = rng.random((cfg.particles, dims))
        v = (cfg.inertia * v + cfg.cognitive * r1 * (pbest - x)
             + cfg.social * r2 * (gbest[None, :] - x))
        x = x + v
        _reflect(x, v, lo, up)
        vals = np.array([evaluate(x[i], budget, it, it)
                         for i in range(cfg.particles)])
        improved = vals < pbest_vals
        pbest[improved] = x[improved]
        pbest_vals[improved] = vals[improved]
        g = int(np.argmin(pbest_vals))
        if pbest_vals[g] < best_val:
            best_val = float(pbest_vals[g])
            gbest = pbest[g].copy()
        trace.append(PsoTracePoint(it, best_val, tuple(gbest), budget))
    final_budget = cfg.mc_schedule[-1][1]
    final_val = evaluate(gbest, final_budget, cfg.iterations + 1,
                         cfg.iterations + 1)
    return PsoResult(position=gbest, value=final_val, trace=tuple(trace))


# ---------------------------------------------------------------------------
# search-space encodings
# ---------------------------------------------------------------------------

def shaped_sbc_space(family: str, constellation, tv: bool,
                     alpha_range=(0.05, 0.95),
                     beta_range=(0.05, 0.95)) -> SearchSpace:
    """(alpha1, |beta1|, phase) space for the parameterized two-antenna codes."""
    lower = np.array([alpha_range[0], beta_range[0], 0.0])
    upper = np.array([alpha_range[1], beta_range[1], 2.0 * np.pi])

    def encode(vec: np.ndarray) -> StbcSpec:
        return build_stbc(family, tuple(vec), constellation, tv=tv)

    return SearchSpace(lower=lower, upper=upper, encode=encode)


def matrix_b_raw_space(constellation, tv: bool = False,
                       amp: float = 1.0) -> SearchSpace:
    """(a, re a2, im a2, re b2, im b2) with alpha1 = beta1 = a real."""
    lower = np.array([0.05, -amp, -amp, -amp, -amp])
    upper = np.array([amp, amp, amp, amp, amp])

    def encode(vec: np.ndarray) -> StbcSpec:
        a, a2r, a2i, b2r, b2i = vec
        return build_stbc("matrix_b",
                          (complex(a), complex(a2r, a2i),
                           complex(a), complex(b2r, b2i)),
                          constellation, tv=tv)

    return SearchSpace(lower=lower, upper=upper, encode=encode)


def matrix_f_space(constellation, tv: bool,
                   mag_range=(0.05, 0.55)) -> SearchSpace:
    """(|beta|, phase1, phase2, phase3) with the shared alpha recovered."""
    lower = np.array([mag_range[0], 0.0, 0.0, 0.0])
    upper = np.array([mag_range[1], 2 * np.pi, 2 * np.pi, 2 * np.pi])

    def encode(vec: np.ndarray) -> StbcSpec:
        mag, p1, p2, p3 = vec
        betas = tuple(mag * np.exp(1j * p) for p in (p1, p2, p3))
        return build_stbc("matrix_f", betas, constellation, tv=tv)

    return SearchSpace(lower=lower, upper=upper, encode=encode)


@dataclass(frozen=True)
class BatchSpec:
    """How objective closures draw their channel batches."""

    nt: int
    nr: int
    seed: int


def objective_outage(space: SearchSpace, snr_db: float, rate_total: float,
                     batch_spec: BatchSpec, inner_mc: int = 256):
    """Outage probability of the decoded spec as a PSO objective.

    Infeasible vectors (constraint violations) score the penalty value 1.0.
    The stream id selects the shared per-iteration channel batch.
    """

    def objective(vec: np.ndarray, n_samples: int, stream: int) -> float:
        try:
            spec = space.encode(vec)
        except ConstraintError:
            return 1.0
        cb = enumerate_codebook(spec)
        noise = NoiseSpec(n0_from_snr_db(snr_db, spec.l))
        batch = sample_channel_batch(batch_spec.nt, batch_spec.nr,
                                     n_samples, batch_spec.seed, stream)
        return outage_probability(cb, rate_total, noise, batch,
                                  mc=inner_mc,
                                  seed=batch_spec.seed ^ (stream << 8))

    return objective


@dataclass(frozen=True)
class JointDesignResult:
    spec: StbcSpec
    spm: object
    code: object
    fer: float
    pso: PsoResult


def joint_design(space: SearchSpace, code_shape, snr_db: float, trials: int,
                 cfg: PsoConfig, r_tot: float = 0.5,
                 measure: str = "frobenius", rel_threshold: float = 0.0,
                 frame_cap: int = 20_000, min_error_events: int = 100,
                 seed: int = 0) -> JointDesignResult:
    """Search code parameters by simulated FER of the full design pipeline.

    Each evaluation builds the codebook, generates its labelling, ranks the
    bit-channels at the target SNR, selects the information sets, and
    simulates the frame error rate with the budgeted number of frames. The
    best (spec, labelling, code) triple is rebuilt from the winning vector.
    """
    from .fersim import simulate_fer
    from .mapping import MeasureContext, set_merge_labeling
    from .polar import rank_bit_channels, select_information_sets

    n, b = code_shape
    if n > 1024:
        raise ValueError(f"per-level block length capped at 1024, got {n}")
    k_total = round(r_tot * n * b)

    def pipeline(vec: np.ndarray, budget: int, stream: int):
        spec = space.encode(vec)
        cb = enumerate_codebook(spec)
        if cb.b != b:
            raise ValueError(
                f"search space builds {cb.b}-level codebooks, expected {b}")
        noise = NoiseSpec(n0_from_snr_db(snr_db, spec.l))
        ctx = MeasureContext(noise=noise, nr=spec.nt)
        spm = set_merge_labeling(cb, measure, ctx, rel_threshold)
        rank = rank_bit_channels(spm, cb, (n, b), snr_db, trials,
                                 seed=seed ^ (stream << 16))
        code = select_information_sets(rank, k_total)
        res = simulate_fer(cb, spm, code, snr_db,
                           max_frames=min(budget, frame_cap),
                           seed=seed ^ (stream << 16) ^ 0x5F5F,
                           min_error_events=min_error_events)
        return spec, spm, code, res.fer

    def objective(vec: np.ndarray, budget: int, stream: int) -> float:
        try:
            return pipeline(vec, budget, stream)[3]
        except ConstraintError:
            return 1.0

    result = pso_minimize(objective, space, cfg)
    spec, spm, code, fer = pipeline(result.position,
                                    cfg.mc_schedule[-1][1],
                                    cfg.iterations + 1)
    return JointDesignResult(spec=spec, spm=spm, code=code, fer=fer,
                             pso=result)


@dataclass(frozen=True)
class MinSnrResult:
    snr_db: float
    value: float
    non_monotone: bool
    grid: tuple
    values: tuple


def min_snr_for_target(evaluate: Callable[[float], float], target: float,
                       snr_range, step: float) -> MinSnrResult:
    """Smallest grid SNR whose metric meets the target.

    The metric is assumed non-increasing in SNR; observed increases are noted
    in the result's non_monotone flag (Monte-Carlo noise can cause them).
    """
    lo, hi = snr_range
    if not lo < hi:
        raise ValueError(f"need lo < hi, got ({lo}, {hi})")
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    grid = []
    snr = lo
    while snr <= hi + 1e-9:
        grid.append(round(snr, 9))
        snr += step
    values = []
    non_monotone = False
    for i, s in enumerate(grid):
        val = float(evaluate(s))
        values.append(val)
        if i and val > values[i - 1]:
            non_monotone = True
        if val <= target:
            return MinSnrResult(snr_db=s, value=val,
                                non_monotone=non_monotone,
                                grid=tuple(grid[:i + 1]),
                                values=tuple(values))
    best = int(np.argmin(values))
    raise TargetNotReachedError(
        f"no grid point met target {target} (best {values[best]:.4g} "
        f"at {grid[best]} dB)", best_snr_db=grid[best],
        best_value=values[best])
