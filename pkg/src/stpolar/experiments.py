"""Experiment configuration and the sweep runners behind the CLI."""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from .channel import NoiseSpec, n0_from_snr_db, sample_channel_batch
from .errors import ConfigError
from .fersim import simulate_fer
from .infotheory import omega_moments, outage_probability, q_from_rate
from .mapping import (MEASURES, MeasureContext, SetPartitionMap, identity_spm,
                      set_merge_labeling, spm_from_dict, spm_to_dict)
from .polar import (MlpcmCode, code_from_dict, code_from_rates,
                    outage_rule_rates, rank_bit_channels,
                    select_information_sets, uniform_rate_code)
from .results import ResultRow, ResultTable, make_manifest
from .stbc import build_stbc, enumerate_codebook, spec_from_dict

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib


def load_config(path: str) -> dict:
    """Read a JSON or TOML experiment configuration."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    text = p.read_bytes()
    if p.suffix.lower() == ".toml":
        try:
            return tomllib.loads(text.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad TOML config: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        if p.suffix.lower() != ".json":
            try:
                return tomllib.loads(text.decode("utf-8"))
            except tomllib.TOMLDecodeError:
                pass
        raise ConfigError(f"bad JSON config: {exc}") from exc


def _need(cfg: dict, key: str, kind=None):
    if key not in cfg:
        raise ConfigError(f"missing config key: {key!r}")
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"config key {key!r} has wrong type "
                          f"({type(val).__name__})")
    return val


def spec_from_config(cfg: dict):
    d = _need(cfg, "stbc", dict)
    try:
        if "coeffs" in d:
            return spec_from_dict(d)
        params = d.get("params", [])
        if params and isinstance(params[0], (list, tuple)):
            params = [complex(p[0], p[1]) for p in params]
        elif "phi_deg" in d:
            params = [d["alpha1"], d["beta1"],
                      float(d["phi_deg"]) * np.pi / 180.0]
        return build_stbc(d["family"], params, d.get("constellation", "qpsk"),
                          tv=d.get("tv", False), nt=d.get("nt"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad stbc config: {exc}") from exc


def _measure_context(cb, d: dict, snr_db: float) -> MeasureContext:
    noise = NoiseSpec(n0_from_snr_db(snr_db, cb.spec.l))
    q = d.get("q")
    if q is None and "r_tot" in d:
        q = q_from_rate(float(d["r_tot"]))
    nr = int(d.get("nr", cb.spec.nt))
    moments = None
    if d.get("measure") == "outage_tvsbc":
        moments = omega_moments(nr, int(d.get("moments_mc", 20000)),
                                int(d.get("moments_seed", 1)))
    return MeasureContext(noise=noise, q=q, nr=nr, moments=moments)


def spm_from_config(cb, cfg: dict, snr_db: float) -> SetPartitionMap:
    d = cfg.get("spm")
    if d is None:
        return identity_spm(cb.b)
    if "file" in d:
        return spm_from_dict(json.loads(Path(d["file"]).read_text()))
    if "perm" in d:
        return spm_from_dict(d)
    measure = d.get("measure", "frobenius")
    if measure == "identity":
        return identity_spm(cb.b)
    if measure not in MEASURES:
        raise ConfigError(f"unknown labelling measure {measure!r}")
    ctx = _measure_context(cb, d, snr_db=float(d.get("snr_db", snr_db)))
    return set_merge_labeling(cb, measure, ctx,
                              rel_threshold=float(d.get("rel_threshold", 0.0)))


def code_from_config(cb, spm, cfg: dict, seed: int) -> MlpcmCode:
    d = _need(cfg, "code", dict)
    if "file" in d:
        return code_from_dict(json.loads(Path(d["file"]).read_text()))
    if "info_sets" in d:
        return code_from_dict(d)
    n = int(_need(d, "n", int))
    b = cb.b
    r_tot = float(_need(d, "r_tot", (int, float)))
    k_total = round(r_tot * n * b)
    design_snr = float(d.get("design_snr", 10.0))
    trials = int(d.get("ranking_trials", 20000))
    rank = rank_bit_channels(spm, cb, (n, b), design_snr, trials,
                             seed=int(d.get("ranking_seed", seed)),
                             nr=d.get("nr"))
    rule = d.get("rule", "ranking")
    if rule == "ranking":
        return select_information_sets(rank, k_total)
    if rule == "uniform":
        return uniform_rate_code(rank, k_total)
    if rule == "outage":
        nr = int(d.get("nr", cb.spec.nt))
        batch = sample_channel_batch(cb.spec.nt, nr,
                                     int(d.get("outage_realizations", 4000)),
                                     seed=int(d.get("outage_seed", seed)),
                                     stream_id=1)
        noise = NoiseSpec(n0_from_snr_db(design_snr, cb.spec.l))
        rates = outage_rule_rates(spm, cb, r_tot, batch, noise,
                                  m=float(d.get("m", 1.05)),
                                  mc=int(d.get("outage_mc", 256)))
        return code_from_rates(rates, rank, k_total)
    raise ConfigError(f"unknown code rule {rule!r}")


def _snr_grid(cfg: dict):
    grid = _need(cfg, "snr_db", list)
    if not grid:
        raise ConfigError("snr_db grid is empty")
    return [float(s) for s in grid]


def run_fer_sweep(cfg: dict, threads: int = 1) -> ResultTable:
    """Frame-error-rate sweep of a full (code, labelling, codebook) chain."""
    seed = int(cfg.get("seed", 0))
    grid = _snr_grid(cfg)
    max_frames = int(cfg.get("max_frames", 10_000))
    min_events = int(cfg.get("min_error_events", 100))
    if max_frames < 1:
        raise ConfigError("max_frames must be positive")
    spec = spec_from_config(cfg)
    cb = enumerate_codebook(spec)
    spm = spm_from_config(cb, cfg, snr_db=grid[0])
    code = code_from_config(cb, spm, cfg, seed)
    nr = cfg.get("nr")
    table = ResultTable(manifest=make_manifest(cfg, experiment="fer-sweep"))
    for i, snr in enumerate(grid):
        t0 = time.perf_counter()
        res = simulate_fer(cb, spm, code, snr, max_frames,
                           seed=seed + 7919 * i, min_error_events=min_events,
                           nr=nr, threads=threads)
        table.add(ResultRow(snr_db=snr, metric="fer", value=res.fer,
                            events=res.errors, trials=res.frames,
                            seed=seed + 7919 * i,
                            wall_time=time.perf_counter() - t0))
    return table


def run_outage_sweep(cfg: dict, threads: int = 1) -> ResultTable:
    """Outage-probability sweep of a codebook at a target rate."""
    seed = int(cfg.get("seed", 0))
    grid = _snr_grid(cfg)
    realizations = int(cfg.get("realizations", 10_000))
    mc = int(cfg.get("mc", 2048))
    if realizations < 1:
        raise ConfigError("realizations must be positive")
    spec = spec_from_config(cfg)
    cb = enumerate_codebook(spec)
    rate_total = float(_need(cfg, "rate_total", (int, float)))
    nr = int(cfg.get("nr", spec.nt))
    table = ResultTable(manifest=make_manifest(cfg, experiment="outage-sweep"))
    for i, snr in enumerate(grid):
        t0 = time.perf_counter()
        batch = sample_channel_batch(spec.nt, nr, realizations,
                                     seed=seed, stream_id=i)
        noise = NoiseSpec(n0_from_snr_db(snr, spec.l))
        p = outage_probability(cb, rate_total, noise, batch, mc=mc,
                               seed=seed + 104729 * i)
        table.add(ResultRow(snr_db=snr, metric="outage", value=p,
                            events=int(round(p * realizations)),
                            trials=realizations, seed=seed,
                            wall_time=time.perf_counter() - t0))
    return table


def run_bound_check(cfg: dict) -> ResultTable:
    """Closed-form pairwise outage bounds versus Monte-Carlo estimates."""
    from .infotheory import (pairwise_outage_bound_sbc,
                             pairwise_outage_bound_stbc,
                             pairwise_outage_bound_tvsbc,
                             tv_log_metric_samples)
    from .stbc import DifferenceMatrix
    from .channel import complex_normal, stream_rng

    seed = int(cfg.get("seed", 0))
    realizations = int(cfg.get("realizations", 100_000))
    q = float(cfg.get("q", 0.414))
    nr = int(cfg.get("nr", 2))
    spec = spec_from_config(cfg)
    cb = enumerate_codebook(spec)
    pair = cfg.get("pair", [0, 1])
    d = DifferenceMatrix(matrix=cb.matrices[pair[0]] - cb.matrices[pair[1]])
    table = ResultTable(manifest=make_manifest(cfg, experiment="bound-check"))
    rng = stream_rng(seed, 17)
    hs = complex_normal(rng, (realizations, spec.nt, nr), 1.0)
    for snr in _snr_grid(cfg):
        noise = NoiseSpec(n0_from_snr_db(snr, spec.l))
        thr = -4.0 * noise.n0 * np.log(q)
        if spec.tv:
            metric = tv_log_metric_samples(d, noise, hs)
            emp = float(np.mean(metric < thr))
            closed = pairwise_outage_bound_tvsbc(
                d, noise, q, omega_moments(nr, 100_000, seed + 1))
        else:
            dh = np.einsum("lt,ktr->klr", np.asarray(d.matrix), hs)
            metric = np.sum(np.abs(dh) ** 2, axis=(1, 2))
            emp = float(np.mean(metric < thr))
            if spec.l == 1:
                closed = pairwise_outage_bound_sbc(d, noise, q, nr)
            else:
                closed = pairwise_outage_bound_stbc(d, noise, q, nr)
        table.add(ResultRow(snr_db=snr, metric="bound_abs_error",
                            value=abs(closed - emp), events=0,
                            trials=realizations, seed=seed))
    return table
