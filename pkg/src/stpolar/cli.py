"""Command-line experiment harness.

Every subcommand reads a JSON or TOML config, runs an experiment, and emits
results as CSV or JSON (``--out csv|json`` prints to stdout; any other value
is treated as an output path whose extension picks the format).

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, StpolarError
from .results import make_manifest


def _write_json(payload: dict, out: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out in ("json", "csv"):
        sys.stdout.write(text + "\n")
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _cmd_outage(cfg, args):
    from .experiments import run_outage_sweep
    run_outage_sweep(cfg, threads=args.threads).write(args.out)


def _cmd_fer(cfg, args):
    from .experiments import run_fer_sweep
    run_fer_sweep(cfg, threads=args.threads).write(args.out)


def _cmd_bound_check(cfg, args):
    from .experiments import run_bound_check
    run_bound_check(cfg).write(args.out)


def _cmd_label(cfg, args):
    from .experiments import spec_from_config, spm_from_config
    from .mapping import spm_to_dict
    from .stbc import enumerate_codebook
    spec = spec_from_config(cfg)
    cb = enumerate_codebook(spec)
    snr = float(cfg.get("snr_db", [10.0])[0]) \
        if isinstance(cfg.get("snr_db"), list) else float(cfg.get("snr_db", 10.0))
    spm = spm_from_config(cb, cfg, snr_db=snr)
    payload = {"manifest": make_manifest(cfg, experiment="label"),
               "spm": spm_to_dict(spm)}
    _write_json(payload, args.out)


def _cmd_rank(cfg, args):
    from .experiments import spec_from_config, spm_from_config
    from .polar import rank_bit_channels
    from .stbc import enumerate_codebook
    spec = spec_from_config(cfg)
    cb = enumerate_codebook(spec)
    d = cfg.get("code", {})
    n = int(d.get("n", 32))
    snr = float(d.get("design_snr", 10.0))
    spm = spm_from_config(cb, cfg, snr_db=snr)
    rank = rank_bit_channels(spm, cb, (n, cb.b), snr,
                             trials=int(d.get("ranking_trials", 20000)),
                             seed=int(cfg.get("seed", 0)), nr=d.get("nr"))
    payload = {"manifest": make_manifest(cfg, experiment="rank"),
               "snr_db": rank.snr, "trials": rank.trials,
               "error_counts": rank.error_counts.tolist()}
    _write_json(payload, args.out)


def _cmd_design_code(cfg, args):
    from .experiments import (code_from_config, spec_from_config,
                              spm_from_config)
    from .polar import code_to_dict
    from .stbc import enumerate_codebook
    spec = spec_from_config(cfg)
    cb = enumerate_codebook(spec)
    snr = float(cfg.get("code", {}).get("design_snr", 10.0))
    spm = spm_from_config(cb, cfg, snr_db=snr)
    code = code_from_config(cb, spm, cfg, int(cfg.get("seed", 0)))
    payload = {"manifest": make_manifest(cfg, experiment="design-code"),
               "code": code_to_dict(code), "rates": list(code.rates)}
    _write_json(payload, args.out)


def _parse_pso(cfg):
    from .optimizer import DEFAULT_MC_SCHEDULE, PsoConfig
    p = cfg.get("pso", {})
    schedule = tuple((float(t), int(c))
                     for t, c in p.get("mc_schedule", DEFAULT_MC_SCHEDULE))
    return PsoConfig(particles=int(p.get("particles", 30)),
                     iterations=int(p.get("iterations", 50)),
                     inertia=float(p.get("inertia", 0.72)),
                     cognitive=float(p.get("cognitive", 1.49)),
                     social=float(p.get("social", 1.49)),
                     mc_schedule=schedule,
                     seed=int(cfg.get("seed", 0)),
                     init_guess=tuple(p["init_guess"])
                     if "init_guess" in p else None)


def _parse_space(cfg):
    from .optimizer import (matrix_b_raw_space, matrix_f_space,
                            shaped_sbc_space)
    s = cfg.get("space", {})
    kind = s.get("encoding", "shaped")
    family = cfg.get("stbc", {}).get("family", "matrix_d")
    constellation = cfg.get("stbc", {}).get("constellation", "qpsk")
    tv = bool(cfg.get("stbc", {}).get("tv", False))
    if kind == "shaped":
        return shaped_sbc_space(family, constellation, tv)
    if kind == "matrix_b_raw":
        return matrix_b_raw_space(constellation, tv)
    if kind == "matrix_f":
        return matrix_f_space(constellation, tv)
    raise ConfigError(f"unknown space encoding {kind!r}")


def _cmd_optimize_stbc(cfg, args):
    from .optimizer import BatchSpec, objective_outage, pso_minimize
    from .stbc import spec_to_dict
    space = _parse_space(cfg)
    pso_cfg = _parse_pso(cfg)
    snr = float(cfg.get("opt_snr_db", 10.0))
    rate_total = float(cfg.get("rate_total", 2.0))
    nt = int(cfg.get("stbc", {}).get("nt", 2)) \
        if cfg.get("stbc", {}).get("family") == "matrix_c" else None
    nr = int(cfg.get("nr", 2))
    objective = objective_outage(space, snr, rate_total,
                                 BatchSpec(nt=nt or 2, nr=nr,
                                           seed=int(cfg.get("seed", 0))),
                                 inner_mc=int(cfg.get("mc", 256)))
    result = pso_minimize(objective, space, pso_cfg)
    spec = space.encode(result.position)
    payload = {"manifest": make_manifest(cfg, experiment="optimize-stbc"),
               "best_value": result.value,
               "best_position": list(result.position),
               "spec": spec_to_dict(spec),
               "trace": [{"iteration": t.iteration, "best": t.best_value,
                          "samples": t.sample_count} for t in result.trace]}
    _write_json(payload, args.out)


def _cmd_joint(cfg, args):
    from .optimizer import joint_design
    from .mapping import spm_to_dict
    from .polar import code_to_dict
    from .stbc import spec_to_dict
    space = _parse_space(cfg)
    pso_cfg = _parse_pso(cfg)
    d = cfg.get("code", {})
    probe = space.encode((np.asarray(space.lower) +
                          np.asarray(space.upper)) / 2.0)
    result = joint_design(space, (int(d.get("n", 64)), probe.b),
                          snr_db=float(cfg.get("opt_snr_db", 10.0)),
                          trials=int(d.get("ranking_trials", 4000)),
                          cfg=pso_cfg,
                          r_tot=float(d.get("r_tot", 0.5)),
                          measure=cfg.get("spm", {}).get("measure",
                                                         "frobenius"),
                          rel_threshold=float(
                              cfg.get("spm", {}).get("rel_threshold", 0.0)),
                          frame_cap=int(cfg.get("max_frames", 20000)),
                          seed=int(cfg.get("seed", 0)))
    payload = {"manifest": make_manifest(cfg, experiment="joint-design"),
               "fer": result.fer,
               "spec": spec_to_dict(result.spec),
               "spm": spm_to_dict(result.spm),
               "code": code_to_dict(result.code),
               "trace": [{"iteration": t.iteration, "best": t.best_value,
                          "samples": t.sample_count}
                         for t in result.pso.trace]}
    _write_json(payload, args.out)


_COMMANDS = {
    "outage": _cmd_outage,
    "fer": _cmd_fer,
    "optimize-stbc": _cmd_optimize_stbc,
    "design-code": _cmd_design_code,
    "label": _cmd_label,
    "rank": _cmd_rank,
    "joint": _cmd_joint,
    "bound-check": _cmd_bound_check,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stpolar",
        description="Space-time code and multilevel polar coded-modulation "
                    "design experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="JSON or TOML experiment config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default="csv",
                       help="csv|json (stdout) or an output file path")
        p.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)
    try:
        from .experiments import load_config
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (StpolarError, ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
