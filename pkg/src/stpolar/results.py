"""Experiment result tables with regenerable manifests."""

from __future__ import annotations

import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .channel import RNG_METHOD

CSV_HEADER = "snr_db,metric,value,events,trials,seed"

_PROB_METRICS = {"fer", "outage"}


@dataclass(frozen=True)
class ResultRow:
    snr_db: float
    metric: str
    value: float
    events: int
    trials: int
    seed: int
    wall_time: float = 0.0

    def __post_init__(self):
        if self.metric in _PROB_METRICS and not 0.0 <= self.value <= 1.0:
            raise ValueError(
                f"{self.metric} must be a probability, got {self.value}")
        if self.events > self.trials:
            raise ValueError(
                f"events ({self.events}) exceed trials ({self.trials})")


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    def add(self, row: ResultRow) -> None:
        self.rows.append(row)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for r in self.rows:
            out.write(f"{r.snr_db:.6g},{r.metric},{r.value:.6g},"
                      f"{r.events},{r.trials},{r.seed}\n")
        return out.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "manifest": self.manifest,
            "rows": [{"snr_db": r.snr_db, "metric": r.metric,
                      "value": r.value, "events": r.events,
                      "trials": r.trials, "seed": r.seed,
                      "wall_time": r.wall_time} for r in self.rows],
        }, indent=2, sort_keys=True)

    def write(self, out: str) -> None:
        """Write as csv/json: to stdout for a bare format name, else to file."""
        fmt = out.lower()
        if fmt in ("csv", "json"):
            sys.stdout.write(self.to_csv() if fmt == "csv" else
                             self.to_json() + "\n")
            return
        text = self.to_json() if out.endswith(".json") else self.to_csv()
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def make_manifest(config_echo: dict, **extra) -> dict:
    m = {
        "tool": "stpolar",
        "version": __version__,
        "rng": RNG_METHOD,
        "numpy": np.__version__,
        "snr_convention": "snr_db = -10*log10(N0*L); E||S||_F^2 = 1",
        "config": config_echo,
    }
    m.update(extra)
    return m
