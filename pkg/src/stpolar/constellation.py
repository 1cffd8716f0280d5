"""Unit-energy reference constellations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Constellation:
    """A 2^bits complex alphabet with unit average energy."""

    kind: str
    points: np.ndarray = field(repr=False)

    @property
    def bits(self) -> int:
        return int(np.log2(len(self.points)))

    @property
    def size(self) -> int:
        return len(self.points)


def make_constellation(kind: str) -> Constellation:
    """Build a supported constellation by name (bpsk, qpsk, qam16).

    QPSK is the four points (+-1 +-j)/sqrt(2); 16-QAM the square {+-1, +-3}^2
    grid scaled by 1/sqrt(10). Indexing is natural binary, I-axis bits in the
    most significant positions; the labelling stage remaps symbols anyway, so
    only determinism matters here.
    """
    name = kind.strip().lower().replace("-", "")
    if name == "bpsk":
        pts = np.array([1.0 + 0j, -1.0 + 0j])
    elif name == "qpsk":
        pts = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)
    elif name in ("qam16", "16qam"):
        levels = np.array([3.0, 1.0, -1.0, -3.0])
        i, q = np.meshgrid(levels, levels, indexing="ij")
        pts = (i + 1j * q).reshape(-1) / np.sqrt(10.0)
    else:
        raise ValueError(f"unsupported constellation kind: {kind!r}")
    pts.setflags(write=False)
    return Constellation(kind=name if name != "16qam" else "qam16", points=pts)
