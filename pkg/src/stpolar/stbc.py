"""Space-time block code families: construction, enumeration, design measures.

Seven families are supported. The classical 2x2 orthogonal design and the
rate-2 2x2 full-diversity codes span two time slots; the vector-symbol and
parameterized single-slot codes ("space block codes") trade diversity for
one-shot decoding; each single-slot code optionally gets a known time-varying
diagonal phase wrapper. Every built spec is power-normalized so the mean
Frobenius-squared energy over its enumerated codebook is exactly one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import NoiseSpec, STREAM_PHASE, counter_uniform, frobenius_sq
from .constellation import Constellation, make_constellation
from .errors import CodebookTooLargeError, ConstraintError, RankDeficiencyError

ENUMERATION_GUARD_BITS = 20

_SQRT5 = np.sqrt(5.0)
_GOLDEN_THETA = (1.0 + _SQRT5) / 2.0
_GOLDEN_THETA_BAR = 1.0 - _GOLDEN_THETA
_GOLDEN_ALPHA = 1.0 + 1j * (1.0 - _GOLDEN_THETA)
_GOLDEN_ALPHA_BAR = 1.0 + 1j * (1.0 - _GOLDEN_THETA_BAR)

# Per family: (time slots, transmit antennas or None for variable,
#              symbols per space-time symbol, raw coefficient names)
_FAMILIES = {
    "alamouti": (2, 2, 2, ()),
    "matrix_a": (2, 2, 4, ()),
    "matrix_b": (2, 2, 4, ("alpha1", "alpha2", "beta1", "beta2")),
    "matrix_c": (1, None, None, ()),
    "matrix_d": (1, 2, 2, ("alpha1", "beta1", "alpha2", "beta2")),
    "matrix_e": (1, 2, 4, ("alpha1", "beta1", "alpha2", "beta2")),
    "matrix_f": (1, 3, 6, ("alpha1", "beta1", "alpha2", "beta2",
                           "alpha3", "beta3")),
}

_SHAPED_ARITY = {"matrix_b": 3, "matrix_d": 3, "matrix_e": 3, "matrix_f": 3}


@dataclass(frozen=True)
class StbcSpec:
    """A validated, power-normalized space-time code instance."""

    family: str
    coeffs: tuple
    l: int
    nt: int
    n_syms: int
    constellation: Constellation
    tv: bool
    norm: float

    @property
    def b(self) -> int:
        """Label width: code bits carried per space-time symbol."""
        return self.n_syms * self.constellation.bits


@dataclass(frozen=True)
class SpaceTimeSymbol:
    matrix: np.ndarray
    label: int


@dataclass(frozen=True)
class DifferenceMatrix:
    matrix: np.ndarray


@dataclass(frozen=True)
class TvPhases:
    """Per-antenna phases of the known time-varying diagonal wrapper."""

    phases: np.ndarray
    seed: int
    stream_id: int


@dataclass(frozen=True)
class Codebook:
    """All 2^B space-time symbols, indexed by their natural label.

    The natural label concatenates the constellation indices of s1..s_n,
    s1 in the most significant bits. ``matrices`` has shape (2^B, L, Nt).
    """

    spec: StbcSpec
    matrices: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.matrices.shape[0]

    @property
    def b(self) -> int:
        return self.spec.b


def normalize_family(name: str) -> str:
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    aliases = {
        "a": "matrix_a", "b": "matrix_b", "c": "matrix_c", "d": "matrix_d",
        "e": "matrix_e", "f": "matrix_f", "matrixa": "matrix_a",
        "matrixb": "matrix_b", "matrixc": "matrix_c", "matrixd": "matrix_d",
        "matrixe": "matrix_e", "matrixf": "matrix_f",
    }
    key = aliases.get(key, key)
    if key not in _FAMILIES:
        raise ValueError(f"unknown code family: {name!r}")
    return key


def _resolve_coeffs(family: str, params: Sequence) -> tuple:
    """Turn raw or shaped parameters into the family's full coefficient tuple.

    Shaped mode for the parameterized families takes (alpha1, |beta1|, phase)
    as reals and applies the search-space shaping alpha2 = alpha1,
    beta2 = j*beta1 (for the three-antenna family: three complex betas with a
    shared real alpha recovered from unit per-antenna power).
    """
    raw_names = _FAMILIES[family][3]
    n_raw = len(raw_names)
    params = tuple(params)
    if n_raw == 0:
        if params:
            raise ConstraintError(
                f"{family} takes no parameters, got {len(params)}")
        return ()
    shaped = _SHAPED_ARITY.get(family)
    if family == "matrix_f":
        if len(params) == 3:
            betas = tuple(complex(p) for p in params)
            mags = [abs(b) for b in betas]
            if max(mags) - min(mags) > 1e-9 * max(max(mags), 1.0):
                raise ConstraintError(
                    "matrix_f shaped mode needs equal-magnitude betas "
                    f"(per-antenna power balance), got {mags}")
            alpha = np.sqrt(max(0.0, 1.0 - mags[0] ** 2))
            if alpha <= 0:
                raise ConstraintError(
                    "matrix_f shaped mode: |beta| >= 1 leaves no power "
                    "for the shared alpha")
            return (complex(alpha), betas[0], complex(alpha), betas[1],
                    complex(alpha), betas[2])
        if len(params) == n_raw:
            return tuple(complex(p) for p in params)
        raise ConstraintError(
            f"matrix_f takes 3 (shaped) or {n_raw} (raw) parameters, "
            f"got {len(params)}")
    # two-antenna parameterized families
    if len(params) == shaped:
        a1, b1_mag, phi = (float(np.real(p)) for p in params)
        if a1 <= 0 or b1_mag < 0:
            raise ConstraintError(
                f"shaped magnitudes must be positive, got ({a1}, {b1_mag})")
        beta1 = b1_mag * np.exp(1j * phi)
        alpha1 = complex(a1)
        if family == "matrix_b":
            return (alpha1, alpha1, beta1, 1j * beta1)
        return (alpha1, beta1, alpha1, 1j * beta1)
    if len(params) == n_raw:
        return tuple(complex(p) for p in params)
    raise ConstraintError(
        f"{family} takes {shaped} (shaped) or {n_raw} (raw) parameters, "
        f"got {len(params)}")


def _validate_coeffs(family: str, coeffs: tuple) -> None:
    if family in ("matrix_d", "matrix_e", "matrix_f"):
        pairs = [(coeffs[i], coeffs[i + 1]) for i in range(0, len(coeffs), 2)]
        powers = [abs(a) ** 2 + abs(b) ** 2 for a, b in pairs]
        if max(powers) - min(powers) > 1e-9 * max(max(powers), 1.0):
            raise ConstraintError(
                f"{family} violates the per-antenna power balance: "
                f"|alpha_i|^2+|beta_i|^2 = {powers}")
    if family == "matrix_d":
        a1, b1, a2, b2 = coeffs
        det = a1 * b2 - a2 * b1
        scale = max(abs(a1 * b2), abs(a2 * b1), 1e-30)
        if abs(det) <= 1e-12 * scale:
            raise RankDeficiencyError(
                "matrix_d mixing matrix is singular: "
                f"alpha1*beta2 == alpha2*beta1 ({a1*b2:.6g})")


def _family_rows(family: str, coeffs: tuple, nt: int, s: list) -> np.ndarray:
    """Stack the family formula into (..., L, Nt) given symbol value arrays."""
    if family == "alamouti":
        s1, s2 = s
        rows = [[s1, s2], [-np.conj(s2), np.conj(s1)]]
    elif family == "matrix_a":
        s1, s2, s3, s4 = s
        a, ab = _GOLDEN_ALPHA, _GOLDEN_ALPHA_BAR
        th, thb = _GOLDEN_THETA, _GOLDEN_THETA_BAR
        rows = [[a * (s1 + s2 * th) / _SQRT5, a * (s3 + s4 * th) / _SQRT5],
                [1j * ab * (s3 + s4 * thb) / _SQRT5,
                 ab * (s1 + s2 * thb) / _SQRT5]]
    elif family == "matrix_b":
        a1, a2, b1, b2 = coeffs
        s1, s2, s3, s4 = s
        rows = [[a1 * s1 + a2 * s3, a1 * s2 + a2 * s4],
                [-b1 * np.conj(s2) - b2 * np.conj(s4),
                 b1 * np.conj(s1) + b2 * np.conj(s3)]]
    elif family == "matrix_c":
        rows = [list(s)]
    elif family == "matrix_d":
        a1, b1, a2, b2 = coeffs
        s1, s2 = s
        rows = [[a1 * s1 + b1 * s2, a2 * s1 + b2 * s2]]
    elif family == "matrix_e":
        a1, b1, a2, b2 = coeffs
        s1, s2, s3, s4 = s
        rows = [[a1 * s1 + b1 * s2, a2 * s3 + b2 * s4]]
    elif family == "matrix_f":
        a1, b1, a2, b2, a3, b3 = coeffs
        s1, s2, s3, s4, s5, s6 = s
        rows = [[a1 * s1 + b1 * s2, a2 * s3 + b2 * s4, a3 * s5 + b3 * s6]]
    else:  # pragma: no cover - registry is closed
        raise ValueError(family)
    base = np.asarray(s[0])
    out = np.empty(base.shape + (len(rows), nt), dtype=np.complex128)
    for r, row in enumerate(rows):
        for c, entry in enumerate(row):
            out[..., r, c] = entry
    return out


def _raw_matrices(family: str, coeffs: tuple, nt: int,
                  constellation: Constellation) -> np.ndarray:
    """Enumerate the un-normalized codebook, natural-label order."""
    _, _, n_syms, _ = _FAMILIES[family]
    if n_syms is None:
        n_syms = nt
    bits = constellation.bits
    b_total = n_syms * bits
    if b_total > ENUMERATION_GUARD_BITS:
        raise CodebookTooLargeError(
            f"codebook has {b_total} label bits; enumeration guard is "
            f"{ENUMERATION_GUARD_BITS}")
    labels = np.arange(1 << b_total)
    mask = (1 << bits) - 1
    sym_vals = []
    for k in range(n_syms):
        shift = (n_syms - 1 - k) * bits
        sym_vals.append(constellation.points[(labels >> shift) & mask])
    return _family_rows(family, coeffs, nt, sym_vals)


def build_stbc(family: str, params: Sequence = (), constellation=None,
               tv: bool = False, nt: Optional[int] = None) -> StbcSpec:
    """Construct a validated, power-normalized space-time code spec.

    ``params`` is either the family's raw complex coefficient list or the
    shaped (alpha1, |beta1|, phase-in-radians) triple; the vector-symbol
    family takes its antenna count through ``nt`` (default 2).
    """
    fam = normalize_family(family)
    if constellation is None:
        constellation = make_constellation("qpsk")
    elif isinstance(constellation, str):
        constellation = make_constellation(constellation)
    l, fixed_nt, n_syms, _ = _FAMILIES[fam]
    if fam == "matrix_c":
        nt = 2 if nt is None else int(nt)
        if nt < 1:
            raise ConstraintError(f"matrix_c needs nt >= 1, got {nt}")
        n_syms = nt
    else:
        if nt is not None and nt != fixed_nt:
            raise ConstraintError(
                f"{fam} is fixed at nt={fixed_nt}, got nt={nt}")
        nt = fixed_nt
    coeffs = _resolve_coeffs(fam, params)
    _validate_coeffs(fam, coeffs)
    raw = _raw_matrices(fam, coeffs, nt, constellation)
    mean_energy = float(np.mean(np.sum(raw.real ** 2 + raw.imag ** 2,
                                       axis=(-2, -1))))
    if mean_energy <= 0:
        raise ConstraintError(f"{fam} codebook has zero mean energy")
    return StbcSpec(family=fam, coeffs=coeffs, l=l, nt=nt, n_syms=n_syms,
                    constellation=constellation, tv=bool(tv),
                    norm=1.0 / np.sqrt(mean_energy))


def enumerate_codebook(spec: StbcSpec) -> Codebook:
    """All 2^B normalized space-time symbols in natural-label order."""
    raw = _raw_matrices(spec.family, spec.coeffs, spec.nt, spec.constellation)
    m = raw * spec.norm
    m.setflags(write=False)
    return Codebook(spec=spec, matrices=m)


def encode_symbol(spec: StbcSpec, sym_indices: Sequence[int],
                  tv: Optional[TvPhases] = None) -> SpaceTimeSymbol:
    """Map constellation indices to one (normalized) space-time symbol."""
    if len(sym_indices) != spec.n_syms:
        raise ValueError(
            f"expected {spec.n_syms} symbol indices, got {len(sym_indices)}")
    size = spec.constellation.size
    if any(i < 0 or i >= size for i in sym_indices):
        raise ValueError(f"symbol index out of range [0, {size})")
    if spec.tv and tv is None:
        raise ValueError("spec is time-varying: phases required")
    if not spec.tv and tv is not None:
        raise ValueError("spec is not time-varying: unexpected phases")
    vals = [np.asarray(spec.constellation.points[i]) for i in sym_indices]
    mat = _family_rows(spec.family, spec.coeffs, spec.nt, vals) * spec.norm
    if tv is not None:
        mat = mat * np.exp(1j * tv.phases)[None, :]
    bits = spec.constellation.bits
    label = 0
    for i in sym_indices:
        label = (label << bits) | int(i)
    return SpaceTimeSymbol(matrix=mat, label=label)


def sample_tv_phases(nt: int, seed: int, n: int) -> TvPhases:
    """Phases of the diagonal wrapper for symbol slot ``n``.

    Uniform on [0, 2pi), addressed by (seed, n) through a counter hash so the
    transmitter and receiver regenerate the same sequence independently.
    """
    if nt < 1:
        raise ValueError(f"nt must be >= 1, got {nt}")
    return TvPhases(phases=tv_phase_block(nt, seed, n, 1)[0],
                    seed=seed, stream_id=n)


def tv_phase_block(nt: int, seed: int, start: int, count: int) -> np.ndarray:
    """Vectorized phases for symbol slots start..start+count-1, shape (count, nt)."""
    idx = (np.arange(start, start + count, dtype=np.uint64)[:, None]
           * np.uint64(64) + np.arange(nt, dtype=np.uint64)[None, :])
    u = counter_uniform(seed, STREAM_PHASE, idx)
    return 2.0 * np.pi * u


def difference(cb: Codebook, i: int, j: int) -> DifferenceMatrix:
    """Pairwise difference of two codebook entries."""
    m = cb.size
    if not (0 <= i < m and 0 <= j < m):
        raise ValueError(f"labels must be in [0, {m}), got ({i}, {j})")
    return DifferenceMatrix(matrix=cb.matrices[i] - cb.matrices[j])


def min_det_coding_gain(cb: Codebook) -> float:
    """Minimum over symbol pairs of det(Delta Delta^H); zero flags rank loss."""
    mats = cb.matrices
    m, l = mats.shape[0], mats.shape[1]
    if m < 2:
        raise ValueError("codebook needs at least two symbols")
    best = np.inf
    for i in range(m - 1):
        d = mats[i + 1:] - mats[i]                     # (k, L, Nt)
        g = np.matmul(d, d.conj().transpose(0, 2, 1))  # (k, L, L)
        if l == 1:
            dets = g[:, 0, 0].real
        elif l == 2:
            dets = (g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]).real
        else:
            dets = np.linalg.det(g).real
        best = min(best, float(dets.min()))
    return float(max(best, 0.0))


def pep_upper_bound(d: DifferenceMatrix, h: np.ndarray,
                    noise: NoiseSpec) -> float:
    """Chernoff-style bound on the pairwise error probability given H."""
    dh = np.asarray(getattr(d, "matrix", d)) @ np.asarray(h)
    return 0.5 * float(np.exp(-frobenius_sq(dh) / (4.0 * noise.n0)))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _c2pair(z: complex) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def spec_to_dict(spec: StbcSpec) -> dict:
    return {
        "family": spec.family,
        "coeffs": [_c2pair(c) for c in spec.coeffs],
        "constellation": spec.constellation.kind,
        "tv": spec.tv,
        "nt": spec.nt,
        "norm": spec.norm,
    }


def spec_from_dict(d: dict) -> StbcSpec:
    coeffs = [complex(re, im) for re, im in d.get("coeffs", [])]
    spec = build_stbc(d["family"], coeffs, d["constellation"],
                      tv=d.get("tv", False), nt=d.get("nt"))
    return spec


def codebook_to_dict(cb: Codebook) -> dict:
    d = spec_to_dict(cb.spec)
    d["labels"] = [
        [[_c2pair(z) for z in row] for row in mat] for mat in cb.matrices
    ]
    return d


def codebook_from_dict(d: dict) -> Codebook:
    return enumerate_codebook(spec_from_dict(d))
