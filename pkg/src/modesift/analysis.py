"""Spectral and temporal views of a mode decomposition.

Per-step eigenvalues mu convert to physical rates through the principal
logarithm: frequency |Im log mu| / (2 pi) * fps and growth Re log mu * fps.
The principal branch folds frequencies into [0, fps / 2], so a sequence
sampled at fps can never report content above its half rate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import tim
from .dmd import DmdDecomposition
from .dmdsp import SparsityRecord
from .errors import LengthMismatchError, MixedFpsError

logger = logging.getLogger(__name__)

DEFAULT_BIN_WIDTH = 1.0

MAPPINGS = ("sparse_mask", "uniform_grid")


def mode_frequencies(decomp: DmdDecomposition) -> tuple[np.ndarray, np.ndarray]:
    """Frequency (Hz) and growth rate (1/s) per mode.

    A zero eigenvalue has no logarithm; such modes report the half rate as
    frequency and -inf growth, with a warning.
    """
    mu = decomp.eigenvalues
    freq = np.empty(decomp.rank)
    growth = np.empty(decomp.rank)
    zero = mu == 0
    if zero.any():
        logger.warning("%d zero eigenvalue(s); reporting half rate and -inf growth", zero.sum())
    log_mu = np.log(mu[~zero])
    freq[~zero] = np.abs(log_mu.imag) / (2.0 * np.pi) * decomp.fps
    growth[~zero] = log_mu.real * decomp.fps
    freq[zero] = decomp.fps / 2.0
    growth[zero] = -np.inf
    return freq, growth


@dataclass(frozen=True)
class SpectralHistogram:
    """Amplitude mass per frequency bin, accumulated over decompositions.

    Bins are uniform over [0, fps / 2], half-open [lo, hi) except the last,
    which closes at the half rate. energy[i] sums |alpha| of the modes whose
    frequency falls in bin i; sums are not normalized.
    """

    bin_edges: np.ndarray
    energy: np.ndarray
    fps: float
    n_sequences: int


def spectral_histogram(
    decomps: list[DmdDecomposition],
    bin_width: float = DEFAULT_BIN_WIDTH,
) -> SpectralHistogram:
    """Accumulate |alpha| into frequency bins across decompositions.

    All inputs must share one fps (MixedFpsError otherwise).
    """
    if not decomps:
        raise ValueError("no decompositions to aggregate")
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    fps = decomps[0].fps
    for d in decomps[1:]:
        if d.fps != fps:
            raise MixedFpsError(f"mixed frame rates: {fps} vs {d.fps}")
    nyquist = fps / 2.0
    n_bins = max(1, math.ceil(nyquist / bin_width))
    edges = np.arange(n_bins + 1) * bin_width
    energy = np.zeros(n_bins)
    for d in decomps:
        freq, _ = mode_frequencies(d)
        idx = np.minimum((freq // bin_width).astype(int), n_bins - 1)
        np.add.at(energy, idx, np.abs(d.amplitudes))
    return SpectralHistogram(bin_edges=edges, energy=energy, fps=fps, n_sequences=len(decomps))


@dataclass(frozen=True)
class TemporalProfile:
    """Amplitude magnitude laid out on the original frame grid.

    frame_index holds 1-based positions 1..original_n; magnitude is zero
    wherever no retained mode landed.
    """

    frame_index: np.ndarray
    magnitude: np.ndarray


def temporal_profile(
    decomp: DmdDecomposition,
    original_n: int,
    mapping: str,
    structure: np.ndarray | None = None,
) -> TemporalProfile:
    """Project mode amplitudes onto an original_n-frame grid.

    sparse_mask: the decomposition came from the original sequence and
    structure marks pruned modes; |alpha_i| sits at grid position i + 1 and
    pruned positions are zero. uniform_grid: the decomposition came from a
    uniformly shortened sequence of n_s <= original_n frames; |alpha_i| sits
    at the i-th position the shortened grid occupies on the source grid.
    """
    if original_n < 2:
        raise ValueError(f"original_n must be >= 2, got {original_n}")
    magnitude = np.zeros(original_n)
    if mapping == "sparse_mask":
        if structure is None:
            raise ValueError("sparse_mask mapping requires a structure")
        structure = np.asarray(structure, dtype=bool)
        if structure.shape != (decomp.rank,):
            raise LengthMismatchError(
                f"structure has shape {structure.shape}, rank is {decomp.rank}"
            )
        if decomp.rank > original_n:
            raise LengthMismatchError(
                f"rank {decomp.rank} exceeds original length {original_n}"
            )
        mags = np.abs(decomp.amplitudes).copy()
        mags[structure] = 0.0
        magnitude[: decomp.rank] = mags
    elif mapping == "uniform_grid":
        n_s = decomp.n_pairs + 1
        if n_s > original_n:
            raise LengthMismatchError(
                f"shortened length {n_s} exceeds original length {original_n}"
            )
        positions = tim.grid_positions(original_n, n_s)
        magnitude[positions[: decomp.rank] - 1] = np.abs(
            decomp.amplitudes[: min(decomp.rank, n_s)]
        )
    else:
        raise ValueError(f"unknown mapping {mapping!r}, expected one of {MAPPINGS}")
    return TemporalProfile(
        frame_index=np.arange(1, original_n + 1, dtype=np.intp),
        magnitude=magnitude,
    )


def profile_from_record(record: SparsityRecord, decomp: DmdDecomposition, original_n: int) -> TemporalProfile:
    """sparse_mask profile of a sweep record."""
    return temporal_profile(decomp, original_n, "sparse_mask", structure=record.structure)


@dataclass(frozen=True)
class GammaCurve:
    """Retained percentage and loss as functions of gamma, ascending gamma.

    violation[i] is True where percent_preserved increased from the previous
    grid point; the data is reported as computed, never repaired.
    """

    gamma: np.ndarray
    percent_preserved: np.ndarray
    loss: np.ndarray
    violation: np.ndarray


def gamma_percentage_curve(records: list[SparsityRecord]) -> GammaCurve:
    """Arrange sweep records into a plottable curve, flagging non-monotone points."""
    if not records:
        raise ValueError("no sweep records")
    ordered = sorted(records, key=lambda rec: rec.gamma)
    gamma = np.array([rec.gamma for rec in ordered])
    percent = np.array([rec.percent_preserved for rec in ordered])
    loss_vals = np.array([rec.loss for rec in ordered])
    violation = np.zeros(len(ordered), dtype=bool)
    violation[1:] = percent[1:] > percent[:-1]
    if violation.any():
        logger.warning(
            "retained percentage increased at %d of %d grid points",
            int(violation.sum()), len(ordered),
        )
    return GammaCurve(gamma=gamma, percent_preserved=percent, loss=loss_vals, violation=violation)


def histogram_to_csv(hist: SpectralHistogram, path) -> None:
    """CSV: bin_lo_hz, bin_hi_hz, energy. Sums are raw |alpha| totals."""
    lines = [
        "# energy = sum of |amplitude| over modes in the bin, unnormalized",
        "bin_lo_hz,bin_hi_hz,energy",
    ]
    for i in range(len(hist.energy)):
        lines.append(
            f"{float(hist.bin_edges[i])!r},{float(hist.bin_edges[i + 1])!r},"
            f"{float(hist.energy[i])!r}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def profile_to_csv(profile: TemporalProfile, path) -> None:
    """CSV: frame_index, magnitude."""
    lines = ["frame_index,magnitude"]
    for idx, mag in zip(profile.frame_index, profile.magnitude):
        lines.append(f"{int(idx)},{float(mag)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def curve_to_csv(curve: GammaCurve, path) -> None:
    """CSV: gamma, percent_preserved, loss."""
    lines = ["gamma,percent_preserved,loss"]
    for g, pct, lo in zip(curve.gamma, curve.percent_preserved, curve.loss):
        lines.append(f"{float(g)!r},{float(pct)!r},{float(lo)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
