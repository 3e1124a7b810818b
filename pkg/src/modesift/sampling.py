"""Frame sampling strategies.

Five ways to shorten (or keep) a sequence:

* ``ss``: decompose, sweep the sparsity penalty, pick the record whose
  retained-mode percentage is closest to the target, then either reconstruct
  nnz frames from the surviving modes (default) or keep the original frames
  sitting at the surviving modes' natural positions (keep_original_frames).
* ``us``: uniform rescale to round(percent * n_f / 100) frames via the
  curve-basis interpolation model.
* ``us-star``: uniform rescale to a fixed target length.
* ``ra``: keep a sorted random subset of round(percent * n_f / 100) frames.
* ``bl``: identity.

Every output sequence rescales fps by n_out / n_in so wall-clock duration is
preserved. Random choices come from an own splitmix64 stream so byte-level
reproducibility does not depend on numpy's generator internals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dmd, dmdsp, tim
from .errors import TooShortError
from .seqio import FrameSequence, frames_from_matrix, to_snapshots

STRATEGIES = ("ss", "us", "us-star", "ra", "bl")

_MASK64 = (1 << 64) - 1


def fnv1a64(text: str) -> int:
    """FNV-1a hash of a UTF-8 string, 64-bit."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


class SplitMix64:
    """Tiny deterministic PRNG (splitmix64); stable across platforms."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError(f"n must be positive, got {n}")
        limit = ((1 << 64) // n) * n
        while True:
            draw = self.next_u64()
            if draw < limit:
                return draw % n


def derive_seed(base_seed: int, sample_id: str) -> int:
    """Per-sample seed, independent of processing order."""
    return SplitMix64((base_seed & _MASK64) ^ fnv1a64(sample_id)).next_u64()


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SamplingConfig:
    """Declarative description of one sampling run.

    percent applies to ss/us/ra; fixed_length to us-star; seed to ra;
    the gamma grid, ADMM parameters and tolerances to ss only.
    """

    strategy: str = "bl"
    percent: float = 100.0
    fixed_length: int = 0
    seed: int = 0
    keep_original_frames: bool = False
    gamma_min: float = dmdsp.DEFAULT_GAMMA_MIN
    gamma_max: float = dmdsp.DEFAULT_GAMMA_MAX
    gamma_count: int = dmdsp.DEFAULT_GAMMA_COUNT
    zero_tol: float = dmdsp.DEFAULT_ZERO_TOL
    rank_tol: float = dmd.DEFAULT_RANK_TOL
    admm: dmdsp.AdmmParams = field(default_factory=dmdsp.AdmmParams)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}, expected one of {STRATEGIES}")
        if not 0 < self.percent <= 100:
            raise ValueError(f"percent must be in (0, 100], got {self.percent}")

    def gamma_grid(self) -> np.ndarray:
        return dmdsp.default_gamma_grid(self.gamma_min, self.gamma_max, self.gamma_count)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "percent": self.percent,
            "fixed_length": self.fixed_length,
            "seed": self.seed,
            "keep_original_frames": self.keep_original_frames,
            "gamma_min": self.gamma_min,
            "gamma_max": self.gamma_max,
            "gamma_count": self.gamma_count,
            "zero_tol": self.zero_tol,
            "rank_tol": self.rank_tol,
            "admm": self.admm.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SamplingConfig":
        data = dict(data)
        admm = data.pop("admm", None)
        if admm is not None:
            data["admm"] = dmdsp.AdmmParams(**admm)
        return cls(**data)


def sparse_sample(
    seq: FrameSequence,
    percent: float,
    gammas: np.ndarray | None = None,
    *,
    keep_original_frames: bool = False,
    admm: dmdsp.AdmmParams | None = None,
    zero_tol: float = dmdsp.DEFAULT_ZERO_TOL,
    rank_tol: float = dmd.DEFAULT_RANK_TOL,
) -> tuple[FrameSequence, dmdsp.SparsityRecord]:
    """Shorten a sequence by keeping its dominant dynamic content.

    Sweeps the sparsity penalty, picks the record closest to the target
    retained percentage, and emits nnz frames. Default output reconstructs
    frames from the surviving modes; keep_original_frames instead keeps the
    source frames at the surviving modes' natural (pre-sort) positions.

    Returns the shortened sequence and the selected sweep record.

    Raises:
        TooShortError: the selected record keeps fewer than 2 modes.
    """
    snap = to_snapshots(seq)
    decomp = dmd.decompose(snap, rank_tol=rank_tol)
    records = dmdsp.gamma_sweep(decomp, snap, gammas=gammas, params=admm, zero_tol=zero_tol)
    record = dmdsp.select_percentage(records, percent)
    if record.nnz < 2:
        raise TooShortError(
            f"selected record keeps {record.nnz} mode(s); need at least 2 frames"
        )
    if keep_original_frames:
        kept = np.flatnonzero(~record.structure)
        positions = np.sort(decomp.natural_order[kept])
        frames = seq.frames[positions]
    else:
        mat = dmd.reconstruct(decomp, ~record.structure, record.nnz)
        frames = np.clip(frames_from_matrix(mat, seq.n_r, seq.n_c), 0.0, 1.0)
    out = FrameSequence(
        frames=frames,
        fps=seq.fps * record.nnz / seq.n_f,
        source_id=seq.source_id,
    )
    return out, record


def uniform_sample(seq: FrameSequence, percent: float) -> FrameSequence:
    """Rescale to round(percent * n_f / 100) frames (at least 2)."""
    n_out = max(2, _round_half_up(percent * seq.n_f / 100.0))
    return fixed_length_sample(seq, n_out)


def fixed_length_sample(seq: FrameSequence, n_out: int) -> FrameSequence:
    """Rescale to exactly n_out frames via the interpolation model."""
    if n_out < 2:
        raise TooShortError(f"need at least 2 output frames, got {n_out}")
    model = tim.fit(seq)
    out = tim.synthesize(model, n_out)
    return replace_source(out, seq.source_id)


def random_indices(n_f: int, percent: float, seed: int) -> np.ndarray:
    """Sorted distinct frame indices, round(percent * n_f / 100) of them."""
    k = _round_half_up(percent * n_f / 100.0)
    if k < 2:
        raise TooShortError(f"random sampling would keep {k} frame(s)")
    rng = SplitMix64(seed)
    pool = list(range(n_f))
    for i in range(k):
        j = i + rng.randbelow(n_f - i)
        pool[i], pool[j] = pool[j], pool[i]
    return np.sort(np.asarray(pool[:k], dtype=np.intp))


def random_sample(seq: FrameSequence, percent: float, seed: int) -> FrameSequence:
    """Keep a sorted random subset of frames, fps rescaled to match."""
    idx = random_indices(seq.n_f, percent, seed)
    return FrameSequence(
        frames=seq.frames[idx],
        fps=seq.fps * len(idx) / seq.n_f,
        source_id=seq.source_id,
    )


def baseline(seq: FrameSequence) -> FrameSequence:
    """Identity: the untouched sequence."""
    return seq


def replace_source(seq: FrameSequence, source_id: str) -> FrameSequence:
    if seq.source_id == source_id:
        return seq
    return FrameSequence(frames=seq.frames, fps=seq.fps, source_id=source_id)


def apply_strategy(cfg: SamplingConfig, seq: FrameSequence) -> tuple[FrameSequence, dict]:
    """Run the configured strategy; returns (sequence, sidecar info dict)."""
    info: dict = {
        "strategy": cfg.strategy,
        "n_in": seq.n_f,
        "fps_in": seq.fps,
    }
    if cfg.strategy == "ss":
        out, record = sparse_sample(
            seq,
            cfg.percent,
            cfg.gamma_grid(),
            keep_original_frames=cfg.keep_original_frames,
            admm=cfg.admm,
            zero_tol=cfg.zero_tol,
            rank_tol=cfg.rank_tol,
        )
        info.update(
            percent_target=cfg.percent,
            keep_original_frames=cfg.keep_original_frames,
            gamma=record.gamma,
            nnz=record.nnz,
            percent_preserved=record.percent_preserved,
            loss=record.loss,
            performance_loss_pct=record.performance_loss_pct,
            flags=list(record.flags),
        )
    elif cfg.strategy == "us":
        out = uniform_sample(seq, cfg.percent)
        info.update(percent_target=cfg.percent)
    elif cfg.strategy == "us-star":
        if cfg.fixed_length < 2:
            raise ValueError("us-star requires fixed_length >= 2")
        out = fixed_length_sample(seq, cfg.fixed_length)
        info.update(fixed_length=cfg.fixed_length)
    elif cfg.strategy == "ra":
        out = random_sample(seq, cfg.percent, cfg.seed)
        info.update(percent_target=cfg.percent, seed=cfg.seed)
    else:  # bl
        out = baseline(seq)
    info.update(n_out=out.n_f, fps_out=out.fps)
    return out, info
