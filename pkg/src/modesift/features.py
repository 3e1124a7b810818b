"""Local binary patterns on three orthogonal planes.

Each pixel of a frame volume is encoded three times, once per plane slice
through it (XY, XT, YT), by thresholding 4 axis-aligned neighbors at the
plane's radii against the center (neighbor >= center gives bit 1). The
4-bit codes collapse through the uniform-pattern table: codes with at most
2 circular 0/1 transitions keep their own bin (14 of them, ascending code
order), everything else shares a catch-all, 15 bins per plane.

The volume splits into blocks x blocks spatial cells (full time extent,
hard boundaries, row boundary i at floor(i * n_r / blocks)); each cell
contributes 3 plane histograms. A site is counted only when its whole
neighborhood lies inside the cell along the plane's two axes (all positions
along the third axis participate). Feature layout: cells in row-major
order, then plane XY, XT, YT, then bin; D = blocks^2 * 3 * 15.

Histograms are raw counts; normalize=True rescales each (cell, plane)
histogram to unit sum, which keeps distances comparable across sequence
lengths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FrameTooSmallError, SequenceTooShortError
from .seqio import FrameSequence

BINS_PER_PLANE = 15  # for 4 neighbors: 14 uniform codes + 1 catch-all


@dataclass(frozen=True)
class LbptopConfig:
    """blocks x blocks spatial grid; radii = (r_x, r_y, r_t); 4 neighbors."""

    blocks: int = 5
    radii: tuple[int, int, int] = (1, 1, 3)
    neighbors: int = 4
    normalize: bool = False

    def __post_init__(self):
        if self.blocks < 1:
            raise ValueError(f"blocks must be >= 1, got {self.blocks}")
        if len(self.radii) != 3 or any(r < 1 for r in self.radii):
            raise ValueError(f"radii must be three positive ints, got {self.radii}")
        if self.neighbors != 4:
            raise ValueError("only the 4-neighbor encoding is implemented")
        object.__setattr__(self, "radii", tuple(int(r) for r in self.radii))

    @property
    def dimension(self) -> int:
        return self.blocks * self.blocks * 3 * BINS_PER_PLANE

    def to_dict(self) -> dict:
        return {
            "blocks": self.blocks,
            "radii": list(self.radii),
            "neighbors": self.neighbors,
            "normalize": self.normalize,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LbptopConfig":
        data = dict(data)
        if "radii" in data:
            data["radii"] = tuple(data["radii"])
        return cls(**data)


def uniform_pattern_table(neighbors: int) -> np.ndarray:
    """Map each code 0 .. 2^P - 1 to its histogram bin.

    Uniform codes (at most 2 circular transitions) get bins 0 .. U-1 in
    ascending code order; the rest share bin U.
    """
    if neighbors < 2 or neighbors > 16:
        raise ValueError(f"neighbors must be in [2, 16], got {neighbors}")
    n_codes = 1 << neighbors
    transitions = np.empty(n_codes, dtype=int)
    for code in range(n_codes):
        rotated = ((code >> 1) | ((code & 1) << (neighbors - 1))) & (n_codes - 1)
        transitions[code] = bin(code ^ rotated).count("1")
    uniform = transitions <= 2
    table = np.full(n_codes, int(uniform.sum()), dtype=np.intp)
    table[uniform] = np.arange(uniform.sum())
    return table


def block_bounds(extent: int, blocks: int) -> np.ndarray:
    """Boundary i at floor(i * extent / blocks), i = 0 .. blocks."""
    return (np.arange(blocks + 1) * extent) // blocks


def _plane_histograms(vol: np.ndarray, radii: tuple[int, int, int], table: np.ndarray) -> np.ndarray:
    """Three 15-bin count histograms (XY, XT, YT) for one cell volume.

    vol has shape (n_t, n_y, n_x). Neighbor bit order per plane, weights
    1, 2, 4, 8: XY (x+rx, y-ry, x-rx, y+ry), XT (x+rx, t-rt, x-rx, t+rt),
    YT (y+ry, t-rt, y-ry, t+rt). Planes whose extents cannot hold the radii
    contribute empty histograms.
    """
    rx, ry, rt = radii
    n_t, n_y, n_x = vol.shape
    out = np.zeros((3, BINS_PER_PLANE))

    def hist(center, n0, n1, n2, n3):
        code = (
            (n0 >= center).astype(np.intp)
            + 2 * (n1 >= center)
            + 4 * (n2 >= center)
            + 8 * (n3 >= center)
        )
        return np.bincount(table[code.ravel()], minlength=BINS_PER_PLANE)

    if n_y >= 2 * ry + 1 and n_x >= 2 * rx + 1:
        c = vol[:, ry : n_y - ry, rx : n_x - rx]
        out[0] = hist(
            c,
            vol[:, ry : n_y - ry, 2 * rx :],
            vol[:, : n_y - 2 * ry, rx : n_x - rx],
            vol[:, ry : n_y - ry, : n_x - 2 * rx],
            vol[:, 2 * ry :, rx : n_x - rx],
        )
    if n_t >= 2 * rt + 1 and n_x >= 2 * rx + 1:
        c = vol[rt : n_t - rt, :, rx : n_x - rx]
        out[1] = hist(
            c,
            vol[rt : n_t - rt, :, 2 * rx :],
            vol[: n_t - 2 * rt, :, rx : n_x - rx],
            vol[rt : n_t - rt, :, : n_x - 2 * rx],
            vol[2 * rt :, :, rx : n_x - rx],
        )
    if n_t >= 2 * rt + 1 and n_y >= 2 * ry + 1:
        c = vol[rt : n_t - rt, ry : n_y - ry, :]
        out[2] = hist(
            c,
            vol[rt : n_t - rt, 2 * ry :, :],
            vol[: n_t - 2 * rt, ry : n_y - ry, :],
            vol[rt : n_t - rt, : n_y - 2 * ry, :],
            vol[2 * rt :, ry : n_y - ry, :],
        )
    return out


def lbptop(seq: FrameSequence, config: LbptopConfig | None = None) -> np.ndarray:
    """Blockwise three-plane pattern histogram of a sequence.

    Returns a float64 vector of length config.dimension.

    Raises:
        SequenceTooShortError: fewer than 2 * r_t + 1 frames.
        FrameTooSmallError: frames cannot hold the spatial radii.
    """
    config = config or LbptopConfig()
    rx, ry, rt = config.radii
    if seq.n_f < 2 * rt + 1:
        raise SequenceTooShortError(
            f"need at least {2 * rt + 1} frames for temporal radius {rt}, got {seq.n_f}"
        )
    spatial = 2 * max(rx, ry) + 1
    if seq.n_r < spatial or seq.n_c < spatial:
        raise FrameTooSmallError(
            f"need frames of at least {spatial} x {spatial} for radii ({rx}, {ry}), "
            f"got {seq.n_r} x {seq.n_c}"
        )
    table = uniform_pattern_table(config.neighbors)
    rows = block_bounds(seq.n_r, config.blocks)
    cols = block_bounds(seq.n_c, config.blocks)
    feature = np.zeros((config.blocks * config.blocks, 3, BINS_PER_PLANE))
    cell = 0
    for bi in range(config.blocks):
        for bj in range(config.blocks):
            vol = seq.frames[:, rows[bi] : rows[bi + 1], cols[bj] : cols[bj + 1]]
            feature[cell] = _plane_histograms(vol, config.radii, table)
            cell += 1
    if config.normalize:
        sums = feature.sum(axis=2, keepdims=True)
        np.divide(feature, sums, out=feature, where=sums > 0)
    return feature.reshape(-1)


def features_to_csv(rows: list[tuple[str, str, str, np.ndarray]], path) -> None:
    """CSV: sample_id, label, subject_id, then one column per feature entry."""
    if not rows:
        raise ValueError("no feature rows to write")
    dim = len(rows[0][3])
    header = "sample_id,label,subject_id," + ",".join(f"f{i}" for i in range(dim))
    lines = [header]
    for sample_id, label, subject_id, vec in rows:
        if len(vec) != dim:
            raise ValueError(f"{sample_id}: feature length {len(vec)} != {dim}")
        lines.append(f"{sample_id},{label},{subject_id}," + ",".join(repr(float(v)) for v in vec))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def features_to_binary(rows: list[tuple[str, str, str, np.ndarray]], path) -> None:
    """Row-major float32 matrix at path, plus a JSON descriptor at path.json."""
    import json
    from pathlib import Path

    if not rows:
        raise ValueError("no feature rows to write")
    mat = np.stack([np.asarray(vec, dtype=np.float32) for *_ids, vec in rows])
    path = Path(path)
    path.write_bytes(mat.astype("<f4").tobytes())
    descriptor = {
        "dtype": "<f4",
        "order": "row-major",
        "shape": [int(mat.shape[0]), int(mat.shape[1])],
        "sample_ids": [r[0] for r in rows],
        "labels": [r[1] for r in rows],
        "subject_ids": [r[2] for r in rows],
    }
    Path(str(path) + ".json").write_text(json.dumps(descriptor, indent=2, sort_keys=True))
