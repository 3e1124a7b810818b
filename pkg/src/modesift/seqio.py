"""Frame sequence container and I/O.

A sequence is a stack of grayscale frames with a fixed frame rate. Two disk
formats are supported:

* ``raw``: a single little-endian binary file, magic ``MSQ1``, header
  ``u32 n_r, u32 n_c, u32 n_f, f32 fps``, then ``n_f * n_r * n_c`` float32
  values in frame-major, row-major order.
* ``images``: a directory of ``.pgm``/``.png`` files taken in lexicographic
  order plus a ``meta.json`` holding ``{"fps": <number>}``.

Pixel values live in [0, 1]. 8-bit images are scaled by 1/255 on load; color
images collapse to luma with weights 0.299, 0.587, 0.114.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    IoFailureError,
    MalformedHeaderError,
    TooFewFramesError,
)

RAW_MAGIC = b"MSQ1"
_HEADER = struct.Struct("<4sIIIf")
_LUMA = np.array([0.299, 0.587, 0.114])
_IMAGE_SUFFIXES = (".pgm", ".png")


@dataclass(frozen=True)
class FrameSequence:
    """Immutable stack of frames, shape (n_f, n_r, n_c), values in [0, 1]."""

    frames: np.ndarray
    fps: float
    source_id: str = ""

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3:
            raise DimensionMismatchError(
                f"frames must be (n_f, n_r, n_c), got shape {frames.shape}"
            )
        if frames.shape[0] < 2:
            raise TooFewFramesError(f"need at least 2 frames, got {frames.shape[0]}")
        if frames.shape[1] < 1 or frames.shape[2] < 1:
            raise DimensionMismatchError(f"empty frames: shape {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise ValueError("frames contain non-finite values")
        if frames.min() < 0.0 or frames.max() > 1.0:
            raise ValueError(
                f"pixel values outside [0, 1]: min={frames.min()}, max={frames.max()}"
            )
        if not (np.isfinite(self.fps) and self.fps > 0):
            raise ValueError(f"fps must be positive and finite, got {self.fps}")
        frames = np.ascontiguousarray(frames)
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "fps", float(self.fps))

    @property
    def n_f(self) -> int:
        return self.frames.shape[0]

    @property
    def n_r(self) -> int:
        return self.frames.shape[1]

    @property
    def n_c(self) -> int:
        return self.frames.shape[2]


@dataclass(frozen=True)
class SnapshotPair:
    """Time-shifted snapshot matrices psi0, psi1 of shape (M, N), M >= N.

    Column j of psi0 is the vectorized frame j; column j of psi1 is frame
    j + 1. M is the pixel count, N the number of snapshot pairs.
    """

    psi0: np.ndarray
    psi1: np.ndarray
    fps: float

    def __post_init__(self):
        psi0 = np.asarray(self.psi0, dtype=np.float64)
        psi1 = np.asarray(self.psi1, dtype=np.float64)
        if psi0.ndim != 2 or psi0.shape != psi1.shape:
            raise DimensionMismatchError(
                f"snapshot matrices must share a 2-d shape, got {psi0.shape} and {psi1.shape}"
            )
        m, n = psi0.shape
        if n < 1:
            raise DimensionMismatchError("need at least one snapshot pair")
        if m < n:
            raise DimensionMismatchError(
                f"tall matrices required (pixels >= pairs), got {m} x {n}"
            )
        if not (np.all(np.isfinite(psi0)) and np.all(np.isfinite(psi1))):
            raise ValueError("snapshots contain non-finite values")
        for name, mat in (("psi0", psi0), ("psi1", psi1)):
            mat = np.ascontiguousarray(mat)
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)
        object.__setattr__(self, "fps", float(self.fps))

    @property
    def n_pixels(self) -> int:
        return self.psi0.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.psi0.shape[1]


def to_snapshots(seq: FrameSequence) -> SnapshotPair:
    """Vectorize a sequence into time-shifted snapshot matrices.

    Frames flatten row-major into columns. Requires n_r * n_c >= n_f - 1.
    """
    data = seq.frames.reshape(seq.n_f, -1).T  # (M, n_f)
    return SnapshotPair(psi0=data[:, :-1], psi1=data[:, 1:], fps=seq.fps)


def frames_from_matrix(mat: np.ndarray, n_r: int, n_c: int) -> np.ndarray:
    """Inverse of the vectorization in to_snapshots: (M, n) -> (n, n_r, n_c)."""
    mat = np.asarray(mat)
    if mat.shape[0] != n_r * n_c:
        raise DimensionMismatchError(
            f"matrix has {mat.shape[0]} rows, expected {n_r * n_c}"
        )
    return mat.T.reshape(mat.shape[1], n_r, n_c)


def _detect_format(path: Path) -> str:
    return "images" if path.is_dir() else "raw"


def load_sequence(path, fmt: str | None = None, source_id: str | None = None) -> FrameSequence:
    """Load a sequence from disk.

    Args:
        path: raw tensor file or image directory.
        fmt: "raw", "images", or None to infer from the path type.
        source_id: identifier stored on the sequence; defaults to the path name.

    Raises:
        MalformedHeaderError: bad magic, truncated file, or size mismatch.
        IoFailureError: underlying filesystem failure.
    """
    path = Path(path)
    fmt = fmt or _detect_format(path)
    sid = source_id if source_id is not None else path.name
    if fmt == "raw":
        return _load_raw(path, sid)
    if fmt == "images":
        return _load_images(path, sid)
    raise ValueError(f"unknown format {fmt!r}")


def write_sequence(seq: FrameSequence, path, fmt: str = "raw") -> None:
    """Write a sequence to disk in the given format.

    The raw format stores float32 and round-trips losslessly for any sequence
    that came from disk. The images format quantizes to 8 bit.
    """
    path = Path(path)
    if fmt == "raw":
        _write_raw(seq, path)
    elif fmt == "images":
        _write_images(seq, path)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _load_raw(path: Path, source_id: str) -> FrameSequence:
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IoFailureError(f"cannot read {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise MalformedHeaderError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, n_r, n_c, n_f, fps = _HEADER.unpack_from(blob)
    if magic != RAW_MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * n_f * n_r * n_c
    if len(blob) != expected:
        raise MalformedHeaderError(
            f"{path}: payload is {len(blob)} bytes, header implies {expected}"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    frames = data.astype(np.float64).reshape(n_f, n_r, n_c)
    try:
        return FrameSequence(frames=frames, fps=fps, source_id=source_id)
    except ValueError as exc:
        raise MalformedHeaderError(f"{path}: invalid payload: {exc}") from exc


def _write_raw(seq: FrameSequence, path: Path) -> None:
    header = _HEADER.pack(RAW_MAGIC, seq.n_r, seq.n_c, seq.n_f, seq.fps)
    payload = seq.frames.astype("<f4").tobytes()
    try:
        path.write_bytes(header + payload)
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}: {exc}") from exc


def _load_images(path: Path, source_id: str) -> FrameSequence:
    from PIL import Image

    meta_path = path / "meta.json"
    try:
        meta = json.loads(meta_path.read_text())
    except OSError as exc:
        raise IoFailureError(f"cannot read {meta_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedHeaderError(f"{meta_path}: invalid JSON: {exc}") from exc
    if "fps" not in meta:
        raise MalformedHeaderError(f"{meta_path}: missing 'fps'")
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES)
    if not files:
        raise MalformedHeaderError(f"{path}: no .pgm or .png frames found")
    frames = []
    shape = None
    for f in files:
        try:
            with Image.open(f) as img:
                arr = np.asarray(img)
        except OSError as exc:
            raise IoFailureError(f"cannot read {f}: {exc}") from exc
        if arr.ndim == 3:
            arr = arr[..., :3].astype(np.float64) @ _LUMA
        else:
            arr = arr.astype(np.float64)
        arr = arr / 255.0
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise DimensionMismatchError(
                f"{f}: frame shape {arr.shape} differs from {shape}"
            )
        frames.append(arr)
    return FrameSequence(frames=np.stack(frames), fps=float(meta["fps"]), source_id=source_id)


def _write_images(seq: FrameSequence, path: Path) -> None:
    from PIL import Image

    try:
        path.mkdir(parents=True, exist_ok=True)
        width = len(str(seq.n_f - 1))
        for i in range(seq.n_f):
            q = np.rint(seq.frames[i] * 255.0).astype(np.uint8)
            Image.fromarray(q, mode="L").save(path / f"frame_{i:0{width}d}.png")
        (path / "meta.json").write_text(json.dumps({"fps": seq.fps}))
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}: {exc}") from exc


def resize(seq: FrameSequence, n_r: int, n_c: int) -> FrameSequence:
    """Bilinear resize of every frame to (n_r, n_c).

    Sample positions use half-pixel centers, src = (dst + 0.5) * scale - 0.5,
    clamped at the edges, so resizing to the original dimensions is the
    identity. Output stays in [0, 1].
    """
    if n_r < 1 or n_c < 1:
        raise DimensionMismatchError(f"target dims must be positive, got {n_r} x {n_c}")
    if (n_r, n_c) == (seq.n_r, seq.n_c):
        return seq

    def axis_weights(n_src: int, n_dst: int):
        src = (np.arange(n_dst) + 0.5) * (n_src / n_dst) - 0.5
        src = np.clip(src, 0.0, n_src - 1.0)
        lo = np.floor(src).astype(np.intp)
        hi = np.minimum(lo + 1, n_src - 1)
        return lo, hi, src - lo

    r0, r1, wr = axis_weights(seq.n_r, n_r)
    c0, c1, wc = axis_weights(seq.n_c, n_c)
    f = seq.frames
    top = f[:, r0][:, :, c0] * (1 - wc) + f[:, r0][:, :, c1] * wc
    bot = f[:, r1][:, :, c0] * (1 - wc) + f[:, r1][:, :, c1] * wc
    out = top * (1 - wr)[None, :, None] + bot * wr[None, :, None]
    out = np.clip(out, 0.0, 1.0)
    return FrameSequence(frames=out, fps=seq.fps, source_id=seq.source_id)
