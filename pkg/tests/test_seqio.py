"""Sequence container and I/O contracts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modesift import seqio
from modesift.errors import (
    DimensionMismatchError,
    IoFailureError,
    MalformedHeaderError,
    TooFewFramesError,
)


def test_frame_sequence_validation():
    good = np.full((3, 2, 2), 0.5)
    seq = seqio.FrameSequence(frames=good, fps=30.0)
    assert (seq.n_f, seq.n_r, seq.n_c) == (3, 2, 2)
    with pytest.raises(TooFewFramesError):
        seqio.FrameSequence(frames=good[:1], fps=30.0)
    with pytest.raises(DimensionMismatchError):
        seqio.FrameSequence(frames=np.zeros((3, 4)), fps=30.0)
    with pytest.raises(ValueError):
        seqio.FrameSequence(frames=good + 1.0, fps=30.0)
    with pytest.raises(ValueError):
        seqio.FrameSequence(frames=good - 1.0, fps=30.0)
    bad = good.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        seqio.FrameSequence(frames=bad, fps=30.0)
    with pytest.raises(ValueError):
        seqio.FrameSequence(frames=good, fps=0.0)


def test_frames_are_read_only():
    seq = seqio.FrameSequence(frames=np.zeros((2, 2, 2)), fps=1.0)
    with pytest.raises(ValueError):
        seq.frames[0, 0, 0] = 1.0


def test_raw_round_trip_file_to_file(tmp_path):
    rng = np.random.default_rng(0)
    seq = seqio.FrameSequence(frames=rng.random((2, 2, 2)), fps=25.0)
    first = tmp_path / "a.msq"
    second = tmp_path / "b.msq"
    seqio.write_sequence(seq, first)
    loaded = seqio.load_sequence(first)
    seqio.write_sequence(loaded, second)
    assert first.read_bytes() == second.read_bytes()


@settings(deadline=None, max_examples=30)
@given(
    n_f=st.integers(2, 5),
    n_r=st.integers(1, 4),
    n_c=st.integers(1, 4),
    seed=st.integers(0, 2**16),
)
def test_raw_round_trip_identity(tmp_path_factory, n_f, n_r, n_c, seed):
    rng = np.random.default_rng(seed)
    # float32-representable values: everything that ever came from disk
    frames = rng.random((n_f, n_r, n_c)).astype(np.float32).astype(np.float64)
    seq = seqio.FrameSequence(frames=frames, fps=100.0, source_id="x")
    path = tmp_path_factory.mktemp("rt") / "seq.msq"
    seqio.write_sequence(seq, path)
    loaded = seqio.load_sequence(path, source_id="x")
    assert loaded.fps == np.float32(seq.fps)
    assert np.array_equal(loaded.frames, seq.frames)
    assert loaded.source_id == "x"


def test_raw_header_layout(tmp_path):
    seq = seqio.FrameSequence(frames=np.zeros((2, 3, 4)), fps=200.0)
    path = tmp_path / "seq.msq"
    seqio.write_sequence(seq, path)
    blob = path.read_bytes()
    assert blob[:4] == b"MSQ1"
    n_r, n_c, n_f = np.frombuffer(blob[4:16], dtype="<u4")
    assert (n_r, n_c, n_f) == (3, 4, 2)
    fps = np.frombuffer(blob[16:20], dtype="<f4")[0]
    assert fps == 200.0
    assert len(blob) == 20 + 4 * 2 * 3 * 4


def test_malformed_raw_files(tmp_path):
    path = tmp_path / "bad.msq"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(MalformedHeaderError):
        seqio.load_sequence(path)
    path.write_bytes(b"MSQ1\x00")
    with pytest.raises(MalformedHeaderError):
        seqio.load_sequence(path)
    seq = seqio.FrameSequence(frames=np.zeros((2, 2, 2)), fps=1.0)
    good = tmp_path / "good.msq"
    seqio.write_sequence(seq, good)
    truncated = good.read_bytes()[:-4]
    path.write_bytes(truncated)
    with pytest.raises(MalformedHeaderError):
        seqio.load_sequence(path)
    # out-of-range payload values
    blob = bytearray(good.read_bytes())
    blob[20:24] = np.array([2.0], dtype="<f4").tobytes()
    path.write_bytes(bytes(blob))
    with pytest.raises(MalformedHeaderError):
        seqio.load_sequence(path)
    with pytest.raises(IoFailureError):
        seqio.load_sequence(tmp_path / "missing.msq")


def test_image_dir_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    seq = seqio.FrameSequence(frames=rng.random((4, 5, 6)), fps=30.0)
    d = tmp_path / "imgs"
    seqio.write_sequence(seq, d, fmt="images")
    loaded = seqio.load_sequence(d)
    assert loaded.n_f == 4 and loaded.fps == 30.0
    # 8-bit quantization: round(v * 255) / 255
    expected = np.rint(seq.frames * 255.0) / 255.0
    assert np.abs(loaded.frames - expected).max() < 1e-12


def test_image_dir_lexicographic_order(tmp_path):
    from PIL import Image

    d = tmp_path / "imgs"
    d.mkdir()
    for name, value in [("b.png", 20), ("a.png", 10), ("c.png", 30)]:
        Image.fromarray(np.full((2, 2), value, dtype=np.uint8), mode="L").save(d / name)
    (d / "meta.json").write_text('{"fps": 10}')
    loaded = seqio.load_sequence(d)
    got = [int(round(loaded.frames[i, 0, 0] * 255)) for i in range(3)]
    assert got == [10, 20, 30]


def test_image_dir_color_to_luma(tmp_path):
    from PIL import Image

    d = tmp_path / "imgs"
    d.mkdir()
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[..., 0] = 100
    rgb[..., 1] = 150
    rgb[..., 2] = 200
    for i in range(2):
        Image.fromarray(rgb, mode="RGB").save(d / f"f{i}.png")
    (d / "meta.json").write_text('{"fps": 5}')
    loaded = seqio.load_sequence(d)
    expected = (0.299 * 100 + 0.587 * 150 + 0.114 * 200) / 255.0
    assert np.abs(loaded.frames - expected).max() < 1e-12


def test_image_dir_missing_meta(tmp_path):
    from PIL import Image

    d = tmp_path / "imgs"
    d.mkdir()
    Image.fromarray(np.zeros((2, 2), dtype=np.uint8), mode="L").save(d / "f0.png")
    with pytest.raises(IoFailureError):
        seqio.load_sequence(d)
    (d / "meta.json").write_text("{}")
    with pytest.raises(MalformedHeaderError):
        seqio.load_sequence(d)


def test_resize_identity(small_sequence):
    out = seqio.resize(small_sequence, small_sequence.n_r, small_sequence.n_c)
    assert np.array_equal(out.frames, small_sequence.frames)


def test_resize_known_average():
    frames = np.array([[[0.0, 1.0], [0.5, 0.5]]] * 2)
    seq = seqio.FrameSequence(frames=frames, fps=1.0)
    out = seqio.resize(seq, 1, 1)
    assert out.frames.shape == (2, 1, 1)
    assert np.allclose(out.frames, 0.5)


def test_resize_bounds_and_shape(small_sequence):
    out = seqio.resize(small_sequence, 13, 3)
    assert out.frames.shape == (small_sequence.n_f, 13, 3)
    assert out.frames.min() >= 0.0 and out.frames.max() <= 1.0
    assert out.fps == small_sequence.fps
    with pytest.raises(DimensionMismatchError):
        seqio.resize(small_sequence, 0, 5)


def test_to_snapshots_shift_relation(small_sequence):
    snap = seqio.to_snapshots(small_sequence)
    assert snap.n_pairs == small_sequence.n_f - 1
    assert snap.n_pixels == small_sequence.n_r * small_sequence.n_c
    assert np.array_equal(snap.psi0[:, 1:], snap.psi1[:, :-1])
    # row-major vectorization: first column is frame 0 flattened
    assert np.array_equal(snap.psi0[:, 0], small_sequence.frames[0].reshape(-1))


def test_snapshots_require_tall_matrices():
    rng = np.random.default_rng(0)
    wide = seqio.FrameSequence(frames=rng.random((6, 2, 2)), fps=10.0)
    with pytest.raises(DimensionMismatchError):
        seqio.to_snapshots(wide)
    with pytest.raises(DimensionMismatchError):
        seqio.SnapshotPair(psi0=np.zeros((3, 2)), psi1=np.zeros((3, 3)), fps=1.0)


def test_frames_from_matrix_inverts_vectorization(small_sequence):
    snap = seqio.to_snapshots(small_sequence)
    back = seqio.frames_from_matrix(snap.psi0, small_sequence.n_r, small_sequence.n_c)
    assert np.array_equal(back, small_sequence.frames[:-1])
    with pytest.raises(DimensionMismatchError):
        seqio.frames_from_matrix(snap.psi0, 3, 3)
