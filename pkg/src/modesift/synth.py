"""Procedural corpus of short face-like expression clips.

Each clip is a static synthetic face (shared per subject) plus one brief
localized oscillation: a Gaussian blob whose intensity pulses at a
class-specific frequency around a class-specific locus, active for only
20-40% of the frames near the clip start, the rest neutral padding. Classes
therefore differ in both temporal frequency and spatial locus, while
subjects differ in facial texture, which is what a subject-held-out split
has to generalize over.

Everything derives from one integer seed; the same seed always produces
byte-identical sequence files and manifest.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluation import CorpusManifest, ManifestEntry, write_manifest
from .seqio import FrameSequence, write_sequence

DEFAULT_FPS = 100.0
DEFAULT_SIZE = (40, 40)

CLASS_PARAMS = {
    # label: (row fraction, col fraction, frequency Hz)
    "brow": (0.30, 0.50, 4.0),
    "lid": (0.44, 0.32, 9.0),
    "mouth": (0.72, 0.50, 16.0),
}


def _blob(h: int, w: int, cy: float, cx: float, sigma: float) -> np.ndarray:
    yy = (np.arange(h)[:, None] + 0.5) / h
    xx = (np.arange(w)[None, :] + 0.5) / w
    return np.exp(-(((yy - cy) ** 2) + ((xx - cx) ** 2)) / (2.0 * sigma**2))


def subject_face(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Static face-like background with subject-specific texture."""
    yy = (np.arange(h)[:, None] + 0.5) / h
    base = 0.42 + 0.10 * (yy - 0.5) * np.ones((h, w))
    base += 0.18 * _blob(h, w, 0.52, 0.5, 0.30)  # head
    base -= 0.16 * _blob(h, w, 0.40, 0.32, 0.05)  # left eye
    base -= 0.16 * _blob(h, w, 0.40, 0.68, 0.05)  # right eye
    base -= 0.10 * _blob(h, w, 0.74, 0.50, 0.07)  # mouth
    base += 0.05 * _blob(h, w, 0.56, 0.50, 0.05)  # nose
    for _ in range(10):
        cy, cx = rng.uniform(0.1, 0.9, size=2)
        amp = rng.uniform(-0.05, 0.05)
        base += amp * _blob(h, w, cy, cx, rng.uniform(0.04, 0.12))
    return np.clip(base, 0.05, 0.95)


def make_clip(
    rng: np.random.Generator,
    face: np.ndarray,
    label: str,
    fps: float = DEFAULT_FPS,
    noise: float = 0.004,
) -> FrameSequence:
    """One clip: neutral face, early oscillation burst, trailing padding."""
    h, w = face.shape
    cy, cx, freq = CLASS_PARAMS[label]
    n_f = int(rng.integers(36, 49))
    onset = int(n_f * rng.uniform(0.04, 0.10))
    active = int(n_f * rng.uniform(0.22, 0.38))
    active = max(active, 6)
    envelope = np.zeros(n_f)
    ramp = np.hanning(active)
    envelope[onset : onset + active] = ramp[: max(0, n_f - onset)]
    amp = rng.uniform(0.13, 0.18)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    jit_y = rng.uniform(-0.02, 0.02)
    jit_x = rng.uniform(-0.02, 0.02)
    drift = 0.015
    t_idx = np.arange(n_f)
    osc = np.sin(2.0 * np.pi * freq * t_idx / fps + phase)
    frames = np.empty((n_f, h, w))
    for t in range(n_f):
        center_x = cx + jit_x + drift * envelope[t] * osc[t]
        blob = _blob(h, w, cy + jit_y, center_x, 0.085)
        frames[t] = face + amp * envelope[t] * osc[t] * blob
    frames += rng.normal(0.0, noise, size=frames.shape)
    return FrameSequence(frames=np.clip(frames, 0.0, 1.0), fps=fps)


@dataclass(frozen=True)
class CorpusSpec:
    n_subjects: int = 6
    clips_per_subject: int = 10
    fps: float = DEFAULT_FPS
    size: tuple[int, int] = DEFAULT_SIZE
    seed: int = 7
    noise: float = 0.004


def generate_corpus(out_dir, spec: CorpusSpec | None = None) -> CorpusManifest:
    """Write raw sequence files and manifest.csv under out_dir."""
    spec = spec or CorpusSpec()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = sorted(CLASS_PARAMS)
    entries = []
    h, w = spec.size
    for s in range(spec.n_subjects):
        subject_id = f"s{s + 1:02d}"
        face_rng = np.random.default_rng([spec.seed, 1000 + s])
        face = subject_face(face_rng, h, w)
        for c in range(spec.clips_per_subject):
            label = labels[c % len(labels)]
            clip_rng = np.random.default_rng([spec.seed, s, c])
            seq = make_clip(clip_rng, face, label, fps=spec.fps, noise=spec.noise)
            sample_id = f"{subject_id}_c{c + 1:02d}"
            rel = f"{sample_id}.msq"
            write_sequence(seq, out_dir / rel)
            entries.append(
                ManifestEntry(
                    sample_id=sample_id,
                    subject_id=subject_id,
                    label=label,
                    path=str(out_dir / rel),
                )
            )
    manifest = CorpusManifest(entries=tuple(entries))
    write_manifest(manifest, out_dir / "manifest.csv")
    return manifest
