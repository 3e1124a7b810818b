"""Shared builders for planted linear systems and small sequences."""

import numpy as np
import pytest

from modesift.seqio import FrameSequence, SnapshotPair


def planted_system(m=200, n=20, noise=0.0, seed=1, fps=200.0):
    """Rank-3 linear evolution: one conjugate pair plus one decaying real mode.

    Returns (data (m, n+1), true eigenvalues, SnapshotPair). The data is real
    by construction; optional iid Gaussian noise is added on top.
    """
    rng = np.random.default_rng(seed)
    mu = np.array([0.995 * np.exp(0.4j), 0.995 * np.exp(-0.4j), 0.9])
    phi = rng.normal(size=(m, 3)) + 1j * rng.normal(size=(m, 3))
    phi[:, 1] = phi[:, 0].conj()
    phi[:, 2] = phi[:, 2].real
    amps = np.array([2.0 + 1.0j, 2.0 - 1.0j, 3.0])
    vand = mu[:, None] ** np.arange(n + 1)[None, :]
    data = ((phi * amps[None, :]) @ vand).real
    if noise:
        data = data + rng.normal(scale=noise, size=data.shape)
    snap = SnapshotPair(psi0=data[:, :-1], psi1=data[:, 1:], fps=fps)
    return data, mu, snap


def random_snapshots(m, n_pairs, seed=0, fps=100.0):
    """Generic full-rank snapshot pair from a random walk-ish signal."""
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(m, n_pairs + 1))
    return SnapshotPair(psi0=data[:, :-1], psi1=data[:, 1:], fps=fps)


def oscillating_sequence(freq_hz, fps, n_f=64, m_side=10, amplitude=0.2, seed=0):
    """FrameSequence carrying both quadratures of one oscillation."""
    rng = np.random.default_rng(seed)
    t = np.arange(n_f) / fps
    v1 = rng.normal(size=m_side * m_side)
    v2 = rng.normal(size=m_side * m_side)
    v1 /= np.abs(v1).max() * 4
    v2 /= np.abs(v2).max() * 4
    flat = 0.5 + amplitude * (
        np.outer(np.sin(2 * np.pi * freq_hz * t), v1)
        + np.outer(np.cos(2 * np.pi * freq_hz * t), v2)
    )
    return FrameSequence(frames=np.clip(flat, 0, 1).reshape(n_f, m_side, m_side), fps=fps)


@pytest.fixture
def small_sequence():
    rng = np.random.default_rng(11)
    return FrameSequence(frames=rng.uniform(0.1, 0.9, size=(10, 6, 7)), fps=50.0)
