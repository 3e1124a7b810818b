"""Temporal interpolation along a curve basis.

A sequence of n frames is modeled as points on a curve in image space,

    x(t) = mean + B f(t),    f(t) = [f_1(t), ..., f_{n-1}(t)],
    f_k(t) = sin(pi k t + pi (n - k) / (2 n)),    t in (0, 1],

where B is fitted by least squares at the sample times t = i/n, i = 1..n.
At those times f_k(i/n) = cos(pi k (i - 1/2) / n), the classical eigenvectors
of the path-graph Laplacian, so the n-1 curves plus the constant span all of
R^n and the fit interpolates the input exactly. Synthesizing at t = j/n_out
rescales the sequence to any length, shrinking or stretching.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import TooFewFramesError
from .seqio import FrameSequence

logger = logging.getLogger(__name__)


def curve(n: int, k: int, t) -> np.ndarray:
    """Basis curve f_k^n(t) = sin(pi k t + pi (n - k) / (2 n)).

    k = 0 gives the constant 1. t may be scalar or array, 0 < t <= 1.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= k <= n - 1:
        raise ValueError(f"k must be in [0, {n - 1}], got {k}")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t <= 0) or np.any(t > 1):
        raise ValueError("t must lie in (0, 1]")
    return np.sin(np.pi * k * t + np.pi * (n - k) / (2.0 * n))


def curve_matrix(n: int, ts: np.ndarray) -> np.ndarray:
    """Design matrix F[j, k-1] = f_k^n(ts[j]) for k = 1 .. n-1."""
    ts = np.asarray(ts, dtype=np.float64)
    if np.any(ts <= 0) or np.any(ts > 1):
        raise ValueError("sample times must lie in (0, 1]")
    k = np.arange(1, n)[None, :]
    return np.sin(np.pi * k * ts[:, None] + np.pi * (n - k) / (2.0 * n))


@dataclass(frozen=True)
class TimModel:
    """Fitted interpolation model.

    mean_frame is the temporal mean (M,), basis_map the (M, n-1) coefficient
    matrix B, residuals the per-frame fitting residual norms (zero up to
    roundoff since the basis interpolates), degenerate True when all input
    frames were identical (B is then all zeros).
    """

    mean_frame: np.ndarray
    basis_map: np.ndarray
    n: int
    n_r: int
    n_c: int
    fps: float
    residuals: np.ndarray
    degenerate: bool = False


def fit(seq: FrameSequence) -> TimModel:
    """Fit mean and basis map to a sequence by least squares."""
    n = seq.n_f
    x = seq.frames.reshape(n, -1).T  # (M, n)
    mean = x.mean(axis=1)
    centered = x - mean[:, None]
    degenerate = not centered.any()
    if degenerate:
        logger.warning("all frames identical; interpolation model is constant")
    design = curve_matrix(n, np.arange(1, n + 1) / n)  # (n, n-1)
    coeffs, *_ = np.linalg.lstsq(design, centered.T, rcond=None)
    basis_map = coeffs.T  # (M, n-1)
    residuals = np.linalg.norm(centered - basis_map @ design.T, axis=0)
    return TimModel(
        mean_frame=mean,
        basis_map=basis_map,
        n=n,
        n_r=seq.n_r,
        n_c=seq.n_c,
        fps=seq.fps,
        residuals=residuals,
        degenerate=degenerate,
    )


def synthesize(model: TimModel, n_out: int) -> FrameSequence:
    """Evaluate the model at t = j/n_out, j = 1 .. n_out.

    n_out may exceed the source length (extrapolation onto a denser grid).
    Output values clamp to [0, 1]; the frame rate scales by n_out / n.
    """
    if n_out < 2:
        raise TooFewFramesError(f"need n_out >= 2, got {n_out}")
    ts = np.arange(1, n_out + 1) / n_out
    design = curve_matrix(model.n, ts)  # (n_out, n-1)
    mats = model.mean_frame[:, None] + model.basis_map @ design.T  # (M, n_out)
    frames = np.clip(mats.T.reshape(n_out, model.n_r, model.n_c), 0.0, 1.0)
    return FrameSequence(
        frames=frames,
        fps=model.fps * n_out / model.n,
    )


def grid_positions(n: int, n_out: int) -> np.ndarray:
    """1-based source positions the shortened grid lands on.

    Position j (1-based) of an n_out-point grid maps onto
    1 + floor((j - 1)(n - 1) / (n_out - 1)) of the n-point source grid,
    computed in exact integer arithmetic. Endpoints map to 1 and n.
    """
    if n_out < 2 or n < 2:
        raise ValueError(f"need n, n_out >= 2, got n={n}, n_out={n_out}")
    j = np.arange(n_out, dtype=np.int64)
    return (1 + (j * (n - 1)) // (n_out - 1)).astype(np.intp)
