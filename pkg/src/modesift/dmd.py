"""Exact dynamic mode decomposition of time-shifted snapshot matrices.

Given snapshots psi0, psi1 with psi1 one step ahead, the reduced operator
F = U* psi1 V inv(Sigma) is built from the economy SVD psi0 = U Sigma V*.
Its eigendecomposition F = Y diag(mu) Z* (Z* Y = I) yields spatial modes
Phi = U Y and per-step eigenvalues mu, so

    psi0  is approximated by  Phi diag(alpha) Vand,   Vand[i, k] = mu_i ** k.

The amplitude vector alpha minimizes the squared Frobenius residual against
the full psi0; it solves P alpha = q with

    P = (Y* Y) o conj(Vand Vand*)        (o = elementwise product)
    q = conj(diag(Vand V Sigma* Y))

Modes are sorted by descending |alpha|, ties by descending |mu|.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    EigFailureError,
    EmptyMaskError,
)
from .seqio import SnapshotPair

logger = logging.getLogger(__name__)

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class DmdDecomposition:
    """Result of decompose(). Immutable; arrays are read-only views.

    Attributes:
        modes: (M, r) complex spatial modes, Phi = U Y.
        eigenvalues: (r,) complex per-step eigenvalues, sorted with amplitudes.
        amplitudes: (r,) complex mode amplitudes, descending |alpha|.
        singular_values: (r,) retained singular values, nonincreasing.
        left_basis: (M, r) left singular vectors U of psi0.
        right_basis: (N, r) right singular vectors V of psi0.
        eig_right: (r, r) right eigenvectors Y of F, unit-norm columns.
        eig_left: (r, r) Z with Z* Y = I.
        natural_order: (r,) position each sorted mode held in the eigensolver
            output, before amplitude sorting.
        rank: r.
        n_pairs: N, number of snapshot columns the fit used.
        fps: frame rate the snapshots were taken at.
        amp_fallback: True if the amplitude system was solved by least squares
            because the normal matrix was numerically singular.
    """

    modes: np.ndarray
    eigenvalues: np.ndarray
    amplitudes: np.ndarray
    singular_values: np.ndarray
    left_basis: np.ndarray
    right_basis: np.ndarray
    eig_right: np.ndarray
    eig_left: np.ndarray
    natural_order: np.ndarray
    rank: int
    n_pairs: int
    fps: float
    amp_fallback: bool = False

    def __post_init__(self):
        for name in (
            "modes", "eigenvalues", "amplitudes", "singular_values",
            "left_basis", "right_basis", "eig_right", "eig_left", "natural_order",
        ):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def vandermonde(eigenvalues: np.ndarray, n_cols: int) -> np.ndarray:
    """Vandermonde matrix V[i, k] = eigenvalues[i] ** k, k = 0 .. n_cols-1."""
    if n_cols < 1:
        raise ValueError(f"n_cols must be >= 1, got {n_cols}")
    mu = np.asarray(eigenvalues, dtype=np.complex128).reshape(-1, 1)
    return mu ** np.arange(n_cols)[None, :]


def quadratic_terms(decomp: DmdDecomposition) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian form of the amplitude objective.

    Returns (P, q) such that the fitting residual satisfies
    loss(decomp, snap, alpha) = alpha* P alpha - 2 Re(q* alpha) + const,
    where the constant collects data energy independent of alpha.
    """
    y = decomp.eig_right
    vand = vandermonde(decomp.eigenvalues, decomp.n_pairs)
    p = (y.conj().T @ y) * np.conj(vand @ vand.conj().T)
    v_sigma = decomp.right_basis * decomp.singular_values[None, :]
    q = np.conj(np.diag(vand @ v_sigma @ y))
    return p, q


def decompose(snap: SnapshotPair, rank_tol: float = DEFAULT_RANK_TOL) -> DmdDecomposition:
    """Fit an exact mode decomposition to a snapshot pair.

    Singular values below rank_tol * sigma_max are truncated. Amplitudes are
    fitted by solving P alpha = q and modes are sorted by descending |alpha|.

    Raises:
        DegenerateInputError: psi0 is numerically zero.
        EigFailureError: the reduced operator could not be diagonalized.
    """
    psi0, psi1 = snap.psi0, snap.psi1
    u, sigma, vh = np.linalg.svd(psi0, full_matrices=False)
    if sigma.size == 0 or sigma[0] <= 0.0:
        raise DegenerateInputError("snapshot matrix is zero")
    r = int(np.count_nonzero(sigma > rank_tol * sigma[0]))
    u = u[:, :r]
    sigma = sigma[:r].copy()
    v = vh[:r].conj().T

    f_reduced = (u.conj().T @ psi1 @ v) / sigma[None, :]
    try:
        mu, y = np.linalg.eig(f_reduced)
    except np.linalg.LinAlgError as exc:
        raise EigFailureError(f"eigendecomposition failed: {exc}") from exc
    mu = mu.astype(np.complex128)
    y = y.astype(np.complex128)
    y = y / np.linalg.norm(y, axis=0)[None, :]
    try:
        y_inv = np.linalg.inv(y)
    except np.linalg.LinAlgError as exc:
        raise EigFailureError("reduced operator is defective (eigenvectors not invertible)") from exc
    z = y_inv.conj().T
    modes = u @ y

    vand = vandermonde(mu, snap.n_pairs)
    p = (y.conj().T @ y) * np.conj(vand @ vand.conj().T)
    v_sigma = v * sigma[None, :]
    q = np.conj(np.diag(vand @ v_sigma @ y))
    amp_fallback = False
    try:
        alpha = np.linalg.solve(p, q)
    except np.linalg.LinAlgError:
        alpha = np.linalg.lstsq(p, q, rcond=None)[0]
        amp_fallback = True
        logger.warning("amplitude normal matrix singular; used least-squares fallback")

    order = np.lexsort((-np.abs(mu), -np.abs(alpha)))
    return DmdDecomposition(
        modes=modes[:, order],
        eigenvalues=mu[order],
        amplitudes=alpha[order],
        singular_values=sigma,
        left_basis=u,
        right_basis=v,
        eig_right=y[:, order],
        eig_left=z[:, order],
        natural_order=order.astype(np.intp),
        rank=r,
        n_pairs=snap.n_pairs,
        fps=snap.fps,
        amp_fallback=amp_fallback,
    )


def optimal_amplitudes(decomp: DmdDecomposition, snap: SnapshotPair) -> np.ndarray:
    """Residual-minimizing amplitudes for an existing decomposition.

    Recomputes the solution of P alpha = q in the decomposition's mode order;
    equals decomp.amplitudes up to solver roundoff.
    """
    if snap.n_pairs != decomp.n_pairs:
        raise DimensionMismatchError(
            f"snapshot pair has {snap.n_pairs} columns, decomposition used {decomp.n_pairs}"
        )
    p, q = quadratic_terms(decomp)
    try:
        return np.linalg.solve(p, q)
    except np.linalg.LinAlgError:
        logger.warning("amplitude normal matrix singular; used least-squares fallback")
        return np.linalg.lstsq(p, q, rcond=None)[0]


def reconstruct(decomp: DmdDecomposition, mask: np.ndarray, n_out: int) -> np.ndarray:
    """Real-valued reconstruction over n_out steps from the masked modes.

    Args:
        mask: boolean (r,), True for modes to keep.
        n_out: number of output columns; column k uses eigenvalue powers mu**k.

    Returns:
        (M, n_out) float64 matrix (real part of the modal sum).
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (decomp.rank,):
        raise DimensionMismatchError(
            f"mask shape {mask.shape} does not match rank {decomp.rank}"
        )
    if not mask.any():
        raise EmptyMaskError("reconstruction mask selects no modes")
    if n_out < 1:
        raise ValueError(f"n_out must be >= 1, got {n_out}")
    vand = vandermonde(decomp.eigenvalues[mask], n_out)
    weighted = decomp.modes[:, mask] * decomp.amplitudes[mask][None, :]
    return np.real(weighted @ vand)


def loss(decomp: DmdDecomposition, snap: SnapshotPair, alpha: np.ndarray | None = None) -> float:
    """Squared Frobenius residual || psi0 - Phi diag(alpha) Vand ||_F^2.

    Measured against the full snapshot matrix, so energy outside the truncated
    SVD subspace contributes a floor independent of alpha.
    """
    if alpha is None:
        alpha = decomp.amplitudes
    alpha = np.asarray(alpha, dtype=np.complex128)
    if alpha.shape != (decomp.rank,):
        raise DimensionMismatchError(
            f"alpha shape {alpha.shape} does not match rank {decomp.rank}"
        )
    if snap.n_pairs != decomp.n_pairs:
        raise DimensionMismatchError(
            f"snapshot pair has {snap.n_pairs} columns, decomposition used {decomp.n_pairs}"
        )
    vand = vandermonde(decomp.eigenvalues, decomp.n_pairs)
    resid = snap.psi0 - (decomp.modes * alpha[None, :]) @ vand
    return float(np.linalg.norm(resid) ** 2)


def decomposition_manifest(decomp: DmdDecomposition) -> dict:
    """JSON-ready summary: rank, rates, spectra, amplitudes, singular values."""
    pairs = lambda z: [[float(c.real), float(c.imag)] for c in z]  # noqa: E731
    return {
        "rank": decomp.rank,
        "n_pairs": decomp.n_pairs,
        "fps": decomp.fps,
        "eigenvalues": pairs(decomp.eigenvalues),
        "amplitudes": pairs(decomp.amplitudes),
        "singular_values": [float(s) for s in decomp.singular_values],
        "amp_fallback": decomp.amp_fallback,
    }
