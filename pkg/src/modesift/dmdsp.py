"""Sparsity-promoting selection of mode amplitudes.

Minimizes J(alpha) + gamma * sum_i |alpha_i| over complex amplitudes, where
J is the quadratic fitting residual from dmd.quadratic_terms. The solver is
ADMM on the splitting alpha - beta = 0:

    alpha step:  (P + rho/2 I) alpha = q + rho/2 (beta - lambda / rho)
    beta step:   complex soft threshold of alpha + lambda / rho at gamma / rho
    dual step:   lambda += rho (alpha - beta)

The beta iterate is returned: its zeros are exact, which is what structure
extraction keys on. A sweep over a log-spaced gamma grid produces one record
per gamma; each record carries the hard zero/nonzero structure, amplitudes
re-polished under that structure (equality-constrained minimum of J), and
bookkeeping for plotting performance against compression.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import dmd
from .errors import AllZeroError, DimensionMismatchError
from .seqio import SnapshotPair

logger = logging.getLogger(__name__)

DEFAULT_GAMMA_MIN = 38.0
DEFAULT_GAMMA_MAX = 20000.0
DEFAULT_GAMMA_COUNT = 400
DEFAULT_ZERO_TOL = 1e-6


@dataclass(frozen=True)
class AdmmParams:
    """ADMM knobs: step rho, iteration cap, absolute/relative tolerances."""

    rho: float = 1.0
    max_iter: int = 10000
    eps_abs: float = 1e-6
    eps_rel: float = 1e-4

    def __post_init__(self):
        if self.rho <= 0 or self.max_iter < 1 or self.eps_abs <= 0 or self.eps_rel < 0:
            raise ValueError(f"invalid ADMM parameters: {self}")

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "max_iter": self.max_iter,
            "eps_abs": self.eps_abs,
            "eps_rel": self.eps_rel,
        }


@dataclass(frozen=True)
class AdmmResult:
    alpha: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True)
class PolishResult:
    alpha: np.ndarray
    kkt_fallback: bool


@dataclass(frozen=True)
class SparsityRecord:
    """One point on the sparsity path.

    structure[i] is True where amplitude i was driven to zero. alpha_polished
    holds the equality-constrained refit (exact zeros on the structure), loss
    its residual J, nnz the retained mode count, percent_preserved
    100 * nnz / rank, and performance_loss_pct the relative residual
    100 * sqrt(J / ||psi0||_F^2). flags lists solver events: admm_max_iter,
    all_zero, kkt_fallback.
    """

    gamma: float
    alpha_admm: np.ndarray
    structure: np.ndarray
    alpha_polished: np.ndarray
    loss: float
    nnz: int
    percent_preserved: float
    performance_loss_pct: float
    flags: tuple[str, ...] = ()


def default_gamma_grid(
    lo: float = DEFAULT_GAMMA_MIN,
    hi: float = DEFAULT_GAMMA_MAX,
    count: int = DEFAULT_GAMMA_COUNT,
) -> np.ndarray:
    """Log-spaced gamma grid, ascending."""
    if not (0 < lo <= hi) or count < 1:
        raise ValueError(f"invalid gamma grid: lo={lo}, hi={hi}, count={count}")
    return np.logspace(np.log10(lo), np.log10(hi), count)


def _soft_threshold(a: np.ndarray, kappa: float) -> np.ndarray:
    """Complex soft threshold: shrink magnitudes by kappa, keep phases."""
    mag = np.abs(a)
    scale = np.zeros_like(mag)
    np.divide(mag - kappa, mag, out=scale, where=mag > kappa)
    return scale * a


def _admm(
    p: np.ndarray,
    q: np.ndarray,
    alpha0: np.ndarray,
    gamma: float,
    params: AdmmParams,
) -> AdmmResult:
    r = q.shape[0]
    rho = params.rho
    shifted = p + (rho / 2.0) * np.eye(r)
    beta = alpha0.astype(np.complex128).copy()
    lam = np.zeros(r, dtype=np.complex128)
    kappa = gamma / rho
    sqrt_r = np.sqrt(r)
    alpha = beta
    for it in range(1, params.max_iter + 1):
        rhs = q + (rho / 2.0) * (beta - lam / rho)
        alpha = np.linalg.solve(shifted, rhs)
        beta_new = _soft_threshold(alpha + lam / rho, kappa)
        lam = lam + rho * (alpha - beta_new)
        r_prim = np.linalg.norm(alpha - beta_new)
        r_dual = rho * np.linalg.norm(beta_new - beta)
        beta = beta_new
        eps_prim = sqrt_r * params.eps_abs + params.eps_rel * max(
            np.linalg.norm(alpha), np.linalg.norm(beta)
        )
        eps_dual = sqrt_r * params.eps_abs + params.eps_rel * np.linalg.norm(lam)
        if r_prim <= eps_prim and r_dual <= eps_dual:
            return AdmmResult(alpha=beta, iterations=it, converged=True)
    logger.warning("ADMM hit max_iter=%d at gamma=%g", params.max_iter, gamma)
    return AdmmResult(alpha=beta, iterations=params.max_iter, converged=False)


def admm_solve(
    decomp: dmd.DmdDecomposition,
    gamma: float,
    params: AdmmParams | None = None,
) -> AdmmResult:
    """Solve the penalized amplitude problem at one gamma.

    Initialized at the unpenalized optimum, so gamma -> 0 returns it directly.
    On hitting max_iter the best iterate is returned with converged=False.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    params = params or AdmmParams()
    p, q = dmd.quadratic_terms(decomp)
    return _admm(p, q, decomp.amplitudes, gamma, params)


def extract_structure(alpha: np.ndarray, zero_tol: float = DEFAULT_ZERO_TOL) -> np.ndarray:
    """Boolean structure: True where |alpha_i| <= zero_tol * max |alpha|.

    Scale-invariant by construction. Raises AllZeroError when every entry
    falls below the threshold (including the all-zero vector).
    """
    if zero_tol < 0:
        raise ValueError(f"zero_tol must be >= 0, got {zero_tol}")
    mag = np.abs(np.asarray(alpha))
    structure = mag <= zero_tol * mag.max()
    if structure.all():
        raise AllZeroError("every amplitude is below the zero threshold")
    return structure


def _polish(
    p: np.ndarray,
    q: np.ndarray,
    structure: np.ndarray,
) -> PolishResult:
    r = q.shape[0]
    m = int(structure.sum())
    if m == 0:
        try:
            return PolishResult(alpha=np.linalg.solve(p, q), kkt_fallback=False)
        except np.linalg.LinAlgError:
            return PolishResult(
                alpha=np.linalg.lstsq(p, q, rcond=None)[0], kkt_fallback=True
            )
    e = np.eye(r)[:, structure]
    kkt = np.zeros((r + m, r + m), dtype=np.complex128)
    kkt[:r, :r] = p
    kkt[:r, r:] = e
    kkt[r:, :r] = e.T
    rhs = np.concatenate([q, np.zeros(m, dtype=np.complex128)])
    fallback = False
    try:
        alpha = np.linalg.solve(kkt, rhs)[:r]
    except np.linalg.LinAlgError:
        fallback = True
        free = ~structure
        alpha = np.zeros(r, dtype=np.complex128)
        alpha[free] = np.linalg.lstsq(
            p[np.ix_(free, free)], q[free], rcond=None
        )[0]
        logger.warning("bordered system singular; refit on free entries only")
    alpha = alpha.copy()
    alpha[structure] = 0.0  # constrained entries are exact zeros by contract
    return PolishResult(alpha=alpha, kkt_fallback=fallback)


def polish(
    decomp: dmd.DmdDecomposition,
    structure: np.ndarray,
) -> PolishResult:
    """Minimize J over amplitudes constrained to zero on the structure.

    Solves the bordered system [[P, E], [E^T, 0]] [alpha; nu] = [q; 0] where
    E selects structure entries; falls back to a least-squares refit on the
    free entries if that system is singular (kkt_fallback=True).
    """
    structure = np.asarray(structure, dtype=bool)
    if structure.shape != (decomp.rank,):
        raise DimensionMismatchError(
            f"structure shape {structure.shape} does not match rank {decomp.rank}"
        )
    if structure.all():
        raise ValueError("structure constrains every amplitude to zero")
    p, q = dmd.quadratic_terms(decomp)
    return _polish(p, q, structure)


def gamma_sweep(
    decomp: dmd.DmdDecomposition,
    snap: SnapshotPair,
    gammas: np.ndarray | None = None,
    params: AdmmParams | None = None,
    zero_tol: float = DEFAULT_ZERO_TOL,
) -> list[SparsityRecord]:
    """Trace the sparsity path over a gamma grid.

    Each gamma is solved independently (cold start from the unpenalized
    optimum). Per-gamma solver trouble lands in that record's flags; the
    sweep itself never aborts.
    """
    gammas = default_gamma_grid() if gammas is None else np.asarray(gammas, dtype=float)
    params = params or AdmmParams()
    p, q = dmd.quadratic_terms(decomp)
    r = decomp.rank
    data_energy = float(np.linalg.norm(snap.psi0) ** 2)
    records = []
    for gamma in gammas:
        flags = []
        res = _admm(p, q, decomp.amplitudes, float(gamma), params)
        if not res.converged:
            flags.append("admm_max_iter")
        try:
            structure = extract_structure(res.alpha, zero_tol)
        except AllZeroError:
            flags.append("all_zero")
            structure = np.ones(r, dtype=bool)
            alpha_pol = np.zeros(r, dtype=np.complex128)
        else:
            pol = _polish(p, q, structure)
            if pol.kkt_fallback:
                flags.append("kkt_fallback")
            alpha_pol = pol.alpha
        j_val = dmd.loss(decomp, snap, alpha_pol)
        nnz = r - int(structure.sum())
        records.append(
            SparsityRecord(
                gamma=float(gamma),
                alpha_admm=res.alpha,
                structure=structure,
                alpha_polished=alpha_pol,
                loss=j_val,
                nnz=nnz,
                percent_preserved=100.0 * nnz / r,
                performance_loss_pct=100.0 * float(np.sqrt(j_val / data_energy)),
                flags=tuple(flags),
            )
        )
    return records


def select_percentage(records: list[SparsityRecord], percent: float) -> SparsityRecord:
    """Record whose percent_preserved is closest to the target.

    Ties break toward smaller loss, then smaller gamma.
    """
    if not records:
        raise ValueError("no sweep records to select from")
    return min(
        records,
        key=lambda rec: (abs(rec.percent_preserved - percent), rec.loss, rec.gamma),
    )


def sweep_to_csv(records: list[SparsityRecord], path) -> None:
    """Write one CSV row per record: gamma, nnz, percents, loss."""
    lines = ["gamma,nnz,percent_preserved,loss,performance_loss_pct"]
    for rec in records:
        lines.append(
            f"{rec.gamma!r},{rec.nnz},{rec.percent_preserved!r},"
            f"{rec.loss!r},{rec.performance_loss_pct!r}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
