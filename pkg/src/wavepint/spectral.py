"""Symbols, distribution sampling and dense spectral checks at desk scale.

The symbol of the block Toeplitz matrix ``T`` is
``h(theta) = L (1 + e^{2i theta}) - 2 e^{i theta} I = e^{i theta} (2 L cos(theta) - 2)``,
a polynomial in ``L = I + tau^2/2 (-Delta)``. Its singular values are
therefore ``2 |l_j cos(theta) - 1|`` for the eigenvalues ``l_j`` of ``L``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .operators import (
    BlockToeplitzT,
    SaddleOperator,
    default_laplacian,
    materialize_dense,
)
from .problem import GridSpec

SYMBOL_LIMIT = 512
EIG_LIMIT = 10_000
PRECOND_LIMIT = 4_000
SYMMETRY_TOL = 1e-12
RESIDUAL_TOL = 1e-9


def _laplacian_matrix(grid: GridSpec, laplacian=None) -> np.ndarray:
    return default_laplacian(grid, laplacian).dense()


def _L_eigenvalues(grid: GridSpec, laplacian=None) -> np.ndarray:
    mu = default_laplacian(grid, laplacian).eigenvalues()
    return 1.0 + 0.5 * grid.tau ** 2 * np.asarray(mu)


def symbol_h(theta: float, grid: GridSpec, laplacian=None) -> np.ndarray:
    """Dense ``m x m`` value of ``h(theta)``."""
    lap = default_laplacian(grid, laplacian)
    if lap.m > SYMBOL_LIMIT:
        raise ValueError(f"symbol_h is desk-scale only (m <= {SYMBOL_LIMIT}), got m={lap.m}")
    eye = np.eye(lap.m)
    L = eye + 0.5 * grid.tau ** 2 * lap.dense()
    return L * (1.0 + np.exp(2j * theta)) - 2.0 * np.exp(1j * theta) * eye


def symbol_g_eigenvalues(theta, grid: GridSpec, laplacian=None) -> np.ndarray:
    """Sorted eigenvalues of ``g(theta) = sqrt(|h(theta)|^2 + alpha^2 I)``.

    ``theta`` may be an array; the result then has shape ``theta.shape + (m,)``.
    """
    ell = _L_eigenvalues(grid, laplacian)
    c = np.cos(np.asarray(theta, dtype=float))[..., None]
    vals = np.sqrt(4.0 * (ell * c - 1.0) ** 2 + grid.alpha ** 2)
    return np.sort(vals, axis=-1)


def sample_grid(n: int) -> np.ndarray:
    """``theta_i = -2 pi + i 4 pi / (2n)`` for ``i = 1..2n``."""
    i = np.arange(1, 2 * n + 1)
    return -2.0 * np.pi + i * 4.0 * np.pi / (2 * n)


def sample_psi_g(grid: GridSpec, laplacian=None) -> np.ndarray:
    """Samples of the symmetrized symbol ``psi_g``, ``2 m n`` values.

    ``-g`` on the grid points of ``[-2 pi, 0]`` and ``+g`` on those of
    ``(0, 2 pi]``; each half is globally sorted and the halves concatenated.
    """
    theta = sample_grid(grid.n)
    neg = -symbol_g_eigenvalues(theta[: grid.n], grid, laplacian).ravel()
    pos = symbol_g_eigenvalues(theta[grid.n:], grid, laplacian).ravel()
    return np.concatenate([np.sort(neg), np.sort(pos)])


def symmetric_eigenvalues(M: np.ndarray, *, check_residual: bool = True, seed: int = 0) -> np.ndarray:
    """Full sorted spectrum of a dense symmetric matrix.

    Backed by LAPACK (Householder tridiagonalization plus implicit QL/QR).
    A few eigenpairs are sampled and their residuals checked.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] > EIG_LIMIT:
        raise ValueError(f"matrix too large for dense eigensolve ({M.shape[0]} > {EIG_LIMIT})")
    scale = max(np.abs(M).max(initial=0.0), np.finfo(float).tiny)
    asym = np.abs(M - M.T).max(initial=0.0)
    if asym > SYMMETRY_TOL * scale:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    try:
        w, Q = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"symmetric eigensolver did not converge: {exc}") from exc
    if check_residual and M.shape[0]:
        rng = np.random.default_rng(seed)
        idx = rng.choice(M.shape[0], size=min(8, M.shape[0]), replace=False)
        norm = np.linalg.norm(M, 2) if M.shape[0] <= 64 else np.abs(w).max()
        res = np.linalg.norm(M @ Q[:, idx] - Q[:, idx] * w[idx], axis=0).max()
        if res > RESIDUAL_TOL * max(norm, np.finfo(float).tiny):
            raise np.linalg.LinAlgError(f"eigenpair residual {res:.3e} too large")
    return w


def dense_inverse_sqrt_spd(Pinv: np.ndarray) -> np.ndarray:
    """``P^{-1/2}`` from a dense symmetric ``P^{-1}``."""
    Pinv = 0.5 * (Pinv + Pinv.T)
    w, Q = np.linalg.eigh(Pinv)
    if w.min() <= 0:
        raise ValueError(f"preconditioner is not SPD (min eigenvalue of P^-1 {w.min():.3e})")
    return (Q * np.sqrt(w)) @ Q.T


def preconditioned_spectrum(P, A_dense: np.ndarray) -> np.ndarray:
    """Sorted eigenvalues of ``P^{-1/2} A P^{-1/2}`` (similar to ``P^{-1} A``).

    ``P`` is any object with ``apply_inverse``; ``None`` means the identity.
    """
    A_dense = np.asarray(A_dense, dtype=float)
    size = A_dense.shape[0]
    if size > PRECOND_LIMIT:
        raise ValueError(f"preconditioned spectrum is desk-scale only (2mn <= {PRECOND_LIMIT})")
    if P is None:
        return symmetric_eigenvalues(A_dense)
    S = dense_inverse_sqrt_spd(materialize_dense(P.apply_inverse, size))
    M = S @ A_dense @ S
    return symmetric_eigenvalues(0.5 * (M + M.T))


@dataclass
class SpectralReport:
    size: int
    gamma: float
    grid: dict
    eigenvalues: list[float] = field(repr=False)
    samples: list[float] = field(repr=False)
    max_abs_diff: float
    mean_abs_diff: float
    outlier_count: int
    delta: float
    edge: int
    edge_max_abs_diff: float
    interval_check: Optional[dict] = None
    label: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralReport":
        return cls(**data)


def interior_mask(size: int, edge: int) -> np.ndarray:
    """Mask dropping ``edge`` entries at both ends of each half."""
    if size % 2:
        raise ValueError("spectrum length must be even")
    half = size // 2
    keep = np.ones(half, dtype=bool)
    if edge > 0:
        keep[:edge] = False
        keep[max(half - edge, 0):] = False
    return np.concatenate([keep, keep])


def compare_spectrum(
    eigs,
    samples,
    delta: float,
    *,
    edge: int = 0,
    grid: Optional[GridSpec] = None,
    label: str = "",
) -> SpectralReport:
    """Pair sorted eigenvalues with sorted symbol samples index by index."""
    e = np.sort(np.asarray(eigs, dtype=float))
    s = np.asarray(samples, dtype=float)
    if e.shape != s.shape:
        raise ValueError(f"length mismatch: {e.size} eigenvalues vs {s.size} samples")
    diff = np.abs(e - s)
    mask = interior_mask(e.size, edge) if e.size % 2 == 0 else np.ones(e.size, dtype=bool)
    inner = diff[mask]
    outer = diff[~mask]
    return SpectralReport(
        size=int(e.size),
        gamma=float(grid.gamma) if grid is not None else float("nan"),
        grid=asdict(grid) if grid is not None else {},
        eigenvalues=e.tolist(),
        samples=s.tolist(),
        max_abs_diff=float(inner.max(initial=0.0)),
        mean_abs_diff=float(inner.mean()) if inner.size else 0.0,
        outlier_count=int((inner > delta).sum()),
        delta=float(delta),
        edge=int(edge),
        edge_max_abs_diff=float(outer.max(initial=0.0)),
        label=label,
    )


def numeric_rank(M: np.ndarray, rel_tol: float = 1e-10) -> int:
    sv = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int((sv > rel_tol * sv[0]).sum())


def cluster_check(eigs, lo: float = 0.5, hi: float = 1.5, tol: float = 1e-8) -> dict:
    """Containment in ``(-hi,-lo) U (lo,hi)`` and the count away from ``+-1``."""
    a = np.abs(np.asarray(eigs, dtype=float))
    away = np.abs(a - 1.0) > tol
    return {
        "inside": bool(np.all((a > lo) & (a < hi))),
        "min_abs": float(a.min()),
        "max_abs": float(a.max()),
        "count_away_from_pm1": int(away.sum()),
        "tol": tol,
    }


# dense builders used by the rank and clustering studies

def dense_T(grid: GridSpec, laplacian=None) -> np.ndarray:
    T = BlockToeplitzT.from_grid(grid, laplacian)
    return materialize_dense(T, T.shape[0])


def dense_saddle(grid: GridSpec, laplacian=None) -> np.ndarray:
    A = SaddleOperator.from_grid(grid, laplacian)
    return materialize_dense(A, A.shape[0])


def _time_space(B1: np.ndarray, B2: np.ndarray, grid: GridSpec, laplacian=None) -> np.ndarray:
    K = _laplacian_matrix(grid, laplacian)
    return np.kron(B1, np.eye(K.shape[0])) + 0.5 * grid.tau ** 2 * np.kron(B2, K)


def dense_strang_S(grid: GridSpec, laplacian=None) -> np.ndarray:
    """Block circulant ``S = S1 (x) I + tau^2/2 S2 (x) (-Delta)``."""
    n = grid.n
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    c1 = np.zeros(n)
    c2 = np.zeros(n)
    for k, v in ((0, 1.0), (1, -2.0), (2, 1.0)):
        c1[k % n] += v
    for k, v in ((0, 1.0), (2, 1.0)):
        c2[k % n] += v
    return _time_space(c1[idx], c2[idx], grid, laplacian)


def dense_tau_G(grid: GridSpec, laplacian=None) -> np.ndarray:
    """``G = tridiag(-1,2,-1) (x) I + tau^2/2 tridiag(-1,0,-1) (x) (-Delta)``."""
    n = grid.n
    off = np.eye(n, k=1) + np.eye(n, k=-1)
    return _time_space(2.0 * np.eye(n) - off, -off, grid, laplacian)


def dense_strang_saddle(grid: GridSpec, laplacian=None) -> np.ndarray:
    """``s(A) = [[alpha I, S^T], [S, -alpha I]]``; ``|s(A)|`` is the Strang preconditioner."""
    S = dense_strang_S(grid, laplacian)
    a = grid.alpha
    eye = np.eye(S.shape[0])
    return np.block([[a * eye, S.T], [S, -a * eye]])


def dense_H(grid: GridSpec, laplacian=None) -> np.ndarray:
    """``H = [[alpha I, T^T], [T, -alpha I]]`` (``A`` without corner weights)."""
    T = dense_T(grid, laplacian)
    a = grid.alpha
    eye = np.eye(T.shape[0])
    return np.block([[a * eye, T.T], [T, -a * eye]])


def distribution_report(grid: GridSpec, *, edge: Optional[int] = None, delta: float = 1e-1,
                        laplacian=None) -> SpectralReport:
    """Compare the spectrum of ``A`` with samples of ``psi_g``.

    ``edge`` defaults to ``2m`` entries trimmed from each end of each half.
    """
    m = default_laplacian(grid, laplacian).m
    edge = 2 * m if edge is None else edge
    eigs = symmetric_eigenvalues(dense_saddle(grid, laplacian))
    return compare_spectrum(eigs, sample_psi_g(grid, laplacian), delta, edge=edge, grid=grid,
                            label="A vs psi_g")
