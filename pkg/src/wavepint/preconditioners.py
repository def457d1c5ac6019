"""Block-diagonal SPD preconditioners for the all-at-once saddle-point system.

Every preconditioner ``P`` exposes ``apply_inverse(v)`` returning
``P^{-1} v`` for a vector of length ``2*m*n``. The fast variants follow the
same three steps: transform, scale or solve per frequency, transform back.
"""
from __future__ import annotations


import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .operators import (
    BlockToeplitzT,
    NegativeLaplacian,
    ZeroLaplacian,
    default_laplacian,
    materialize_dense,
)
from .problem import GridSpec
from .transforms import (
    IdentityPlan,
    circulant_eigenvalues,
    dst1,
    enforce_real,
    fft,
    ifft,
    space_sine_plan,
)

ABS_H_LIMIT = 10_000


class Preconditioner:
    """Common shape handling; subclasses implement ``_solve(V1, V2)``."""

    method = "base"

    def __init__(self, n: int, m: int, alpha: float):
        self.n, self.m, self.alpha = n, m, float(alpha)
        self.half = n * m
        self.size = 2 * self.half

    def _split(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.size,):
            raise ValueError(f"expected vector of length {self.size}, got shape {v.shape}")
        return v[: self.half].reshape(self.n, self.m), v[self.half:].reshape(self.n, self.m)

    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        V1, V2 = self._split(v)
        Z1, Z2 = self._solve(V1, V2)
        scale = float(np.linalg.norm(v))
        Z1 = enforce_real(Z1, scale / self.alpha, self.method)
        Z2 = enforce_real(Z2, scale / self.alpha, self.method)
        return np.concatenate([Z1.ravel(), Z2.ravel()])

    __call__ = apply_inverse

    def _solve(self, V1, V2):
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n}, m={self.m}, alpha={self.alpha:.3e})"


class IdentityPreconditioner(Preconditioner):
    method = "none"

    def _solve(self, V1, V2):
        return V1.copy(), V2.copy()


def laplacian_eigenpairs(grid: GridSpec, laplacian=None):
    """Eigenvalues of ``-Delta_m`` and the orthogonal transform diagonalizing it."""
    lap = default_laplacian(grid, laplacian)
    if isinstance(lap, ZeroLaplacian):
        return lap.eigenvalues(), IdentityPlan(lap.m)
    if not isinstance(lap, NegativeLaplacian):
        raise ValueError("fast diagonalization needs the uniform-grid Laplacian")
    return lap.eigenvalues(), space_sine_plan(grid.d, grid.m1)


def _wrapped_column(n: int, taps: dict[int, float]) -> np.ndarray:
    c = np.zeros(n)
    for k, val in taps.items():
        c[k % n] += val
    return c


def strang_time_eigenvalues(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the Strang circulants built from ``B^(1)`` and ``B^(2)``."""
    s1 = circulant_eigenvalues(_wrapped_column(n, {0: 1.0, 1: -2.0, 2: 1.0}))
    s2 = circulant_eigenvalues(_wrapped_column(n, {0: 1.0, 2: 1.0}))
    return s1, s2


def tau_time_eigenvalues(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of ``tridiag(-1, 2, -1)`` and ``tridiag(-1, 0, -1)`` in DST order."""
    c = np.cos(np.arange(1, n + 1) * np.pi / (n + 1))
    return 2.0 - 2.0 * c, -2.0 * c


class StrangPreconditioner(Preconditioner):
    """``blockdiag(sqrt(S^T S + a^2 I), sqrt(S S^T + a^2 I))`` with block circulant ``S``."""

    method = "strang"

    def __init__(self, grid: GridSpec, laplacian=None):
        lap = default_laplacian(grid, laplacian)
        super().__init__(grid.n, lap.m, grid.alpha)
        mu, self.space = laplacian_eigenpairs(grid, lap)
        s1, s2 = strang_time_eigenvalues(grid.n)
        lam = s1[:, None] + 0.5 * grid.tau ** 2 * s2[:, None] * mu[None, :]
        self.diagonal = np.sqrt(np.abs(lam) ** 2 + self.alpha ** 2)

    def _solve(self, V1, V2):
        d = self.diagonal
        # block 1: (F (x) U) D^-1 (F (x) U)^*, block 2 uses the conjugate pattern
        Z1 = ifft(self.space.apply(fft(self.space.apply(V1, -1), 0) / d, -1), 0)
        Z2 = fft(self.space.apply(ifft(self.space.apply(V2, -1), 0) / d, -1), 0)
        return Z1, Z2


class TauPreconditioner(Preconditioner):
    """``blockdiag(sqrt(G^T G + a^2 I), sqrt(G G^T + a^2 I))``; ``G`` is symmetric."""

    method = "tau"

    def __init__(self, grid: GridSpec, laplacian=None):
        lap = default_laplacian(grid, laplacian)
        super().__init__(grid.n, lap.m, grid.alpha)
        mu, self.space = laplacian_eigenpairs(grid, lap)
        g1, g2 = tau_time_eigenvalues(grid.n)
        lam = g1[:, None] + 0.5 * grid.tau ** 2 * g2[:, None] * mu[None, :]
        self.diagonal = np.sqrt(lam ** 2 + self.alpha ** 2)

    def _transform(self, V):
        return self.space.apply(dst1(V, 0), -1)

    def _solve(self, V1, V2):
        d = self.diagonal
        return self._transform(self._transform(V1) / d), self._transform(self._transform(V2) / d)


class _ShiftedLaplacianSolves:
    """Factorizations of ``a_k I + (tau^2/2) b_k (-Delta)`` for each time frequency."""

    def __init__(self, a: np.ndarray, b: np.ndarray, tau: float, laplacian):
        K = sp.csc_matrix(laplacian.sparse())
        eye = sp.identity(K.shape[0], format="csc")
        self.factors = []
        cache: dict[tuple[float, float], object] = {}
        for ak, bk in zip(a, b):
            key = (float(ak), float(bk))
            if key not in cache:
                try:
                    cache[key] = spla.splu(sp.csc_matrix(ak * eye + 0.5 * tau ** 2 * bk * K))
                except RuntimeError as exc:
                    raise np.linalg.LinAlgError(f"shifted Laplacian solve failed: {exc}") from exc
            self.factors.append(cache[key])

    def solve(self, R: np.ndarray) -> np.ndarray:
        """Solve row ``k`` of ``R`` (shape ``(n, m)``, real or complex) with factor ``k``."""
        out = np.empty_like(R)
        for k, lu in enumerate(self.factors):
            rk = R[k]
            if np.iscomplexobj(rk):
                w = lu.solve(np.column_stack([rk.real, rk.imag]))
                out[k] = w[:, 0] + 1j * w[:, 1]
            else:
                out[k] = lu.solve(rk)
        return out


class ModStrangPreconditioner(Preconditioner):
    """Circulant time factor with the spatial part kept as a sparse solve.

    Each block is ``sqrt(S1^T S1 + a^2 I) (x) I - tau^2/2 sqrt(S2^T S2) (x) Delta``;
    no fast diagonalization of ``Delta`` is required.
    """

    method = "mod-strang"

    def __init__(self, grid: GridSpec, laplacian=None):
        lap = default_laplacian(grid, laplacian)
        super().__init__(grid.n, lap.m, grid.alpha)
        s1, s2 = strang_time_eigenvalues(grid.n)
        self.a = np.sqrt(np.abs(s1) ** 2 + self.alpha ** 2)
        self.b = np.abs(s2)
        self.solver = _ShiftedLaplacianSolves(self.a, self.b, grid.tau, lap)

    def _solve(self, V1, V2):
        Z1 = ifft(self.solver.solve(fft(V1, 0)), 0)
        Z2 = fft(self.solver.solve(ifft(V2, 0)), 0)
        return Z1, Z2


class ModTauPreconditioner(Preconditioner):
    """Tau analogue of :class:`ModStrangPreconditioner` (DST in time, real arithmetic)."""

    method = "mod-tau"

    def __init__(self, grid: GridSpec, laplacian=None):
        lap = default_laplacian(grid, laplacian)
        super().__init__(grid.n, lap.m, grid.alpha)
        g1, g2 = tau_time_eigenvalues(grid.n)
        self.a = np.sqrt(g1 ** 2 + self.alpha ** 2)
        self.b = np.abs(g2)
        self.solver = _ShiftedLaplacianSolves(self.a, self.b, grid.tau, lap)

    def _solve(self, V1, V2):
        Z1 = dst1(self.solver.solve(dst1(V1, 0)), 0)
        Z2 = dst1(self.solver.solve(dst1(V2, 0)), 0)
        return Z1, Z2


class AbsHPreconditioner(Preconditioner):
    """Ideal preconditioner ``|H|`` built from a dense SVD of ``T`` (desk scale only)."""

    method = "abs-h"

    def __init__(self, grid: GridSpec, laplacian=None):
        T = BlockToeplitzT.from_grid(grid, laplacian)
        super().__init__(grid.n, T.m, grid.alpha)
        if self.size > ABS_H_LIMIT:
            raise ValueError(f"abs-h needs 2mn <= {ABS_H_LIMIT}, got {self.size}")
        Tm = materialize_dense(T, T.shape[0])
        self.U, self.sigma, Vt = np.linalg.svd(Tm)
        self.V = Vt.T
        self.inv_diag = 1.0 / np.sqrt(self.sigma ** 2 + self.alpha ** 2)

    def _solve(self, V1, V2):
        # T^T T = V S^2 V^T acts on the state block, T T^T = U S^2 U^T on the adjoint block
        z1 = self.V @ (self.inv_diag * (self.V.T @ V1.ravel()))
        z2 = self.U @ (self.inv_diag * (self.U.T @ V2.ravel()))
        return z1.reshape(self.n, self.m), z2.reshape(self.n, self.m)


def build_identity(grid: GridSpec, laplacian=None) -> IdentityPreconditioner:
    m = default_laplacian(grid, laplacian).m
    return IdentityPreconditioner(grid.n, m, grid.alpha)


def build_abs_h(grid: GridSpec, laplacian=None) -> AbsHPreconditioner:
    return AbsHPreconditioner(grid, laplacian)


def build_strang(grid: GridSpec, laplacian=None) -> StrangPreconditioner:
    return StrangPreconditioner(grid, laplacian)


def build_tau(grid: GridSpec, laplacian=None) -> TauPreconditioner:
    return TauPreconditioner(grid, laplacian)


def build_mod_strang(grid: GridSpec, laplacian=None) -> ModStrangPreconditioner:
    return ModStrangPreconditioner(grid, laplacian)


def build_mod_tau(grid: GridSpec, laplacian=None) -> ModTauPreconditioner:
    return ModTauPreconditioner(grid, laplacian)


BUILDERS = {
    "none": build_identity,
    "abs-h": build_abs_h,
    "strang": build_strang,
    "tau": build_tau,
    "mod-strang": build_mod_strang,
    "mod-tau": build_mod_tau,
}


def build_preconditioner(name: str, grid: GridSpec, laplacian=None) -> Preconditioner:
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown preconditioner {name!r}; choose from {sorted(BUILDERS)}") from None
    return builder(grid, laplacian)


def apply_inverse(P: Preconditioner, v: np.ndarray) -> np.ndarray:
    return P.apply_inverse(v)
