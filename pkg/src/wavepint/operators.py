"""Matrix-free operators of the all-at-once system.

Vectors over the space-time grid are handled as ``(n, m)`` arrays (time
level by spatial index) internally and flattened at the public boundary.
"""
from __future__ import annotations

from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from .problem import GridSpec

DENSE_LIMIT = 10_000


class NegativeLaplacian:
    """Second-order finite differences for ``-Delta`` with zero Dirichlet data."""

    def __init__(self, grid: GridSpec):
        self.d = grid.d
        self.m1 = grid.m1
        self.h = grid.h
        self.m = grid.m

    def _apply_1d(self, v: np.ndarray) -> np.ndarray:
        out = 2.0 * v
        out[..., 1:] -= v[..., :-1]
        out[..., :-1] -= v[..., 1:]
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply along the last axis; leading axes are batch dimensions."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.m:
            raise ValueError(f"expected trailing length {self.m}, got {v.shape[-1]}")
        if self.d == 1:
            out = self._apply_1d(v)
        else:
            w = v.reshape(v.shape[:-1] + (self.m1, self.m1))
            out = self._apply_1d(w) + np.swapaxes(self._apply_1d(np.swapaxes(w, -1, -2)), -1, -2)
            out = out.reshape(v.shape)
        return out / self.h ** 2

    __call__ = apply

    def eigenvalues(self) -> np.ndarray:
        """Closed-form eigenvalues in the order of the sine-transform basis."""
        j = np.arange(1, self.m1 + 1)
        mu = 4.0 / self.h ** 2 * np.sin(j * np.pi * self.h / 2) ** 2
        if self.d == 1:
            return mu
        # index (j2, j1) with j1 fastest, matching the lexicographic layout
        return (mu[:, None] + mu[None, :]).ravel()

    def sparse(self) -> sp.csr_matrix:
        e = np.ones(self.m1)
        k1 = sp.diags([-e[:-1], 2 * e, -e[:-1]], [-1, 0, 1]) / self.h ** 2
        if self.d == 1:
            return sp.csr_matrix(k1)
        eye = sp.identity(self.m1)
        return sp.csr_matrix(sp.kron(eye, k1) + sp.kron(k1, eye))

    def dense(self) -> np.ndarray:
        return self.sparse().toarray()


class ZeroLaplacian:
    """``Delta = 0`` stand-in so that ``L_m = I``; isolates the time structure."""

    def __init__(self, m: int = 1):
        self.m = m

    def apply(self, v: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(v, dtype=float))

    __call__ = apply

    def eigenvalues(self) -> np.ndarray:
        return np.zeros(self.m)

    def sparse(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.m, self.m))

    def dense(self) -> np.ndarray:
        return np.zeros((self.m, self.m))


class MatrixLaplacian:
    """Any SPD matrix standing in for ``-Delta_m`` (e.g. a non-uniform stencil)."""

    def __init__(self, matrix):
        self.matrix = sp.csr_matrix(matrix)
        self.m = self.matrix.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return (self.matrix @ v.reshape(-1, self.m).T).T.reshape(v.shape)

    __call__ = apply

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.dense())

    def sparse(self) -> sp.csr_matrix:
        return self.matrix

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def default_laplacian(grid: GridSpec, laplacian=None):
    return NegativeLaplacian(grid) if laplacian is None else laplacian


class BlockToeplitzT:
    """Block lower-triangular Toeplitz matrix of the leap-frog scheme.

    Block row ``k`` maps ``v`` to ``L v_k - 2 v_{k-1} + L v_{k-2}`` with
    ``L = I + tau^2/2 (-Delta)``; blocks outside ``0..n-1`` are zero.
    """

    def __init__(self, n: int, tau: float, laplacian):
        self.n = int(n)
        self.tau = float(tau)
        self.laplacian = laplacian
        self.m = laplacian.m
        self.shape = (self.m * self.n, self.m * self.n)

    @classmethod
    def from_grid(cls, grid: GridSpec, laplacian=None) -> "BlockToeplitzT":
        return cls(grid.n, grid.tau, default_laplacian(grid, laplacian))

    def apply_L(self, w: np.ndarray) -> np.ndarray:
        return w + 0.5 * self.tau ** 2 * self.laplacian.apply(w)

    def _blocks(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.shape[0],):
            raise ValueError(f"expected vector of length {self.shape[0]}, got shape {v.shape}")
        return v.reshape(self.n, self.m)

    def apply(self, v: np.ndarray) -> np.ndarray:
        V = self._blocks(v)
        LV = self.apply_L(V)
        out = LV.copy()
        out[1:] -= 2.0 * V[:-1]
        out[2:] += LV[:-2]
        return out.ravel()

    __call__ = apply

    def apply_transpose(self, v: np.ndarray) -> np.ndarray:
        V = self._blocks(v)
        LV = self.apply_L(V)
        out = LV.copy()
        out[:-1] -= 2.0 * V[1:]
        out[:-2] += LV[2:]
        return out.ravel()


class SaddleOperator:
    """``[[alpha Icheck (x) I, T^T], [T, -alpha Ihat (x) I]]`` applied matrix-free."""

    def __init__(self, T: BlockToeplitzT, alpha: float):
        self.T = T
        self.alpha = float(alpha)
        self.n, self.m = T.n, T.m
        self.half = T.shape[0]
        self.shape = (2 * self.half, 2 * self.half)
        # corner weights: last y level and first p level are halved
        self.w_y = np.ones(self.n)
        self.w_y[-1] = 0.5
        self.w_p = np.ones(self.n)
        self.w_p[0] = 0.5

    @classmethod
    def from_grid(cls, grid: GridSpec, laplacian=None) -> "SaddleOperator":
        return cls(BlockToeplitzT.from_grid(grid, laplacian), grid.alpha)

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.shape[0],):
            raise ValueError(f"expected vector of length {self.shape[0]}, got shape {v.shape}")
        v1, v2 = v[: self.half], v[self.half:]
        a = self.alpha
        out1 = a * (self.w_y[:, None] * v1.reshape(self.n, self.m)).ravel() + self.T.apply_transpose(v2)
        out2 = self.T.apply(v1) - a * (self.w_p[:, None] * v2.reshape(self.n, self.m)).ravel()
        return np.concatenate([out1, out2])

    __call__ = apply


Applicable = Union[Callable[[np.ndarray], np.ndarray], object]


def _as_callable(op: Applicable) -> Callable[[np.ndarray], np.ndarray]:
    if hasattr(op, "apply"):
        return op.apply
    if callable(op):
        return op
    raise TypeError(f"{type(op).__name__} is neither callable nor has .apply")


def materialize_dense(op: Applicable, size: int, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense matrix whose ``j``-th column is ``op(e_j)``."""
    if size > limit:
        raise ValueError(f"refusing to materialize a {size}x{size} matrix (limit {limit})")
    f = _as_callable(op)
    out = np.empty((size, size))
    e = np.zeros(size)
    for j in range(size):
        e[j] = 1.0
        out[:, j] = np.real_if_close(f(e))
        e[j] = 0.0
    return out
