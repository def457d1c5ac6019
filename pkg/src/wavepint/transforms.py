"""Unitary FFT / DST-I kernels and their Kronecker composition.

Sign convention: ``fft`` is ``x -> n**-0.5 * sum_j x_j exp(-2 pi i jk/n)``,
so a circulant ``C`` with first column ``c`` factors as
``C = F diag(lam) F*`` with ``F = ifft`` matrix and ``lam = sqrt(n) fft(c)``.
"""
from __future__ import annotations

import numpy as np
import scipy.fft

REAL_RESIDUE_TOL = 1e-10


def fft(v: np.ndarray, axis: int = -1) -> np.ndarray:
    return scipy.fft.fft(v, axis=axis, norm="ortho")


def ifft(v: np.ndarray, axis: int = -1) -> np.ndarray:
    return scipy.fft.ifft(v, axis=axis, norm="ortho")


def dst1(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Multiply by ``S_n = sqrt(2/(n+1)) [sin(ij pi/(n+1))]``; self-inverse."""
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return dst1(v.real, axis) + 1j * dst1(v.imag, axis)
    return scipy.fft.dst(v, type=1, axis=axis, norm="ortho")


def dst1_matrix(n: int) -> np.ndarray:
    ij = np.outer(np.arange(1, n + 1), np.arange(1, n + 1))
    return np.sqrt(2.0 / (n + 1)) * np.sin(ij * np.pi / (n + 1))


def circulant_eigenvalues(first_column: np.ndarray) -> np.ndarray:
    """Eigenvalues ``lam`` with ``C = F diag(lam) F*`` (see module docstring)."""
    c = np.asarray(first_column)
    return np.sqrt(c.shape[-1]) * fft(c)


def enforce_real(z: np.ndarray, scale: float, what: str = "result") -> np.ndarray:
    """Drop an imaginary part that must vanish mathematically.

    Residues above ``1e-10 * scale`` mean the transform pipeline is wrong,
    so they raise rather than being silently discarded.
    """
    if not np.iscomplexobj(z):
        return z
    resid = np.abs(z.imag).max(initial=0.0)
    if resid > REAL_RESIDUE_TOL * max(scale, np.finfo(float).tiny):
        raise FloatingPointError(f"{what}: imaginary residue {resid:.3e} exceeds tolerance")
    return z.real


class IdentityPlan:
    def __init__(self, n: int):
        self.n = n

    def apply(self, x: np.ndarray, axis: int = -1) -> np.ndarray:
        return x

    def inverse(self) -> "IdentityPlan":
        return self


class FourierPlan:
    """Unitary DFT of length ``n``; ``inverse=True`` gives its adjoint."""

    def __init__(self, n: int, inverse: bool = False):
        self.n = n
        self.is_inverse = inverse

    def apply(self, x: np.ndarray, axis: int = -1) -> np.ndarray:
        return ifft(x, axis) if self.is_inverse else fft(x, axis)

    def inverse(self) -> "FourierPlan":
        return FourierPlan(self.n, not self.is_inverse)


class SinePlan:
    """DST-I of length ``n`` (symmetric and involutory)."""

    def __init__(self, n: int):
        self.n = n

    def apply(self, x: np.ndarray, axis: int = -1) -> np.ndarray:
        return dst1(x, axis)

    def inverse(self) -> "SinePlan":
        return self


class SinePlan2D:
    """``S_{m1} (x) S_{m1}`` acting on lexicographically ordered square grids."""

    def __init__(self, m1: int):
        self.m1 = m1
        self.n = m1 * m1

    def apply(self, x: np.ndarray, axis: int = -1) -> np.ndarray:
        x = np.moveaxis(np.asarray(x), axis, -1)
        shape = x.shape
        y = x.reshape(shape[:-1] + (self.m1, self.m1))
        y = dst1(dst1(y, -1), -2).reshape(shape)
        return np.moveaxis(y, -1, axis)

    def inverse(self) -> "SinePlan2D":
        return self


def space_sine_plan(d: int, m1: int):
    return SinePlan(m1) if d == 1 else SinePlan2D(m1)


def apply_time_space_transform(time_plan, space_plan, v: np.ndarray) -> np.ndarray:
    """Apply ``(time (x) space) v`` for a time-major vector ``v`` of length ``n*m``."""
    v = np.asarray(v)
    n, m = time_plan.n, space_plan.n
    if v.shape[-1] != n * m:
        raise ValueError(f"expected length {n * m}, got {v.shape[-1]}")
    V = v.reshape(v.shape[:-1] + (n, m))
    V = time_plan.apply(V, axis=-2)
    V = space_plan.apply(V, axis=-1)
    return V.reshape(v.shape[:-1] + (n * m,))
