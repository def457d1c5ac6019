"""Discretization parameters, model problems and right-hand-side assembly.

The all-at-once unknown is stored as one flat vector of length ``2*m*n``:
the first ``m*n`` entries hold ``sqrt(gamma) * y`` for time levels
``1..n`` and the last ``m*n`` entries hold ``p`` for time levels
``0..n-1``. Within a time level the spatial index runs fastest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Sampler = Callable[[np.ndarray, float], np.ndarray]
InitialSampler = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid on the unit interval/square times ``[0, T]``."""

    d: int
    m1: int
    n: int
    T: float
    gamma: float

    @property
    def m(self) -> int:
        return self.m1 ** self.d

    @property
    def tau(self) -> float:
        return self.T / self.n

    @property
    def h(self) -> float:
        return 1.0 / (self.m1 + 1)

    @property
    def alpha(self) -> float:
        return self.tau ** 2 / math.sqrt(self.gamma)

    @property
    def size(self) -> int:
        """Number of unknowns, ``2*m*n``."""
        return 2 * self.m * self.n

    def points(self) -> np.ndarray:
        """Interior grid points, shape ``(m, d)``, first coordinate fastest."""
        x = np.arange(1, self.m1 + 1) * self.h
        if self.d == 1:
            return x[:, None]
        x1, x2 = np.meshgrid(x, x, indexing="xy")
        return np.column_stack([x1.ravel(), x2.ravel()])


def build_grid(d: int, m1: int, n: int, T: float, gamma: float) -> GridSpec:
    if d not in (1, 2):
        raise ValueError(f"spatial dimension must be 1 or 2, got {d}")
    if m1 < 1:
        raise ValueError(f"m1 must be positive, got {m1}")
    if n < 2:
        raise ValueError(f"need at least two time steps, got n={n}")
    if not T > 0:
        raise ValueError(f"final time must be positive, got T={T}")
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return GridSpec(d=d, m1=int(m1), n=int(n), T=float(T), gamma=float(gamma))


def coupled_grid(d: int, h: float, gamma: float, T: float = 2.0) -> GridSpec:
    """Grid with the experiment coupling ``h = (2/tau - 1)**-1``.

    With ``h = 1/(m1+1)`` this gives ``tau = 2/(m1+2)``; ``T`` must make
    ``T/tau`` an integer.
    """
    inv_h = 1.0 / h
    m1 = int(round(inv_h)) - 1
    if m1 < 1 or not math.isclose(inv_h, m1 + 1, rel_tol=1e-12):
        raise ValueError(f"1/h must be an integer >= 2, got h={h}")
    tau = 2.0 / (m1 + 2)
    n_float = T / tau
    n = int(round(n_float))
    if not math.isclose(n_float, n, rel_tol=1e-12):
        raise ValueError(f"T={T} is not a multiple of tau={tau}")
    return build_grid(d, m1, n, T, gamma)


def parse_h(text: str | float) -> float:
    """Parse mesh sizes written as ``2^-7``, ``2**-7`` or a plain float."""
    if isinstance(text, (int, float)):
        return float(text)
    s = text.strip().replace("**", "^")
    if "^" in s:
        base, expo = s.split("^", 1)
        return float(base) ** float(expo)
    return float(s)


@dataclass(frozen=True)
class WaveControlProblem:
    """Data of the optimality system on the unit interval/square.

    Space samplers receive an array of points of shape ``(m, d)``; time
    dependent ones also receive a scalar time.
    """

    d: int
    T: float
    f: Sampler
    g: Sampler
    psi0: InitialSampler
    psi1: InitialSampler
    exact_y: Optional[Sampler] = None
    exact_p: Optional[Sampler] = None
    name: str = "custom"

    def grid(self, m1: int, n: int, gamma: float) -> GridSpec:
        return build_grid(self.d, m1, n, self.T, gamma)


def example_1d(gamma: float, T: float = 2.0) -> WaveControlProblem:
    """1D model problem with exact solution ``sin(pi x) cos(pi t)``."""
    eT = math.exp(T)

    def s(x):
        return np.sin(np.pi * x[:, 0])

    def f(x, t):
        return -s(x) * (math.exp(t) - eT) ** 2 / gamma

    def g(x, t):
        return (
            (4 * math.exp(2 * t) - 2 * math.exp(T + t)) * s(x)
            + np.pi ** 2 * s(x) * (math.exp(t) - eT) ** 2
            + s(x) * math.cos(np.pi * t)
        )

    return WaveControlProblem(
        d=1,
        T=T,
        f=f,
        g=g,
        psi0=s,
        psi1=lambda x: np.zeros(len(x)),
        exact_y=lambda x, t: s(x) * math.cos(np.pi * t),
        exact_p=lambda x, t: s(x) * (math.exp(t) - eT) ** 2,
        name="example-1d",
    )


def example_2d(gamma: float, T: float = 2.0) -> WaveControlProblem:
    """2D model problem with exact solution ``exp(t) sin(pi x1) sin(pi x2)``."""

    def s(x):
        return np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])

    def f(x, t):
        return (1 + 2 * np.pi ** 2) * math.exp(t) * s(x) - (t - T) ** 2 * s(x) / gamma

    def g(x, t):
        return (math.exp(t) + 2 + 2 * np.pi ** 2 * (t - T) ** 2) * s(x)

    return WaveControlProblem(
        d=2,
        T=T,
        f=f,
        g=g,
        psi0=s,
        psi1=s,
        exact_y=lambda x, t: math.exp(t) * s(x),
        exact_p=lambda x, t: (t - T) ** 2 * s(x),
        name="example-2d",
    )


PRESETS: dict[str, Callable[..., WaveControlProblem]] = {
    "example-1d": example_1d,
    "example-2d": example_2d,
}


def get_problem(name: str, gamma: float) -> WaveControlProblem:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(gamma)


def _neg_laplacian_rows(v: np.ndarray, grid: GridSpec) -> np.ndarray:
    # local import keeps problem usable without building operator objects
    from .operators import NegativeLaplacian

    return NegativeLaplacian(grid).apply(v)


def assemble_rhs(problem: WaveControlProblem, grid: GridSpec) -> np.ndarray:
    """Right-hand side ``[g; sqrt(gamma) f]`` of the all-at-once system.

    The initial data enter the first two rows of the state block: the
    velocity through the ghost level ``y^(-1) = y^(1) - 2 tau psi1`` and
    the known level ``y^(0) = psi0`` through both the first and the second
    time row.
    """
    if problem.d != grid.d:
        raise ValueError("problem and grid dimensions differ")
    x = grid.points()
    n, m, tau = grid.n, grid.m, grid.tau
    t2 = tau ** 2

    gblk = np.empty((n, m))
    for k in range(1, n + 1):
        gblk[k - 1] = t2 * problem.g(x, k * tau)
    gblk[-1] *= 0.5

    fblk = np.empty((n, m))
    for k in range(n):
        fblk[k] = t2 * problem.f(x, k * tau)
    psi0 = problem.psi0(x)
    fblk[0] = 0.5 * fblk[0] + psi0 + tau * problem.psi1(x)
    # L psi0 = psi0 + tau^2/2 (-Delta) psi0 moves from the second row
    fblk[1] -= psi0 + 0.5 * t2 * _neg_laplacian_rows(psi0, grid)

    return np.concatenate([gblk.ravel(), math.sqrt(grid.gamma) * fblk.ravel()])


def recover_solution(x: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Split the unknown into ``(y, p)``, both of shape ``(n, m)``."""
    x = np.asarray(x)
    if x.shape != (grid.size,):
        raise ValueError(f"expected vector of length {grid.size}, got shape {x.shape}")
    half = grid.m * grid.n
    y = x[:half].reshape(grid.n, grid.m) / math.sqrt(grid.gamma)
    p = x[half:].reshape(grid.n, grid.m)
    return y, p


def pack_solution(y: np.ndarray, p: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Inverse of :func:`recover_solution`."""
    y = np.asarray(y, dtype=float).ravel()
    p = np.asarray(p, dtype=float).ravel()
    half = grid.m * grid.n
    if y.size != half or p.size != half:
        raise ValueError("y and p must each hold m*n values")
    return np.concatenate([math.sqrt(grid.gamma) * y, p])


def sample_exact(problem: WaveControlProblem, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``y`` on levels ``1..n`` and ``p`` on levels ``0..n-1``."""
    if problem.exact_y is None or problem.exact_p is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    x = grid.points()
    tau = grid.tau
    y = np.array([problem.exact_y(x, k * tau) for k in range(1, grid.n + 1)])
    p = np.array([problem.exact_p(x, k * tau) for k in range(grid.n)])
    return y, p


def error_norms(
    y: np.ndarray, p: np.ndarray, problem: WaveControlProblem, grid: GridSpec
) -> tuple[float, float]:
    """Discrete ``L^inf(0,T; L^2(Omega))`` errors of state and adjoint."""
    ye, pe = sample_exact(problem, grid)
    y = np.asarray(y).reshape(grid.n, grid.m)
    p = np.asarray(p).reshape(grid.n, grid.m)
    w = grid.h ** (grid.d / 2)
    e_y = w * np.linalg.norm(y - ye, axis=1).max()
    e_p = w * np.linalg.norm(p - pe, axis=1).max()
    return float(e_y), float(e_p)
