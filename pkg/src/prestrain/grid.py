"""Uniform rectangular grids, second-order difference operators, trapezoid rule."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


def first_derivative_matrix(n: int, dx: float) -> np.ndarray:
    """Centered differences inside, second-order one-sided at both ends."""
    if n < 3:
        raise ValueError(f"need at least 3 points per axis, got {n}")
    D = np.zeros((n, n))
    for i in range(1, n - 1):
        D[i, i - 1] = -0.5
        D[i, i + 1] = 0.5
    D[0, :3] = [-1.5, 2.0, -0.5]
    D[-1, -3:] = [0.5, -2.0, 1.5]
    return D / dx


def second_derivative_matrix(n: int, dx: float) -> np.ndarray:
    """Three-point stencil inside, four-point second-order stencil at the ends."""
    if n < 4:
        raise ValueError(f"need at least 4 points per axis, got {n}")
    D = np.zeros((n, n))
    for i in range(1, n - 1):
        D[i, i - 1 : i + 2] = [1.0, -2.0, 1.0]
    D[0, :4] = [2.0, -5.0, 4.0, -1.0]
    D[-1, -4:] = [-1.0, 4.0, -5.0, 2.0]
    return D / dx**2


def trapezoid_weights(n: int, dx: float) -> np.ndarray:
    w = np.full(n, dx)
    w[0] = w[-1] = dx / 2
    return w


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid on ``[0, L1] x [0, L2]``; arrays are indexed ``[i1, i2, ...]``."""

    n1: int
    n2: int
    L1: float = 1.0
    L2: float = 1.0
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.n1 < 3 or self.n2 < 3:
            raise ValueError("a grid needs at least 3 points per axis")

    @classmethod
    def square(cls, n: int, L: float = 1.0) -> "Grid2D":
        return cls(n, n, L, L)

    @property
    def shape(self):
        return (self.n1, self.n2)

    @property
    def size(self):
        return self.n1 * self.n2

    @property
    def dx1(self):
        return self.L1 / (self.n1 - 1)

    @property
    def dx2(self):
        return self.L2 / (self.n2 - 1)

    @cached_property
    def axes(self):
        a = self.origin[0] + np.linspace(0.0, self.L1, self.n1)
        b = self.origin[1] + np.linspace(0.0, self.L2, self.n2)
        return a, b

    @cached_property
    def points(self):
        """Coordinate arrays ``(X1, X2)`` of shape ``(n1, n2)``."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def contains(self, x1, x2, rtol: float = 1e-12) -> bool:
        e1 = rtol * max(self.L1, 1.0)
        e2 = rtol * max(self.L2, 1.0)
        x1 = np.asarray(x1)
        x2 = np.asarray(x2)
        return bool(
            np.all(x1 >= self.origin[0] - e1)
            and np.all(x1 <= self.origin[0] + self.L1 + e1)
            and np.all(x2 >= self.origin[1] - e2)
            and np.all(x2 <= self.origin[1] + self.L2 + e2)
        )

    def refined(self) -> "Grid2D":
        """Same rectangle with half the spacing."""
        return Grid2D(2 * self.n1 - 1, 2 * self.n2 - 1, self.L1, self.L2, self.origin)

    # -- difference operators on arrays shaped (n1, n2, ...) ---------------

    @cached_property
    def _D1(self):
        return first_derivative_matrix(self.n1, self.dx1)

    @cached_property
    def _D2(self):
        return first_derivative_matrix(self.n2, self.dx2)

    @cached_property
    def _D11(self):
        return second_derivative_matrix(self.n1, self.dx1)

    @cached_property
    def _D22(self):
        return second_derivative_matrix(self.n2, self.dx2)

    def d1(self, f):
        return np.einsum("ij,j...->i...", self._D1, f)

    def d2(self, f):
        return np.einsum("ij,aj...->ai...", self._D2, f)

    def d11(self, f):
        return np.einsum("ij,j...->i...", self._D11, f)

    def d22(self, f):
        return np.einsum("ij,aj...->ai...", self._D22, f)

    def d12(self, f):
        return self.d1(self.d2(f))

    def gradient(self, f):
        """Stack of ``(d1 f, d2 f)`` along a new last axis."""
        return np.stack([self.d1(f), self.d2(f)], axis=-1)

    def hessian(self, f):
        h12 = self.d12(f)
        return np.stack(
            [np.stack([self.d11(f), h12], -1), np.stack([h12, self.d22(f)], -1)], -2
        )

    # -- flattened sparse operators (C order, i1 slow) ----------------------

    @cached_property
    def sparse_ops(self):
        """Dict of sparse matrices acting on ``f.ravel()``."""
        I1 = sp.identity(self.n1, format="csr")
        I2 = sp.identity(self.n2, format="csr")
        D1 = sp.csr_matrix(self._D1)
        D2 = sp.csr_matrix(self._D2)
        ops = {
            "d1": sp.kron(D1, I2, format="csr"),
            "d2": sp.kron(I1, D2, format="csr"),
            "d11": sp.kron(sp.csr_matrix(self._D11), I2, format="csr"),
            "d22": sp.kron(I1, sp.csr_matrix(self._D22), format="csr"),
            "d12": sp.kron(D1, D2, format="csr"),
        }
        return ops

    # -- quadrature ---------------------------------------------------------

    @cached_property
    def weights(self):
        """Trapezoid weights of shape ``(n1, n2)``."""
        return np.outer(
            trapezoid_weights(self.n1, self.dx1), trapezoid_weights(self.n2, self.dx2)
        )

    def integrate(self, f):
        return float(np.sum(self.weights * f))
