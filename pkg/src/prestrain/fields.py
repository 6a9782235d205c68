"""Scalar and vector fields on the midplate with exact derivatives.

Fields are evaluated through ``jet(x1, x2)``, which returns the value
together with first and second partial derivatives, broadcasting over
array-valued coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from numpy.polynomial import polynomial as P


def n_coeffs(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


def _degree_from_length(n: int) -> int:
    d = 0
    while n_coeffs(d) < n:
        d += 1
    if n_coeffs(d) != n:
        raise ValueError(
            f"{n} coefficients do not fill a complete total degree; "
            "expected one of 1, 3, 6, 10, 15, ..."
        )
    return d


@dataclass(frozen=True)
class ScalarJet:
    value: np.ndarray
    grad: np.ndarray  # (..., 2)
    hess: np.ndarray  # (..., 2, 2)


@dataclass(frozen=True)
class VectorJet:
    value: np.ndarray  # (..., 3)
    grad: np.ndarray  # (..., 3, 2), grad[..., a, i] = d_i V_a
    hess: np.ndarray  # (..., 3, 2, 2)


class Poly2D:
    """Polynomial in (x1, x2) given by graded coefficients.

    Coefficients are listed by increasing total degree and, within a
    degree, by decreasing power of ``x1``::

        1, x1, x2, x1^2, x1 x2, x2^2, x1^3, ...

    so ``Poly2D([1, 0, 0, 1, 0, 0])`` is ``1 + x1**2``.
    """

    def __init__(self, coeffs):
        coeffs = tuple(float(c) for c in np.atleast_1d(coeffs))
        if not coeffs:
            raise ValueError("empty coefficient list")
        self.coeffs = coeffs
        self.degree = _degree_from_length(len(coeffs))
        d = self.degree
        C = np.zeros((d + 1, d + 1))
        k = 0
        for deg in range(d + 1):
            for j in range(deg + 1):
                C[deg - j, j] = coeffs[k]
                k += 1
        self._C = C
        self._C1 = P.polyder(C, axis=0)
        self._C2 = P.polyder(C, axis=1)
        self._C11 = P.polyder(C, 2, axis=0)
        self._C22 = P.polyder(C, 2, axis=1)
        self._C12 = P.polyder(self._C1, axis=1)

    @classmethod
    def from_matrix(cls, C) -> "Poly2D":
        """Build from a matrix with ``C[i, j]`` the coefficient of x1^i x2^j."""
        C = np.asarray(C, dtype=float)
        d = C.shape[0] + C.shape[1] - 2
        coeffs = []
        for deg in range(d + 1):
            for j in range(deg + 1):
                i = deg - j
                ok = i < C.shape[0] and j < C.shape[1]
                coeffs.append(C[i, j] if ok else 0.0)
        return cls(coeffs)

    @staticmethod
    def _ev(C, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        return P.polyval2d(x1, x2, C) + np.zeros(x1.shape)

    def __call__(self, x1, x2):
        return self._ev(self._C, x1, x2)

    def jet(self, x1, x2) -> ScalarJet:
        v = self._ev(self._C, x1, x2)
        g = np.stack([self._ev(self._C1, x1, x2), self._ev(self._C2, x1, x2)], -1)
        h12 = self._ev(self._C12, x1, x2)
        h = np.stack(
            [
                np.stack([self._ev(self._C11, x1, x2), h12], -1),
                np.stack([h12, self._ev(self._C22, x1, x2)], -1),
            ],
            -2,
        )
        return ScalarJet(v, g, h)

    def laplacian(self, x1, x2):
        return self._ev(self._C11, x1, x2) + self._ev(self._C22, x1, x2)

    def is_harmonic(self, atol: float = 1e-12) -> bool:
        L = np.zeros((self.degree + 1, self.degree + 1))
        L[: self._C11.shape[0], : self._C11.shape[1]] += self._C11
        L[: self._C22.shape[0], : self._C22.shape[1]] += self._C22
        return bool(np.all(np.abs(L) <= atol))

    def __repr__(self):
        return f"Poly2D({list(self.coeffs)!r})"


class ExpField:
    """``exp(k * g)`` for a scalar field ``g`` (used for conformal factors)."""

    def __init__(self, g, k: float = 1.0):
        self.g = g
        self.k = float(k)

    def jet(self, x1, x2) -> ScalarJet:
        gj = self.g.jet(x1, x2)
        k = self.k
        e = np.exp(k * gj.value)
        grad = k * e[..., None] * gj.grad
        hess = e[..., None, None] * (
            k * gj.hess + k * k * gj.grad[..., :, None] * gj.grad[..., None, :]
        )
        return ScalarJet(e, grad, hess)


class SqrtField:
    """Square root of a positive scalar field."""

    def __init__(self, g):
        self.g = g

    def jet(self, x1, x2) -> ScalarJet:
        gj = self.g.jet(x1, x2)
        if np.any(gj.value <= 0):
            raise ValueError("square root of a non-positive field")
        s = np.sqrt(gj.value)
        grad = gj.grad / (2 * s[..., None])
        hess = gj.hess / (2 * s[..., None, None]) - (
            gj.grad[..., :, None] * gj.grad[..., None, :]
        ) / (4 * (s**3)[..., None, None])
        return ScalarJet(s, grad, hess)


class PolyVectorField:
    """Vector field in R^3 with polynomial components."""

    def __init__(self, components):
        comps = [c if isinstance(c, Poly2D) else Poly2D(c) for c in components]
        if len(comps) != 3:
            raise ValueError("a vector field needs three components")
        self.components = tuple(comps)

    @classmethod
    def vertical(cls, v) -> "PolyVectorField":
        """``V = (0, 0, v)``."""
        return cls([[0.0], [0.0], v])

    def jet(self, x1, x2) -> VectorJet:
        jets = [c.jet(x1, x2) for c in self.components]
        return VectorJet(
            np.stack([j.value for j in jets], -1),
            np.stack([j.grad for j in jets], -2),
            np.stack([j.hess for j in jets], -3),
        )


def harmonic_polynomial(degree: int, coeffs) -> Poly2D:
    """Real harmonic polynomial ``Re sum_k a_k z^k`` for complex ``a_k``.

    ``coeffs`` holds ``a_0 .. a_degree`` (complex allowed).
    """
    a = np.asarray(coeffs, dtype=complex)
    C = np.zeros((degree + 1, degree + 1))
    for k, ak in enumerate(a[: degree + 1]):
        # (x1 + i x2)^k = sum_j binom(k, j) x1^(k-j) (i x2)^j
        for j in range(k + 1):
            term = ak * comb(k, j) * (1j) ** j
            C[k - j, j] += term.real
    return Poly2D.from_matrix(C)
