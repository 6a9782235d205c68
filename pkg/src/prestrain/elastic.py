"""Saint Venant-Kirchhoff density, its Hessian form Q3 and the relaxed planar form.

All functions broadcast over leading axes, so a whole grid of matrices can
be passed at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def sym(F):
    return 0.5 * (F + np.swapaxes(F, -1, -2))


def embed(F2):
    """3x3 matrix with principal 2x2 minor ``F2`` and zeros elsewhere."""
    F2 = np.asarray(F2, dtype=float)
    out = np.zeros(F2.shape[:-2] + (3, 3))
    out[..., :2, :2] = F2
    return out


@dataclass(frozen=True)
class ElasticModel:
    mu: float = 1.0
    lambdaL: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.lambdaL >= 0:
            raise ValueError("lambdaL must be nonnegative")

    @property
    def plane_modulus(self) -> float:
        """Trace coefficient of the relaxed form at A = Id."""
        return 2 * self.mu * self.lambdaL / (2 * self.mu + self.lambdaL)


def density_eval(model: ElasticModel, F):
    """``W(F) = mu |E|^2 + lambdaL/2 (tr E)^2`` with ``E = (F^T F - Id)/2``."""
    F = np.asarray(F, dtype=float)
    E = 0.5 * (np.einsum("...ki,...kj->...ij", F, F) - np.eye(3))
    tr = np.trace(E, axis1=-2, axis2=-1)
    return model.mu * np.sum(E * E, axis=(-2, -1)) + 0.5 * model.lambdaL * tr * tr


def q3(model: ElasticModel, F):
    """``D^2 W(Id)(F, F) = 2 mu |sym F|^2 + lambdaL (tr F)^2``."""
    S = sym(np.asarray(F, dtype=float))
    tr = np.trace(S, axis1=-2, axis2=-1)
    return 2 * model.mu * np.sum(S * S, axis=(-2, -1)) + model.lambdaL * tr * tr


def _l3(model, X, Y):
    """Bilinear form generating ``q3``."""
    Xs, Ys = sym(X), sym(Y)
    return 2 * model.mu * np.sum(Xs * Ys, axis=(-2, -1)) + model.lambdaL * np.trace(
        Xs, axis1=-2, axis2=-1
    ) * np.trace(Ys, axis1=-2, axis2=-1)


def _sym_ce3_basis():
    N = np.zeros((3, 3, 3))
    for k in range(3):
        c = np.zeros(3)
        c[k] = 1.0
        N[k] = sym(np.outer(c, [0.0, 0.0, 1.0]))
    return N


_NBASIS = _sym_ce3_basis()


def q2a(model: ElasticModel, A, F2):
    """Relaxed planar form and its minimizer.

    Minimizes ``Q3(A^-1 (F2* + sym(c (x) e3)) A^-1)`` over ``c`` in R^3 by
    solving the 3x3 stationarity system exactly.

    Returns
    -------
    value : ndarray
    c : ndarray, shape (..., 3)
    """
    A = np.asarray(A, dtype=float)
    F2 = np.asarray(F2, dtype=float)
    try:
        Ainv = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        raise DomainError("q2a: A is singular") from None
    M0 = np.einsum("...ij,...jk,...kl->...il", Ainv, embed(F2), Ainv)
    # N[..., k] = A^-1 sym(e_k (x) e3) A^-1
    N = np.einsum("...ij,kjm,...ml->...kil", Ainv, _NBASIS, Ainv)
    K = _l3(model, N[..., :, None, :, :], N[..., None, :, :, :])
    rhs = -_l3(model, N, M0[..., None, :, :])
    c = np.linalg.solve(K, rhs[..., None])[..., 0]
    M = M0 + np.einsum("...k,...kij->...ij", c, N)
    return q3(model, M), c


def minimizer_map_c(model: ElasticModel, A, F2):
    return q2a(model, A, F2)[1]


def q2_reduced(model: ElasticModel, F2):
    """Closed form of the relaxed form for ``A = Id``."""
    S = sym(np.asarray(F2, dtype=float))
    tr = S[..., 0, 0] + S[..., 1, 1]
    return 2 * model.mu * np.sum(S * S, axis=(-2, -1)) + model.plane_modulus * tr * tr


def q2a_matrix(model: ElasticModel, A):
    """Coefficient matrix ``K`` with ``Q_{2,A}(F) = s^T K s``.

    ``s = (F11, F22, (F12 + F21)/2)``; built by polarization, exact for a
    quadratic form.
    """
    A = np.asarray(A, dtype=float)
    B = np.zeros((3, 2, 2))
    B[0, 0, 0] = 1.0
    B[1, 1, 1] = 1.0
    B[2, 0, 1] = B[2, 1, 0] = 1.0
    shape = A.shape[:-2]
    K = np.zeros(shape + (3, 3))
    Ab = A[..., None, :, :]
    diag = q2a(model, Ab, B)[0]
    for a in range(3):
        K[..., a, a] = diag[..., a]
        for b in range(a + 1, 3):
            qab = q2a(model, A, B[a] + B[b])[0]
            K[..., a, b] = K[..., b, a] = 0.5 * (qab - diag[..., a] - diag[..., b])
    return K


def voigt2(F2):
    """``(F11, F22, (F12 + F21)/2)`` of a batch of 2x2 matrices."""
    return np.stack(
        [F2[..., 0, 0], F2[..., 1, 1], 0.5 * (F2[..., 0, 1] + F2[..., 1, 0])], -1
    )


def quad_form(K, F2):
    s = voigt2(F2)
    return np.einsum("...a,...ab,...b->...", s, K, s)
