"""The limiting h^4 energy: stretching, bending and a constant curvature term.

Fields live on a :class:`~prestrain.grid.Grid2D`. Analytic inputs (anything
with a ``jet`` method) are differentiated exactly; plain arrays are
differentiated with the grid stencils. Integrals use the trapezoid rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elastic import ElasticModel, q2_reduced, q2a_matrix, quad_form, sym
from .errors import DomainError, PreconditionError, UnsupportedMetricError
from .fields import Poly2D, VectorJet
from .geometry import MetricField, metric_sqrt, ricci_conformal
from .grid import Grid2D
from .immersion import ImmersionBundle, bending_curvature_form, p_from_V
from .optim import OptimizerOptions, lbfgs

WEIGHTS = (0.5, 1.0 / 24.0, 1.0 / 1440.0)


def _outer2(a, b):
    return a[..., :, None] * b[..., None, :]


def _gram(X, Y):
    """``X^T Y`` for batches of 3x2 matrices."""
    return np.einsum("...ai,...aj->...ij", X, Y)


def scalar_on_grid(grid: Grid2D, f):
    """``(value, grad, hess)`` of a scalar field on the grid nodes."""
    X1, X2 = grid.points
    if hasattr(f, "jet"):
        j = f.jet(X1, X2)
        z = np.zeros(grid.shape)
        return j.value + z, j.grad + z[..., None], j.hess + z[..., None, None]
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError(f"expected samples of shape {grid.shape}")
    return f, grid.gradient(f), grid.hessian(f)


def vector_on_grid(grid: Grid2D, V) -> VectorJet:
    """Jet of a 3-vector field: a field with ``jet``, a sequence of three
    scalar fields, or samples of shape ``(n1, n2, 3)``."""
    X1, X2 = grid.points
    if hasattr(V, "jet"):
        j = V.jet(X1, X2)
        z = np.zeros(grid.shape)
        return VectorJet(
            j.value + z[..., None], j.grad + z[..., None, None], j.hess + z[..., None, None, None]
        )
    if isinstance(V, (list, tuple)):
        parts = [scalar_on_grid(grid, c) for c in V]
        return VectorJet(*(np.stack([p[k] for p in parts], axis=2) for k in range(3)))
    V = np.asarray(V, dtype=float)
    if V.shape != grid.shape + (3,):
        raise ValueError(f"expected samples of shape {grid.shape + (3,)}")
    return VectorJet(V, grid.gradient(V), grid.hessian(V))


@dataclass
class AdmissiblePair:
    """First-order isometry ``V`` and finite strain ``S`` on a grid.

    ``tag`` is ``general``, ``ex1`` or ``ex2``; ``params`` keeps the
    generating fields (``v``, ``w`` for ``ex1``).
    """

    grid: Grid2D
    V: VectorJet
    S: np.ndarray
    tag: str = "general"
    params: dict = field(default_factory=dict)

    @classmethod
    def from_fields(cls, grid, V, S=None, tag="general"):
        Vj = vector_on_grid(grid, V)
        if S is None:
            S = np.zeros(grid.shape + (2, 2))
        elif callable(S):
            S = np.asarray(S(*grid.points), dtype=float)
        S = sym(np.broadcast_to(np.asarray(S, dtype=float), grid.shape + (2, 2)))
        return cls(grid, Vj, S, tag)

    @classmethod
    def ex1(cls, grid, v, w):
        """``V = (0, 0, v)`` and ``S = sym grad w`` for a planar ``w = (w1, w2)``."""
        vv, gv, hv = scalar_on_grid(grid, v)
        z = np.zeros_like(vv)
        Vj = VectorJet(
            np.stack([z, z, vv], -1),
            np.stack([np.zeros_like(gv), np.zeros_like(gv), gv], -2),
            np.stack([np.zeros_like(hv), np.zeros_like(hv), hv], -3),
        )
        gw = np.stack([scalar_on_grid(grid, c)[1] for c in w], -2)
        return cls(grid, Vj, sym(gw), "ex1", {"v": v, "w": tuple(w)})

    @classmethod
    def ex2(cls, grid, V, S=None):
        pair = cls.from_fields(grid, V, S)
        pair.tag = "ex2"
        return pair


@dataclass
class I4Breakdown:
    stretching_term: float
    bending_term: float
    curvature_term: float
    constraint_residual: float = 0.0

    @property
    def total(self) -> float:
        return self.stretching_term + self.bending_term + self.curvature_term

    def as_dict(self):
        return {
            "stretching_term": self.stretching_term,
            "bending_term": self.bending_term,
            "curvature_term": self.curvature_term,
            "total": self.total,
            "constraint_residual": self.constraint_residual,
        }


def constraint_residual_V(bundle: ImmersionBundle, V, grid: Grid2D) -> float:
    """Sup-norm over the grid of ``sym((grad y0)^T grad V)``."""
    Vj = V if isinstance(V, VectorJet) else vector_on_grid(grid, V)
    J = bundle.jet(*grid.points)
    return float(np.max(np.linalg.norm(sym(_gram(J.dy0, Vj.grad)), axis=(-2, -1))))


def _default_tol(grid):
    return max(1e-8, 20.0 * max(grid.dx1, grid.dx2) ** 2)


def evaluate_I4(
    bundle: ImmersionBundle, metric: MetricField, model: ElasticModel, pair: AdmissiblePair, tol=None
) -> I4Breakdown:
    """Evaluate the three integrals of the limit energy with the relaxed
    form ``Q_{2,A}`` assembled pointwise from ``A = sqrt(G)``."""
    grid = pair.grid
    tol = _default_tol(grid) if tol is None else tol
    res = constraint_residual_V(bundle, pair.V, grid)
    if res > tol:
        raise PreconditionError(f"V is not a first-order isometry: residual {res:.3e} > {tol:.1e}")
    X1, X2 = grid.points
    J = bundle.jet(X1, X2)
    G = metric.sample(X1, X2)
    K = q2a_matrix(model, metric_sqrt(G))
    _, dp = p_from_V(J, G, pair.V, with_grad=True)
    gV = pair.V.grad
    t1 = pair.S + 0.5 * _gram(gV, gV) + _gram(J.db0, J.db0) / 24.0
    t2 = _gram(J.dy0, dp) + _gram(gV, J.db0)
    t3 = bending_curvature_form(J)
    vals = [w * grid.integrate(quad_form(K, t)) for w, t in zip(WEIGHTS, (t1, t2, t3))]
    return I4Breakdown(*vals, constraint_residual=res)


def _lambda_on_grid(grid, lam):
    lv, lg, lh = scalar_on_grid(grid, lam)
    if np.any(lv <= 0):
        raise DomainError(f"lambda must be positive (min {lv.min():.6g})")
    return lv, lg, lh


def evaluate_I4_ex1(lam, model: ElasticModel, v, w, grid: Grid2D) -> I4Breakdown:
    """Reduced energy for ``G = diag(1, 1, lam)`` with ``V = (0, 0, v)`` and
    ``S = sym grad w``."""
    lv, lg, lh = _lambda_on_grid(grid, lam)
    _, gv, hv = scalar_on_grid(grid, v)
    gw = np.stack([scalar_on_grid(grid, c)[1] for c in w], -2)
    arg1 = sym(gw) + 0.5 * _outer2(gv, gv) + _outer2(lg, lg) / (96.0 * lv[..., None, None])
    M = lh - _outer2(lg, lg) / (2.0 * lv[..., None, None])
    return I4Breakdown(
        0.5 * grid.integrate(q2_reduced(model, arg1)),
        grid.integrate(lv * q2_reduced(model, hv)) / 24.0,
        grid.integrate(q2_reduced(model, M)) / 5760.0,
    )


def evaluate_I4_ex2(f, model: ElasticModel, V, S, grid: Grid2D, tol: float = 1e-10) -> I4Breakdown:
    """Reduced energy for ``G = exp(2 f) Id3`` with harmonic ``f``.

    The relaxed form at ``A = exp(f) Id3`` is ``exp(-4 f) Q2``, which fixes
    the exponential weights below.
    """
    f = f if isinstance(f, Poly2D) else Poly2D(f)
    X1, X2 = grid.points
    fv, fg, fh = scalar_on_grid(grid, f)
    lap = fh[..., 0, 0] + fh[..., 1, 1]
    if np.max(np.abs(lap)) > tol:
        raise UnsupportedMetricError(
            f"f is not harmonic (max |lap f| = {np.max(np.abs(lap)):.3e}); the "
            "midplate metric is then not flat and no isometric immersion exists"
        )
    Vj = vector_on_grid(grid, V)
    S = np.zeros(grid.shape + (2, 2)) if S is None else np.broadcast_to(S, grid.shape + (2, 2))
    e2 = np.exp(2 * fv)
    gV = Vj.grad
    arg1 = S + 0.5 * _gram(gV, gV) + e2[..., None, None] * _outer2(fg, fg) / 24.0
    g3, h3 = gV[..., 2, :], Vj.hess[..., 2, :, :]
    arg2 = (
        2 * _outer2(g3, fg)
        - h3
        - np.einsum("...i,...i->...", g3, fg)[..., None, None] * np.eye(2)
    )
    ric = ricci_conformal(f, X1, X2)[..., :2, :2]
    return I4Breakdown(
        0.5 * grid.integrate(np.exp(-4 * fv) * q2_reduced(model, arg1)),
        grid.integrate(np.exp(-2 * fv) * q2_reduced(model, arg2)) / 24.0,
        grid.integrate(q2_reduced(model, ric)) / 1440.0,
    )


# -- minimization ------------------------------------------------------------


@dataclass
class MinimizeResult:
    v: np.ndarray
    w: np.ndarray  # (n1, n2, 2)
    breakdown: I4Breakdown
    iterations: int
    grad_norm: float
    converged: bool
    stalled: bool
    message: str
    history: list

    def as_dict(self):
        d = self.breakdown.as_dict()
        d.update(
            iterations=self.iterations,
            grad_norm=self.grad_norm,
            converged=self.converged,
            stalled=self.stalled,
            message=self.message,
        )
        return d


class _Ex1Objective:
    """Discrete reduced energy in the nodal unknowns ``(v, w1, w2)``."""

    def __init__(self, lam, model: ElasticModel, grid: Grid2D):
        lv, lg, lh = _lambda_on_grid(grid, lam)
        self.grid = grid
        self.mu = model.mu
        self.kappa = model.plane_modulus
        self.wts = grid.weights.ravel()
        self.lam = lv.ravel()
        a = _outer2(lg, lg) / (96.0 * lv[..., None, None])
        self.a11 = a[..., 0, 0].ravel()
        self.a22 = a[..., 1, 1].ravel()
        self.a12 = a[..., 0, 1].ravel()
        M = lh - _outer2(lg, lg) / (2.0 * lv[..., None, None])
        self.const = grid.integrate(q2_reduced(model, M)) / 5760.0
        ops = grid.sparse_ops
        self.D1, self.D2 = ops["d1"], ops["d2"]
        self.D11, self.D22, self.D12 = ops["d11"], ops["d22"], ops["d12"]
        self.D1T, self.D2T = self.D1.T.tocsr(), self.D2.T.tocsr()
        self.D11T, self.D22T, self.D12T = (m.T.tocsr() for m in (self.D11, self.D22, self.D12))
        self.n = grid.size

    def split(self, x):
        n = self.n
        return x[:n], x[n : 2 * n], x[2 * n :]

    def terms(self, x):
        v, w1, w2 = self.split(x)
        v1, v2 = self.D1 @ v, self.D2 @ v
        E11 = self.D1 @ w1 + 0.5 * v1 * v1 + self.a11
        E22 = self.D2 @ w2 + 0.5 * v2 * v2 + self.a22
        E12 = 0.5 * (self.D2 @ w1 + self.D1 @ w2) + 0.5 * v1 * v2 + self.a12
        H11, H22, H12 = self.D11 @ v, self.D22 @ v, self.D12 @ v
        return v1, v2, E11, E22, E12, H11, H22, H12

    def __call__(self, x):
        mu, k, wts = self.mu, self.kappa, self.wts
        v1, v2, E11, E22, E12, H11, H22, H12 = self.terms(x)
        trE = E11 + E22
        stretch = 0.5 * np.sum(wts * (2 * mu * (E11**2 + E22**2 + 2 * E12**2) + k * trE**2))
        trH = H11 + H22
        wl = wts * self.lam / 24.0
        bend = np.sum(wl * (2 * mu * (H11**2 + H22**2 + 2 * H12**2) + k * trH**2))
        g11 = wts * (2 * mu * E11 + k * trE)
        g22 = wts * (2 * mu * E22 + k * trE)
        g12 = wts * 4 * mu * E12
        gw1 = self.D1T @ g11 + 0.5 * (self.D2T @ g12)
        gw2 = self.D2T @ g22 + 0.5 * (self.D1T @ g12)
        gv = self.D1T @ (g11 * v1 + 0.5 * g12 * v2) + self.D2T @ (g22 * v2 + 0.5 * g12 * v1)
        gv += self.D11T @ (wl * (4 * mu * H11 + 2 * k * trH))
        gv += self.D22T @ (wl * (4 * mu * H22 + 2 * k * trH))
        gv += self.D12T @ (wl * 8 * mu * H12)
        return stretch + bend + self.const, np.concatenate([gv, gw1, gw2])

    def breakdown(self, x):
        mu, k, wts = self.mu, self.kappa, self.wts
        _, _, E11, E22, E12, H11, H22, H12 = self.terms(x)
        stretch = 0.5 * np.sum(
            wts * (2 * mu * (E11**2 + E22**2 + 2 * E12**2) + k * (E11 + E22) ** 2)
        )
        bend = np.sum(
            wts * self.lam / 24.0 * (2 * mu * (H11**2 + H22**2 + 2 * H12**2) + k * (H11 + H22) ** 2)
        )
        return I4Breakdown(float(stretch), float(bend), float(self.const))


def minimize_ex1(
    lam,
    model: ElasticModel,
    grid: Grid2D,
    options: OptimizerOptions = OptimizerOptions(),
    v0=None,
    w0=None,
) -> MinimizeResult:
    """Minimize the reduced energy over nodal ``v`` and ``w`` (free boundary).

    Starts from zero unless ``v0`` / ``w0`` (grid samples) are given.
    """
    obj = _Ex1Objective(lam, model, grid)
    n = grid.size
    x0 = np.zeros(3 * n)
    if v0 is not None:
        x0[:n] = np.asarray(v0, float).ravel()
    if w0 is not None:
        w0 = np.asarray(w0, float)
        x0[n : 2 * n] = w0[..., 0].ravel()
        x0[2 * n :] = w0[..., 1].ravel()
    res = lbfgs(obj, x0, options)
    v, w1, w2 = obj.split(res.x)
    return MinimizeResult(
        v=v.reshape(grid.shape),
        w=np.stack([w1.reshape(grid.shape), w2.reshape(grid.shape)], -1),
        breakdown=obj.breakdown(res.x),
        iterations=res.iterations,
        grad_norm=res.grad_norm,
        converged=res.converged,
        stalled=res.stalled,
        message=res.message,
        history=res.history,
    )


# -- experimental: general pairs with a penalized constraint ------------------


class _PenaltyObjective:
    """Energy over nodal ``V`` (3 components) and ``w`` (3 components), with
    ``S = sym((grad y0)^T grad w)`` and the isometry constraint on ``V``
    replaced by ``penalty * int |sym((grad y0)^T grad V)|^2``."""

    def __init__(self, bundle, metric, model, grid, penalty):
        X1, X2 = grid.points
        J = bundle.jet(X1, X2)
        G = metric.sample(X1, X2)
        self.grid = grid
        self.penalty = float(penalty)
        self.wts = grid.weights
        self.K = q2a_matrix(model, metric_sqrt(G))
        self.Y = J.dy0
        self.Gb = J.db0
        self.b0 = J.b0
        self.P = np.einsum("...ab,...bi->...ai", J.Q0, np.linalg.inv(G)[..., :, :2])
        self.c1 = _gram(J.db0, J.db0) / 24.0
        self.const = WEIGHTS[2] * grid.integrate(quad_form(self.K, bending_curvature_form(J)))
        self.shape = grid.shape + (3,)

    def _unpack(self, x):
        n = int(np.prod(self.shape))
        return x[:n].reshape(self.shape), x[n:].reshape(self.shape)

    def _sigma(self, T, weight):
        """Derivative of ``weight * int Q_{2,A}(T)`` with respect to ``T``."""
        from .elastic import voigt2

        g = 2 * weight * self.wts[..., None] * np.einsum("...ab,...b->...a", self.K, voigt2(T))
        return np.stack(
            [np.stack([g[..., 0], 0.5 * g[..., 2]], -1), np.stack([0.5 * g[..., 2], g[..., 1]], -1)],
            -2,
        )

    def _grad_adj(self, dG):
        g = self.grid
        return np.einsum("ji,j...->i...", g._D1, dG[..., 0]) + np.einsum(
            "ji,aj...->ai...", g._D2, dG[..., 1]
        )

    def __call__(self, x):
        g = self.grid
        V, w = self._unpack(x)
        GV, Gw = g.gradient(V), g.gradient(w)
        t = np.einsum("...bi,...b->...i", GV, self.b0)
        p = -np.einsum("...ai,...i->...a", self.P, t)
        Gp = g.gradient(p)
        T1 = sym(_gram(self.Y, Gw)) + 0.5 * _gram(GV, GV) + self.c1
        T2 = _gram(self.Y, Gp) + _gram(GV, self.Gb)
        C = sym(_gram(self.Y, GV))
        e1 = WEIGHTS[0] * g.integrate(quad_form(self.K, T1))
        e2 = WEIGHTS[1] * g.integrate(quad_form(self.K, T2))
        e3 = self.penalty * g.integrate(np.sum(C * C, axis=(-2, -1)))
        S1 = self._sigma(T1, WEIGHTS[0])
        S2 = self._sigma(T2, WEIGHTS[1])
        dGw = np.einsum("...aj,...ji->...ai", self.Y, S1)
        dGV = np.einsum("...aj,...ji->...ai", GV, S1)
        dGV += np.einsum("...aj,...ji->...ai", self.Gb, S2)
        dGV += 2 * self.penalty * self.wts[..., None, None] * np.einsum(
            "...aj,...ji->...ai", self.Y, C
        )
        dp = self._grad_adj(np.einsum("...aj,...ji->...ai", self.Y, S2))
        dt = -np.einsum("...ai,...a->...i", self.P, dp)
        dGV += self.b0[..., :, None] * dt[..., None, :]
        gradV = self._grad_adj(dGV)
        gradw = self._grad_adj(dGw)
        return e1 + e2 + e3 + self.const, np.concatenate([gradV.ravel(), gradw.ravel()])


def minimize_general_penalty(
    bundle, metric, model, grid, penalty: float, options: OptimizerOptions = OptimizerOptions()
):
    """Experimental: minimize over general ``(V, w)`` with a penalized
    isometry constraint. Returns ``(V, w, I4Breakdown, OptimizeResult)``
    where the breakdown excludes the penalty and records the final
    constraint residual."""
    obj = _PenaltyObjective(bundle, metric, model, grid, penalty)
    x0 = np.zeros(2 * grid.size * 3)
    res = lbfgs(obj, x0, options)
    V, w = obj._unpack(res.x)
    Gw = grid.gradient(w)
    pair = AdmissiblePair(grid, vector_on_grid(grid, V), sym(_gram(obj.Y, Gw)), "general")
    br = evaluate_I4(bundle, metric, model, pair, tol=np.inf)
    return V, w, br, res
