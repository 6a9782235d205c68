"""Leading-order geometry of a plate whose metric satisfies the vanishing condition.

A bundle carries the isometric immersion ``y0`` of the midplate metric, the
Cosserat director ``b0`` completing the frame ``Q0 = [d1 y0 | d2 y0 | b0]``
with ``Q0^T Q0 = G``, and the second-order director ``d0``. Catalog bundles
are closed forms with exact derivatives; sampled bundles start from grid
samples of ``y0`` and derive everything else by finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError, UnsupportedMetricError
from .fields import ExpField, Poly2D, SqrtField, VectorJet
from .geometry import (
    ConformalMetric,
    MetricField,
    PolynomialMetric,
    christoffel_from_jet,
    curvature_block,
    riemann_covariant,
)
from .grid import Grid2D

IMMERSION_CSV_HEADER = "x1,x2,y1,y2,y3"


@dataclass(frozen=True)
class BundleJet:
    y0: np.ndarray  # (..., 3)
    dy0: np.ndarray  # (..., 3, 2)
    ddy0: np.ndarray  # (..., 3, 2, 2)
    b0: np.ndarray  # (..., 3)
    db0: np.ndarray  # (..., 3, 2)
    d0: np.ndarray  # (..., 3)
    dd0: np.ndarray  # (..., 3, 2)

    @property
    def Q0(self):
        return np.concatenate([self.dy0, self.b0[..., None]], axis=-1)

    @property
    def B0(self):
        return np.concatenate([self.db0, self.d0[..., None]], axis=-1)

    @property
    def D0(self):
        return np.concatenate([self.dd0, np.zeros_like(self.d0)[..., None]], axis=-1)

    def dQ0(self, j: int):
        """Partial derivative of ``Q0`` in direction ``j``."""
        return np.concatenate([self.ddy0[..., :, :, j], self.db0[..., :, j, None]], -1)


class ImmersionBundle:
    kind = "abstract"

    def __init__(self, metric: MetricField):
        self.metric = metric

    def jet(self, x1, x2) -> BundleJet:
        raise NotImplementedError


# -- planar maps used by the catalog ----------------------------------------


class _IdentityMap:
    def jet(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        shape = x1.shape
        phi = np.stack([x1, x2], -1)
        dphi = np.broadcast_to(np.eye(2), shape + (2, 2)).copy()
        return phi, dphi, np.zeros(shape + (2, 2, 2))


class _ConformalMap:
    """``phi = F(z)`` with ``F' = exp(h)`` for a complex polynomial ``h``."""

    def __init__(self, a):
        a = np.trim_zeros(np.asarray(a, dtype=complex), "b")
        self.a = a if a.size else np.zeros(1, dtype=complex)
        self._nodes, self._weights = np.polynomial.legendre.leggauss(48)

    def _h(self, z):
        return np.polynomial.polynomial.polyval(z, self.a)

    def _dh(self, z):
        return np.polynomial.polynomial.polyval(z, np.polynomial.polynomial.polyder(self.a))

    def _F(self, z):
        a = self.a
        if a.size == 1:
            return np.exp(a[0]) * z
        if a.size == 2:
            return np.exp(self._h(z)) / a[1]
        t = 0.5 * (self._nodes + 1.0)
        w = 0.5 * self._weights
        vals = np.exp(self._h(z[..., None] * t))
        return z * np.sum(w * vals, axis=-1)

    def jet(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        z = x1 + 1j * x2
        F = self._F(z)
        F1 = np.exp(self._h(z))
        F2 = self._dh(z) * F1
        phi = np.stack([F.real, F.imag], -1)
        # d1 phi = F', d2 phi = i F'
        c1 = np.stack([F1.real, F1.imag], -1)
        c2 = np.stack([-F1.imag, F1.real], -1)
        dphi = np.stack([c1, c2], -1)
        s11 = np.stack([F2.real, F2.imag], -1)
        s12 = np.stack([-F2.imag, F2.real], -1)
        ddphi = np.stack([np.stack([s11, s12], -1), np.stack([s12, -s11], -1)], -1)
        return phi, dphi, ddphi


def holomorphic_coefficients(f: Poly2D):
    """Complex ``a_k`` with ``f = Re sum_k a_k z^k`` for a harmonic polynomial."""
    C = f._C
    d = f.degree
    a = np.zeros(d + 1, dtype=complex)
    for k in range(d + 1):
        re = C[k, 0]
        im = -C[k - 1, 1] / k if k >= 1 and C.shape[1] > 1 else 0.0
        a[k] = re + 1j * im
    return a


class CatalogBundle(ImmersionBundle):
    """Planar immersion ``y0 = (phi, 0)`` with ``b0 = s e3``.

    ``d0 = -(grad phi)^-T (s grad s)`` in the plane.
    """

    kind = "catalog"

    def __init__(self, metric, planar_map, s_field):
        super().__init__(metric)
        self.planar_map = planar_map
        self.s_field = s_field

    def jet(self, x1, x2) -> BundleJet:
        self.metric._check(x1, x2)
        phi, dphi, ddphi = self.planar_map.jet(x1, x2)
        sj = self.s_field.jet(x1, x2)
        shape = phi.shape[:-1]
        s = sj.value + np.zeros(shape)
        gs = sj.grad + np.zeros(shape + (2,))
        hs = sj.hess + np.zeros(shape + (2, 2))

        y0 = np.zeros(shape + (3,))
        y0[..., :2] = phi
        dy0 = np.zeros(shape + (3, 2))
        dy0[..., :2, :] = dphi
        ddy0 = np.zeros(shape + (3, 2, 2))
        ddy0[..., :2, :, :] = ddphi
        b0 = np.zeros(shape + (3,))
        b0[..., 2] = s
        db0 = np.zeros(shape + (3, 2))
        db0[..., 2, :] = gs

        PinvT = np.swapaxes(np.linalg.inv(dphi), -1, -2)
        u = s[..., None] * gs
        d = -np.einsum("...ij,...j->...i", PinvT, u)
        # d_j u = d_j s grad s + s d_j grad s
        du = gs[..., :, None] * gs[..., None, :] + s[..., None, None] * hs
        dMtd = np.einsum("...aij,...a->...ij", ddphi, d)
        dd = -np.einsum("...ik,...kj->...ij", PinvT, dMtd + du)
        d0 = np.zeros(shape + (3,))
        d0[..., :2] = d
        dd0 = np.zeros(shape + (3, 2))
        dd0[..., :2, :] = dd
        return BundleJet(y0, dy0, ddy0, b0, db0, d0, dd0)


def catalog_immersion(metric: MetricField) -> CatalogBundle:
    """Closed-form leading-order geometry for the catalog metrics.

    Supports the identity, ``diag(1, 1, lam)`` and ``exp(2 f) Id3`` with
    harmonic ``f``.
    """
    if isinstance(metric, ConformalMetric):
        if not metric.f.is_harmonic():
            raise UnsupportedMetricError(
                "exp(2f) Id3 with non-harmonic f: the midplate metric is not flat, "
                "so no planar immersion exists and constructing y0 would require "
                "solving the isometric immersion system, which is not supported"
            )
        a = holomorphic_coefficients(metric.f)
        return CatalogBundle(metric, _ConformalMap(a), ExpField(metric.f))
    if isinstance(metric, PolynomialMetric):
        E = metric.entries
        unit = all(
            _is_const(E[i][j], float(i == j))
            for i, j in ((0, 0), (0, 1), (1, 1), (0, 2), (1, 2))
        )
        if unit:
            return CatalogBundle(metric, _IdentityMap(), SqrtField(E[2][2]))
    raise UnsupportedMetricError(
        f"no closed-form immersion for metric kind {metric.kind!r}; constructing y0 "
        "would require solving the isometric immersion system, which is not "
        "supported (supply grid samples of y0 instead)"
    )


def _is_const(p: Poly2D, value: float) -> bool:
    c = np.asarray(p.coeffs)
    return c[0] == value and not np.any(c[1:])


# -- pointwise constructions -------------------------------------------------


def cosserat_b0(dy0, G):
    """Director completing ``(d1 y0, d2 y0)`` to a frame with ``Q0^T Q0 = G``."""
    dy0 = np.asarray(dy0, float)
    Ginv = np.linalg.inv(G)
    g33 = Ginv[..., 2, 2]
    if np.any(g33 <= 0):
        raise DomainError("inverse metric has a non-positive (3,3) entry")
    n = np.cross(dy0[..., :, 0], dy0[..., :, 1])
    nn = np.linalg.norm(n, axis=-1)
    if np.any(nn <= 1e-14):
        raise DomainError("degenerate tangent plane: d1 y0 x d2 y0 vanishes")
    N = n / nn[..., None]
    t = Ginv[..., 0, 2, None] * dy0[..., :, 0] + Ginv[..., 1, 2, None] * dy0[..., :, 1]
    return -t / g33[..., None] + N / np.sqrt(g33)[..., None]


def director_d0(Q0, b0, db0):
    """Solve ``Q0^T d0 = (-<d1 b0, b0>, -<d2 b0, b0>, 0)``."""
    rhs = np.zeros(np.shape(b0))
    rhs[..., 0] = -np.einsum("...a,...a->...", db0[..., :, 0], b0)
    rhs[..., 1] = -np.einsum("...a,...a->...", db0[..., :, 1], b0)
    det = np.linalg.det(Q0)
    if np.any(np.abs(det) < 1e-14):
        raise DomainError("director_d0: Q0 is singular")
    return np.linalg.solve(np.swapaxes(Q0, -1, -2), rhs[..., None])[..., 0]


class SampledBundle(ImmersionBundle):
    """Bundle built from grid samples of ``y0`` alone."""

    kind = "sampled"

    def __init__(self, metric: MetricField, grid: Grid2D, y0):
        super().__init__(metric)
        y0 = np.asarray(y0, float)
        if y0.shape != grid.shape + (3,):
            raise ValueError(f"expected y0 samples of shape {grid.shape + (3,)}")
        self.grid = grid
        G = metric.sample(*grid.points)
        dy0 = grid.gradient(y0)
        ddy0 = grid.hessian(y0)
        b0 = cosserat_b0(dy0, G)
        db0 = grid.gradient(b0)
        Q0 = np.concatenate([dy0, b0[..., None]], -1)
        d0 = director_d0(Q0, b0, db0)
        dd0 = grid.gradient(d0)
        self._jet = BundleJet(y0, dy0, ddy0, b0, db0, d0, dd0)

    @classmethod
    def from_function(cls, metric, grid, fn):
        """Sample ``fn(x1, x2) -> (..., 3)`` on the grid."""
        return cls(metric, grid, fn(*grid.points))

    def jet(self, x1, x2) -> BundleJet:
        g = self.grid
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        i = np.rint((x1 - g.origin[0]) / g.dx1).astype(int)
        j = np.rint((x2 - g.origin[1]) / g.dx2).astype(int)
        off = np.maximum(
            np.abs(g.origin[0] + i * g.dx1 - x1) / g.dx1,
            np.abs(g.origin[1] + j * g.dx2 - x2) / g.dx2,
        )
        if np.any(off > 1e-9) or np.any(i < 0) or np.any(j < 0) or np.any(
            i >= g.n1
        ) or np.any(j >= g.n2):
            raise DomainError("sampled bundles are only evaluable at grid nodes")
        J = self._jet
        return BundleJet(*(getattr(J, k)[i, j] for k in J.__dataclass_fields__))


def read_immersion_csv(path, metric: MetricField) -> SampledBundle:
    with open(path) as fh:
        header = fh.readline().strip().replace(" ", "")
    if header != IMMERSION_CSV_HEADER:
        raise ValueError(f"unexpected header {header!r}; expected {IMMERSION_CSV_HEADER!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    a = np.unique(data[:, 0])
    b = np.unique(data[:, 1])
    grid = Grid2D(a.size, b.size, float(a[-1] - a[0]), float(b[-1] - b[0]), (float(a[0]), float(b[0])))
    if data.shape[0] != grid.size:
        raise DomainError("immersion rows do not form a full tensor grid")
    i = np.rint((data[:, 0] - a[0]) / grid.dx1).astype(int)
    j = np.rint((data[:, 1] - b[0]) / grid.dx2).astype(int)
    y0 = np.zeros(grid.shape + (3,))
    y0[i, j] = data[:, 2:5]
    return SampledBundle(metric, grid, y0)


def write_immersion_csv(bundle: ImmersionBundle, grid: Grid2D, path) -> None:
    X1, X2 = grid.points
    y0 = bundle.jet(X1, X2).y0
    with open(path, "w") as fh:
        fh.write(IMMERSION_CSV_HEADER + "\n")
        for a in range(grid.n1):
            for b in range(grid.n2):
                row = [X1[a, b], X2[a, b], *y0[a, b]]
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


# -- validation --------------------------------------------------------------


@dataclass
class IsometryReport:
    metric_residual: float
    sym_residual: float

    def admitted(self, tol: float) -> bool:
        return self.metric_residual <= tol and self.sym_residual <= tol


def check_isometry_conditions(bundle, metric, grid: Grid2D) -> IsometryReport:
    """Sup-norms of ``(grad y0)^T grad y0 - G_2x2`` and ``sym((grad y0)^T grad b0)``."""
    J = bundle.jet(*grid.points)
    G = metric.sample(*grid.points)
    first = np.einsum("...ai,...aj->...ij", J.dy0, J.dy0) - G[..., :2, :2]
    M = np.einsum("...ai,...aj->...ij", J.dy0, J.db0)
    second = 0.5 * (M + np.swapaxes(M, -1, -2))
    return IsometryReport(
        float(np.max(np.linalg.norm(first, axis=(-2, -1)))),
        float(np.max(np.linalg.norm(second, axis=(-2, -1)))),
    )


def _default_tol(metric, bundle):
    if isinstance(bundle, SampledBundle):
        # one-sided second-order stencils at the edges
        h = max(bundle.grid.dx1, bundle.grid.dx2)
        return max(1e-6, 20.0 * h * h)
    if not metric.analytic:
        h = max(metric.fd_step)
        return max(1e-6, 20.0 * h * h)
    return 1e-8


@dataclass
class IdentityResidual:
    residual: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    grid: Grid2D

    @property
    def sup(self) -> float:
        return float(np.max(self.residual))

    @property
    def mean(self) -> float:
        return float(np.mean(self.residual))

    def interior_sup(self, margin: int = 3) -> float:
        """Sup over nodes at least ``margin`` spacings from the edge.

        Nested one-sided differences lose an order at the first few nodes,
        so the interior is where the second-order rate is visible.
        """
        r = self.residual[margin:-margin, margin:-margin]
        return float(np.max(r)) if r.size else float("nan")


def bending_curvature_form(J: BundleJet):
    """``sym((grad y0)^T grad d0) + (grad b0)^T grad b0`` as a 2x2 field."""
    M = np.einsum("...ai,...aj->...ij", J.dy0, J.dd0)
    return 0.5 * (M + np.swapaxes(M, -1, -2)) + np.einsum(
        "...ai,...aj->...ij", J.db0, J.db0
    )


def curvature_identity_residual(bundle, metric, grid: Grid2D, tol=None) -> IdentityResidual:
    """Pointwise Frobenius gap between the bundle's curvature form and the
    (13,13)/(13,23)/(23,23) block of the Riemann tensor."""
    tol = _default_tol(metric, bundle) if tol is None else tol
    rep = check_isometry_conditions(bundle, metric, grid)
    if not rep.admitted(tol):
        raise PreconditionError(
            f"bundle does not immerse the metric: residuals "
            f"{rep.metric_residual:.3e}, {rep.sym_residual:.3e} exceed {tol:.1e}"
        )
    J = bundle.jet(*grid.points)
    lhs = bending_curvature_form(J)
    rhs = curvature_block(riemann_covariant(metric, *grid.points))
    res = np.linalg.norm(lhs - rhs, axis=(-2, -1))
    return IdentityResidual(res, lhs, rhs, grid)


def christoffel_expansion_check(bundle, metric, grid: Grid2D) -> dict:
    """Residuals of expanding ``d_ij y0``, ``d_i b0`` and ``d0`` in the frame
    ``Q0`` with Christoffel coefficients."""
    J = bundle.jet(*grid.points)
    Gam = christoffel_from_jet(metric.jet(*grid.points))
    Q0 = J.Q0
    exp_y = np.einsum("...an,...nij->...aij", Q0, Gam[..., :, :2, :2])
    exp_b = np.einsum("...an,...ni->...ai", Q0, Gam[..., :, :2, 2])
    exp_d = np.einsum("...an,...n->...a", Q0, Gam[..., :, 2, 2])
    return {
        "ddy0": float(np.max(np.abs(J.ddy0 - exp_y))),
        "db0": float(np.max(np.abs(J.db0 - exp_b))),
        "d0": float(np.max(np.abs(J.d0 - exp_d))),
    }


def p_from_V(J: BundleJet, G, V: VectorJet, with_grad: bool = False):
    """Vector ``p`` with ``(grad y0)^T p = -(grad V)^T b0`` and ``<b0, p> = 0``.

    Uses ``p = -sum_i G^{ai} <d_i V, b0> Q0 e_a``. With ``with_grad`` the
    exact derivative ``(..., 3, 2)`` is returned as well.
    """
    Q0 = J.Q0
    Ginv = np.linalg.inv(G)
    t = np.einsum("...ai,...a->...i", V.grad, J.b0)
    p = -np.einsum("...ab,...bi,...i->...a", Q0, Ginv[..., :, :2], t)
    if not with_grad:
        return p
    QinvT = np.linalg.inv(np.swapaxes(Q0, -1, -2))
    dp = np.empty(p.shape + (2,))
    for j in range(2):
        dt = np.einsum("...ai,...a->...i", V.hess[..., :, :, j], J.b0) + np.einsum(
            "...ai,...a->...i", V.grad, J.db0[..., :, j]
        )
        r = -np.einsum("...ba,...b->...a", J.dQ0(j), p)
        r[..., :2] -= dt
        dp[..., j] = np.einsum("...ab,...b->...a", QinvT, r)
    return p, dp


@dataclass
class RefinementReport:
    coarse: IdentityResidual
    fine: IdentityResidual
    margin: int

    @property
    def ratio(self) -> float | None:
        """Coarse over fine interior sup; ``None`` when the fine residual is exactly zero."""
        fine = self.fine.interior_sup(self.margin)
        return None if fine == 0 else self.coarse.interior_sup(self.margin) / fine


def sampled_refinement(metric, grid: Grid2D, margin: int = 3) -> RefinementReport:
    """Identity residual in sampled mode on ``grid`` and on its refinement.

    The metric and the catalog ``y0`` are sampled on each grid; every
    derivative then comes from the grid stencils.
    """
    bundle = catalog_immersion(metric)
    out = []
    for g in (grid, grid.refined()):
        sm = metric.resample(g)
        sb = SampledBundle(sm, g, bundle.jet(*g.points).y0)
        out.append(curvature_identity_residual(sb, sm, g))
    return RefinementReport(out[0], out[1], margin)
