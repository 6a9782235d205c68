"""Differential geometry of a thickness-independent prestrain metric G(x').

Indices run over (x1, x2, x3). Every derivative in the x3 direction is a
structural zero: the metric depends on the in-plane coordinates only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .fields import Poly2D
from .grid import Grid2D

COMPONENTS = ("R1212", "R1213", "R1223", "R1313", "R1323", "R2323")
_INDEX = {
    "R1212": (0, 1, 0, 1),
    "R1213": (0, 1, 0, 2),
    "R1223": (0, 1, 1, 2),
    "R1313": (0, 2, 0, 2),
    "R1323": (0, 2, 1, 2),
    "R2323": (1, 2, 1, 2),
}

CSV_HEADER = "x1,x2,G11,G12,G13,G22,G23,G33"
_UPPER = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def metric_sqrt(G):
    """Symmetric positive definite square root of an SPD matrix (batched)."""
    G = np.asarray(G, dtype=float)
    if not np.allclose(G, np.swapaxes(G, -1, -2), rtol=1e-12, atol=1e-14):
        raise DomainError("metric_sqrt: input is not symmetric")
    w, U = np.linalg.eigh(G)
    if np.any(w <= 0):
        raise DomainError(
            f"metric_sqrt: matrix is not positive definite "
            f"(eigenvalue {w.min():.6g})"
        )
    return np.einsum("...ij,...j,...kj->...ik", U, np.sqrt(w), U)


def metric_inv_sqrt(G):
    w, U = np.linalg.eigh(np.asarray(G, dtype=float))
    if np.any(w <= 0):
        raise DomainError(f"matrix is not positive definite (eigenvalue {w.min():.6g})")
    return np.einsum("...ij,...j,...kj->...ik", U, 1.0 / np.sqrt(w), U)


@dataclass(frozen=True)
class MetricJet:
    G: np.ndarray  # (..., 3, 3)
    dG: np.ndarray  # (..., 3, 3, 3): dG[..., k, i, j] = d_k G_ij
    ddG: np.ndarray  # (..., 3, 3, 3, 3): ddG[..., k, l, i, j]


class MetricField:
    """Base class for prescribed metrics on ``[0, L1] x [0, L2]``.

    Subclasses provide ``_jet2d`` returning ``G``, the two in-plane first
    derivatives and the 2x2 block of second derivatives; padding with the
    x3 zeros happens here.
    """

    kind = "abstract"
    analytic = True

    def __init__(self, params=(), domain=(1.0, 1.0), fd_step=None):
        self.params = tuple(params)
        self.domain = (float(domain[0]), float(domain[1]))
        self.fd_step = fd_step

    def default_grid(self, n: int = 33) -> Grid2D:
        return Grid2D(n, n, *self.domain)

    def _check(self, x1, x2):
        L1, L2 = self.domain
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        eps = 1e-12 * max(L1, L2, 1.0)
        if np.any(x1 < -eps) or np.any(x1 > L1 + eps) or np.any(x2 < -eps) or np.any(
            x2 > L2 + eps
        ):
            raise DomainError(f"point outside the domain [0,{L1}]x[0,{L2}]")

    @staticmethod
    def _spd(G):
        w = np.linalg.eigvalsh(G)
        if not np.all(w > 0):
            raise DomainError(f"metric is not positive definite (eigenvalue {np.min(w):.6g})")
        return G

    def sample(self, x1, x2):
        self._check(x1, x2)
        return self._spd(self._jet2d(x1, x2)[0])

    def jet(self, x1, x2) -> MetricJet:
        self._check(x1, x2)
        G, dG2, ddG2 = self._jet2d(x1, x2)
        self._spd(G)
        shape = G.shape[:-2]
        dG = np.zeros(shape + (3, 3, 3))
        dG[..., :2, :, :] = dG2
        ddG = np.zeros(shape + (3, 3, 3, 3))
        ddG[..., :2, :2, :, :] = ddG2
        return MetricJet(G, dG, ddG)

    def _jet2d(self, x1, x2):
        raise NotImplementedError

    def resample(self, grid: Grid2D) -> "SampledMetric":
        """Grid samples of this metric, differentiated by finite differences."""
        return SampledMetric(grid, self.sample(*grid.points))

    def __repr__(self):
        return f"{type(self).__name__}(kind={self.kind!r}, params={list(self.params)!r})"


class PolynomialMetric(MetricField):
    """Metric whose six independent entries are polynomials in x'."""

    def __init__(self, entries, kind="polynomial", params=(), domain=(1.0, 1.0)):
        super().__init__(params, domain)
        self.kind = kind
        E = [[None] * 3 for _ in range(3)]
        for (i, j), p in entries.items():
            p = p if isinstance(p, Poly2D) else Poly2D(p)
            E[i][j] = E[j][i] = p
        for i in range(3):
            for j in range(3):
                if E[i][j] is None:
                    E[i][j] = Poly2D([1.0 if i == j else 0.0])
        self.entries = E

    def _jet2d(self, x1, x2):
        shape = np.broadcast(np.asarray(x1), np.asarray(x2)).shape
        G = np.empty(shape + (3, 3))
        dG = np.empty(shape + (2, 3, 3))
        ddG = np.empty(shape + (2, 2, 3, 3))
        for i in range(3):
            for j in range(i, 3):
                jt = self.entries[i][j].jet(x1, x2)
                for a, b in ((i, j), (j, i)):
                    G[..., a, b] = jt.value
                    dG[..., :, a, b] = jt.grad
                    ddG[..., :, :, a, b] = jt.hess
        return G, dG, ddG


class ConformalMetric(MetricField):
    """``G = exp(2 f) Id3`` with a polynomial ``f``."""

    kind = "conformal_lambda"

    def __init__(self, f, domain=(1.0, 1.0)):
        f = f if isinstance(f, Poly2D) else Poly2D(f)
        super().__init__(f.coeffs, domain)
        self.f = f

    def lam(self, x1, x2):
        return np.exp(2 * self.f(x1, x2))

    def _jet2d(self, x1, x2):
        fj = self.f.jet(x1, x2)
        e = np.exp(2 * fj.value)
        I = np.eye(3)
        G = e[..., None, None] * I
        g = fj.grad
        dG = (2 * e[..., None] * g)[..., None, None] * I
        H = 2 * fj.hess + 4 * g[..., :, None] * g[..., None, :]
        ddG = (e[..., None, None] * H)[..., None, None] * I
        return G, dG, ddG


class SampledMetric(MetricField):
    """Metric known only at the nodes of a uniform grid."""

    kind = "sampled"
    analytic = False

    def __init__(self, grid: Grid2D, G):
        super().__init__((), (grid.L1, grid.L2), fd_step=(grid.dx1, grid.dx2))
        if grid.origin != (0.0, 0.0):
            raise DomainError("sampled metrics must start at the origin")
        G = np.asarray(G, dtype=float)
        if G.shape != grid.shape + (3, 3):
            raise ValueError(f"expected samples of shape {grid.shape + (3, 3)}")
        if grid.n1 < 4 or grid.n2 < 4:
            raise DomainError("grid too coarse for second-order stencils (need >= 4)")
        w = np.linalg.eigvalsh(G)
        if np.any(w <= 0):
            raise DomainError(f"sampled metric is not SPD (eigenvalue {w.min():.6g})")
        self.grid = grid
        self.G = G
        self._dG = np.stack([grid.d1(G), grid.d2(G)], axis=2)
        h12 = grid.d12(G)
        self._ddG = np.stack(
            [np.stack([grid.d11(G), h12], 2), np.stack([h12, grid.d22(G)], 2)], 2
        )

    def default_grid(self, n=None) -> Grid2D:
        return self.grid

    def _nodes(self, x1, x2):
        g = self.grid
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        i = np.rint(x1 / g.dx1).astype(int)
        j = np.rint(x2 / g.dx2).astype(int)
        off = np.maximum(np.abs(i * g.dx1 - x1) / g.dx1, np.abs(j * g.dx2 - x2) / g.dx2)
        if np.any(off > 1e-9):
            raise DomainError("sampled metrics are only evaluable at grid nodes")
        return i, j

    def _jet2d(self, x1, x2):
        i, j = self._nodes(x1, x2)
        return self.G[i, j], self._dG[i, j], self._ddG[i, j]


# -- catalog -----------------------------------------------------------------


def identity_metric(domain=(1.0, 1.0)) -> PolynomialMetric:
    return PolynomialMetric({}, kind="identity", domain=domain)


def diag_lambda(lam, domain=(1.0, 1.0)) -> PolynomialMetric:
    """``G = diag(1, 1, lam(x'))`` with polynomial ``lam``."""
    lam = lam if isinstance(lam, Poly2D) else Poly2D(lam)
    m = PolynomialMetric({(2, 2): lam}, kind="diag_lambda", params=lam.coeffs, domain=domain)
    m.lam = lam
    return m


def conformal(f, domain=(1.0, 1.0)) -> ConformalMetric:
    """``G = lam Id3`` with ``lam = exp(2 f)``."""
    return ConformalMetric(f, domain)


def polynomial_metric(entries, domain=(1.0, 1.0)) -> PolynomialMetric:
    """General polynomial metric; ``entries`` maps ``(i, j)`` to coefficients."""
    return PolynomialMetric(entries, kind="polynomial", domain=domain)


# -- sampled metric text tables ---------------------------------------------


def write_sampled_csv(metric: MetricField, grid: Grid2D, path) -> None:
    G = metric.sample(*grid.points)
    X1, X2 = grid.points
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for a in range(grid.n1):
            for b in range(grid.n2):
                row = [X1[a, b], X2[a, b]] + [G[a, b, i, j] for i, j in _UPPER]
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _uniform_axis(values, name):
    u = np.unique(values)
    if u.size < 2:
        raise DomainError(f"sampled metric: axis {name} has a single value")
    d = np.diff(u)
    if np.max(np.abs(d - d.mean())) > 1e-10 * d.mean():
        raise DomainError(f"sampled metric: axis {name} is not uniformly spaced")
    return u


def read_sampled_csv(path) -> SampledMetric:
    with open(path) as fh:
        header = fh.readline().strip().replace(" ", "")
    if header != CSV_HEADER:
        raise ValueError(f"unexpected header {header!r}; expected {CSV_HEADER!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    a = _uniform_axis(data[:, 0], "x1")
    b = _uniform_axis(data[:, 1], "x2")
    if a[0] != 0.0 or b[0] != 0.0:
        raise DomainError("sampled metric grid must start at the origin")
    if data.shape[0] != a.size * b.size:
        raise DomainError("sampled metric rows do not form a full tensor grid")
    grid = Grid2D(a.size, b.size, float(a[-1]), float(b[-1]))
    i = np.rint(data[:, 0] / grid.dx1).astype(int)
    j = np.rint(data[:, 1] / grid.dx2).astype(int)
    G = np.zeros(grid.shape + (3, 3))
    for c, (p, q) in enumerate(_UPPER):
        G[i, j, p, q] = data[:, 2 + c]
        G[i, j, q, p] = data[:, 2 + c]
    return SampledMetric(grid, G)


# -- curvature ---------------------------------------------------------------


def christoffel_from_jet(jet: MetricJet):
    Ginv = np.linalg.inv(jet.G)
    dG = jet.dG
    # T[s, k, l] = d_k G_sl + d_l G_sk - d_s G_kl
    T = (
        np.einsum("...ksl->...skl", dG)
        + np.einsum("...lsk->...skl", dG)
        - dG
    )
    return 0.5 * np.einsum("...ns,...skl->...nkl", Ginv, T)


def christoffel(metric: MetricField, x1, x2):
    """Christoffel symbols ``Gamma[..., n, k, l]`` of the second kind."""
    return christoffel_from_jet(metric.jet(x1, x2))


def riemann_from_jet(jet: MetricJet):
    """Full covariant tensor ``R[..., i, k, l, m]`` evaluated term by term."""
    dd = jet.ddG  # dd[k, l, i, j] = d_k d_l G_ij
    Gam = christoffel_from_jet(jet)
    second = 0.5 * (
        np.einsum("...klim->...iklm", dd)
        + np.einsum("...imkl->...iklm", dd)
        - np.einsum("...kmil->...iklm", dd)
        - np.einsum("...ilkm->...iklm", dd)
    )
    quad = np.einsum("...np,...nkl,...pim->...iklm", jet.G, Gam, Gam) - np.einsum(
        "...np,...nkm,...pil->...iklm", jet.G, Gam, Gam
    )
    return second + quad


def riemann_tensor(metric: MetricField, x1, x2):
    return riemann_from_jet(metric.jet(x1, x2))


def riemann_covariant(metric: MetricField, x1, x2):
    """The six independent components, stacked on the last axis in
    ``COMPONENTS`` order."""
    R = riemann_tensor(metric, x1, x2)
    return np.stack([R[(...,) + _INDEX[c]] for c in COMPONENTS], axis=-1)


def curvature_block(R6):
    """2x2 block ``[[R1313, R1323], [R1323, R2323]]`` from stacked components."""
    a, b, c = R6[..., 3], R6[..., 4], R6[..., 5]
    return np.stack([np.stack([a, b], -1), np.stack([b, c], -1)], -2)


def ricci_conformal(f, x1, x2):
    """Ricci tensor of ``exp(2 f) Id3`` from the 2D derivatives of ``f``."""
    fj = f.jet(x1, x2)
    g = fj.grad
    H = fj.hess
    lap = H[..., 0, 0] + H[..., 1, 1]
    shape = lap.shape
    Ric = np.zeros(shape + (3, 3))
    Ric[..., :2, :2] = -(H - g[..., :, None] * g[..., None, :])
    Ric -= (lap + np.sum(g * g, -1))[..., None, None] * np.eye(3)
    return Ric


def ricci_from_riemann(R, G):
    """``Ric_km = G^il R_iklm``."""
    return np.einsum("...il,...iklm->...km", np.linalg.inv(G), R)


def m_lambda(lam, x1, x2):
    """Obstruction ``hess(lam) - grad(lam) (x) grad(lam) / (2 lam)``."""
    lj = lam.jet(x1, x2)
    if np.any(lj.value <= 0):
        raise DomainError(f"m_lambda: lambda <= 0 (min {np.min(lj.value):.6g})")
    g = lj.grad
    return lj.hess - g[..., :, None] * g[..., None, :] / (2 * lj.value[..., None, None])


# -- classification ----------------------------------------------------------


class Regime(enum.Enum):
    Flat = "Flat"
    OrderH4 = "OrderH4"
    OrderH2 = "OrderH2"

    @property
    def exit_code(self) -> int:
        return {"Flat": 0, "OrderH4": 10, "OrderH2": 20}[self.value]


@dataclass
class CurvatureReport:
    components: dict  # name -> field on the grid
    sup_norms: dict
    regime: Regime
    threshold: float
    scale: float
    grid: Grid2D = field(repr=False, default=None)


DEFAULT_TOL_ANALYTIC = 1e-8
DEFAULT_TOL_SAMPLED = 1e-4


def classify_regime(metric: MetricField, grid: Grid2D | int | None = None, tol=None):
    """Sup-norms of the six Riemann components and the energy-scaling regime.

    A component counts as vanishing when its sup-norm is at most
    ``tol * scale`` with ``scale = max(1, sup|d2 G|, sup|dG|^2)``.

    ===========  =====================================================
    Flat         all six vanish (zero energy is attainable)
    OrderH4      R1212, R1213, R1223 vanish, one of the rest does not
    OrderH2      otherwise
    ===========  =====================================================
    """
    if grid is None:
        grid = metric.default_grid()
    elif isinstance(grid, int):
        grid = metric.default_grid(grid) if metric.analytic else metric.default_grid()
    if grid.n1 < 5 or grid.n2 < 5:
        raise DomainError("classification needs at least a 5x5 grid")
    if tol is None:
        tol = DEFAULT_TOL_ANALYTIC if metric.analytic else DEFAULT_TOL_SAMPLED
    if tol <= 0:
        raise ValueError("tol must be positive")
    jet = metric.jet(*grid.points)
    R = riemann_from_jet(jet)
    comps = {c: R[(...,) + _INDEX[c]] for c in COMPONENTS}
    sups = {c: float(np.max(np.abs(v))) for c, v in comps.items()}
    scale = max(1.0, float(np.max(np.abs(jet.ddG))), float(np.max(np.abs(jet.dG))) ** 2)
    thr = tol * scale
    first = all(sups[c] <= thr for c in COMPONENTS[:3])
    second = all(sups[c] <= thr for c in COMPONENTS[3:])
    if first and second:
        regime = Regime.Flat
    elif first:
        regime = Regime.OrderH4
    else:
        regime = Regime.OrderH2
    return CurvatureReport(comps, sups, regime, thr, scale, grid)
