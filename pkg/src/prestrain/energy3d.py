"""Direct evaluation of the thin-plate energy ``(1/h) int W(grad u A^-1)``.

Deformations are polynomials in the thickness variable with coefficient
fields on the midplate (the quadratic ansatz and the recovery family), or
the closed-form isometric immersion of a flat metric.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .elastic import ElasticModel, density_eval, minimizer_map_c, sym
from .errors import DomainError, PreconditionError
from .fields import Poly2D, PolyVectorField
from .functional import AdmissiblePair, constraint_residual_V
from .geometry import MetricField, classify_regime, diag_lambda, metric_inv_sqrt, metric_sqrt
from .grid import Grid2D
from .immersion import ImmersionBundle, p_from_V

DEFAULT_H_LIST = tuple(2.0**-k for k in range(3, 8))


class Deformation3D:
    """``u(x', x3)`` with its gradient ``[d1 u | d2 u | d3 u]``."""

    provenance = "user"

    def evaluate(self, x1, x2, x3):
        raise NotImplementedError

    def gradient(self, x1, x2, x3):
        raise NotImplementedError


class LayeredDeformation(Deformation3D):
    """``u = sum_k x3^k c_k(x')`` given by ``layers(x1, x2) -> [(c_k, grad c_k)]``."""

    def __init__(self, layers, provenance="user"):
        self._layers = layers
        self.provenance = provenance

    def evaluate(self, x1, x2, x3):
        x3 = np.asarray(x3, float)[..., None]
        out = 0.0
        for k, (c, _) in enumerate(self._layers(x1, x2)):
            out = out + x3**k * c
        return out

    def gradient(self, x1, x2, x3):
        x3 = np.asarray(x3, float)
        L = self._layers(x1, x2)
        tang = 0.0
        normal = 0.0
        for k, (c, dc) in enumerate(L):
            tang = tang + (x3**k)[..., None, None] * dc
            if k:
                normal = normal + k * (x3 ** (k - 1))[..., None] * c
        tang, normal = np.broadcast_arrays(tang, np.asarray(normal)[..., None])
        return np.concatenate([tang, normal[..., :1]], axis=-1)


def ansatz_kirchhoff(bundle: ImmersionBundle) -> LayeredDeformation:
    """``u = y0 + x3 b0 + x3^2/2 d0``."""

    def layers(x1, x2):
        J = bundle.jet(x1, x2)
        return [(J.y0, J.dy0), (J.b0, J.db0), (0.5 * J.d0, 0.5 * J.dd0)]

    return LayeredDeformation(layers, "kirchhoff_ansatz")


class ExactFlat(Deformation3D):
    """Isometric immersion of ``diag(1, 1, (1 + a.x')^2)``.

    With ``s = |a|``, ``t = a.x'/s``, ``tau`` the orthogonal coordinate and
    ``rho = 1 + s t``, the map is
    ``((rho/s) cos(s x3), -(rho/s) sin(s x3), tau)``; ``a = (1, 0)`` gives
    ``((1 + x1) cos x3, -(1 + x1) sin x3, x2)``. For ``a = 0`` it is the
    identity.
    """

    provenance = "exact_flat"

    def __init__(self, a=(1.0, 0.0)):
        self.a = np.asarray(a, dtype=float)
        self.s = float(np.hypot(*self.a))
        n = self.a / self.s if self.s else np.array([1.0, 0.0])
        self.n = n
        self.m = np.array([-n[1], n[0]])

    def metric(self, domain=(1.0, 1.0)):
        a1, a2 = self.a
        return diag_lambda([1.0, 2 * a1, 2 * a2, a1 * a1, 2 * a1 * a2, a2 * a2], domain)

    def evaluate(self, x1, x2, x3):
        x1, x2, x3 = np.broadcast_arrays(*(np.asarray(t, float) for t in (x1, x2, x3)))
        if self.s == 0:
            return np.stack([x1, x2, x3], -1)
        t = self.n[0] * x1 + self.n[1] * x2
        tau = self.m[0] * x1 + self.m[1] * x2
        r = (1 + self.s * t) / self.s
        return np.stack([r * np.cos(self.s * x3), -r * np.sin(self.s * x3), tau], -1)

    def gradient(self, x1, x2, x3):
        x1, x2, x3 = np.broadcast_arrays(*(np.asarray(t, float) for t in (x1, x2, x3)))
        shape = x1.shape
        if self.s == 0:
            return np.broadcast_to(np.eye(3), shape + (3, 3)).copy()
        rho = 1 + self.s * (self.n[0] * x1 + self.n[1] * x2)
        c, s = np.cos(self.s * x3), np.sin(self.s * x3)
        z = np.zeros(shape)
        Dt = np.stack([c, -s, z], -1)
        Dtau = np.stack([z, z, z + 1.0], -1)
        D3 = np.stack([-rho * s, -rho * c, z], -1)
        d1 = self.n[0] * Dt + self.m[0] * Dtau
        d2 = self.n[1] * Dt + self.m[1] * Dtau
        return np.stack([d1, d2, D3], -1)


def exact_flat(a=(1.0, 0.0)) -> ExactFlat:
    return ExactFlat(a)


# -- recovery family -------------------------------------------------------


_SHIFT_WEIGHTS = {}


def _stencil(o):
    if o not in _SHIFT_WEIGHTS:
        k = np.arange(-2, 3) + o
        Vm = np.vander(k.astype(float), 5, increasing=True).T
        rhs = np.zeros(5)
        rhs[1] = 1.0
        _SHIFT_WEIGHTS[o] = np.linalg.solve(Vm, rhs)
    return _SHIFT_WEIGHTS[o]


def pointwise_gradient(fn, x1, x2, domain, step=1e-3):
    """Fourth-order difference gradient of ``fn(x1, x2) -> (..., 3)``.

    Stencils are shifted near the edges of ``[0, L1] x [0, L2]`` so no
    sample leaves the domain.
    """
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    out = []
    for axis, (x, L) in enumerate(((x1, domain[0]), (x2, domain[1]))):
        if L < 4 * step:
            raise DomainError("domain too small for the difference step")
        lo = np.ceil(2 - x / step - 1e-9)
        hi = np.floor((L - x) / step - 2 + 1e-9)
        o = np.clip(np.minimum(np.maximum(lo, -2), hi), -2, 2).astype(int)
        W = np.stack([_stencil(int(k)) for k in range(-2, 3)])  # (shift, m)
        acc = 0.0
        for mi, m in enumerate(range(-2, 3)):
            pos = x + (m + o) * step
            val = fn(pos, x2) if axis == 0 else fn(x1, pos)
            acc = acc + W[o + 2, mi][..., None] * val
        out.append(acc / step)
    return np.stack(out, -1)


def _in_plane(w):
    """Promote a planar displacement ``(w1, w2)`` to a 3-vector field."""
    if hasattr(w, "jet"):
        return w
    w = list(w)
    if len(w) == 2:
        w.append(Poly2D([0.0]))
    return PolyVectorField(w)


def _solve_frame(Q0, rhs):
    return np.linalg.solve(np.swapaxes(Q0, -1, -2), rhs[..., None])[..., 0]


def recovery_fields(bundle, metric, model, V, w, x1, x2):
    """Correction fields ``p, q, k0, r`` at the given points, with the exact
    gradient of ``p``."""
    J = bundle.jet(x1, x2)
    G = metric.sample(x1, x2)
    A = metric_sqrt(G)
    Vj = V.jet(x1, x2)
    wj = w.jet(x1, x2)
    Y = J.dy0
    p, dp = p_from_V(J, G, Vj, with_grad=True)

    def gram(X, Z):
        return np.einsum("...ai,...aj->...ij", X, Z)

    def c(F):
        return minimizer_map_c(model, A, F)

    def stack(two, three):
        return np.concatenate([two, three[..., None]], -1)

    gV, gw = Vj.grad, wj.grad
    rq = 0.5 * c(2 * gram(Y, gw) + gram(gV, gV))
    rq -= stack(np.einsum("...ai,...a->...i", gw, J.b0), np.zeros(p.shape[:-1]))
    rq -= stack(np.einsum("...ai,...a->...i", gV, p), 0.5 * np.sum(p * p, -1))
    rk = c(gram(Y, J.dd0) + gram(J.db0, J.db0))
    rk -= stack(np.einsum("...ai,...a->...i", J.db0, J.d0), np.sum(J.d0 * J.d0, -1))
    rr = c(gram(Y, dp) + gram(gV, J.db0))
    rr -= stack(np.einsum("...ai,...a->...i", gV, J.d0), np.sum(p * J.d0, -1))
    Q0 = J.Q0
    return {
        "p": p,
        "dp": dp,
        "q": _solve_frame(Q0, rq),
        "k0": _solve_frame(Q0, rk),
        "r": _solve_frame(Q0, rr),
    }


class RecoveryDeformation(LayeredDeformation):
    """``u = y0 + hV + h^2 w + x3 (b0 + h p + h^2 q) + x3^2/2 (d0 + h r) + x3^3/6 k0``."""

    def __init__(self, bundle, metric, model, V, w, h, fd_step=1e-3):
        self.bundle, self.metric, self.model = bundle, metric, model
        self.V, self.w, self.h = V, w, float(h)
        self.fd_step = fd_step
        super().__init__(self._build, f"recovery(h={self.h!r})")

    def _build(self, x1, x2):
        h = self.h
        args = (self.bundle, self.metric, self.model, self.V, self.w)
        F = recovery_fields(*args, x1, x2)
        dom = self.metric.domain

        def grad_of(key):
            return pointwise_gradient(
                lambda a, b: recovery_fields(*args, a, b)[key], x1, x2, dom, self.fd_step
            )

        J = self.bundle.jet(x1, x2)
        Vj, wj = self.V.jet(x1, x2), self.w.jet(x1, x2)
        return [
            (J.y0 + h * Vj.value + h * h * wj.value, J.dy0 + h * Vj.grad + h * h * wj.grad),
            (J.b0 + h * F["p"] + h * h * F["q"], J.db0 + h * F["dp"] + h * h * grad_of("q")),
            (0.5 * (J.d0 + h * F["r"]), 0.5 * (J.dd0 + h * grad_of("r"))),
            (F["k0"] / 6.0, grad_of("k0") / 6.0),
        ]


def recovery_deformation(bundle, metric, model, V, w, h, tol=1e-8, grid=None) -> RecoveryDeformation:
    """Recovery family for a smooth admissible ``V`` and a displacement ``w``
    (three components, or two for a planar one). Both need analytic jets."""
    if not h > 0:
        raise ValueError("h must be positive")
    w = _in_plane(w)
    grid = grid or metric.default_grid()
    res = constraint_residual_V(bundle, V, grid)
    if res > tol:
        raise PreconditionError(f"V is not a first-order isometry: residual {res:.3e} > {tol:.1e}")
    return RecoveryDeformation(bundle, metric, model, V, w, h)


def recovery_pair(bundle, V, w, grid: Grid2D) -> AdmissiblePair:
    """Limit pair matched by the recovery family:
    ``S = sym((grad y0)^T grad (w + d0/24))``."""
    w = _in_plane(w)
    J = bundle.jet(*grid.points)
    wj = w.jet(*grid.points)
    gw = wj.grad + J.dd0 / 24.0
    S = sym(np.einsum("...ai,...aj->...ij", J.dy0, gw))
    return AdmissiblePair.from_fields(grid, V, S, tag="recovery")


# -- energy ----------------------------------------------------------------


def _grid(metric, grid):
    if grid is None:
        return metric.default_grid(65)
    if isinstance(grid, int):
        return metric.default_grid(grid)
    return grid


def energy_Eh(metric: MetricField, model: ElasticModel, u: Deformation3D, h, grid=None, n3: int = 6):
    """``(1/h) int_{Omega x (-h/2, h/2)} W(grad u A^-1)``.

    Trapezoid rule on ``grid`` in ``x'`` and ``n3``-point Gauss-Legendre in
    ``x3``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if n3 < 2:
        raise ValueError("need at least 2 thickness nodes")
    grid = _grid(metric, grid)
    X1, X2 = grid.points
    t, wt = np.polynomial.legendre.leggauss(n3)
    x3 = 0.5 * h * t
    Ainv = metric_inv_sqrt(metric.sample(X1, X2))[:, :, None]
    F = u.gradient(X1[..., None], X2[..., None], x3)
    Wd = density_eval(model, F @ Ainv)
    return grid.integrate(0.5 * np.einsum("...k,k->...", Wd, wt))


@dataclass
class ScalingTable:
    rows: list  # (h, Eh, Eh / h^4), decreasing h
    fitted_slope: float | None
    fit_range: list
    excluded: list = field(default_factory=list)
    regime: str | None = None

    def to_csv(self) -> str:
        lines = ["h,Eh,Eh_over_h4"]
        lines += [",".join(repr(float(v)) for v in r) for r in self.rows]
        lines.append(
            json.dumps(
                {"fitted_slope": self.fitted_slope, "fit_range": self.fit_range, "regime": self.regime},
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def fit_slope(hs, Es, floor=1e-18):
    idx = [i for i, e in enumerate(Es) if e > floor]
    if len(idx) < 2:
        return None, idx
    slope = np.polyfit(np.log([hs[i] for i in idx]), np.log([Es[i] for i in idx]), 1)[0]
    return float(slope), idx


def scaling_study(metric, model, family, h_list=DEFAULT_H_LIST, grid=None, n3=6, regime=None):
    """Energies over ``h_list`` and the least-squares log-log slope.

    ``family`` is a deformation (reused for every ``h``) or a callable
    ``h -> Deformation3D``. Rows with energy at most ``1e-18`` are left out
    of the fit and listed in ``excluded``.
    """
    hs = sorted((float(h) for h in h_list), reverse=True)
    if len(hs) < 4 or hs[0] / hs[-1] < 10 * (1 - 1e-12):
        raise ValueError("need at least 4 values of h spanning a decade")
    grid = _grid(metric, grid)
    rows = []
    for h in hs:
        u = family(h) if callable(family) and not isinstance(family, Deformation3D) else family
        E = energy_Eh(metric, model, u, h, grid, n3)
        rows.append((h, E, E / h**4))
    slope, idx = fit_slope(hs, [r[1] for r in rows])
    if regime is None:
        regime = classify_regime(metric).regime.value
    return ScalingTable(rows, slope, idx, [i for i in range(len(hs)) if i not in idx], regime)
