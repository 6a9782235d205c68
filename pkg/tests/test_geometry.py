import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from prestrain.errors import DomainError
from prestrain.fields import Poly2D, harmonic_polynomial
from prestrain.geometry import (
    COMPONENTS,
    Regime,
    christoffel,
    classify_regime,
    conformal,
    curvature_block,
    diag_lambda,
    identity_metric,
    m_lambda,
    metric_sqrt,
    polynomial_metric,
    read_sampled_csv,
    ricci_conformal,
    ricci_from_riemann,
    riemann_covariant,
    riemann_tensor,
    write_sampled_csv,
)
from prestrain.grid import Grid2D

X, Y = sp.symbols("x y")


def _sym_poly(coeffs):
    out, k, d = 0, 0, 0
    while k < len(coeffs):
        for j in range(d + 1):
            out += coeffs[k] * X ** (d - j) * Y**j
            k += 1
        d += 1
    return out


def _sympy_riemann(Gs, point):
    """Covariant Riemann tensor from the mixed tensor
    R^i_klm = d_l Gam^i_km - d_m Gam^i_kl + Gam^i_nl Gam^n_km - Gam^i_nm Gam^n_kl."""
    coords = (X, Y, sp.Symbol("z"))
    G = sp.Matrix(Gs)
    Gi = G.inv()

    def d(expr, k):
        return sp.diff(expr, coords[k])

    Gam = [[[sum(Gi[i, s] * (d(G[s, k], l) + d(G[s, l], k) - d(G[k, l], s)) for s in range(3)) / 2
             for l in range(3)] for k in range(3)] for i in range(3)]
    sub = {X: point[0], Y: point[1]}
    Gam_n = np.array([[[float(Gam[i][k][l].subs(sub)) for l in range(3)] for k in range(3)] for i in range(3)])
    dGam = np.array([[[[float(d(Gam[i][k][l], m).subs(sub)) for m in range(3)] for l in range(3)]
                      for k in range(3)] for i in range(3)])
    Rm = (np.einsum("ikml->iklm", dGam) - dGam
          + np.einsum("inl,nkm->iklm", Gam_n, Gam_n) - np.einsum("inm,nkl->iklm", Gam_n, Gam_n))
    Gn = np.array(G.subs(sub), dtype=float)
    return np.einsum("ij,jklm->iklm", Gn, Rm)


def _random_metric_entries(rng):
    """Quadratic entries, redrawn until positive definite on the unit square."""
    g = Grid2D.square(9)
    while True:
        entries = {}
        for i in range(3):
            for j in range(i, 3):
                c = 0.15 * rng.normal(size=6)
                c[0] = (1.0 if i == j else 0.0) + 0.1 * rng.normal()
                entries[(i, j)] = c
        try:
            polynomial_metric(entries).sample(*g.points)
            return entries
        except DomainError:
            continue


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_riemann_against_symbolic_oracle(seed):
    rng = np.random.default_rng(seed)
    entries = _random_metric_entries(rng)
    m = polynomial_metric(entries)
    Gs = [[0] * 3 for _ in range(3)]
    for (i, j), c in entries.items():
        Gs[i][j] = Gs[j][i] = _sym_poly([sp.Float(v) for v in c])
    pt = (0.3, 0.6)
    ours = riemann_tensor(m, np.array(pt[0]), np.array(pt[1]))
    np.testing.assert_allclose(ours, _sympy_riemann(Gs, pt), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_riemann_symmetries(seed):
    rng = np.random.default_rng(seed)
    m = polynomial_metric(_random_metric_entries(rng))
    R = riemann_tensor(m, rng.uniform(size=4), rng.uniform(size=4))
    np.testing.assert_allclose(R, -np.einsum("...kilm->...iklm", R), atol=1e-10)
    np.testing.assert_allclose(R, -np.einsum("...ikml->...iklm", R), atol=1e-10)
    np.testing.assert_allclose(R, np.einsum("...lmik->...iklm", R), atol=1e-10)
    bianchi = R + np.einsum("...ilmk->...iklm", R) + np.einsum("...imkl->...iklm", R)
    np.testing.assert_allclose(bianchi, 0.0, atol=1e-10)


def test_diag_lambda_block_is_minus_half_obstruction():
    lam = Poly2D([1.2, 0.3, -0.2, 0.5, 0.1, 0.4])
    m = diag_lambda(lam)
    g = Grid2D.square(11)
    R6 = riemann_covariant(m, *g.points)
    np.testing.assert_allclose(R6[..., :3], 0.0, atol=1e-12)
    np.testing.assert_allclose(curvature_block(R6), -0.5 * m_lambda(lam, *g.points), atol=1e-12)


def test_curvature_of_one_plus_x1_squared():
    m = diag_lambda([1, 0, 0, 1, 0, 0])
    R6 = riemann_covariant(m, np.array(0.0), np.array(0.0))
    np.testing.assert_allclose(R6, [0, 0, 0, -1, 0, 0], atol=1e-14)
    Gam = christoffel(m, np.array(1.0), np.array(0.0))
    assert Gam[2, 0, 2] == pytest.approx(0.5)
    assert Gam[0, 2, 2] == pytest.approx(-1.0)


@pytest.mark.parametrize("coeffs", [[0, 1, 0], [0.1, 0.3, -0.2, 0.4, 0.2, -0.3], [0, 0, 0, 1, 0, 0]])
def test_conformal_riemann_matches_ricci_decomposition(coeffs):
    """In 3D the Riemann tensor is fixed by the Ricci tensor."""
    f = Poly2D(coeffs)
    m = conformal(f)
    g = Grid2D.square(7)
    X1, X2 = g.points
    G = m.sample(X1, X2)
    Ric = ricci_conformal(f, X1, X2)
    Gi = np.linalg.inv(G)
    scal = np.einsum("...ij,...ij->...", Gi, Ric)
    o = lambda a, b, idx: np.einsum(f"...{idx[0]}{idx[1]},...{idx[2]}{idx[3]}->...iklm", a, b)
    expect = (o(G, Ric, "ilkm") + o(G, Ric, "kmil") - o(G, Ric, "imkl") - o(G, Ric, "klim")
              - 0.5 * scal[..., None, None, None, None] * (o(G, G, "ilkm") - o(G, G, "imkl")))
    R = riemann_tensor(m, X1, X2)
    np.testing.assert_allclose(R, expect, atol=1e-9 * np.max(np.abs(R)) + 1e-12)
    np.testing.assert_allclose(ricci_from_riemann(R, G), Ric, atol=1e-9)


def test_conformal_block_with_harmonic_f():
    f = harmonic_polynomial(3, [0.1, 0.4 - 0.2j, 0.3 + 0.1j, -0.2j])
    m = conformal(f)
    g = Grid2D.square(9)
    X1, X2 = g.points
    block = curvature_block(riemann_covariant(m, X1, X2))
    e2 = np.exp(2 * f(X1, X2))[..., None, None]
    np.testing.assert_allclose(block, e2 * ricci_conformal(f, X1, X2)[..., :2, :2], atol=1e-10)


def test_conformal_f_x1():
    R6 = riemann_covariant(conformal([0, 1, 0]), np.array(0.5), np.array(0.2))
    assert R6[5] == pytest.approx(-np.exp(1.0))
    np.testing.assert_allclose(R6[:5], 0.0, atol=1e-12)


def test_metric_sqrt_and_domain_errors():
    rng = np.random.default_rng(3)
    B = rng.normal(size=(5, 3, 3))
    G = B @ np.swapaxes(B, -1, -2) + 0.5 * np.eye(3)
    A = metric_sqrt(G)
    np.testing.assert_allclose(A @ A, G, atol=1e-12)
    np.testing.assert_allclose(A, np.swapaxes(A, -1, -2), atol=1e-14)
    with pytest.raises(DomainError, match="eigenvalue"):
        metric_sqrt(np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(DomainError):
        identity_metric().sample(np.array(1.5), np.array(0.2))


def test_classification_examples():
    assert classify_regime(identity_metric()).regime is Regime.Flat
    assert classify_regime(diag_lambda([1, 0, 0, 1, 0, 0])).regime is Regime.OrderH4
    assert classify_regime(polynomial_metric({(1, 1): [1, 0, 0, 1, 0, 0]})).regime is Regime.OrderH2
    assert [r.exit_code for r in Regime] == [0, 10, 20]


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
def test_flat_family_is_flat(a1, a2):
    m = diag_lambda([1.0, 2 * a1, 2 * a2, a1 * a1, 2 * a1 * a2, a2 * a2])
    assert classify_regime(m, 9).regime is Regime.Flat


def test_sampled_round_trip(tmp_path):
    m = diag_lambda([1, 0, 0, 1, 0, 0])
    g = Grid2D.square(17)
    path = tmp_path / "g.csv"
    write_sampled_csv(m, g, path)
    sm = read_sampled_csv(path)
    np.testing.assert_array_equal(sm.G, m.sample(*g.points))
    rep = classify_regime(sm)
    assert rep.regime is Regime.OrderH4
    assert set(rep.sup_norms) == set(COMPONENTS)
    with pytest.raises(DomainError):
        sm.sample(np.array(0.01), np.array(0.0))


def test_sampled_rejects_nonuniform(tmp_path):
    path = tmp_path / "bad.csv"
    rows = ["x1,x2,G11,G12,G13,G22,G23,G33"]
    for x in (0.0, 0.1, 0.3, 0.4):
        for y in (0.0, 0.1, 0.2, 0.3):
            rows.append(f"{x},{y},1,0,0,1,0,1")
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(DomainError, match="uniformly"):
        read_sampled_csv(path)
