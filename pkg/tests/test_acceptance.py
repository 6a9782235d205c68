"""One pass/fail test per acceptance criterion, each at its stated tolerance."""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from prestrain.elastic import ElasticModel, embed, q2_reduced, q2a, q3
from prestrain.energy3d import (
    DEFAULT_H_LIST,
    ansatz_kirchhoff,
    energy_Eh,
    exact_flat,
    recovery_deformation,
    recovery_pair,
    scaling_study,
)
from prestrain.fields import Poly2D, PolyVectorField, harmonic_polynomial
from prestrain.functional import evaluate_I4, minimize_ex1
from prestrain.geometry import (
    Regime,
    classify_regime,
    conformal,
    curvature_block,
    diag_lambda,
    identity_metric,
    m_lambda,
    polynomial_metric,
    ricci_conformal,
    riemann_covariant,
    riemann_tensor,
)
from prestrain.grid import Grid2D
from prestrain.immersion import catalog_immersion, curvature_identity_residual, sampled_refinement

M = ElasticModel(1.0, 1.0)
LAM = Poly2D([1, 0, 0, 1, 0, 0])  # 1 + x1^2


def _symmetry_defect(R):
    return max(
        np.max(np.abs(R + np.einsum("...kilm->...iklm", R))),
        np.max(np.abs(R + np.einsum("...ikml->...iklm", R))),
        np.max(np.abs(R - np.einsum("...lmik->...iklm", R))),
        np.max(np.abs(R + np.einsum("...ilmk->...iklm", R) + np.einsum("...imkl->...iklm", R))),
    )


def _positive_lambda(rng):
    while True:
        c = 0.3 * rng.normal(size=10)
        c[0] = 1.0 + abs(c[0])
        lam = Poly2D(c)
        g = Grid2D.square(9)
        if np.min(lam(*g.points)) > 0.2:
            return lam


def test_criterion_1_curvature_oracle_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    g = Grid2D.square(9)
    X1, X2 = g.points
    worst_sym, worst_closed = 0.0, 0.0
    for _ in range(20):
        lam = _positive_lambda(rng)
        m = diag_lambda(lam)
        R = riemann_tensor(m, X1, X2)
        worst_sym = max(worst_sym, _symmetry_defect(R))
        block = curvature_block(riemann_covariant(m, X1, X2))
        worst_closed = max(worst_closed, np.max(np.abs(block + 0.5 * m_lambda(lam, X1, X2))))

        a = 0.4 * (rng.normal(size=4) + 1j * rng.normal(size=4))
        a[0] = a[0].real
        f = harmonic_polynomial(3, a)
        mc = conformal(f)
        Rc = riemann_tensor(mc, X1, X2)
        worst_sym = max(worst_sym, _symmetry_defect(Rc) / max(1.0, np.max(np.abs(Rc))))
        bc = curvature_block(riemann_covariant(mc, X1, X2))
        expect = np.exp(2 * f(X1, X2))[..., None, None] * ricci_conformal(f, X1, X2)[..., :2, :2]
        worst_closed = max(worst_closed, np.max(np.abs(bc - expect)))
    elapsed = time.perf_counter() - t0
    assert worst_sym <= 1e-9
    assert worst_closed <= 1e-8
    assert elapsed < 5.0


def test_criterion_2_regime_classification():
    got = [classify_regime(identity_metric()).regime]
    rng = np.random.default_rng(7)
    for a1, a2 in rng.uniform(-0.7, 0.7, size=(10, 2)):
        got.append(classify_regime(diag_lambda([1.0, 2 * a1, 2 * a2, a1 * a1, 2 * a1 * a2, a2 * a2])).regime)
    got.append(classify_regime(diag_lambda(LAM)).regime)
    got.append(classify_regime(polynomial_metric({(1, 1): [1, 0, 0, 1, 0, 0]})).regime)
    assert got == [Regime.Flat] * 11 + [Regime.OrderH4, Regime.OrderH2]


def test_criterion_3_curvature_identity():
    families = [diag_lambda(LAM), conformal(harmonic_polynomial(2, [0.1, 0.5 - 0.3j, 0.2j]))]
    analytic = [curvature_identity_residual(catalog_immersion(m), m, Grid2D.square(33)).sup for m in families]
    ratios = [sampled_refinement(m, Grid2D.square(65)).ratio for m in families]
    assert max(analytic) <= 1e-8
    assert all(3.5 <= r <= 4.5 for r in ratios), ratios


def test_criterion_4_relaxed_form():
    value, c = q2a(M, np.eye(3), np.eye(2))
    assert value == pytest.approx(20 / 3, abs=1e-12)
    np.testing.assert_allclose(c, [0, 0, -2 / 3], atol=1e-12)

    rng = np.random.default_rng(4)
    W = np.array([[0.0, 1.0], [-1.0, 0.0]])
    e3 = np.array([0.0, 0.0, 1.0])
    for _ in range(100):
        B = rng.normal(size=(3, 3))
        A = B @ B.T + 0.5 * np.eye(3)
        F = rng.normal(size=(2, 2))
        kv, _ = q2a(M, A, rng.normal() * W)
        assert abs(kv) <= 1e-12
        v, _ = q2a(M, A, F)
        Ai = np.linalg.inv(A)
        C = rng.normal(size=(1000, 3)) * 3
        N = embed(F) + 0.5 * (C[:, :, None] * e3 + e3[:, None] * C[:, None, :])
        assert v <= np.min(q3(M, Ai @ N @ Ai)) + 1e-12

    F = rng.normal(size=(20, 2, 2))
    for s in (0.3, 2.5):
        np.testing.assert_allclose(q2a(M, np.diag([1.0, 1.0, s]), F)[0], q2_reduced(M, F), rtol=1e-10)
    # stated isotropic law: Q_{2, sqrt(lam) Id} = Q2 / lam
    for lam in (0.5, 2.0, 3.7):
        np.testing.assert_allclose(q2a(M, np.sqrt(lam) * np.eye(3), F)[0], q2_reduced(M, F) / lam, rtol=1e-10)


def test_criterion_5_minimization_target():
    closed = (32 / 3) * (0.25 + math.pi / 8) / 5760
    grid = Grid2D.square(65)
    t0 = time.perf_counter()
    r = minimize_ex1(LAM, M, grid)
    t1 = time.perf_counter()
    flat = minimize_ex1(Poly2D([1, 0.6, 0, 0.09, 0, 0]), M, grid)
    t2 = time.perf_counter()
    assert abs(r.breakdown.total - closed) / closed <= 0.01
    assert flat.breakdown.total <= 1e-6
    assert t1 - t0 < 60 and t2 - t1 < 60


def test_criterion_6_exact_immersion_zero_energy():
    u = exact_flat((1.0, 0.0))
    m = diag_lambda([1, 2, 0, 1, 0, 0])  # (1 + x1)^2
    energies = [energy_Eh(m, M, u, h) for h in (0.1, 0.01)]
    assert max(energies) <= 1e-18


def test_criterion_7_h4_scaling():
    m = diag_lambda(LAM)
    t0 = time.perf_counter()
    table = scaling_study(m, M, ansatz_kirchhoff(catalog_immersion(m)), DEFAULT_H_LIST, Grid2D.square(65), 6)
    elapsed = time.perf_counter() - t0
    assert [r[0] for r in table.rows] == [2.0**-k for k in range(3, 8)]
    assert 3.8 <= table.fitted_slope <= 4.2
    assert elapsed < 30


def test_criterion_8_gamma_limit_consistency():
    m = diag_lambda(LAM)
    b = catalog_immersion(m)
    g = Grid2D.square(33)
    V = PolyVectorField.vertical([0, 0, 0, 0, 1, 0])  # v = x1 x2
    w = (Poly2D([0, 0, 0, 0.1, 0, 0.05]), Poly2D([0, 0, 0, 0, 0.1, 0]))
    target = evaluate_I4(b, m, M, recovery_pair(b, V, w, g)).total
    gaps = {}
    for h in DEFAULT_H_LIST:
        E = energy_Eh(m, M, recovery_deformation(b, m, M, V, w, h, grid=g), h, g)
        gaps[h] = abs(E / h**4 - target) / target
    seq = [gaps[h] for h in sorted(gaps, reverse=True)]
    assert gaps[2.0**-6] <= 0.15
    assert all(a > b for a, b in zip(seq, seq[1:])), seq


def test_criterion_9_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"metric": "diag_lambda", "lambda_poly": [1, 0, 0, 1, 0, 0], "grid": 17,
                               "max_iters": 200, "h_list": [0.125, 0.0625, 0.03125, 0.0125]}))
    runs = []
    for _ in range(2):
        outputs = []
        for cmd in ("classify", "identity-check", "minimize", "scaling", "i4-eval"):
            out = tmp_path / f"{cmd}.out"
            r = subprocess.run([sys.executable, "-m", "prestrain", cmd, "--config", str(cfg), "--out", str(out)],
                               capture_output=True)
            outputs.append((r.returncode, r.stdout, out.read_bytes()))
        runs.append(outputs)
    assert runs[0] == runs[1]
    assert [o[0] for o in runs[0]] == [Regime.OrderH4.exit_code, 0, 0, 0, 0]
