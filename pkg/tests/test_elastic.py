import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from prestrain.elastic import (
    ElasticModel,
    density_eval,
    embed,
    minimizer_map_c,
    q2_reduced,
    q2a,
    q2a_matrix,
    q3,
    quad_form,
)
from prestrain.errors import DomainError

M = ElasticModel()


def _spd(rng, n=None):
    B = rng.normal(size=(3, 3) if n is None else (n, 3, 3))
    return B @ np.swapaxes(B, -1, -2) + 0.5 * np.eye(3)


def test_model_validation():
    with pytest.raises(ValueError):
        ElasticModel(mu=0.0)
    with pytest.raises(ValueError):
        ElasticModel(lambdaL=-1.0)


def test_density_vanishes_on_rotations():
    R = Rotation.random(20, random_state=4).as_matrix()
    np.testing.assert_allclose(density_eval(M, R), 0.0, atol=1e-28)
    F = np.random.default_rng(0).normal(size=(3, 3))
    assert density_eval(M, R[0] @ F) == pytest.approx(density_eval(M, F))


def test_density_small_stretch():
    eps = 1e-3
    assert density_eval(M, np.diag([1 + eps, 1, 1])) == pytest.approx(1.5e-6, rel=1e-2)


def test_q3_values():
    assert q3(M, np.eye(3)) == pytest.approx(15.0)
    S = np.array([[0, 1, 2], [-1, 0, 3], [-2, -3, 0.0]])
    assert q3(M, S) == 0.0


def test_q3_is_hessian_of_density():
    rng = np.random.default_rng(2)
    F = rng.normal(size=(3, 3))
    model = ElasticModel(0.7, 1.9)
    errs = []
    for t in (1e-2, 5e-3):
        fd = (density_eval(model, np.eye(3) + t * F) + density_eval(model, np.eye(3) - t * F)
              - 2 * density_eval(model, np.eye(3))) / t**2
        errs.append(abs(fd - q3(model, F)))
    assert errs[1] < errs[0] / 3.5


def test_q2a_hand_example():
    value, c = q2a(M, np.eye(3), np.eye(2))
    assert value == pytest.approx(20 / 3, abs=1e-12)
    np.testing.assert_allclose(c, [0, 0, -2 / 3], atol=1e-12)
    v0, c0 = q2a(M, np.eye(3), np.zeros((2, 2)))
    assert v0 == 0.0 and np.all(c0 == 0.0)


def test_q2_reduced_examples():
    assert q2_reduced(M, np.eye(2)) == pytest.approx(20 / 3)
    assert q2_reduced(ElasticModel(1.0, 0.0), np.diag([1.0, -1.0])) == pytest.approx(4.0)


def test_q2a_against_numerical_minimizer():
    rng = np.random.default_rng(5)
    model = ElasticModel(1.3, 0.4)
    for _ in range(5):
        A = _spd(rng)
        F = rng.normal(size=(2, 2))
        Ai = np.linalg.inv(A)

        def obj(c):
            N = embed(F) + 0.5 * (np.outer(c, [0, 0, 1]) + np.outer([0, 0, 1], c))
            return q3(model, Ai @ N @ Ai)

        ref = minimize(obj, np.zeros(3), method="BFGS", options={"gtol": 1e-12})
        value, c = q2a(model, A, F)
        assert value == pytest.approx(ref.fun, rel=1e-8, abs=1e-12)
        np.testing.assert_allclose(c, ref.x, rtol=1e-5, atol=1e-6)
        # stationarity of the returned c
        h = 1e-6
        g = [(obj(c + h * e) - obj(c - h * e)) / (2 * h) for e in np.eye(3)]
        assert np.linalg.norm(g) < 1e-8


def test_relaxation_bound_and_kernel():
    rng = np.random.default_rng(6)
    A = _spd(rng, 50)
    F = rng.normal(size=(50, 2, 2))
    value, _ = q2a(M, A, F)
    Ai = np.linalg.inv(A)
    assert np.all(value <= q3(M, Ai @ embed(F) @ Ai) + 1e-12)
    W = np.array([[0.0, 1.0], [-1.0, 0.0]])
    kv, kc = q2a(M, A, np.broadcast_to(W, F.shape))
    np.testing.assert_allclose(kv, 0.0, atol=1e-12)
    np.testing.assert_allclose(kc, 0.0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_minimizer_map_linear_in_symmetric_part(seed, a, b):
    rng = np.random.default_rng(seed)
    A = _spd(rng)
    F1, F2 = rng.normal(size=(2, 2, 2))
    c = lambda F: minimizer_map_c(M, A, F)
    np.testing.assert_allclose(c(a * F1 + b * F2), a * c(F1) + b * c(F2), atol=1e-9)
    np.testing.assert_allclose(c(F1), c(0.5 * (F1 + F1.T)), atol=1e-12)


def test_positive_definite_on_symmetric():
    rng = np.random.default_rng(7)
    for A in _spd(rng, 5):
        S = rng.normal(size=(1000, 2, 2))
        S = 0.5 * (S + np.swapaxes(S, -1, -2))
        S /= np.linalg.norm(S, axis=(-2, -1))[..., None, None]
        assert np.min(q2a(M, A, S)[0]) > 0


def test_diag_scaling_law():
    rng = np.random.default_rng(8)
    F = rng.normal(size=(20, 2, 2))
    for s in (0.3, 1.0, 4.2):
        A = np.diag([1.0, 1.0, s])
        np.testing.assert_allclose(q2a(M, A, F)[0], q2_reduced(M, F), rtol=1e-10)


def test_isotropic_scaling_law_is_inverse_square():
    """For A = sqrt(lam) Id the sandwich A^-1 X A^-1 is X / lam, so the
    quadratic form picks up lam^-2."""
    rng = np.random.default_rng(9)
    F = rng.normal(size=(20, 2, 2))
    for lam in (0.5, 2.0, 3.7):
        A = np.sqrt(lam) * np.eye(3)
        np.testing.assert_allclose(q2a(M, A, F)[0], q2_reduced(M, F) / lam**2, rtol=1e-10)


def test_q2a_matrix_polarization():
    rng = np.random.default_rng(10)
    A = _spd(rng, 4)
    F = rng.normal(size=(4, 2, 2))
    K = q2a_matrix(ElasticModel(0.8, 2.5), A)
    np.testing.assert_allclose(quad_form(K, F), q2a(ElasticModel(0.8, 2.5), A, F)[0], rtol=1e-10)
    np.testing.assert_allclose(K, np.swapaxes(K, -1, -2))


def test_singular_A_rejected():
    with pytest.raises(DomainError):
        q2a(M, np.zeros((3, 3)), np.eye(2))
