import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from irsopt.model import ChannelRealization, effective_channels
from irsopt.rate_core import (mse, mses, nats_to_bits, phi_lambda, sinr, sinrs, sum_rate,
                              total_power)
from irsopt.wmmse import update_u, update_w

from conftest import scalar_real

ONE = np.ones(1)
NO_THETA = np.zeros(1)


def test_sinr_scalar_examples():
    real = scalar_real(2.0)
    assert sinr(0, np.array([[1.5]]), NO_THETA, real, ONE) == pytest.approx(9.0)
    # M=1, K=2, unit channels, unit beams: 1 / (1 + 1)
    real2 = ChannelRealization(G=np.zeros((1, 1)), h_d=np.ones((2, 1)), h_r=np.zeros((2, 1)))
    np.testing.assert_allclose(sinrs(np.ones((2, 1)), NO_THETA, real2, np.ones(2)), [0.5, 0.5])


def test_sinr_matches_recomputation(instance):
    real, V, u, w, theta, sigma2 = instance
    H = effective_channels(real, theta)
    for k in range(real.K):
        g = np.array([np.vdot(H[k], V[j]) for j in range(real.K)])
        expect = abs(g[k]) ** 2 / (sigma2[k] + np.sum(np.abs(g) ** 2) - abs(g[k]) ** 2)
        assert sinr(k, V, theta, real, sigma2) == pytest.approx(expect, rel=1e-12)


def test_sum_rate_examples(instance):
    real, V, u, w, theta, sigma2 = instance
    assert sum_rate(np.zeros_like(V), theta, real, sigma2) == 0.0
    assert sum_rate(np.array([[1.0]]), NO_THETA, scalar_real(), ONE) == pytest.approx(math.log(2))
    assert nats_to_bits(math.log(2)) == pytest.approx(1.0)


def test_mse_examples():
    real, V = scalar_real(), np.array([[1.0]])
    assert mse(0, 0.0, V, NO_THETA, real, ONE) == pytest.approx(1.0)
    assert mse(0, 0.5, V, NO_THETA, real, ONE) == pytest.approx(0.5)


def test_optimal_mse_is_inverse_one_plus_sinr(instance):
    real, V, u, w, theta, sigma2 = instance
    u_opt = update_u(V, theta, real, sigma2)
    np.testing.assert_allclose(mses(u_opt, V, theta, real, sigma2),
                               1.0 / (1.0 + sinrs(V, theta, real, sigma2)), rtol=1e-9)


def test_rate_mmse_identity_against_numeric_minimization(instance):
    real, V, u, w, theta, sigma2 = instance
    for k in range(real.K):
        res = minimize(lambda x: mse(k, x[0] + 1j * x[1], V, theta, real, sigma2), [0.0, 0.0],
                       method="BFGS", options={"gtol": 1e-12})
        assert -math.log(res.fun) == pytest.approx(math.log1p(sinr(k, V, theta, real, sigma2)), abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1e6))
def test_variational_identity(x):
    w = 1.0 / x
    assert -w * x + math.log(w) + 1 == pytest.approx(-math.log(x), abs=1e-12)
    for other in (0.5 * w, 2.0 * w):
        assert -other * x + math.log(other) + 1 <= -math.log(x) + 1e-12


def test_phi_examples(instance):
    real, V, u, w, theta, sigma2 = instance
    K = real.K
    assert phi_lambda(V, np.zeros(K), np.ones(K), theta, 0.0, real, sigma2) == pytest.approx(K)
    z = np.zeros(real.N)
    assert phi_lambda(V, u, w, z, 0.0, real, sigma2) == phi_lambda(V, u, w, z, 3.0, real, sigma2)
    penalty = np.linalg.norm(theta) ** 2
    assert (phi_lambda(V, u, w, theta, 0.0, real, sigma2) - phi_lambda(V, u, w, theta, 2.0, real, sigma2)
            == pytest.approx(2.0 * penalty))


def test_phi_at_wmmse_optimum_equals_K_minus_rate(instance):
    real, V, u, w, theta, sigma2 = instance
    u_opt = update_u(V, theta, real, sigma2)
    w_opt = update_w(u_opt, V, theta, real, sigma2)
    assert (phi_lambda(V, u_opt, w_opt, theta, 0.0, real, sigma2)
            == pytest.approx(real.K - sum_rate(V, theta, real, sigma2), rel=1e-9))
    # closed-form maximizers also realize the sum-rate variational form
    e = mses(u_opt, V, theta, real, sigma2)
    assert np.sum(-w_opt * e + np.log(w_opt) + 1) == pytest.approx(sum_rate(V, theta, real, sigma2), rel=1e-9)


def test_phi_zero_and_negative_weights(instance):
    real, V, u, w, theta, sigma2 = instance
    w0 = w.copy()
    w0[0] = 0.0
    assert phi_lambda(V, u, w0, theta, 0.0, real, sigma2) == math.inf
    w0[0] = -1.0
    with pytest.raises(ValueError):
        phi_lambda(V, u, w0, theta, 0.0, real, sigma2)


def test_total_power(instance):
    V = instance[1]
    assert total_power(V) == pytest.approx(np.sum(np.abs(V) ** 2))
