import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irsopt.acceptance import oracle_ratios
from irsopt.baselines import (MAX_ENUMERATION, exhaustive_discrete, fd_gradient, no_irs_wmmse,
                              polygon_projection_oracle, quantize_baseline, segment_projection,
                              wmmse_rate)
from irsopt.model import PhaseAlphabet, paper_default, sample_realization, trial_rng
from irsopt.solver import solve

from conftest import crandn

finite = st.floats(min_value=-4, max_value=4, allow_nan=False)


def tiny(N=4, seed=0, **kw):
    cfg = paper_default(M=2, K=2, N=N, alphabet="dp:2", **kw)
    return cfg, sample_realization(cfg, trial_rng(seed, 0))


@pytest.mark.parametrize("seed", range(5))
def test_no_irs_single_user_capacity(seed):
    cfg = paper_default(M=4, K=1, N=6)
    real = sample_realization(cfg, trial_rng(seed, 0))
    rep = no_irs_wmmse(cfg, real)
    cap = math.log1p(cfg.p_max * np.linalg.norm(real.h_d[0]) ** 2 / cfg.sigma2[0])
    assert rep.sum_rate == pytest.approx(cap, abs=1e-6)


def test_quantize_fine_alphabet_matches_continuous():
    cfg = paper_default(M=4, K=3, N=8)
    real = sample_realization(cfg, trial_rng(3, 0))
    cont = solve(cfg, real, rng=trial_rng(3, 0, 1))
    q = quantize_baseline(cont, 1024, real, cfg)
    assert abs(q.sum_rate - cont.sum_rate) <= 1e-3
    assert q.termination == "quantized"
    np.testing.assert_array_equal(q.theta_relaxed, cont.theta)


def test_quantize_noop_when_nothing_moves():
    cfg = paper_default(M=4, K=3, N=0)
    real = sample_realization(cfg, trial_rng(3, 0))
    cont = solve(cfg, real)
    assert quantize_baseline(cont, 2, real, cfg).sum_rate == cont.sum_rate


def test_quantize_mean_orderings():
    cfg = paper_default(M=4, K=3, N=8)
    cont, quant, prop = [], [], []
    for t in range(30):
        real = sample_realization(cfg, trial_rng(11, t))
        c = solve(cfg, real, rng=trial_rng(11, t, 1))
        cont.append(c.sum_rate)
        quant.append(quantize_baseline(c, 2, real, cfg).sum_rate)
        prop.append(solve(cfg.replace(alphabet=PhaseAlphabet(2)), real, rng=trial_rng(11, t, 1),
                          continuous=c).sum_rate)
    assert np.mean(quant) <= np.mean(cont)
    assert np.mean(quant) <= np.mean(prop)


def test_exhaustive_single_element():
    cfg, real = tiny(N=1)
    rates = [wmmse_rate(np.array([p]), real, cfg)[0] for p in (1.0, -1.0)]
    theta, best = exhaustive_discrete(cfg, real, 2)
    assert best == max(rates)
    assert theta[0] == (1.0 if rates[0] >= rates[1] else -1.0)


def test_exhaustive_deterministic_and_limited():
    cfg, real = tiny(N=3)
    a = exhaustive_discrete(cfg, real, 4)
    b = exhaustive_discrete(cfg, real, 4)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1]
    big_cfg, big_real = tiny(N=20)
    assert 2 ** 20 > MAX_ENUMERATION
    with pytest.raises(ValueError):
        exhaustive_discrete(big_cfg, big_real, 2)


def test_oracle_dominance_per_instance():
    rows = oracle_ratios(trials=8, seed=4)
    proposed, quantized, oracle = rows.T
    # WMMSE is run to 1e-8 per candidate; allow that much slack
    assert np.all(oracle >= proposed * (1 - 1e-6))
    assert np.all(oracle >= quantized * (1 - 1e-6))


def test_fd_gradient_on_quadratic(rng):
    X = crandn(rng, 4, 4)
    A = X @ X.conj().T
    b = crandn(rng, 4)
    f = lambda t: float(np.vdot(t, A @ t).real + 2 * np.vdot(b, t).real)
    t = crandn(rng, 4)
    g = 2 * (A @ t + b)
    assert np.linalg.norm(fd_gradient(f, t, 1e-6) - g) <= 1e-5 * np.linalg.norm(g)


@settings(max_examples=200, deadline=None)
@given(finite, finite)
def test_oracle_l2_is_segment_projection(x, y):
    z = complex(x, y)
    assert polygon_projection_oracle(z, 2) == pytest.approx(segment_projection(z, -1, 1), abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(finite, finite, st.sampled_from([3, 4, 6, 8]))
def test_oracle_output_in_hull(x, y, L):
    p = polygon_projection_oracle(complex(x, y), L)
    pts = PhaseAlphabet(L).points
    for l in range(L):
        a, b = pts[l], pts[(l + 1) % L]
        cross = (b - a).real * (p - a).imag - (b - a).imag * (p - a).real
        assert cross >= -1e-12
