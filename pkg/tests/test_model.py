import json
import math

import numpy as np
import pytest

from irsopt.model import (ChannelRealization, PhaseAlphabet, SystemConfig, config_from_dict,
                          config_to_dict, db_to_lin, dbm_to_watt, effective_channel,
                          effective_channels, load_config, paper_default, path_loss,
                          sample_realization, trial_rng, watt_to_dbm)

from conftest import crandn


def test_unit_conversions():
    assert dbm_to_watt(-80) == pytest.approx(1e-11, rel=1e-12)
    assert dbm_to_watt(30) == pytest.approx(1.0)
    assert watt_to_dbm(1e-3) == pytest.approx(0.0, abs=1e-12)
    assert db_to_lin(-30) == pytest.approx(1e-3)


def test_path_loss_examples():
    assert path_loss(1.0, 0.123, 3.6) == pytest.approx(0.123)
    assert path_loss(10.0, 1e-3, 3.6) == pytest.approx(10 ** -6.6, rel=1e-12)
    d = 7.5
    cascaded = path_loss(50.0, math.sqrt(1e-4), 2.2) * path_loss(d, math.sqrt(1e-4), 2.2)
    assert cascaded == pytest.approx(1e-4 * 50 ** -2.2 * d ** -2.2, rel=1e-12)


def test_path_loss_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        path_loss(0.0, 1e-3, 2.0)
    with pytest.raises(ValueError):
        path_loss(-1.0, 1e-3, 2.0)


def test_path_loss_decreasing():
    d = np.linspace(1, 100, 50)
    assert np.all(np.diff(path_loss(d, 1e-3, 2.2)) < 0)


def test_alphabet_parse_and_points():
    assert PhaseAlphabet.parse("cp") == PhaseAlphabet()
    assert PhaseAlphabet.parse("dp:4") == PhaseAlphabet(4)
    assert str(PhaseAlphabet(4)) == "dp:4" and str(PhaseAlphabet()) == "cp"
    assert PhaseAlphabet(2).label == "L2" and PhaseAlphabet().label == "CP"
    np.testing.assert_allclose(PhaseAlphabet(4).points, [1, 1j, -1, -1j], atol=1e-15)
    for bad in ("dp:1", "dp:x", "foo"):
        with pytest.raises(ValueError):
            PhaseAlphabet.parse(bad)
    with pytest.raises(ValueError):
        PhaseAlphabet().points


def test_paper_default_values():
    cfg = paper_default()
    assert (cfg.M, cfg.K, cfg.N, cfg.eta) == (8, 8, 100, 1.0)
    np.testing.assert_allclose(cfg.noise, 1e-11)
    assert cfg.p_max == pytest.approx(dbm_to_watt(5.0))
    assert cfg.geometry.irs == (50.0, 0.0)
    assert np.hypot(*np.subtract(cfg.geometry.irs, cfg.geometry.bs)) == 50.0
    assert paper_default(alphabet="dp:2").alphabet == PhaseAlphabet(2)


def test_config_validation():
    with pytest.raises(ValueError):
        SystemConfig(M=0)
    with pytest.raises(ValueError):
        SystemConfig(p_max=0.0)
    with pytest.raises(ValueError):
        SystemConfig(K=2, sigma2=(1.0, 1.0, 1.0))
    assert SystemConfig().replace(K=3).noise.shape == (3,)


def test_config_roundtrip(tmp_path):
    cfg = paper_default(p_max_dbm=10.0, alphabet="dp:4", N=16)
    d = config_to_dict(cfg)
    json.dumps(d)
    assert config_from_dict(d) == cfg
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"N": 12, "p_max_dbm": 0, "sigma2_dbm": -90, "lambda0": 0.1}))
    loaded, raw = load_config(path)
    assert loaded.N == 12 and raw["lambda0"] == 0.1
    assert loaded.p_max == pytest.approx(1e-3)
    np.testing.assert_allclose(loaded.noise, 1e-12)
    with pytest.raises(ValueError):
        config_from_dict({"bogus": 1})


def test_realization_deterministic_and_shapes():
    cfg = paper_default(N=20)
    a = sample_realization(cfg, trial_rng(7, 3))
    b = sample_realization(cfg, trial_rng(7, 3))
    c = sample_realization(cfg, trial_rng(7, 4))
    assert a.G.shape == (20, 8) and a.h_d.shape == (8, 8) and a.h_r.shape == (8, 20)
    assert a.H_r.shape == (8, 8, 20)
    for x, y in ((a.G, b.G), (a.h_d, b.h_d), (a.h_r, b.h_r)):
        assert np.array_equal(x, y)
    assert not np.array_equal(a.G, c.G)
    # users inside the disk
    r = np.hypot(*(a.user_xy - np.array(cfg.geometry.user_center)).T)
    assert np.all(r <= cfg.geometry.user_radius)


def test_composite_matches_definition(rng):
    real = ChannelRealization(G=crandn(rng, 5, 3), h_d=crandn(rng, 2, 3), h_r=crandn(rng, 2, 5), eta=0.7)
    for k in range(2):
        expect = math.sqrt(0.7) * real.G.conj().T @ np.diag(real.h_r[k])
        np.testing.assert_allclose(real.H_r[k], expect, atol=1e-15)


def test_second_moment_of_G():
    cfg = paper_default(N=4, M=2, K=1)
    rng = np.random.default_rng(5)
    draws = np.array([sample_realization(cfg, rng).G for _ in range(10_000)])
    gain = path_loss(50.0, math.sqrt(cfg.pathloss.c0_zeta_cascaded), cfg.pathloss.alpha_bs_irs)
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(gain, rel=0.05)


def test_effective_channel_examples(rng):
    real = ChannelRealization(G=np.array([[1.0]]), h_d=np.array([[1.0]]), h_r=np.array([[1.0]]))
    np.testing.assert_allclose(effective_channel(real, 0, np.array([-1.0])), [0.0], atol=1e-15)

    real = ChannelRealization(G=crandn(rng, 6, 3), h_d=crandn(rng, 2, 3), h_r=crandn(rng, 2, 6), eta=0.8)
    np.testing.assert_array_equal(effective_channels(real, np.zeros(6)), real.h_d)
    theta = crandn(rng, 6)
    for k in range(2):
        loop = real.h_d[k].copy()
        for n in range(6):
            loop += math.sqrt(0.8) * real.G[n].conj() * real.h_r[k, n] * theta[n]
        np.testing.assert_allclose(effective_channel(real, k, theta), loop, atol=1e-12)
    t1, t2 = crandn(rng, 6), crandn(rng, 6)
    lhs = effective_channels(real, t1) + effective_channels(real, t2) - effective_channels(real, np.zeros(6))
    np.testing.assert_allclose(lhs, effective_channels(real, t1 + t2), atol=1e-12)
    with pytest.raises(ValueError):
        effective_channel(real, 0, np.zeros(5))


def test_trial_streams_independent_of_order():
    a = [trial_rng(11, t).standard_normal() for t in range(5)]
    b = [trial_rng(11, t).standard_normal() for t in reversed(range(5))][::-1]
    assert a == b
    assert trial_rng(11, 0, 0).standard_normal() != trial_rng(11, 0, 1).standard_normal()
