import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import log_density_increments
from vlfmac import rng as rngmod
from vlfmac.channel import (ChannelParams, binary_entropy, dispersion_ratio, gaussian_capacity, info_densities,
                            info_density_mismatched, neg_mgf, sample_channel, sample_increments, single_letter_stats,
                            walk_increments)

P11 = ChannelParams(1.0, 1.0)


def test_gaussian_capacity_values():
    assert gaussian_capacity(0) == 0
    np.testing.assert_allclose(gaussian_capacity(1), 0.346574, atol=1e-6)
    np.testing.assert_allclose(gaussian_capacity(3), 0.693147, atol=1e-6)
    with pytest.raises(ValueError):
        gaussian_capacity(-0.1)


def test_capacity_monotone_concave():
    x = np.linspace(0, 20, 401)
    c = np.array([gaussian_capacity(v) for v in x])
    assert np.all(np.diff(c) > 0)
    assert np.all(np.diff(c, 2) < 0)


def test_binary_entropy():
    assert binary_entropy(0) == 0 and binary_entropy(1) == 0
    np.testing.assert_allclose(binary_entropy(0.5), math.log(2), rtol=1e-15)
    for bad in (-0.01, 1.01):
        with pytest.raises(ValueError):
            binary_entropy(bad)


def test_params_validation():
    for p1, p2 in ((0, 1), (1, -2), (float("nan"), 1), (float("inf"), 1)):
        with pytest.raises(ValueError):
            ChannelParams(p1, p2)
    assert ChannelParams(1e-9, 1.0).p1 == 1e-9


def test_single_letter_stats_unit_power():
    s = single_letter_stats(P11)
    np.testing.assert_allclose(s.mu, (0.346574, 0.346574, 0.549306), atol=1e-6)
    assert s.mu == s.cap
    np.testing.assert_allclose(s.sigma2, (0.5, 0.5, 2 / 3), rtol=1e-15)
    np.testing.assert_allclose(s.l, (2 / math.log(2) ** 2, 2 / math.log(2) ** 2, 8 / (3 * math.log(3) ** 2)),
                               rtol=1e-14)
    np.testing.assert_allclose(s.l, np.array(s.sigma2) / np.array(s.mu) ** 2, rtol=1e-14)


def test_small_power_limit():
    s = single_letter_stats(ChannelParams(1e-8, 1.0))
    assert s.mu[0] < 1e-7
    assert s.l[0] > 1e7
    np.testing.assert_allclose(dispersion_ratio(1e-8), s.l[0])


def test_plug_in_increments():
    np.testing.assert_allclose(info_densities(P11, 0.0, 0.0, 0.0)[0], 0.346574, atol=1e-6)
    np.testing.assert_allclose(info_densities(P11, 1.0, 0.0, 1.0)[0], 0.596574, atol=1e-6)
    np.testing.assert_allclose(info_density_mismatched(P11, 0.0, 0.0, 1.0, 1), 0.096574, atol=1e-6)


def test_mismatched_matches_true_on_same_inputs():
    y, inc = sample_channel(P11, 0.3, -1.2, rngmod.substream(1, 0))
    for w in (1, 2, 3):
        assert info_density_mismatched(P11, 0.3, -1.2, y, w) == inc[w - 1]
    with pytest.raises(ValueError):
        info_density_mismatched(P11, 0, 0, 0, 4)


def test_closed_forms_match_log_densities():
    gen = rngmod.substream(2, 0)
    for p1, p2 in ((1, 1), (0.2, 5), (10, 3)):
        params = ChannelParams(p1, p2)
        x1 = gen.standard_normal(1000) * math.sqrt(p1)
        x2 = gen.standard_normal(1000) * math.sqrt(p2)
        y = x1 + x2 + gen.standard_normal(1000)
        got = info_densities(params, x1, x2, y)
        want = log_density_increments(p1, p2, x1, x2, y)
        for g, w in zip(got, want):
            np.testing.assert_allclose(g, w, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(p1=st.floats(0.01, 50), p2=st.floats(0.01, 50), x1=st.floats(-20, 20), x2=st.floats(-20, 20),
       y=st.floats(-40, 40))
def test_sum_identity(p1, p2, x1, x2, y):
    d1, d2, d3 = log_density_increments(p1, p2, x1, x2, y)
    rhs = (gaussian_capacity(p1 + p2) - gaussian_capacity(p1) - gaussian_capacity(p2)
           + y**2 / (2 * (1 + p1 + p2)) - (y - x2) ** 2 / (2 * (1 + p1)) - (y - x1) ** 2 / (2 * (1 + p2))
           + (y - x1 - x2) ** 2 / 2)
    np.testing.assert_allclose(d3 - d1 - d2, rhs, atol=1e-12 * max(1.0, abs(rhs), y * y))
    got = info_densities(ChannelParams(p1, p2), x1, x2, y)
    assert all(math.isfinite(v) for v in got)


def test_sample_channel_rejects_nonfinite():
    with pytest.raises(ValueError):
        sample_channel(P11, float("inf"), 0.0, rngmod.substream(1, 0))


@pytest.mark.parametrize("p1,p2", [(1.0, 1.0), (0.5, 4.0)])
def test_monte_carlo_moments(p1, p2):
    params = ChannelParams(p1, p2)
    s = single_letter_stats(params)
    d = sample_increments(params, 1_000_000, rngmod.substream(3, 0))
    n = 1_000_000
    for j in range(3):
        m, se = rngmod.mean_se(d[j])
        assert abs(m - s.mu[j]) <= 4 * se
        v, vse = rngmod.var_se(d[j])
        assert abs(v - s.sigma2[j]) <= 5 * vse
    assert d[0].size == n


def test_walk_increments_match_joint_marginal():
    gen = rngmod.substream(4, 0)
    w = walk_increments(2.0, 400_000, gen)
    m, se = rngmod.mean_se(w)
    assert abs(m - gaussian_capacity(2.0)) <= 4 * se
    v, vse = rngmod.var_se(w)
    assert abs(v - 2 / 3) <= 5 * vse


def test_neg_mgf():
    # E[exp(-d)] = 1 for any power; the second moment diverges from P = 1/3 on
    for p in (0.1, 1.0, 5.0):
        np.testing.assert_allclose(neg_mgf(p, 1.0), 1.0, rtol=1e-12)
    assert math.isfinite(neg_mgf(0.3, 2.0))
    assert math.isinf(neg_mgf(0.34, 2.0))
    gen = rngmod.substream(5, 0)
    w = np.exp(-0.5 * walk_increments(1.0, 400_000, gen))
    m, se = rngmod.mean_se(w)
    assert abs(m - neg_mgf(1.0, 0.5)) <= 4 * se
