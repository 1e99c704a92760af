import math
import warnings

import numpy as np
import pytest

from oracles import brute_force_decode, exhaustive_message_sizes, quadratic_root_inner_length
from vlfmac import coding, rng as rngmod
from vlfmac.bounds import constants_from_estimates
from vlfmac.channel import ChannelParams, single_letter_stats

P11 = ChannelParams(1.0, 1.0)
S11 = single_letter_stats(P11)


def test_thresholds_from_target():
    t = coding.thresholds_from_target(S11, 100, 0.0, 0.0)
    np.testing.assert_allclose(t.as_tuple(), (34.6574, 34.6574, 54.9306), atol=1e-4)
    t = coding.thresholds_from_target(S11, 400, 5.0, 2.0)
    eff = 400 - 5 * 20 - 2
    np.testing.assert_allclose(t.as_tuple(), [m * eff for m in S11.mu], rtol=1e-15)


def test_thresholds_reject_nonpositive_length():
    with pytest.raises(ValueError, match="need N' > 25"):
        coding.thresholds_from_target(S11, 25.0, 5.0, 0.0)
    np.testing.assert_allclose(coding.minimal_target_length(5.0, 0.0), 25.0)
    with pytest.raises(ValueError):
        coding.ThresholdTriple(-1, 0, 0)


def test_message_sizes_examples():
    assert coding.message_sizes(coding.ThresholdTriple(5, 5, 12), 10) == (4, 4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert coding.message_sizes(coding.ThresholdTriple(math.log(30), 5, 12), 10)[0] == 1
    with pytest.warns(UserWarning):
        assert coding.message_sizes(coding.ThresholdTriple(1, 5, 12), 10)[0] == 1


def test_message_sizes_sum_binding():
    t = coding.ThresholdTriple(10, 10, 12)
    got = coding.message_sizes(t, 10)
    assert got == exhaustive_message_sizes(t.as_tuple(), 10)
    assert got == (217, 25)


@pytest.mark.parametrize("g", [(6, 7, 9), (8, 6, 10.5), (7, 7, 7)])
def test_message_sizes_oracle(g):
    assert coding.message_sizes(coding.ThresholdTriple(*g), 5) == exhaustive_message_sizes(g, 5)


def test_message_sizes_cap():
    m1, m2 = coding.message_sizes(coding.ThresholdTriple(40, 40, 70), 200, cap=64)
    assert (m1, m2) == (64, 64)


def test_codebook_regeneration_and_marginals():
    params = ChannelParams(2.0, 0.5)
    a = coding.CodebookPair(300, 300, params, seed=5, key=(1,))
    b = coding.CodebookPair(300, 300, params, seed=5, key=(1,))
    np.testing.assert_array_equal(a.letters(1, 130), b.letters(1, 130))
    assert a.letter(2, 7, 100) == b.letters(2, 100)[7, 99]
    x1, x2 = a.letters(1, 128).ravel(), a.letters(2, 128).ravel()
    v1, se1 = rngmod.var_se(x1)
    v2, se2 = rngmod.var_se(x2)
    assert abs(v1 - 2.0) <= 4 * se1 and abs(v2 - 0.5) <= 4 * se2
    other = coding.CodebookPair(300, 300, params, seed=5, key=(2,))
    assert not np.array_equal(other.letters(1, 10), a.letters(1, 10))


def test_single_codeword_always_correct():
    op = coding.operating_point(P11, 60.0, 0.0, 0.0, m1=1, m2=1)
    for i in range(50):
        o = coding.scheme_trial(P11, op, 3, i)
        assert o.correct and o.tau_star == o.tau_max_true


@pytest.mark.parametrize("m", [2, 4])
def test_decoder_matches_brute_force(m):
    thr = coding.ThresholdTriple(2.0, 2.5, 3.5)
    mismatches = 0
    for i in range(300):
        cb = coding.CodebookPair(m, m, P11, seed=21, key=(m, i))
        pair = (i % m, (i // m) % m)
        o = coding.run_decoder_trial(cb, thr, pair, rngmod.substream(21, m, i), horizon=64, record=True)
        n = o.trace.size
        t, dec = brute_force_decode(1.0, 1.0, cb.letters(1, n), cb.letters(2, n), o.trace, thr.as_tuple())
        if o.erasure:
            mismatches += t is not None
        else:
            mismatches += (t, dec) != (o.tau_star, o.decoded)
    assert mismatches == 0


def test_erasure_counts_as_error():
    cb = coding.CodebookPair(2, 2, P11, seed=1)
    o = coding.run_decoder_trial(cb, coding.ThresholdTriple(50, 50, 80), (0, 1), rngmod.substream(1, 9), horizon=10)
    assert o.erasure and not o.correct and o.tau_star == 10 and o.tau_star <= o.tau_max_true


def test_decoder_rejects_bad_pair():
    cb = coding.CodebookPair(2, 2, P11, seed=1)
    with pytest.raises(ValueError):
        coding.run_decoder_trial(cb, coding.ThresholdTriple(1, 1, 1), (2, 0), rngmod.substream(1, 0), 10)


def test_tau_order_and_union_bound():
    op = coding.operating_point(P11, 60.0, 0.0, 0.0, cap=8)
    out = coding.simulate_scheme(P11, op, 400, seed=22)
    assert all(o.tau_star <= o.tau_max_true for o in out)
    assert all(o.energy1 >= 0 and o.energy2 >= 0 for o in out)
    rep = coding.error_report(out, 1 / 60, op.union_bound())
    assert rep.passed_union


def test_simulation_deterministic_across_threads():
    op = coding.operating_point(P11, 60.0, 0.0, 0.0, cap=4)
    a = coding.simulate_scheme(P11, op, 150, seed=23, wrapper=coding.WrapperConfig(60, 0.2), threads=1)
    b = coding.simulate_scheme(P11, op, 150, seed=23, wrapper=coding.WrapperConfig(60, 0.2), threads=4)
    assert a == b


def test_wrapper_probability():
    np.testing.assert_allclose(coding.WrapperConfig(10, 0.5).p, 4 / 9, rtol=1e-15)
    assert coding.WrapperConfig(5, 0.1).p == 0.0
    for bad in ((1.0, 0.5), (10, 0.0), (10, 1.0)):
        with pytest.raises(ValueError):
            coding.WrapperConfig(*bad)


def test_apply_bernoulli_wrapper_stream():
    cfg = coding.WrapperConfig(10, 0.5)
    inner = [coding.TrialOutcome(10, (0, 0), True, 10.0, 10.0, 10) for _ in range(5000)]
    out = list(coding.apply_bernoulli_wrapper(inner, cfg, rngmod.substream(24, 0)))
    assert sum(not o.aborted for o in out) == 5000
    frac = np.mean([o.aborted for o in out])
    assert abs(frac - cfg.p) <= 4 * rngmod.binomial_se(cfg.p, len(out))
    aborts = [o for o in out if o.aborted]
    assert all(o.tau_star == 0 and not o.correct and o.energy1 == 0 for o in aborts)


def test_wrapper_pass_through_when_p_zero():
    cfg = coding.WrapperConfig(5, 0.1)
    rep = coding.vlft_wrapper_sim(cfg, 20_000, seed=25)
    assert rep.abort_rate == 0
    assert abs(rep.error_rate - 2 / 25) <= 4 * rep.error_se


def test_wrapper_combined_error_identity():
    cfg = coding.WrapperConfig(10, 0.5)
    np.testing.assert_allclose(4 / 9 + 5 / 9 * 0.1, 0.5, rtol=1e-15)
    rep = coding.wrapper_sim(cfg, coding.idealized_inner(10, 0.1, 26), 0.1, 40_000, seed=26)
    assert abs(rep.error_rate - 0.5) <= 4 * rep.error_se
    assert rep.length_ok
    vrep = coding.vlft_wrapper_sim(cfg, 40_000, seed=27)
    np.testing.assert_allclose(vrep.predicted_error, 4 / 9 + 5 / 9 * 2 / 100)
    assert vrep.error_ok and vrep.length_ok


@pytest.mark.parametrize("n,eps", [(100, 0.5), (37, 0.2), (1000, 0.9), (12, 0.3)])
def test_choose_inner_length(n, eps):
    got = coding.choose_inner_length(n, eps)
    assert got == quadratic_root_inner_length(n, eps)
    assert got**2 * (1 - eps) / (got - 1) <= n
    assert (got + 1) ** 2 * (1 - eps) / got > n


def test_choose_inner_length_real_and_limits():
    x = coding.choose_inner_length(100, 0.5, integral=False)
    np.testing.assert_allclose(x, (100 + math.sqrt(100**2 - 200)) / 1.0, rtol=1e-12)
    assert coding.choose_inner_length(100, 0.5) == 198
    # N' grows like N/(1-eps) as eps -> 1
    for eps in (0.9, 0.99, 0.999):
        np.testing.assert_allclose(coding.choose_inner_length(1e4, eps, integral=False) * (1 - eps) / 1e4, 1.0,
                                   rtol=0.02)
    with pytest.raises(ValueError):
        coding.choose_inner_length(3, 0.1)


def test_power_audit_degenerate_and_single_codeword():
    rep = coding.power_audit([coding.ABORT] * 100, P11)
    assert all(r.mean_energy == 0 and r.budget == 0 and r.within_budget for r in rep)
    op = coding.operating_point(P11, 100.0, 0.0, 0.0, m1=1, m2=1)
    out = coding.simulate_scheme(P11, op, 2000, seed=28)
    for r in coding.power_audit(out, P11):
        assert r.within_budget and r.zero_padding_equal


def test_power_audit_mixed_wrapper():
    op = coding.operating_point(P11, 100.0, 0.0, 0.0, cap=4)
    out = coding.simulate_scheme(P11, op, 1500, seed=29, wrapper=coding.WrapperConfig(100, 0.2))
    for r in coding.power_audit(out, P11):
        assert r.within_budget


def _zero_constants():
    return constants_from_estimates(S11, xi=[0.5, 0.5, 0.6], k=[0.4, 0.4, 0.3])


def test_coupled_identical_walks():
    thr = coding.thresholds_from_target(S11, 100, 0, 0)
    tau = coding.coupled_crossings(P11, coding.ThresholdTriple(thr.gamma1, thr.gamma1, thr.gamma1), 500, seed=30,
                                   identical=True)
    np.testing.assert_array_equal(tau[:, 0], tau[:, 1])
    np.testing.assert_array_equal(tau.max(axis=1), tau[:, 2])


def test_max_stop_experiment_small():
    rep = coding.max_stop_experiment(P11, 100.0, _zero_constants(), 4000, seed=31)
    assert rep.identity_exact
    assert all(rep.pair_ok.values())
    assert rep.mean_max >= max(rep.mean_tau)
