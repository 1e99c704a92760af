"""Information-density random walks: first passages, ladder moments and renewal constants.

Walk j (j = 1, 2, 3) is the cumulative sum of i.i.d. copies of the true-codeword
information density; marginally it is the point-to-point AWGN density at power
P1, P2 or P1 + P2. The walks drift upward at rate C(P_j), so every crossing is
a.s. finite; `horizon` only guards against misconfiguration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from . import rng as rngmod
from .channel import (
    ChannelParams,
    check_walk,
    info_densities,
    neg_mgf,
    sample_inputs,
    single_letter_stats,
    walk_increments,
)

BATCH = 4096
DEFAULT_HORIZON = 10**9


@dataclass(frozen=True)
class StoppingSample:
    tau: int
    overshoot: float
    s_tau: float


@dataclass(frozen=True)
class LadderEstimates:
    which: int
    xi: float
    xi_se: float
    nu: float
    nu_se: float
    min_mean: float
    min_mean_se: float
    n_trials: int
    ladder_mean: float = float("nan")
    k_const: float = float("nan")
    k_se: float = float("nan")
    k_terms: tuple[float, ...] = ()


@dataclass(frozen=True)
class FalseWalkConfig:
    which: int
    gamma: float
    horizon: int

    def __post_init__(self):
        check_walk(self.which)
        if self.horizon < 1 or self.gamma < 0:
            raise ValueError("need horizon >= 1 and gamma >= 0")


def _first_passage_batch(power, gamma, m, gen, horizon):
    mu = 0.5 * math.log1p(power)
    chunk = int(min(max(1.3 * gamma / mu + 16, 16), 4096))
    tau = np.zeros(m, dtype=np.int64)
    s_tau = np.zeros(m)
    idx = np.arange(m)
    offset = np.zeros(m)
    steps = 0
    while idx.size:
        if steps >= horizon:
            raise RuntimeError(f"walk did not cross {gamma} within {horizon} steps")
        length = min(chunk, horizon - steps)
        s = np.cumsum(walk_increments(power, (idx.size, length), gen), axis=1)
        s += offset[:, None]
        hit = s > gamma
        done = hit.any(axis=1)
        first = hit.argmax(axis=1)
        rows = idx[done]
        tau[rows] = steps + first[done] + 1
        s_tau[rows] = s[done, first[done]]
        idx = idx[~done]
        offset = s[~done, -1]
        steps += length
    return tau, s_tau


def first_passage(params: ChannelParams, which: int, gamma: float, n_trials: int, seed: int = rngmod.DEFAULT_SEED,
                  horizon: int = DEFAULT_HORIZON, threads: int = 1, stream: int = 0):
    """tau(gamma) = inf{n: S_n > gamma} for n_trials independent walks.

    Returns (tau, s_tau) arrays. Trials are drawn in fixed batches of BATCH, each
    from its own substream, so output is independent of `threads`.
    """
    check_walk(which)
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    power = params.walk_power(which)
    key = int(round(gamma * 1e6))

    def run(sl):
        b = sl[0] // BATCH
        gen = rngmod.substream(seed, rngmod.WALK, which, stream, key, b)
        return _first_passage_batch(power, gamma, sl[1] - sl[0], gen, horizon)

    parts = rngmod.ordered_map(run, rngmod.batch_slices(n_trials, BATCH), threads)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def simulate_walk_until(params: ChannelParams, which: int, gamma: float, rng: np.random.Generator,
                        horizon: int = DEFAULT_HORIZON) -> StoppingSample:
    check_walk(which)
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    tau, s = _first_passage_batch(params.walk_power(which), gamma, 1, rng, horizon)
    return StoppingSample(tau=int(tau[0]), overshoot=float(s[0] - gamma), s_tau=float(s[0]))


def chernoff_rate(power: float) -> float:
    """min over theta in (0,1) of E[exp(-theta d)]; < 1 for a positive-drift walk."""
    res = minimize_scalar(lambda t: neg_mgf(power, t), bounds=(1e-6, 1 - 1e-6), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.fun)


def min_horizon(power: float, tol: float = 1e-4) -> int:
    """Smallest H with sum_{n>H} P(S_n < 0) <= rho^(H+1)/(1-rho) < tol.

    Past H the running minimum of the walk updates with probability below tol.
    """
    rho = chernoff_rate(power)
    h = math.log(tol * (1.0 - rho)) / math.log(rho) - 1.0
    return max(1, int(math.ceil(h)))


def estimate_ladder_moments(params: ChannelParams, which: int, n_trials: int, seed: int = rngmod.DEFAULT_SEED,
                            threads: int = 1) -> LadderEstimates:
    """xi = E[S^2]/(2E[S]) and nu = E[S^3]/E[S] at the first ladder epoch, plus E[min_n S_n]."""
    check_walk(which)
    if n_trials < 1000:
        raise ValueError("n_trials must be >= 1000")
    _, h = first_passage(params, which, 0.0, n_trials, seed, threads=threads, stream=1)
    xi2, xi2_se = rngmod.ratio_se(h**2, h)
    nu, nu_se = rngmod.ratio_se(h**3, h)
    mins = walk_minima(params, which, n_trials, seed, threads=threads)
    mm, mm_se = rngmod.mean_se(mins)
    return LadderEstimates(which=which, xi=xi2 / 2, xi_se=xi2_se / 2, nu=nu, nu_se=nu_se,
                           min_mean=mm, min_mean_se=mm_se, n_trials=n_trials, ladder_mean=float(h.mean()))


def _paths(power, m, length, gen):
    return np.cumsum(walk_increments(power, (m, length), gen), axis=1)


def walk_minima(params: ChannelParams, which: int, n_trials: int, seed: int = rngmod.DEFAULT_SEED,
                threads: int = 1) -> np.ndarray:
    """min_{0<=n<=H} S_n with the horizon H from `min_horizon`."""
    power = params.walk_power(which)
    horizon = min_horizon(power)

    def run(sl):
        gen = rngmod.substream(seed, rngmod.WALK, which, 2, sl[0] // BATCH)
        return np.minimum(_paths(power, sl[1] - sl[0], horizon, gen).min(axis=1), 0.0)

    return np.concatenate(rngmod.ordered_map(run, rngmod.batch_slices(n_trials, BATCH), threads))


def _overshoots_at(run_max, levels):
    """Sum over rows of S_{tau(x)} - x for each level x, from per-row running maxima.

    Rows are shifted apart so one searchsorted call serves every (row, level).
    Every row must end strictly above the top level.
    """
    m = run_max.shape[0]
    if m == 0:
        return np.zeros(levels.size)
    lo, hi = run_max.min(), run_max.max()
    span = (hi - lo) + 1.0
    shifted = (run_max - lo + span * np.arange(m)[:, None]).ravel()
    q = (levels[None, :] - lo + span * np.arange(m)[:, None])
    pos = np.searchsorted(shifted, q.ravel(), side="right").reshape(m, -1)
    vals = run_max.ravel()[pos]
    return (vals - levels[None, :]).sum(axis=0)


def _integral_batch(power, m, gen, horizon, levels):
    s = _paths(power, m, horizon, gen)
    mins = np.minimum(s.min(axis=1), 0.0)
    run_max = np.maximum.accumulate(s, axis=1)
    xmax = levels[-1]
    short = run_max[:, -1] <= xmax
    over_sum = _overshoots_at(run_max[~short], levels)
    if short.any():
        # rare: rows still below the top level keep walking until they pass it
        last = s[short, -1]
        rm = run_max[short]
        while rm[:, -1].min() <= xmax:
            ext = _paths(power, rm.shape[0], 64, gen) + last[:, None]
            last = ext[:, -1]
            rm = np.concatenate([rm, np.maximum.accumulate(np.maximum(ext, rm[:, -1:]), axis=1)], axis=1)
        over_sum = over_sum + _overshoots_at(rm, levels)
    tail_count = (-mins[:, None] >= levels[None, :]).sum(axis=0)
    tail_excess = np.maximum(-mins - xmax, 0.0).sum()
    return over_sum, tail_count, tail_excess, m


def estimate_K(params: ChannelParams, which: int, ladder: LadderEstimates, n_trials: int,
               seed: int = rngmod.DEFAULT_SEED, threads: int = 1, n_levels: int = 80) -> LadderEstimates:
    """Fill in the Lai-Siegmund constant K of walk `which`.

    The integral of E[S_{tau(x)} - x] * P(min S <= -x) is taken on a geometric
    grid up to x_max = log(1000), where P(min S <= -x) <= exp(-x) < 1e-3 by the
    maximal inequality for the martingale exp(-S_n). Beyond x_max the overshoot
    mean is replaced by its renewal limit xi.
    """
    check_walk(which)
    stats = single_letter_stats(params)
    mu, s2 = stats.mu[which - 1], stats.sigma2[which - 1]
    power = params.walk_power(which)
    horizon = min_horizon(power)
    xmax = math.log(1000.0)
    levels = np.concatenate([[0.0], np.geomspace(xmax * 1e-3, xmax, n_levels)])
    batch = max(256, min(BATCH, -(-n_trials // 10)))

    def run(sl):
        gen = rngmod.substream(seed, rngmod.WALK, which, 3, sl[0] // batch)
        return _integral_batch(power, sl[1] - sl[0], gen, horizon, levels)

    parts = rngmod.ordered_map(run, rngmod.batch_slices(n_trials, batch), threads)

    def integral(over_sum, tail_count, tail_excess, m):
        g = over_sum / m
        p = tail_count / m
        return float(np.trapezoid(g * p, levels) + ladder.xi * tail_excess / m)

    total = integral(*(sum(p[i] for p in parts) for i in range(4)))
    per_batch = np.array([integral(*p) for p in parts])
    w = np.array([p[3] for p in parts], dtype=float)
    # batch-means standard error, weighted by batch size
    if len(parts) > 1:
        dev = per_batch - total
        int_se = float(np.sqrt(np.sum((w * dev) ** 2) / (w.sum() ** 2) * len(parts) / (len(parts) - 1)))
    else:
        int_se = float("inf")

    xi, nu, mn = ladder.xi, ladder.nu, ladder.min_mean
    terms = (s2 / mu * xi, 3.0 * xi**2, -2.0 / 3.0 * nu, -2.0 * xi * mn, -2.0 * total)
    dk_dxi = s2 / mu + 6.0 * xi - 2.0 * mn
    k_se = math.sqrt((dk_dxi * ladder.xi_se) ** 2 + (2.0 / 3.0 * ladder.nu_se) ** 2
                     + (2.0 * xi * ladder.min_mean_se) ** 2 + (2.0 * int_se) ** 2)
    return replace(ladder, k_const=float(sum(terms)), k_se=k_se, k_terms=terms)


def estimate_renewal_constants(params: ChannelParams, which: int, n_trials: int, seed: int = rngmod.DEFAULT_SEED,
                               threads: int = 1) -> LadderEstimates:
    ladder = estimate_ladder_moments(params, which, n_trials, seed, threads)
    return estimate_K(params, which, ladder, n_trials, seed, threads)


@dataclass(frozen=True)
class WaldReport:
    which: int
    gamma: float
    mean_s_tau: float
    mean_tau: float
    mu: float
    diff: float
    se: float
    n_trials: int
    passed: bool


def wald_check(params: ChannelParams, which: int, gamma: float, n_trials: int, seed: int = rngmod.DEFAULT_SEED,
               threads: int = 1, n_se: float = 4.0) -> WaldReport:
    """E[S_tau] against E[tau] * mu, judged on the paired difference S_tau - tau * mu."""
    mu = single_letter_stats(params).mu[which - 1]
    tau, s = first_passage(params, which, gamma, n_trials, seed, threads=threads, stream=4)
    d, se = rngmod.mean_se(s - tau * mu)
    return WaldReport(which, gamma, float(s.mean()), float(tau.mean()), mu, d, se, n_trials, abs(d) <= n_se * se)


@dataclass(frozen=True)
class RenewalFit:
    which: int
    b_grid: tuple[float, ...]
    mean_tau: tuple[float, ...]
    mean_se: tuple[float, ...]
    var_tau: tuple[float, ...]
    var_se: tuple[float, ...]
    mean_slope: float
    mean_slope_se: float
    mean_intercept: float
    mean_intercept_se: float
    var_slope: float
    var_slope_se: float
    var_intercept: float
    var_intercept_se: float


def _wls(x, y, se):
    # weighted least squares with known per-point standard errors
    x, y, se = map(np.asarray, (x, y, se))
    w = 1.0 / se**2
    a = np.column_stack([x, np.ones_like(x)])
    cov = np.linalg.inv(a.T @ (a * w[:, None]))
    beta = cov @ (a.T @ (w * y))
    return float(beta[0]), float(math.sqrt(cov[0, 0])), float(beta[1]), float(math.sqrt(cov[1, 1]))


def renewal_fit(params: ChannelParams, which: int, b_grid=(20.0, 40.0, 80.0, 160.0), n_trials: int = 100_000,
                seed: int = rngmod.DEFAULT_SEED, threads: int = 1) -> RenewalFit:
    """Regress E[tau(b)] and Var(tau(b)) on b; slopes estimate 1/mu and sigma^2/mu^3."""
    rows = []
    for i, b in enumerate(b_grid):
        tau, _ = first_passage(params, which, b, n_trials, seed, threads=threads, stream=10 + i)
        m, mse = rngmod.mean_se(tau)
        v, vse = rngmod.var_se(tau)
        rows.append((m, mse, v, vse))
    m, mse, v, vse = (tuple(c) for c in zip(*rows))
    ms, mss, mi, mis = _wls(b_grid, m, mse)
    vs, vss, vi, vis = _wls(b_grid, v, vse)
    return RenewalFit(which, tuple(b_grid), m, mse, v, vse, ms, mss, mi, mis, vs, vss, vi, vis)


def _false_increments(power, size, gen):
    x = gen.standard_normal(size) * math.sqrt(power)
    xbar = gen.standard_normal(size) * math.sqrt(power)
    z = gen.standard_normal(size)
    u = x + z
    return 0.5 * math.log1p(power) + u**2 / (2.0 * (1.0 + power)) - 0.5 * (u - xbar) ** 2


@dataclass(frozen=True)
class FalseWalkReport:
    config: FalseWalkConfig
    crossing_rate: float
    se: float
    bound: float
    n_trials: int
    passed: bool


def false_walk_check(params: ChannelParams, cfg: FalseWalkConfig, n_trials: int, seed: int = rngmod.DEFAULT_SEED,
                     threads: int = 1, n_se: float = 4.0) -> FalseWalkReport:
    """Empirical P(taubar <= horizon) for a wrong-codeword walk against exp(-gamma)."""
    power = params.walk_power(cfg.which)

    def run(sl):
        gen = rngmod.substream(seed, rngmod.WALK, cfg.which, 5, int(cfg.gamma * 1e6), sl[0] // BATCH)
        m = sl[1] - sl[0]
        hit = np.zeros(m, dtype=bool)
        offset = np.zeros(m)
        for start in range(0, cfg.horizon, 256):
            length = min(256, cfg.horizon - start)
            s = np.cumsum(_false_increments(power, (m, length), gen), axis=1) + offset[:, None]
            hit |= (s > cfg.gamma).any(axis=1)
            offset = s[:, -1]
        return int(hit.sum())

    hits = sum(rngmod.ordered_map(run, rngmod.batch_slices(n_trials, BATCH), threads))
    rate = hits / n_trials
    bound = math.exp(-cfg.gamma)
    se = max(rngmod.binomial_se(rate, n_trials), rngmod.binomial_se(bound, n_trials))
    return FalseWalkReport(cfg, rate, se, bound, n_trials, rate <= bound + n_se * se)


@dataclass(frozen=True)
class MeasureCheckRow:
    which: int
    test_fn: str
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    passed: bool


def _test_functions(params, which, gamma):
    def walk_value(a1, a2, y):
        return info_densities(params, a1, a2, y)[which - 1].sum(axis=1)

    return {
        "one": lambda a1, a2, y: np.ones(y.shape[0]),
        "y1_positive": lambda a1, a2, y: (y[:, 0] > 0).astype(float),
        "walk_above_gamma": lambda a1, a2, y: (walk_value(a1, a2, y) > gamma).astype(float),
        "clipped_residual": lambda a1, a2, y: np.minimum(np.mean((y - a1 - a2) ** 2, axis=1), 3.0),
        "clipped_cross": lambda a1, a2, y: np.clip(np.sum(a1 * y, axis=1), -2.0, 2.0),
    }


def change_of_measure_check(params: ChannelParams, n: int, n_trials: int, seed: int = rngmod.DEFAULT_SEED,
                            gamma: float = 1.0, n_se: float = 4.0) -> list[MeasureCheckRow]:
    """Compare E[f(wrong inputs, Y)] with E[f(true inputs, Y) exp(-S_n)] for each walk.

    Walk 1 swaps X1 for an independent copy, walk 2 swaps X2, walk 3 swaps both.
    """
    if not 1 <= n <= 10:
        raise ValueError("change-of-measure check is meant for 1 <= n <= 10")
    gen = rngmod.substream(seed, rngmod.WALK, 0, 6, n)
    x1, x2, y = sample_inputs(params, (n_trials, n), gen)
    xb1 = gen.standard_normal((n_trials, n)) * math.sqrt(params.p1)
    xb2 = gen.standard_normal((n_trials, n)) * math.sqrt(params.p2)
    d = info_densities(params, x1, x2, y)
    rows = []
    for which in (1, 2, 3):
        weight = np.exp(-d[which - 1].sum(axis=1))
        wrong = {1: (xb1, x2), 2: (x1, xb2), 3: (xb1, xb2)}[which]
        for name, f in _test_functions(params, which, gamma).items():
            lhs, lse = rngmod.mean_se(f(*wrong, y))
            rhs, rse = rngmod.mean_se(f(x1, x2, y) * weight)
            ok = abs(lhs - rhs) <= n_se * math.hypot(lse, rse)
            rows.append(MeasureCheckRow(which, name, lhs, lse, rhs, rse, ok))
    return rows


def likelihood_ratio_mean(params: ChannelParams, which: int, n: int, n_trials: int,
                          seed: int = rngmod.DEFAULT_SEED) -> tuple[float, float]:
    """Sample mean and standard error of exp(-S_n) for the true-codeword walk."""
    gen = rngmod.substream(seed, rngmod.WALK, which, 7, n)
    w = np.exp(-walk_increments(params.walk_power(which), (n_trials, n), gen).sum(axis=1))
    return rngmod.mean_se(w)
