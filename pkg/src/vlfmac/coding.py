"""Stop-feedback random-coding scheme for the Gaussian MAC, its termination wrappers,
and the coupled max-of-stopping-times experiment.

Messages are 0-based here: user 1 sends j in range(m1), user 2 sends k in range(m2).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Iterator

import numpy as np
from numba import njit

from . import rng as rngmod
from .channel import ChannelParams, SingleLetterStats, sample_increments, single_letter_stats

BLOCK = 64
MAX_SEARCH = 10**7


@dataclass(frozen=True)
class ThresholdTriple:
    gamma1: float
    gamma2: float
    gamma3: float

    def __post_init__(self):
        if min(self.gamma1, self.gamma2, self.gamma3) < 0:
            raise ValueError("thresholds must be nonnegative")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.gamma1, self.gamma2, self.gamma3)


def minimal_target_length(a_const: float, g_const: float) -> float:
    """Largest N' with N' - A sqrt(N') - G <= 0; feasible targets are strictly above it."""
    root = 0.5 * (a_const + math.sqrt(a_const**2 + 4.0 * max(g_const, 0.0)))
    return root * root


def thresholds_from_target(stats: SingleLetterStats, n_prime: float, a_const: float, g_const: float) -> ThresholdTriple:
    """gamma_j = mu_j * (N' - A sqrt(N') - G)."""
    eff = n_prime - a_const * math.sqrt(n_prime) - g_const
    if eff <= 0:
        raise ValueError(f"effective length {eff:.6g} <= 0 at N'={n_prime}; "
                         f"need N' > {minimal_target_length(a_const, g_const):.6g}")
    return ThresholdTriple(*(m * eff for m in stats.mu))


def _int_cap(log_bound: float) -> int:
    """Largest integer m >= 0 with log(m) <= log_bound (0 if log_bound < 0)."""
    if log_bound < 0:
        return 0
    m = math.floor(math.exp(log_bound) * (1 + 1e-12))
    while m > 1 and math.log(m) > log_bound + 1e-12:
        m -= 1
    return max(m, 1)


def message_sizes(thresholds: ThresholdTriple, n_prime: float, cap: int | None = None) -> tuple[int, int]:
    """Largest (m1, m2) with log m_j <= gamma_j - log 3N' and log m1 m2 <= gamma3 - log 3N'.

    Maximizes m1 * m2, ties broken toward larger m1. `cap` bounds each user's
    message count (desk-scale runs).
    """
    off = math.log(3.0 * n_prime)
    bounds = [t - off for t in thresholds.as_tuple()]
    if min(bounds) < 0:
        warnings.warn(f"message-size bounds {bounds} infeasible; using the trivial size 1 where needed")
    c1, c2, cs = (max(_int_cap(b), 1) for b in bounds)
    if cap is not None:
        c1, c2 = min(c1, cap), min(c2, cap)
    if c1 * c2 <= cs:
        return c1, c2
    lo = max(1, -(-cs // c2))
    if c1 - lo > MAX_SEARCH:
        raise ValueError("message-size search too large; pass a cap")
    best = (0, 0, 0)
    for m1 in range(c1, lo - 1, -1):
        m2 = min(c2, cs // m1)
        if m1 * m2 > best[0]:
            best = (m1 * m2, m1, m2)
    return best[1], best[2]


@dataclass(frozen=True)
class CodebookPair:
    """Lazily generated Gaussian codebooks, one infinite codeword per message.

    Letters of user u are produced in blocks of BLOCK time steps from the
    counter-based stream (seed, key, u, block), so any letter can be regenerated
    bit-identically without materializing the rest.
    """

    m1: int
    m2: int
    params: ChannelParams
    seed: int
    key: tuple[int, ...] = ()

    def __post_init__(self):
        if self.m1 < 1 or self.m2 < 1:
            raise ValueError("message counts must be positive")

    def block_letters(self, user: int, block: int) -> np.ndarray:
        """Letters of every message of `user` for times [block*BLOCK, (block+1)*BLOCK), shape (m_u, BLOCK)."""
        return _codebook_block(self.seed, self.key, user, block,
                               self.m1 if user == 1 else self.m2,
                               self.params.p1 if user == 1 else self.params.p2)

    def letters(self, user: int, n: int) -> np.ndarray:
        nb = -(-n // BLOCK)
        return np.concatenate([self.block_letters(user, b) for b in range(nb)], axis=1)[:, :n]

    def letter(self, user: int, message: int, n: int) -> float:
        """Letter of `message` at time n (1-based time)."""
        b, t = divmod(n - 1, BLOCK)
        return float(self.block_letters(user, b)[message, t])


@lru_cache(maxsize=64)
def _codebook_block(seed, key, user, block, m, power):
    gen = rngmod.substream(seed, rngmod.CODEBOOK, *key, user, block)
    out = gen.standard_normal((m, BLOCK)) * math.sqrt(power)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TrialOutcome:
    tau_star: int
    decoded: tuple[int, int] | None
    correct: bool
    energy1: float
    energy2: float
    tau_max_true: int
    energy1_prime: float = 0.0
    energy2_prime: float = 0.0
    true_pair: tuple[int, int] | None = None
    erasure: bool = False
    aborted: bool = False
    trace: np.ndarray | None = field(default=None, compare=False, repr=False)


ABORT = TrialOutcome(tau_star=0, decoded=None, correct=False, energy1=0.0, energy2=0.0, tau_max_true=0,
                     aborted=True)


@njit(cache=True, nogil=True)
def _decoder_block(a, b, y, g1, g2, g3, c1, c2, c3, k1, k2, k3, s1, s2, s3, f1, f2, f3, u, v):
    # a: (L, m1), b: (L, m2) letters; s*, f*: (m1, m2) walk sums and crossing flags.
    # Returns (t, j*m2+k) at the first step where some pair has crossed all
    # three thresholds, taking the lexicographically largest such pair.
    n_steps, m1 = a.shape
    m2 = b.shape[1]
    for t in range(n_steps):
        yt = y[t]
        w = c3 + yt * yt * k3
        for k in range(m2):
            r = yt - b[t, k]
            u[k] = c1 + r * r * k1
        for j in range(m1):
            r = yt - a[t, j]
            v[j] = c2 + r * r * k2
        found = -1
        for j in range(m1):
            aj = a[t, j]
            vj = v[j]
            for k in range(m2):
                r = yt - aj - b[t, k]
                e = 0.5 * r * r
                x1 = s1[j, k] + u[k] - e
                x2 = s2[j, k] + vj - e
                x3 = s3[j, k] + w - e
                s1[j, k] = x1
                s2[j, k] = x2
                s3[j, k] = x3
                if x1 > g1:
                    f1[j, k] = 1
                if x2 > g2:
                    f2[j, k] = 1
                if x3 > g3:
                    f3[j, k] = 1
                if f1[j, k] and f2[j, k] and f3[j, k]:
                    found = j * m2 + k
        if found >= 0:
            return t, found
    return -1, -1


class _WalkTable:
    """Running sums and crossing flags for an m1 x m2 block of codeword pairs."""

    def __init__(self, params: ChannelParams, thresholds: ThresholdTriple, m1: int, m2: int):
        p1, p2, p3 = params.p1, params.p2, params.p3
        self.g = thresholds.as_tuple()
        self.c = (0.5 * math.log1p(p1), 0.5 * math.log1p(p2), 0.5 * math.log1p(p3))
        self.k = (0.5 / (1 + p1), 0.5 / (1 + p2), 0.5 / (1 + p3))
        self.s = [np.zeros((m1, m2)) for _ in range(3)]
        self.f = [np.zeros((m1, m2), dtype=np.uint8) for _ in range(3)]
        self.u = np.zeros(m2)
        self.v = np.zeros(m1)

    def advance(self, a, b, y):
        return _decoder_block(a, b, y, *self.g, *self.c, *self.k, *self.s, *self.f, self.u, self.v)

    def pair_state(self, j, k):
        return [s[j, k] for s in self.s], [f[j, k] for f in self.f]


def run_decoder_trial(cb: CodebookPair, thresholds: ThresholdTriple, true_pair: tuple[int, int],
                      noise_rng: np.random.Generator, horizon: int, record: bool = False) -> TrialOutcome:
    """One transmission of `true_pair` through the stop-feedback decoder.

    The decoder tracks all m1*m2 triples of information-density walks, stops at
    tau* = min over pairs of the time all three walks of that pair have crossed,
    and outputs the lexicographically largest pair (j major) reaching tau*.
    Running out of `horizon` is an erasure and counts as an error.
    """
    w1, w2 = true_pair
    if not (0 <= w1 < cb.m1 and 0 <= w2 < cb.m2):
        raise ValueError(f"true pair {true_pair} outside codebook ({cb.m1}, {cb.m2})")
    params = cb.params
    table = _WalkTable(params, thresholds, cb.m1, cb.m2)
    energy = [0.0, 0.0]
    trace = []
    n0 = 0
    blk = 0
    decision = None
    while n0 < horizon:
        a = cb.block_letters(1, blk)
        b = cb.block_letters(2, blk)
        y = a[w1] + b[w2] + noise_rng.standard_normal(BLOCK)
        lim = min(BLOCK, horizon - n0)
        t, idx = table.advance(np.ascontiguousarray(a[:, :lim].T), np.ascontiguousarray(b[:, :lim].T), y[:lim])
        stop = lim if t < 0 else t + 1
        energy[0] += float(np.sum(a[w1, :stop] ** 2))
        energy[1] += float(np.sum(b[w2, :stop] ** 2))
        if record:
            trace.append(y[:stop].copy())
        if t >= 0:
            decision = (n0 + t + 1, divmod(int(idx), cb.m2), a, b, y, t + 1)
            break
        n0 += lim
        blk += 1
    trace_arr = np.concatenate(trace) if record else None
    if decision is None:
        return TrialOutcome(tau_star=horizon, decoded=None, correct=False, energy1=energy[0], energy2=energy[1],
                            tau_max_true=horizon, energy1_prime=energy[0], energy2_prime=energy[1],
                            true_pair=(w1, w2), erasure=True, trace=trace_arr)

    tau_star, decoded, a, b, y, used = decision
    # keep walking the transmitted pair alone to find max of its three crossing times
    s, f = table.pair_state(w1, w2)
    pair = _WalkTable(params, thresholds, 1, 1)
    for i in range(3):
        pair.s[i][0, 0] = s[i]
        pair.f[i][0, 0] = f[i]
    e_prime = list(energy)
    tau_true = tau_star
    done = all(f)
    n0 = tau_star - used
    while not done and tau_true < horizon:
        lim = min(BLOCK, horizon - n0)
        if used < lim:
            t, _ = pair.advance(np.ascontiguousarray(a[w1:w1 + 1, used:lim].T),
                                np.ascontiguousarray(b[w2:w2 + 1, used:lim].T), y[used:lim])
            stop = lim if t < 0 else used + t + 1
            e_prime[0] += float(np.sum(a[w1, used:stop] ** 2))
            e_prime[1] += float(np.sum(b[w2, used:stop] ** 2))
            tau_true = n0 + stop
            if t >= 0:
                done = True
                break
        n0 += lim
        blk += 1
        a = cb.block_letters(1, blk)
        b = cb.block_letters(2, blk)
        y = a[w1] + b[w2] + noise_rng.standard_normal(BLOCK)
        used = 0
    return TrialOutcome(tau_star=tau_star, decoded=decoded, correct=decoded == (w1, w2), energy1=energy[0],
                        energy2=energy[1], tau_max_true=tau_true, energy1_prime=e_prime[0],
                        energy2_prime=e_prime[1], true_pair=(w1, w2), trace=trace_arr)


@dataclass(frozen=True)
class WrapperConfig:
    n_prime: float
    eps: float

    def __post_init__(self):
        if not self.n_prime > 1:
            raise ValueError("inner target length must exceed 1")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")

    @property
    def p(self) -> float:
        """Abort probability (N' eps - 1)/(N' - 1), clamped at 0 when N' eps < 1."""
        return max(0.0, (self.n_prime * self.eps - 1.0) / (self.n_prime - 1.0))


def choose_inner_length(n: float, eps: float, integral: bool = True) -> float:
    """Largest N' with N'^2 (1 - eps)/(N' - 1) <= N.

    Solves (1-eps) x^2 - N x + N = 0 for its larger root. Rejects budgets whose
    largest admissible N' is below 1/eps, where the abort wrapper cannot reach eps.
    """
    if n <= 0 or not 0 < eps < 1:
        raise ValueError("need n > 0 and eps in (0, 1)")
    q = 1.0 - eps
    disc = n * n - 4.0 * q * n
    if disc < 0:
        raise ValueError(f"no N' satisfies N'^2(1-eps)/(N'-1) <= {n}")
    root = (n + math.sqrt(disc)) / (2.0 * q)

    def ok(x):
        return x > 1 and x * x * q / (x - 1) <= n * (1 + 1e-15)

    if integral:
        x = math.floor(root)
        while x > 1 and not ok(x):
            x -= 1
        while ok(x + 1):
            x += 1
        root = float(x)
    if not ok(root) or root < 1.0 / eps:
        raise ValueError(f"no feasible N' >= 1/eps for N={n}, eps={eps}")
    return root


def apply_bernoulli_wrapper(inner: Iterable[TrialOutcome], cfg: WrapperConfig,
                            rng: np.random.Generator) -> Iterator[TrialOutcome]:
    """With probability p emit an immediate abort (tau = 0, error), otherwise pass an inner trial through."""
    inner = iter(inner)
    p = cfg.p
    while True:
        if rng.random() < p:
            yield ABORT
            continue
        try:
            yield next(inner)
        except StopIteration:
            return


def wrapped_trial(i: int, seed: int, cfg: WrapperConfig | None, inner: Callable[[int], TrialOutcome]) -> TrialOutcome:
    """Trial i of a wrapper stream with its own substream, for order-free parallel runs."""
    if cfg is not None and rngmod.substream(seed, rngmod.WRAPPER, i).random() < cfg.p:
        return ABORT
    return inner(i)


@dataclass(frozen=True)
class OperatingPoint:
    n_prime: float
    a_const: float
    g_const: float
    thresholds: ThresholdTriple
    m1: int
    m2: int
    horizon: int

    def union_bound(self) -> float:
        g1, g2, g3 = self.thresholds.as_tuple()
        return ((self.m1 - 1) * (self.m2 - 1) * math.exp(-g3) + (self.m1 - 1) * math.exp(-g1)
                + (self.m2 - 1) * math.exp(-g2))


def operating_point(params: ChannelParams, n_prime: float, a_const: float, g_const: float, cap: int | None = 64,
                    horizon_factor: float = 50.0, m1: int | None = None, m2: int | None = None) -> OperatingPoint:
    thr = thresholds_from_target(single_letter_stats(params), n_prime, a_const, g_const)
    if m1 is None or m2 is None:
        c1, c2 = message_sizes(thr, n_prime, cap)
        m1 = c1 if m1 is None else m1
        m2 = c2 if m2 is None else m2
    return OperatingPoint(n_prime, a_const, g_const, thr, m1, m2, int(math.ceil(horizon_factor * n_prime)))


def scheme_trial(params: ChannelParams, op: OperatingPoint, seed: int, i: int, record: bool = False) -> TrialOutcome:
    """Trial i: fresh random codebook, uniformly drawn message pair, fresh noise."""
    msg = rngmod.substream(seed, rngmod.MESSAGES, i)
    true_pair = (int(msg.integers(op.m1)), int(msg.integers(op.m2)))
    cb = CodebookPair(op.m1, op.m2, params, seed, key=(i,))
    return run_decoder_trial(cb, op.thresholds, true_pair, rngmod.substream(seed, rngmod.NOISE, i), op.horizon,
                             record=record)


def simulate_scheme(params: ChannelParams, op: OperatingPoint, n_trials: int, seed: int = rngmod.DEFAULT_SEED,
                    wrapper: WrapperConfig | None = None, threads: int = 1) -> list[TrialOutcome]:
    """n_trials independent transmissions, optionally behind the Bernoulli abort wrapper."""

    def inner(i):
        return scheme_trial(params, op, seed, i)

    def run(sl):
        return [wrapped_trial(i, seed, wrapper, inner) for i in range(*sl)]

    chunks = rngmod.ordered_map(run, rngmod.batch_slices(n_trials, 64), threads)
    return [o for c in chunks for o in c]


@dataclass(frozen=True)
class ErrorReport:
    n_trials: int
    errors: int
    rate: float
    se: float
    target: float
    union_bound: float
    erasures: int
    passed_target: bool
    passed_union: bool


def error_report(outcomes: list[TrialOutcome], target: float, union_bound: float = math.inf,
                 n_se: float = 4.0) -> ErrorReport:
    n = len(outcomes)
    errors = sum(not o.correct for o in outcomes)
    rate = errors / n
    se_t = max(rngmod.binomial_se(rate, n), rngmod.binomial_se(min(target, 1.0), n))
    se_u = max(rngmod.binomial_se(rate, n), rngmod.binomial_se(min(union_bound, 1.0), n))
    return ErrorReport(n, errors, rate, se_t, target, union_bound, sum(o.erasure for o in outcomes),
                       rate <= target + n_se * se_t, rate <= union_bound + n_se * se_u)


@dataclass(frozen=True)
class PowerReport:
    user: int
    mean_energy: float
    mean_tau: float
    budget: float
    diff: float
    diff_se: float
    ratio: float
    within_budget: bool
    zero_padding_equal: bool
    mean_energy_prime: float
    mean_tau_prime: float
    prime_diff: float
    prime_diff_se: float


def power_audit(outcomes: list[TrialOutcome], params: ChannelParams, n_se: float = 4.0) -> list[PowerReport]:
    """Expected-power check E[sum X^2] <= E[tau] P_j, per user.

    `diff` is the paired mean of energy - P_j * tau_star, which Wald's identity
    makes zero for the zero-padded code; the tau' accounting is reported alongside.
    """
    tau = np.array([o.tau_star for o in outcomes], dtype=float)
    tau_p = np.array([o.tau_max_true for o in outcomes], dtype=float)
    reports = []
    for user, power in ((1, params.p1), (2, params.p2)):
        e = np.array([o.energy1 if user == 1 else o.energy2 for o in outcomes])
        ep = np.array([o.energy1_prime if user == 1 else o.energy2_prime for o in outcomes])
        d, dse = rngmod.mean_se(e - power * tau)
        dp, dpse = rngmod.mean_se(ep - power * tau_p)
        if dse == 0.0:
            dse = 0.0 if np.all(e == power * tau) else dse
        mt = float(tau.mean())
        reports.append(PowerReport(user, float(e.mean()), mt, mt * power, d, dse,
                                   float(e.mean() / mt / power) if mt > 0 else float("nan"),
                                   d <= n_se * dse, abs(d) <= n_se * dse,
                                   float(ep.mean()), float(tau_p.mean()), dp, dpse))
    return reports


@dataclass(frozen=True)
class WrapperReport:
    n_prime: float
    eps: float
    p: float
    n_trials: int
    abort_rate: float
    error_rate: float
    error_se: float
    predicted_error: float
    mean_length: float
    length_se: float
    length_budget: float
    error_ok: bool
    length_ok: bool


def idealized_inner(n_prime: float, error_rate: float, seed: int) -> Callable[[int], TrialOutcome]:
    """Fixed-length inner code of length round(N') failing independently with `error_rate`."""
    length = int(round(n_prime))

    def trial(i):
        bad = rngmod.substream(seed, rngmod.NOISE, i).random() < error_rate
        return TrialOutcome(tau_star=length, decoded=None if bad else (0, 0), correct=not bad, energy1=0.0,
                            energy2=0.0, tau_max_true=length, true_pair=(0, 0))

    return trial


def wrapper_sim(cfg: WrapperConfig, inner: Callable[[int], TrialOutcome], inner_error: float, n_trials: int,
                seed: int = rngmod.DEFAULT_SEED, length_budget: float | None = None, n_se: float = 4.0) -> WrapperReport:
    """Monte Carlo of the abort wrapper around `inner`; compares with p + (1-p) inner_error."""
    out = [wrapped_trial(i, seed, cfg, inner) for i in range(n_trials)]
    err = np.array([not o.correct for o in out], dtype=float)
    lengths = np.array([o.tau_star for o in out], dtype=float)
    rate = float(err.mean())
    pred = cfg.p + (1 - cfg.p) * inner_error
    se = max(rngmod.binomial_se(rate, n_trials), rngmod.binomial_se(pred, n_trials))
    ml, mlse = rngmod.mean_se(lengths)
    if length_budget is None:
        length_budget = cfg.n_prime**2 * (1 - cfg.eps) / (cfg.n_prime - 1)
    return WrapperReport(cfg.n_prime, cfg.eps, cfg.p, n_trials, float(np.mean([o.aborted for o in out])), rate, se,
                         pred, ml, mlse, length_budget, rate <= cfg.eps + n_se * se,
                         ml <= length_budget + n_se * mlse)


def vlft_wrapper_sim(cfg: WrapperConfig, n_trials: int, seed: int = rngmod.DEFAULT_SEED,
                     length_budget: float | None = None) -> WrapperReport:
    """Abort wrapper around an idealized fixed-length feedback code with error 2/N'^2."""
    inner_err = 2.0 / cfg.n_prime**2
    return wrapper_sim(cfg, idealized_inner(cfg.n_prime, inner_err, seed), inner_err, n_trials, seed, length_budget)


def coupled_crossings(params: ChannelParams, thresholds: ThresholdTriple, n_trials: int,
                      seed: int = rngmod.DEFAULT_SEED, threads: int = 1, identical: bool = False) -> np.ndarray:
    """First-passage times of the three true-codeword walks driven by shared (X1, X2, Z).

    Returns an (n_trials, 3) integer array. `identical` feeds walk 1's increments
    to all three walks (degenerate check).
    """
    g = np.array(thresholds.as_tuple())
    mu = single_letter_stats(params).mu
    chunk = int(max(g / np.array(mu)) * 1.3 + 16)

    def run(sl):
        gen = rngmod.substream(seed, rngmod.WALK, 9, sl[0] // 4096)
        m = sl[1] - sl[0]
        tau = np.zeros((m, 3), dtype=np.int64)
        off = np.zeros((m, 3))
        idx = np.arange(m)
        steps = 0
        while idx.size:
            d = sample_increments(params, (idx.size, chunk), gen)
            if identical:
                d = (d[0], d[0], d[0])
            pending = np.zeros(idx.size, dtype=bool)
            for w in range(3):
                s = np.cumsum(d[w], axis=1) + off[idx, w][:, None]
                hit = s > g[w]
                any_hit = hit.any(axis=1)
                first = hit.argmax(axis=1) + 1 + steps
                new = (tau[idx, w] == 0) & any_hit
                tau[idx[new], w] = first[new]
                off[idx, w] = s[:, -1]
                pending |= tau[idx, w] == 0
            idx = idx[pending]
            steps += chunk
        return tau

    return np.concatenate(rngmod.ordered_map(run, rngmod.batch_slices(n_trials, 4096), threads))


@dataclass(frozen=True)
class MaxStopReport:
    n_prime: float
    n_trials: int
    mean_tau: tuple[float, float, float]
    mean_max: float
    max_se: float
    excess: float
    pair_abs_diff: dict
    pair_abs_se: dict
    pair_bound: dict
    pair_ok: dict
    identity_exact: bool


def max_stop_experiment(params: ChannelParams, n_prime: float, consts, n_trials: int,
                        seed: int = rngmod.DEFAULT_SEED, threads: int = 1, n_se: float = 4.0) -> MaxStopReport:
    """E[max of the three coupled crossing times] against N', with pairwise |tau_i - tau_j| bounds.

    `consts` supplies A, G and the per-walk L, F, B (see bounds.SecondOrderConstants).
    """
    thr = thresholds_from_target(single_letter_stats(params), n_prime, consts.a_const, consts.g_const)
    tau = coupled_crossings(params, thr, n_trials, seed + int(n_prime), threads)
    mx = tau.max(axis=1)
    # max{x, y} = (x + y + |x - y|)/2 holds exactly on integers
    t1, t2, t3 = tau[:, 0], tau[:, 1], tau[:, 2]
    m12 = (t1 + t2 + np.abs(t1 - t2)) // 2
    identity = bool(np.array_equal(m12, np.maximum(t1, t2))
                    and np.array_equal((m12 + t3 + np.abs(m12 - t3)) // 2, mx))
    mm, mse = rngmod.mean_se(mx)
    diffs, ses, bnds, oks = {}, {}, {}, {}
    for i, j in ((0, 1), (0, 2), (1, 2)):
        d, dse = rngmod.mean_se(np.abs(tau[:, i] - tau[:, j]))
        bound = (math.sqrt(2 * (consts.l[i] + consts.l[j]) * n_prime)
                 + math.sqrt(2 * abs(consts.f[i] + consts.f[j]) + (consts.b[i] - consts.b[j]) ** 2))
        key = (i + 1, j + 1)
        diffs[key], ses[key], bnds[key], oks[key] = d, dse, bound, d <= bound + n_se * dse
    return MaxStopReport(n_prime, n_trials, tuple(float(x) for x in tau.mean(axis=0)), mm, mse, mm - n_prime,
                         diffs, ses, bnds, oks, identity)
