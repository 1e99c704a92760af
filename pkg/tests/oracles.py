"""Independent reference implementations used only by the tests."""
import math

import numpy as np
from scipy.stats import norm


def log_density_increments(p1, p2, x1, x2, y):
    """The three information-density increments from raw Gaussian log-densities."""
    joint = norm.logpdf(y, loc=x1 + x2, scale=1.0)
    d1 = joint - norm.logpdf(y, loc=x2, scale=math.sqrt(1 + p1))
    d2 = joint - norm.logpdf(y, loc=x1, scale=math.sqrt(1 + p2))
    d3 = joint - norm.logpdf(y, loc=0.0, scale=math.sqrt(1 + p1 + p2))
    return d1, d2, d3


def brute_force_decode(p1, p2, a, b, y, gammas):
    """Stopping time and decision by direct evaluation over every pair.

    a: (m1, n) and b: (m2, n) codeword letters, y: (n,) outputs. Returns
    (tau_star, (j, k)) with 1-based tau_star, or (None, None) if no pair
    finishes within n steps.
    """
    m1, m2, n = a.shape[0], b.shape[0], y.shape[0]
    taus = np.full((m1, m2), np.inf)
    for j in range(m1):
        for k in range(m2):
            walks = log_density_increments(p1, p2, a[j, :n], b[k, :n], y)
            crossing = []
            for d, g in zip(walks, gammas):
                above = np.nonzero(np.cumsum(d) > g)[0]
                crossing.append(above[0] + 1 if above.size else np.inf)
            taus[j, k] = max(crossing)
    t = taus.min()
    if not np.isfinite(t):
        return None, None
    winners = [(j, k) for j in range(m1) for k in range(m2) if taus[j, k] == t]
    return int(t), max(winners)


def exhaustive_message_sizes(gammas, n_prime):
    """Best (m1, m2) by scanning every integer pair."""
    off = math.log(3 * n_prime)
    c1 = int(math.floor(math.exp(gammas[0] - off)))
    c2 = int(math.floor(math.exp(gammas[1] - off)))
    cs = math.exp(gammas[2] - off)
    best = (0, 0, 0)
    for m1 in range(1, c1 + 1):
        for m2 in range(1, c2 + 1):
            if m1 * m2 <= cs and (m1 * m2, m1) > best[:2]:
                best = (m1 * m2, m1, m2)
    return best[1], best[2]


def quadratic_root_inner_length(n, eps):
    """Largest integer N' with N'^2 (1 - eps) / (N' - 1) <= N, by upward scan."""
    best = None
    x = 2
    while x < 10 * n / (1 - eps) + 10:
        if x * x * (1 - eps) / (x - 1) <= n:
            best = x
        x += 1
    return best
