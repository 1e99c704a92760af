"""Second-order constants, rate bounds and eps-capacity regions.

Every bound is evaluated with its unspecified O(1) term set to zero and clamped
at zero, so values are meaningful up to an additive constant.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import rng as rngmod
from .channel import ChannelParams, SingleLetterStats, binary_entropy, gaussian_capacity, single_letter_stats
from .walks import LadderEstimates, estimate_renewal_constants

PERMS = tuple(itertools.permutations((0, 1, 2)))
REGION_TOL = 1e-9


def a_objective(l: Sequence[float], perm: tuple[int, int, int]) -> float:
    i, j, k = perm
    return (0.5 * (math.sqrt(2 * (l[i] + l[j])) + math.sqrt(4 * l[k]))
            + 0.25 * (math.sqrt(2 * (l[i] + l[k])) + math.sqrt(2 * (l[j] + l[k]))))


def argmin_objective(l: Sequence[float], perm: tuple[int, int, int]) -> float:
    """The L-only objective that selects the indices used in G."""
    i, j, k = perm
    return 0.5 * math.sqrt(2 * (l[i] + l[j])) + 0.25 * (math.sqrt(2 * (l[i] + l[k])) + math.sqrt(2 * (l[j] + l[k])))


def _argmin(fn, l) -> tuple[int, int, int]:
    # PERMS is in lexicographic order and min() keeps the first minimizer
    vals = [fn(l, p) for p in PERMS]
    best = min(vals)
    return next(p for p, v in zip(PERMS, vals) if v <= best + 1e-12 * max(1.0, abs(best)))


def a_constant(l: Sequence[float]) -> float:
    return min(a_objective(l, p) for p in PERMS)


def g_constant(b: Sequence[float], f: Sequence[float], perm: tuple[int, int, int]) -> float:
    i, j, k = perm

    def term(x, y):
        return math.sqrt(2 * abs(f[x] + f[y]) + (b[x] - b[y]) ** 2)

    return -0.25 * (b[i] + b[j] + 2 * b[k]) + 0.5 * term(i, j) + 0.25 * (term(i, k) + term(j, k))


@dataclass(frozen=True)
class SecondOrderConstants:
    a_const: float
    g_const: float
    l: tuple[float, float, float]
    b: tuple[float, float, float]
    f: tuple[float, float, float]
    xi: tuple[float, float, float]
    a_perm: tuple[int, int, int]
    g_perm: tuple[int, int, int]

    def with_zero_g(self) -> "SecondOrderConstants":
        return SecondOrderConstants(self.a_const, 0.0, self.l, self.b, self.f, self.xi, self.a_perm, self.g_perm)


def constants_from_estimates(stats: SingleLetterStats, ladders: Sequence[LadderEstimates] | None = None, *,
                             xi: Sequence[float] | None = None, k: Sequence[float] | None = None) -> SecondOrderConstants:
    """A, G and the per-walk L, B, F from ladder estimates (or raw xi, K values).

    Permutations are 0-based index triples; ties go to the lexicographically
    smallest permutation.
    """
    if ladders is not None:
        xi = [ld.xi for ld in ladders]
        k = [ld.k_const for ld in ladders]
    if xi is None or k is None:
        raise ValueError("need ladder estimates or explicit xi and k")
    mu = stats.mu
    b = tuple(-2.0 * x / (2.0 * m) for x, m in zip(xi, mu))  # 2*mu_j = log(1 + P_j)
    f = tuple(kk / m**2 for kk, m in zip(k, mu))
    a_perm = _argmin(a_objective, stats.l)
    g_perm = _argmin(argmin_objective, stats.l)
    return SecondOrderConstants(a_objective(stats.l, a_perm), g_constant(b, f, g_perm), tuple(stats.l), b, f,
                                tuple(float(x) for x in xi), a_perm, g_perm)


def estimate_constants(params: ChannelParams, n_trials: int = 200_000, seed: int = rngmod.DEFAULT_SEED,
                       threads: int = 1) -> tuple[SecondOrderConstants, list[LadderEstimates]]:
    """Monte Carlo xi_j, K_j for the three walks, folded into SecondOrderConstants."""
    ladders = [estimate_renewal_constants(params, w, n_trials, seed, threads) for w in (1, 2, 3)]
    return constants_from_estimates(single_letter_stats(params), ladders), ladders


@dataclass(frozen=True)
class RateBounds:
    n: float
    eps: float
    ach: tuple[float, float, float]
    con: tuple[float, float, float]
    scheme: str
    rho: float = 0.0


def _clamp(v) -> tuple[float, float, float]:
    return tuple(max(0.0, float(x)) for x in v)


def _check_eps(eps):
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")


def sf_achievable(n: float, eps: float, stats: SingleLetterStats, a_const: float) -> tuple[float, float, float]:
    """(N/(1-eps) - A sqrt(N/(1-eps))) C_j - log N for j = 1, 2, sum."""
    _check_eps(eps)
    if n <= 0:
        raise ValueError("n must be positive")
    np_ = n / (1.0 - eps)
    eff = np_ - a_const * math.sqrt(np_)
    return _clamp(eff * c - math.log(n) for c in stats.cap)


def sf_converse(n: float, eps: float, stats: SingleLetterStats) -> tuple[float, float, float]:
    """(N C_j + h(eps))/(1-eps) for j = 1, 2, sum."""
    _check_eps(eps)
    if n < 0:
        raise ValueError("n must be nonnegative")
    h = binary_entropy(eps)
    return _clamp((n * c + h) / (1.0 - eps) for c in stats.cap)


def _vlft_caps(params: ChannelParams, rho: float) -> tuple[float, float, float]:
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    shrink = 1.0 - rho * rho
    return (gaussian_capacity(params.p1 * shrink), gaussian_capacity(params.p2 * shrink),
            gaussian_capacity(params.p1 + params.p2 + 2.0 * rho * math.sqrt(params.p1 * params.p2)))


def vlft_achievable(n: float, eps: float, params: ChannelParams, rho: float) -> tuple[float, float, float]:
    """N C_j(rho)/(1-eps) - log log N; needs N > e."""
    _check_eps(eps)
    if not n > math.e:
        raise ValueError(f"vlft achievability needs n > e, got {n}")
    ll = math.log(math.log(n))
    return _clamp(n * c / (1.0 - eps) - ll for c in _vlft_caps(params, rho))


def vlft_converse(n: float, eps: float, params: ChannelParams, rho: float) -> tuple[float, float, float]:
    """(N C_j(rho) + (N+1) h(1/(N+1)) + h(eps))/(1-eps)."""
    _check_eps(eps)
    if n < 0:
        raise ValueError("n must be nonnegative")
    extra = (n + 1.0) * binary_entropy(1.0 / (n + 1.0)) + binary_entropy(eps)
    return _clamp((n * c + extra) / (1.0 - eps) for c in _vlft_caps(params, rho))


def rate_bounds(n: float, eps: float, params: ChannelParams, scheme: str = "sf", rho: float = 0.0,
                a_const: float | None = None) -> RateBounds:
    if scheme == "sf":
        stats = single_letter_stats(params)
        if a_const is None:
            a_const = a_constant(stats.l)
        return RateBounds(n, eps, sf_achievable(n, eps, stats, a_const), sf_converse(n, eps, stats), "sf", 0.0)
    if scheme == "vlft":
        return RateBounds(n, eps, vlft_achievable(n, eps, params, rho), vlft_converse(n, eps, params, rho),
                          "vlft", rho)
    raise ValueError(f"unknown scheme {scheme!r}")


def crossover_length(params: ChannelParams, eps: float, scheme: str = "sf", rho: float = 0.0,
                     a_const: float | None = None, n_max: float = 1e7, n_points: int = 400) -> float:
    """Smallest N on a geometric grid from which achievability stays below the converse, coordinatewise."""
    grid = np.geomspace(3.0, n_max, n_points)
    ok = [all(a <= c + 1e-9 for a, c in zip(rb.ach, rb.con))
          for rb in (rate_bounds(float(n), eps, params, scheme, rho, a_const) for n in grid)]
    if not ok[-1]:
        return math.inf
    idx = len(ok) - 1
    while idx > 0 and ok[idx - 1]:
        idx -= 1
    return float(grid[idx])


@dataclass(frozen=True)
class RegionBoundary:
    """Upper-right boundary of a region in the nonnegative quadrant, ordered by increasing R1."""

    points: tuple[tuple[float, float], ...]
    eps: float
    scheme: str


def _pentagon(c1, c2, s):
    x_top = max(0.0, min(c1, s - c2))
    y_right = max(0.0, min(c2, s - c1))
    pts = [(0.0, min(c2, s)), (x_top, min(c2, s)), (min(c1, s), y_right), (min(c1, s), 0.0)]
    return [(float(x), float(y)) for x, y in pts]


def _upper_hull(points):
    """Upper-right convex boundary (Andrew's monotone chain, upper part)."""
    pts = sorted(set(points), key=lambda p: (p[0], -p[1]))
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= -1e-15:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def eps_capacity_region(eps: float, params: ChannelParams, scheme: str = "sf", rho_grid_size: int = 1001,
                        n_directions: int = 181) -> RegionBoundary:
    """sf: the capacity pentagon scaled by 1/(1-eps). vlft: the union over rho of
    the per-rho pentagons, traced as its convex upper-right boundary by a
    direction sweep that maximizes the support over rho (grid plus refinement).
    """
    _check_eps(eps)
    scale = 1.0 / (1.0 - eps)
    if scheme == "sf":
        stats = single_letter_stats(params)
        pts = _pentagon(*(c * scale for c in stats.cap))
        return RegionBoundary(tuple(pts), eps, "sf")
    if scheme != "vlft":
        raise ValueError(f"unknown scheme {scheme!r}")

    rho = np.linspace(0.0, 1.0, rho_grid_size)
    shrink = 1.0 - rho * rho
    c1 = 0.5 * np.log1p(params.p1 * shrink) * scale
    c2 = 0.5 * np.log1p(params.p2 * shrink) * scale
    s = 0.5 * np.log1p(params.p1 + params.p2 + 2.0 * rho * math.sqrt(params.p1 * params.p2)) * scale

    def support(a, b, c1, c2, s):
        v1 = a * np.minimum(c1, s) + b * np.clip(s - c1, 0.0, c2)
        v2 = a * np.clip(s - c2, 0.0, c1) + b * np.minimum(c2, s)
        return np.maximum(v1, v2)

    def caps(r):
        c = _vlft_caps(params, r)
        return c[0] * scale, c[1] * scale, c[2] * scale

    points = list(_pentagon(c1[0], c2[0], s[0]))  # rho = 0 exactly
    for th in np.linspace(0.0, 0.5 * math.pi, n_directions):
        a, b = math.cos(th), math.sin(th)
        vals = support(a, b, c1, c2, s)
        i = int(np.argmax(vals))
        lo, hi = rho[max(i - 1, 0)], rho[min(i + 1, rho_grid_size - 1)]
        best_r = float(rho[i])
        if hi > lo:
            res = minimize_scalar(lambda r: -float(support(a, b, *caps(r))), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-10})
            if -res.fun > vals[i]:
                best_r = float(res.x)
        points.extend(_pentagon(*caps(best_r)))
    hull = _upper_hull(points)
    return RegionBoundary(tuple(hull), eps, "vlft")


def region_contains(region: RegionBoundary, r1: float, r2: float, tol: float = REGION_TOL) -> bool:
    if r1 < -tol or r2 < -tol:
        return False
    xs = np.array([p[0] for p in region.points])
    ys = np.array([p[1] for p in region.points])
    if r1 > xs.max() + tol:
        return False
    # for repeated R1 values the boundary height is the largest R2
    ux = np.unique(xs)
    uy = np.array([ys[xs == x].max() for x in ux])
    x = min(max(r1, ux[0]), ux[-1])
    return bool(r2 <= np.interp(x, ux, uy) + tol)
