"""Single-letter quantities of the two-user Gaussian MAC Y = X1 + X2 + Z.

All logarithms are natural, so every rate and information density is in nats.
Noise variance is fixed to 1 and codebook letters are drawn N(0, P_u).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

WALK_IDS = (1, 2, 3)


def gaussian_capacity(x: float) -> float:
    """C(x) = 0.5 * log(1 + x)."""
    if x < 0:
        raise ValueError(f"gaussian_capacity needs x >= 0, got {x}")
    return 0.5 * math.log1p(x)


def binary_entropy(x: float) -> float:
    """Binary entropy in nats with h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log1p(-x)


def check_walk(which: int) -> int:
    if which not in WALK_IDS:
        raise ValueError(f"walk id must be one of {WALK_IDS}, got {which!r}")
    return which


@dataclass(frozen=True)
class ChannelParams:
    """Transmit powers (linear SNR) of the two users."""

    p1: float
    p2: float

    def __post_init__(self):
        for name in ("p1", "p2"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, np.floating)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a finite positive power, got {v!r}")

    @property
    def p3(self) -> float:
        return self.p1 + self.p2

    def walk_power(self, which: int) -> float:
        """Effective power of walk `which`; walk 3 sees the sum power."""
        return (self.p1, self.p2, self.p3)[check_walk(which) - 1]


class SingleLetterStats(NamedTuple):
    mu: tuple[float, float, float]
    sigma2: tuple[float, float, float]
    cap: tuple[float, float, float]
    l: tuple[float, float, float]


def dispersion_ratio(power: float) -> float:
    """L = 4P / ((1+P) log(1+P)^2), the variance-to-squared-mean ratio of one walk."""
    return 4.0 * power / ((1.0 + power) * math.log1p(power) ** 2)


def single_letter_stats(params: ChannelParams) -> SingleLetterStats:
    powers = (params.p1, params.p2, params.p3)
    cap = tuple(gaussian_capacity(p) for p in powers)
    sigma2 = tuple(p / (1.0 + p) for p in powers)
    l = tuple(dispersion_ratio(p) for p in powers)
    return SingleLetterStats(mu=cap, sigma2=sigma2, cap=cap, l=l)


class InfoDensityTriple(NamedTuple):
    d1: float
    d2: float
    d3: float


def info_densities(params: ChannelParams, x1, x2, y):
    """Per-letter increments of i(X1;Y|X2), i(X2;Y|X1), i(X1,X2;Y).

    Works elementwise on scalars or numpy arrays.
    """
    p1, p2, p3 = params.p1, params.p2, params.p3
    e = 0.5 * (y - x1 - x2) ** 2
    d1 = 0.5 * math.log1p(p1) + (y - x2) ** 2 / (2.0 * (1.0 + p1)) - e
    d2 = 0.5 * math.log1p(p2) + (y - x1) ** 2 / (2.0 * (1.0 + p2)) - e
    d3 = 0.5 * math.log1p(p3) + y**2 / (2.0 * (1.0 + p3)) - e
    return d1, d2, d3


def sample_channel(params: ChannelParams, x1: float, x2: float, rng: np.random.Generator):
    """One channel use: returns (y, InfoDensityTriple) for inputs x1, x2."""
    if not (math.isfinite(x1) and math.isfinite(x2)):
        raise ValueError("channel inputs must be finite")
    y = x1 + x2 + rng.standard_normal()
    return y, InfoDensityTriple(*(float(d) for d in info_densities(params, x1, x2, y)))


def info_density_mismatched(params: ChannelParams, x1: float, x2: float, y: float, which: int) -> float:
    """Increment of walk `which` evaluated at (possibly wrong) codeword letters x1, x2.

    The output y was produced by the transmitted letters; this only evaluates the
    decoder's metric for a candidate pair.
    """
    return float(info_densities(params, x1, x2, y)[check_walk(which) - 1])


def sample_inputs(params: ChannelParams, size, rng: np.random.Generator):
    """i.i.d. Gaussian codebook letters and channel outputs, shape `size` each."""
    x1 = rng.standard_normal(size) * math.sqrt(params.p1)
    x2 = rng.standard_normal(size) * math.sqrt(params.p2)
    y = x1 + x2 + rng.standard_normal(size)
    return x1, x2, y


def sample_increments(params: ChannelParams, size, rng: np.random.Generator):
    """Coupled increments (d1, d2, d3) of the three true-codeword walks."""
    return info_densities(params, *sample_inputs(params, size, rng))


def walk_increments(power: float, size, rng: np.random.Generator) -> np.ndarray:
    """Increments of one true-codeword walk at effective power `power`.

    For walk j only X_j (or X1+X2 for walk 3) and Z enter the increment, so each
    walk marginally is the point-to-point AWGN information density at P_j.
    """
    x = rng.standard_normal(size) * math.sqrt(power)
    z = rng.standard_normal(size)
    return 0.5 * math.log1p(power) + (x + z) ** 2 / (2.0 * (1.0 + power)) - 0.5 * z * z


def neg_mgf(power: float, theta: float) -> float:
    """E[exp(-theta * d)] for the single-walk increment d at effective power `power`.

    Closed form from the Gaussian quadratic form d = C + u'Qu, u = (X, Z).
    Returns inf outside the convergence region.
    """
    s = np.array([math.sqrt(power), 1.0])
    a = 1.0 / (2.0 * (1.0 + power))
    q = np.array([[a, a], [a, a - 0.5]])
    m = np.eye(2) + 2.0 * theta * (s[:, None] * q * s[None, :])
    eig = np.linalg.eigvalsh(m)
    if eig.min() <= 0:
        return math.inf
    return math.exp(-theta * gaussian_capacity(power)) / math.sqrt(float(np.prod(eig)))
