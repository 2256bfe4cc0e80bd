"""Scalar building blocks: Laguerre polynomials, moments and free cumulants
of the free unitary Brownian motion, projection cumulants, and the series
eta(t, z) and lambda(z) that generate them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .series import DEFAULT_CAP, TruncatedSeries1, s1_div, s1_sqrt


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    t: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.t >= 0.0:
            raise ValueError(f"t must be non-negative, got {self.t}")


def laguerre(n: int, k: float, x: float) -> float:
    """Generalized Laguerre polynomial L_n^(k)(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    prev, cur = 1.0, 1.0 + k - x
    if n == 0:
        return prev
    for i in range(1, n):
        prev, cur = cur, ((2 * i + 1 + k - x) * cur - (i + k) * prev) / (i + 1)
    return cur


def q_poly(n: int, t: float) -> float:
    """Q_n(t) = e^{nt/2} tau(Y_t^n) = L_{n-1}^(1)(nt) / n, with Q_0 = 1."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 1.0
    return laguerre(n - 1, 1, n * t) / n


def fubm_moment(n: int, t: float) -> float:
    """tau(Y_t^n) for any integer n; moments are real so tau(Y^-n) = tau(Y^n).

    ``t = inf`` gives the Haar unitary moments.
    """
    n = abs(n)
    if n == 0:
        return 1.0
    if math.isinf(t):
        return 0.0
    return math.exp(-n * t / 2) * q_poly(n, t)


def cumulant_Y(n: int, t: float) -> float:
    """Free cumulant k_n(Y_t) = e^{-nt/2} (-n)^{n-1} t^{n-1} / n!."""
    if n < 1:
        raise ValueError("cumulant order must be >= 1")
    return math.exp(-n * t / 2) * (-n) ** (n - 1) * t ** (n - 1) / math.factorial(n)


def v_poly(r: int, t: float) -> float:
    if r < 0:
        raise ValueError("r must be non-negative")
    if r == 0:
        return 0.0
    if r == 1:
        return 1.0
    total = 0.0
    falling = 1.0  # (r-1)(r-2)...(r-j); empty product at j = 0
    for j in range(r - 1):
        if j:
            falling *= r - j
        total += math.comb(r - 2, j) * (r - 1) ** j * t**j / falling
    return total


def cumulant_star_word(r: int, t: float) -> float:
    """k_r[Y*, Y, ..., Y] with one adjoint followed by r - 1 copies of Y."""
    if r < 1:
        raise ValueError("r must be >= 1")
    return (-math.exp(-t / 2)) ** (r - 2) * (v_poly(r - 1, t) - math.exp(-t) * v_poly(r, t))


def catalan(j: int) -> int:
    if j < 0:
        raise ValueError("j must be non-negative")
    c = 1
    for i in range(j):
        c = c * 2 * (2 * i + 1) // (i + 2)
    return c


def projection_cumulant_half(m: int) -> float:
    """Free cumulants of a projection of trace 1/2."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if m == 1:
        return 0.5
    if m % 2:
        return 0.0
    j = m // 2
    return (-1) ** (j - 1) * catalan(j - 1) / 4**j


@lru_cache(maxsize=64)
def projection_cumulants(alpha: float, nmax: int) -> tuple[float, ...]:
    """Free cumulants k_1..k_nmax of a projection with trace ``alpha``.

    Inverts m_n = sum_s k_s [z^{n-s}] M(z)^s with every moment m_n = alpha,
    M(z) = 1 + sum_{n>=1} m_n z^n. Entry 0 of the result is unused (0.0).
    """
    moments = [1.0] + [alpha] * nmax
    M = TruncatedSeries1(moments, nmax)
    powers = [TruncatedSeries1.constant(1.0, nmax)]
    for _ in range(nmax):
        powers.append(powers[-1] * M)
    k = [0.0] * (nmax + 1)
    for n in range(1, nmax + 1):
        acc = sum(k[s] * powers[s][n - s] for s in range(1, n))
        k[n] = float(moments[n] - acc)
    return tuple(k)


def eta_series(t: float, D: int = DEFAULT_CAP) -> TruncatedSeries1:
    """eta(t, z) = sum_{n>=1} Q_n(t) z^n."""
    return TruncatedSeries1([0.0] + [q_poly(n, t) for n in range(1, D + 1)], D)


def eta_power(t: float, j: int, D: int = DEFAULT_CAP) -> TruncatedSeries1:
    """[eta(t, z)]^j through its Laguerre coefficients j L_{m-j}^(j)(mt) / m."""
    if j < 1:
        raise ValueError("j must be >= 1")
    c = [0.0] * (D + 1)
    for m in range(j, D + 1):
        c[m] = j * laguerre(m - j, j, m * t) / m
    return TruncatedSeries1(c, D)


def eta_inverse_series(t: float, D: int = DEFAULT_CAP) -> TruncatedSeries1:
    """y e^{ty} / (1 + y), the compositional inverse of eta(t, .)."""
    e = TruncatedSeries1([t**i / math.factorial(i) for i in range(D + 1)], D)
    y = TruncatedSeries1.variable(D)
    return y * e / (1.0 + y)


def lambda_series(D: int = DEFAULT_CAP) -> TruncatedSeries1:
    """lambda(z) = (1 - sqrt(1 - z)) / (1 + sqrt(1 - z))."""
    if D < 1:
        raise ValueError("D must be >= 1")
    s = s1_sqrt(TruncatedSeries1([1.0, -1.0], D))
    return s1_div(1.0 - s, 1.0 + s)
