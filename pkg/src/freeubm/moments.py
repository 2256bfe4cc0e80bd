"""Moment engines for the compression P Y_t P and generating-function checks.

Three families of moments are covered:

* tau[(P Y_t)^n], closed form;
* mixed moments R_{m,n}(t) = e^{t(m+n)/2} tau[(P Y_t)^m (P Y_t^*)^n], from the
  Taylor coefficients of -1/g and from the RK4-integrated ODE hierarchy;
* alternating moments r_n(t) = tau[(P Y P Y^*)^n] and
  s_{n,1}(t) = tau[(P Y P Y^*)^n P Y], from their hierarchies and, at
  alpha = 1/2, from closed generating functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .series import (
    DEFAULT_CAP,
    DEFAULT_CAP2,
    TruncatedSeries1,
    TruncatedSeries2,
    conv2_truncated,
    max_residual,
    s1_compose,
    s1_sqrt,
    s2_exp_linear,
    s2_recip,
)
from .specfun import ModelParams, eta_inverse_series, eta_series, laguerre, lambda_series, q_poly

DEFAULT_STEP = 1e-3

PY = "PY"
MIXED = "MIXED"
EVEN_ALT = "EVEN_ALT"
ODD_ALT = "ODD_ALT"


class GridTooSmall(ValueError):
    pass


class StepTooLarge(ArithmeticError):
    pass


class BracketNotDivisible(ArithmeticError):
    pass


@dataclass(frozen=True)
class MomentTable:
    kind: str
    params: ModelParams
    method: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, idx):
        return self.values[idx]

    def __contains__(self, idx) -> bool:
        return idx in self.values

    def is_symmetric(self, atol: float = 1e-10) -> bool:
        for (m, n), v in self.values.items():
            if (n, m) in self.values and abs(v - self.values[(n, m)]) > atol:
                return False
        return True


@dataclass(frozen=True)
class CoeffGrid:
    """Taylor coefficients c[j, k] of -1/g(t, y, z)."""

    c: np.ndarray
    params: ModelParams

    @property
    def shape(self) -> tuple[int, int]:
        return self.c.shape

    def __getitem__(self, idx):
        return self.c[idx]

    def is_symmetric(self, atol: float = 1e-12) -> bool:
        n = min(self.c.shape)
        sq = self.c[:n, :n]
        return bool(np.max(np.abs(sq - sq.T)) <= atol * max(1.0, np.max(np.abs(sq))))


@dataclass
class CheckReport:
    check: str
    residual: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# closed forms


def moment_PY_closed(n: int, alpha: float, t: float) -> float:
    """tau[(P Y_t)^n] = alpha e^{-nt/2} Q_n(alpha t); n = 0 gives alpha."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return alpha * math.exp(-n * t / 2) * q_poly(n, alpha * t)


def g_series(alpha: float, t: float, cap_y: int = DEFAULT_CAP2, cap_z: int = DEFAULT_CAP2):
    """Two-variable expansion of

        g(t, y, z) = yz (e^{t(1+ay+az)} - 1) / ((1+ay+az)(1+y)(1+z)) - 1/(a(1+y)(1+z)).
    """
    poly = lambda terms: TruncatedSeries2.from_poly(terms, cap_y, cap_z)  # noqa: E731
    yz = poly({(1, 1): 1.0})
    lin = poly({(0, 0): 1.0, (1, 0): alpha, (0, 1): alpha})
    inv_yz = s2_recip(poly({(0, 0): 1.0, (1, 0): 1.0, (0, 1): 1.0, (1, 1): 1.0}))
    expo = s2_exp_linear(t, alpha, cap_y, cap_z) - 1.0
    return yz * expo * s2_recip(lin) * inv_yz - inv_yz * (1.0 / alpha)


def mixed_coeff_grid(alpha: float, t: float, J: int = DEFAULT_CAP2, K: int | None = None) -> CoeffGrid:
    K = J if K is None else K
    c = s2_recip(-g_series(alpha, t, J, K)).coeffs
    return CoeffGrid(c, ModelParams(alpha, t))


def mixed_moment_closed(m: int, n: int, alpha: float, t: float, grid: CoeffGrid | None = None) -> float:
    """R_{m,n}(t) as the Laguerre double sum over the c-grid.

    Rows with m = 0 or n = 0 fall back to alpha Q(alpha t); R_{0,0} = alpha.
    """
    if m < 0 or n < 0:
        raise ValueError("indices must be non-negative")
    if m == 0 or n == 0:
        return alpha * q_poly(m + n, alpha * t)
    if grid is None:
        grid = mixed_coeff_grid(alpha, t, max(m, n))
    if grid.c.shape[0] <= m or grid.c.shape[1] <= n:
        raise GridTooSmall(f"grid {grid.c.shape} too small for ({m}, {n})")
    at = alpha * t
    ly = [laguerre(m - j, j, m * at) for j in range(1, m + 1)]
    lz = [laguerre(n - k, k, n * at) for k in range(1, n + 1)]
    total = math.fsum(
        j * k * grid.c[j, k] * ly[j - 1] * lz[k - 1] for j in range(1, m + 1) for k in range(1, n + 1)
    )
    return total / (m * n)


# ---------------------------------------------------------------------------
# RK4 hierarchies


def _rk4(rhs: Callable, y0: np.ndarray, times: Sequence[float], h: float) -> list[np.ndarray]:
    """Classical RK4 from t = 0; the state is recorded at each entry of ``times``.

    Each interval between consecutive record times is split into equal steps
    no longer than ``h``.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    out = []
    t = 0.0
    y = np.array(y0, dtype=float)
    for target in times:
        if target < t:
            raise ValueError("times must be non-decreasing and non-negative")
        n_steps = math.ceil((target - t) / h - 1e-9)
        if n_steps:
            dt = (target - t) / n_steps
            for i in range(n_steps):
                s = t + i * dt
                k1 = rhs(s, y)
                k2 = rhs(s + dt / 2, y + dt / 2 * k1)
                k3 = rhs(s + dt / 2, y + dt / 2 * k2)
                k4 = rhs(s + dt, y + dt * k3)
                y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(y)):
                raise StepTooLarge(f"non-finite state reached before t={target}")
        t = target
        out.append(y.copy())
    return out


def _lag_matrix(q: np.ndarray, size: int) -> np.ndarray:
    """T[k, n] = k q[n - k] for 1 <= k <= n - 1."""
    T = np.zeros((size + 1, size + 1))
    for n in range(2, size + 1):
        for k in range(1, n):
            T[k, n] = k * q[n - k]
    return T


def _mixed_full(y: np.ndarray, alpha: float, q: np.ndarray, M: int, N: int) -> np.ndarray:
    full = np.empty((M + 1, N + 1))
    full[0, 0] = alpha
    full[1:, 0] = alpha * q[1 : M + 1]
    full[0, 1:] = alpha * q[1 : N + 1]
    full[1:, 1:] = y.reshape(M, N)
    return full


def mixed_ode_path(M: int, N: int, alpha: float, times: Iterable[float], h: float = DEFAULT_STEP):
    """Integrate dR_{m,n}/dt for 1 <= m <= M, 1 <= n <= N; one table per time."""
    if M < 1 or N < 1:
        raise ValueError("M and N must be >= 1")
    times = list(times)
    size = max(M, N)

    def qvec(t):
        return np.array([q_poly(i, alpha * t) for i in range(size + 1)])

    def rhs(t, y):
        q = qvec(t)
        full = _mixed_full(y, alpha, q, M, N)
        lin = full @ _lag_matrix(q, N)[: N + 1, : N + 1] + _lag_matrix(q, M)[: M + 1, : M + 1].T @ full
        quad = conv2_truncated(full, full, (M, N))
        d = -alpha * lin[1:, 1:] + math.exp(t) * quad
        return d.ravel()

    states = _rk4(rhs, np.full(M * N, alpha), times, h)
    tables = []
    for t, y in zip(times, states):
        full = _mixed_full(y, alpha, qvec(t), M, N)
        values = {(m, n): float(full[m, n]) for m in range(M + 1) for n in range(N + 1)}
        tables.append(MomentTable(MIXED, ModelParams(alpha, t), f"rk4(h={h})", values))
    return tables


def mixed_ode_table(M: int, N: int, alpha: float, t_end: float, h: float = DEFAULT_STEP) -> MomentTable:
    return mixed_ode_path(M, N, alpha, [t_end], h)[0]


def _even_rhs(n_max: int, alpha: float, y: np.ndarray) -> np.ndarray:
    r = np.concatenate(([alpha], y[:n_max]))
    d = np.empty(n_max)
    for n in range(1, n_max + 1):
        acc = 0.0
        for q in range(n - 1):
            acc += r[n - q - 1] * (r[q] - r[q + 1])
        d[n - 1] = -n * r[n] + n * alpha * r[n - 1] + n * acc
    return d


def _odd_rhs(n_max: int, r: np.ndarray, s: np.ndarray) -> np.ndarray:
    d = np.empty(n_max + 1)
    for n in range(n_max + 1):
        acc = -(2 * n + 1) / 2 * s[n]
        for q in range(1, n + 1):
            acc += -(2 * n - 2 * q + 1) * s[n - q] * r[q] + (2 * n - 2 * q + 2) * s[n - q] * r[q - 1]
        d[n] = acc
    return d


def jacobi_even_path(n_max: int, alpha: float, times: Iterable[float], h: float = DEFAULT_STEP):
    times = list(times)
    states = _rk4(lambda t, y: _even_rhs(n_max, alpha, y), np.full(n_max, alpha), times, h)
    return [
        MomentTable(
            EVEN_ALT,
            ModelParams(alpha, t),
            f"rk4(h={h})",
            {0: alpha, **{n: float(y[n - 1]) for n in range(1, n_max + 1)}},
        )
        for t, y in zip(times, states)
    ]


def jacobi_even_ode(n_max: int, alpha: float, t_end: float, h: float = DEFAULT_STEP) -> MomentTable:
    """r_n(t) = tau[(P Y P Y^*)^n] for n <= n_max, with r_0 = alpha."""
    return jacobi_even_path(n_max, alpha, [t_end], h)[0]


def odd_even_path(n_max: int, alpha: float, times: Iterable[float], h: float = DEFAULT_STEP):
    """Joint integration of r_1..r_N and s_{0,1}..s_{N,1}; returns (even, odd) tables per time."""
    times = list(times)

    def rhs(t, y):
        r = np.concatenate(([alpha], y[:n_max]))
        s = y[n_max:]
        return np.concatenate((_even_rhs(n_max, alpha, y[:n_max]), _odd_rhs(n_max, r, s)))

    y0 = np.full(2 * n_max + 1, alpha)
    states = _rk4(rhs, y0, times, h)
    out = []
    for t, y in zip(times, states):
        p = ModelParams(alpha, t)
        even = MomentTable(EVEN_ALT, p, f"rk4(h={h})", {0: alpha, **{n: float(y[n - 1]) for n in range(1, n_max + 1)}})
        odd = MomentTable(ODD_ALT, p, f"rk4(h={h})", {n: float(y[n_max + n]) for n in range(n_max + 1)})
        out.append((even, odd))
    return out


def odd_ode(n_max: int, alpha: float, t_end: float, h: float = DEFAULT_STEP) -> MomentTable:
    """s_{n,1}(t) for n <= n_max, seeded with s_{0,1}(t) = alpha e^{-t/2}."""
    return odd_even_path(n_max, alpha, [t_end], h)[0][1]


# ---------------------------------------------------------------------------
# alpha = 1/2 closed generating functions


def _eta_damped(t: float, D: int) -> TruncatedSeries1:
    """eta(2t, e^{-t} x): coefficient n is Q_n(2t) e^{-nt}; zero at t = inf."""
    if math.isinf(t):
        return TruncatedSeries1.constant(0.0, D)
    return TruncatedSeries1([0.0] + [q_poly(n, 2 * t) * math.exp(-n * t) for n in range(1, D + 1)], D)


def _eta_of_lambda(t: float, D: int) -> TruncatedSeries1:
    """eta(2t, e^{-t} lambda(z))."""
    return s1_compose(_eta_damped(t, D), lambda_series(D))


def _sqrt_one_minus(D: int) -> TruncatedSeries1:
    return s1_sqrt(TruncatedSeries1([1.0, -1.0], D))


def jacobi_even_half_series(t: float, D: int = DEFAULT_CAP) -> TruncatedSeries1:
    """N_t(z) = 1/2 + sum r_n z^n at alpha = 1/2.

    Built as [1 + 2 eta(2t, e^{-t} lambda(z))] / (2 sqrt(1 - z)).
    """
    s = _sqrt_one_minus(D)
    return (1.0 + 2.0 * _eta_of_lambda(t, D)) / (2.0 * s)


def stationary_even_half(D: int = DEFAULT_CAP) -> TruncatedSeries1:
    """N_inf(z) = 1 / (2 sqrt(1 - z))."""
    return 0.5 / _sqrt_one_minus(D)


def stationary_odd_half(D: int = DEFAULT_CAP) -> TruncatedSeries1:
    """V_inf(z) = 1 / (sqrt(1 - z)(1 + sqrt(1 - z)))."""
    s = _sqrt_one_minus(D)
    return 1.0 / (s * (1.0 + s))


def odd_half_series(t: float, D: int = DEFAULT_CAP) -> TruncatedSeries1:
    """V_t(z) = 1/2 + e^{t/2} sum_{n>=1} s_{n,1}(t) z^n at alpha = 1/2."""
    E = _eta_of_lambda(t, D)
    damping = s1_compose(TruncatedSeries1.exponential(D), -t * E) if not math.isinf(t) else 1.0
    return stationary_odd_half(D) * (1.0 + E) * damping


def half_c_coefficients(t: float, D: int = DEFAULT_CAP) -> TruncatedSeries1:
    """Coefficients c_j of (1 + x)/2 [1 + eta(2t, e^{-t}x)] e^{-t eta(2t, e^{-t}x)}."""
    E = _eta_damped(t, D)
    damping = s1_compose(TruncatedSeries1.exponential(D), -t * E) if not math.isinf(t) else 1.0
    x = TruncatedSeries1.variable(D)
    return 0.5 * (1.0 + x) * (1.0 + E) * damping


def binomial_convolution(c: Sequence[float]) -> list[float]:
    """b_n = sum_{k <= n} C(2n, n - k) c_k."""
    return [math.fsum(math.comb(2 * n, n - k) * c[k] for k in range(n + 1)) for n in range(len(c))]


def odd_half_closed(n_max: int, t: float, D: int | None = None, route: str = "compose") -> MomentTable:
    """s_{n,1}(t) at alpha = 1/2 read off V_t.

    ``route="compose"`` expands V_t by series composition; ``route="convolution"``
    goes through the c_j coefficients and the binomial convolution.
    """
    D = max(n_max, 1) if D is None else D
    if D < n_max:
        raise ValueError("degree cap below n_max")
    if route == "compose":
        v = odd_half_series(t, D).coeffs
    elif route == "convolution":
        b = binomial_convolution(half_c_coefficients(t, D).coeffs)
        v = [b_n / 4**n for n, b_n in enumerate(b)]
    else:
        raise ValueError(f"unknown route {route!r}")
    scale = math.exp(-t / 2) if not math.isinf(t) else 0.0
    values = {n: scale * float(v[n]) for n in range(n_max + 1)}
    return MomentTable(ODD_ALT, ModelParams(0.5, t), f"closed-{route}", values)


# ---------------------------------------------------------------------------
# identity checks at alpha = 1/2


def verify_w_square(t: float, D: int = 12, tol: float = 1e-8) -> CheckReport:
    """[(1-z) V_t]^2 against e^t (1-z)/(4z) [4(1-z) N_t^2 - 1]."""
    cap = D + 1
    z1 = TruncatedSeries1([1.0, -1.0], cap)
    W = z1 * odd_half_series(t, cap)
    N = jacobi_even_half_series(t, cap)
    bracket = 4.0 * z1 * N * N - 1.0
    if abs(bracket[0]) > 1e-10:
        raise BracketNotDivisible(f"constant term {bracket[0]!r}")
    rhs = math.exp(t) / 4.0 * z1.truncate(D) * bracket.shift_down()
    res = max_residual((W * W).truncate(D), rhs)
    return CheckReport("w-square", res, tol, res <= tol, {"t": t, "degree": D})


def verify_oddeven(t: float, D: int = 12, tol: float = 1e-8) -> CheckReport:
    """e^{-t} z V_t^2 against N_t^2 - N_inf^2."""
    V = odd_half_series(t, D)
    N = jacobi_even_half_series(t, D)
    Ninf = stationary_even_half(D)
    lhs = math.exp(-t) * (V * V).shift_up()
    res = max_residual(lhs, N * N - Ninf * Ninf)
    return CheckReport("oddeven", res, tol, res <= tol, {"t": t, "degree": D})


def verify_stationary(D: int = 12, tol: float = 1e-8, v_inf: TruncatedSeries1 | None = None) -> CheckReport:
    """Apply the stationary ODE at alpha = 1/2 to V_inf; the residual should vanish."""
    alpha = 0.5
    M = 0.5 / _sqrt_one_minus(D) - 0.5
    V = stationary_odd_half(D) if v_inf is None else v_inf.truncate(D)
    z = TruncatedSeries1.variable(D)
    a = 2.0 * z * (alpha + M)
    expr = (a - M) * V + (a - (1.0 + 2.0 * M)) * V.euler()
    res = float(np.max(np.abs(expr.coeffs)))
    return CheckReport("stationary", res, tol, res <= tol, {"degree": D})


def verify_biane_inverse(t: float, D: int = 12, tol: float = 1e-9) -> CheckReport:
    """eta(t, .) composed with y e^{ty} / (1 + y) should be the identity series."""
    comp = s1_compose(eta_series(t, D), eta_inverse_series(t, D))
    res = max_residual(comp, TruncatedSeries1.variable(D))
    return CheckReport("biane-inverse", res, tol, res <= tol, {"t": t, "degree": D})


def verify_functional_relation(t: float, D: int = 12, tol: float = 1e-9) -> CheckReport:
    """eta(2t, w) / (1 + eta(2t, w)) e^{2t eta(2t, w)} should equal w."""
    E = eta_series(2 * t, D)
    lhs = E / (1.0 + E) * s1_compose(TruncatedSeries1.exponential(D), 2 * t * E)
    res = max_residual(lhs, TruncatedSeries1.variable(D))
    return CheckReport("functional-relation", res, tol, res <= tol, {"t": t, "degree": D})


def constancy_values(n: int, t_grid: Sequence[float], h: float = DEFAULT_STEP) -> list[float]:
    """F(t) = sum_{k=1}^n s_{k-1,1} s_{n-k,1} - sum_{k=0}^n r_k r_{n-k} at alpha = 1/2."""
    grid = sorted(t_grid)
    out = []
    for even, odd in odd_even_path(n, 0.5, grid, h):
        s_part = math.fsum(odd[k - 1] * odd[n - k] for k in range(1, n + 1))
        r_part = math.fsum(even[k] * even[n - k] for k in range(n + 1))
        out.append(s_part - r_part)
    return out


def verify_constancy(n: int, t_grid: Sequence[float], h: float = DEFAULT_STEP, tol: float = 1e-8) -> CheckReport:
    """Time-constancy of F(t); the constant should be -[z^n] N_inf(z)^2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    values = constancy_values(n, t_grid, h)
    dev = max(abs(v - values[0]) for v in values)
    Ninf = stationary_even_half(max(n, 1))
    expected = -float((Ninf * Ninf)[n])
    return CheckReport(
        "constancy",
        dev,
        tol,
        dev <= tol,
        {"n": n, "grid": sorted(t_grid), "F": values, "expected_constant": expected},
    )


# ---------------------------------------------------------------------------
# discrepancy checks against printed formulas


def remark_expansion_series(alpha: float, t: float, J: int = 4, K: int | None = None) -> TruncatedSeries2:
    """The printed expansion of -1/g, with numerator 1 + ay + az + ayz."""
    K = J if K is None else K
    poly = lambda terms: TruncatedSeries2.from_poly(terms, J, K)  # noqa: E731
    num = poly({(0, 0): 1.0, (1, 0): alpha, (0, 1): alpha, (1, 1): alpha})
    lin = poly({(0, 0): 1.0, (1, 0): alpha, (0, 1): alpha})
    yz1 = poly({(0, 0): 1.0, (1, 0): 1.0, (0, 1): 1.0, (1, 1): 1.0})
    expo = s2_exp_linear(t, alpha, J, K) - 1.0
    x = poly({(1, 1): 1.0}) * num * expo * s2_recip(lin * yz1)
    return num * s2_recip(1.0 - x)


def remark_expansion_check(alpha: float, t: float, tol: float = 1e-10) -> CheckReport:
    """Compare the printed -1/g expansion with direct inversion of g."""
    printed = remark_expansion_series(alpha, t, 2)
    direct = mixed_coeff_grid(alpha, t, 2).c
    diffs = {f"c{j}{k}": float(printed.coeffs[j, k] - direct[j, k]) for j, k in [(0, 0), (1, 0), (1, 1)]}
    res = max(abs(v) for v in diffs.values())
    return CheckReport(
        "remark-expansion",
        res,
        tol,
        res <= tol,
        {"alpha": alpha, "t": t, "printed_c11": float(printed.coeffs[1, 1]), "direct_c11": float(direct[1, 1]), **diffs},
    )


def printed_corollary_c(j: int, t: float) -> float:
    """The c_j(t) list as printed for the alpha = 1/2 odd moments."""
    if j == 0:
        return 0.5
    if j == 1:
        return (1 + (1 - 2 * t) * math.exp(-t)) / 2
    if j == 2:
        return ((1 - 2 * t) * math.exp(-t) - 2 * t * math.exp(-2 * t)) / 2
    L = lambda n, x: laguerre(n, 1, x)  # noqa: E731
    first = sum(L(k - 1, 2 * k * t) * L(j - k - 1, 2 * (j - k + 1) * t) / (k * (j - k)) for k in range(1, j))
    second = sum(L(k - 1, 2 * k * t) * L(j - k - 2, 2 * (j - k) * t) / (k * (j - k - 1)) for k in range(1, j - 1))
    return -t * math.exp(-j * t) * first - t * math.exp(-(j - 1) * t) * second


def s11_half_direct(t: float) -> float:
    """s_{1,1}(t) at alpha = 1/2 from the general-alpha closed form."""
    a = 0.5
    return math.exp(-t / 2) * a * (a * (2 - a) + (1 - a) * (1 - a - a * t) * math.exp(-t))


def corollary_c_check(t: float = 1.0, tol: float = 1e-10) -> CheckReport:
    """Does the printed c_1(t), pushed through the binomial convolution, give s_{1,1}?"""
    printed = [printed_corollary_c(j, t) for j in range(2)]
    derived = half_c_coefficients(t, 4).coeffs
    s11_printed = math.exp(-t / 2) / 4 * (math.comb(2, 1) * printed[0] + printed[1])
    s11 = s11_half_direct(t)
    res = abs(s11_printed - s11)
    return CheckReport(
        "corollary-c1",
        res,
        tol,
        res <= tol,
        {
            "t": t,
            "printed_c1": printed[1],
            "derived_c1": float(derived[1]),
            "s11_from_printed": s11_printed,
            "s11_direct": s11,
        },
    )


def printed_stationary_even(alpha: float, D: int = DEFAULT_CAP) -> TruncatedSeries1:
    """The printed general-alpha M_inf(z) = (2a - 1 + sqrt(1 - 4a(1-a)z)) / sqrt(1 - z) - a."""
    root = s1_sqrt(TruncatedSeries1([1.0, -4 * alpha * (1 - alpha)], D))
    return (2 * alpha - 1 + root) / _sqrt_one_minus(D) - alpha


def stationary_formula_check(alpha: float, D: int = 6, tol: float = 1e-12) -> CheckReport:
    """M_inf(0) must vanish since M_inf has no constant term."""
    printed = printed_stationary_even(alpha, D)
    res = abs(float(printed[0]))
    return CheckReport(
        "stationary-formula",
        res,
        tol,
        res <= tol,
        {"alpha": alpha, "printed_M_inf_0": float(printed[0]), "printed_coeffs": printed.coeffs.tolist()},
    )
