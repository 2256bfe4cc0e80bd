"""Degree-capped formal power series in one and two variables.

Coefficients are float64; every operation truncates eagerly to the
smallest cap among its operands, so degrees never grow.
"""

from __future__ import annotations

import math
from typing import Union

import numpy as np

DEFAULT_CAP = 16
DEFAULT_CAP2 = 12

_ZERO_TOL = 1e-14

Scalar = Union[int, float]


class SeriesError(ValueError):
    pass


class ZeroConstantTerm(SeriesError):
    pass


class NonPositiveConstantTerm(SeriesError):
    pass


class NonZeroInnerConstant(SeriesError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class TruncatedSeries1:
    """Power series ``sum_i coeffs[i] z**i`` known up to degree ``cap``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, cap: int | None = None):
        c = np.asarray(coeffs, dtype=float).ravel()
        if cap is None:
            cap = len(c) - 1
        if cap < 0:
            raise ValueError("cap must be non-negative")
        out = np.zeros(cap + 1)
        m = min(len(c), cap + 1)
        out[:m] = c[:m]
        self.coeffs = _frozen(out)

    @property
    def cap(self) -> int:
        return len(self.coeffs) - 1

    # constructors

    @classmethod
    def constant(cls, value: float, cap: int = DEFAULT_CAP) -> "TruncatedSeries1":
        return cls([value], cap)

    @classmethod
    def variable(cls, cap: int = DEFAULT_CAP) -> "TruncatedSeries1":
        return cls([0.0, 1.0], cap)

    @classmethod
    def geometric(cls, cap: int = DEFAULT_CAP, ratio: float = 1.0) -> "TruncatedSeries1":
        """1/(1 - ratio*z)."""
        return cls(ratio ** np.arange(cap + 1), cap)

    @classmethod
    def exponential(cls, cap: int = DEFAULT_CAP) -> "TruncatedSeries1":
        return cls([1.0 / math.factorial(i) for i in range(cap + 1)], cap)

    # helpers

    def __getitem__(self, i):
        return self.coeffs[i]

    def __len__(self) -> int:
        return len(self.coeffs)

    def __repr__(self) -> str:
        return f"TruncatedSeries1({self.coeffs.tolist()!r}, cap={self.cap})"

    def truncate(self, cap: int) -> "TruncatedSeries1":
        return TruncatedSeries1(self.coeffs, cap)

    def _coerce(self, other) -> "TruncatedSeries1":
        if isinstance(other, TruncatedSeries1):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return TruncatedSeries1.constant(float(other), self.cap)
        return NotImplemented

    # ring operations

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        cap = min(self.cap, other.cap)
        return TruncatedSeries1(self.coeffs[: cap + 1] + other.coeffs[: cap + 1], cap)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries1(-self.coeffs, self.cap)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return TruncatedSeries1(self.coeffs * float(other), self.cap)
        if not isinstance(other, TruncatedSeries1):
            return NotImplemented
        return s1_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return TruncatedSeries1(self.coeffs / float(other), self.cap)
        if not isinstance(other, TruncatedSeries1):
            return NotImplemented
        return s1_div(self, other)

    def __rtruediv__(self, other):
        return s1_div(self._coerce(other), self)

    def __pow__(self, k: int):
        if k < 0:
            return s1_div(TruncatedSeries1.constant(1.0, self.cap), self ** (-k))
        result = TruncatedSeries1.constant(1.0, self.cap)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # calculus-ish

    def euler(self) -> "TruncatedSeries1":
        """z d/dz."""
        return TruncatedSeries1(self.coeffs * np.arange(self.cap + 1), self.cap)

    def shift_up(self) -> "TruncatedSeries1":
        """Multiply by z (the top coefficient falls off)."""
        c = np.zeros(self.cap + 1)
        c[1:] = self.coeffs[:-1]
        return TruncatedSeries1(c, self.cap)

    def shift_down(self) -> "TruncatedSeries1":
        """Divide by z, dropping the constant term; the result has cap - 1."""
        if self.cap == 0:
            raise ValueError("cannot divide a degree-0 series by z")
        return TruncatedSeries1(self.coeffs[1:], self.cap - 1)

    def __call__(self, x: float) -> float:
        return float(np.polynomial.polynomial.polyval(x, self.coeffs))

    def allclose(self, other: "TruncatedSeries1", atol: float = 1e-12) -> bool:
        return max_residual(self, other) <= atol


def max_residual(a, b) -> float:
    """Largest absolute coefficient difference on the common cap."""
    if isinstance(a, TruncatedSeries1):
        cap = min(a.cap, b.cap)
        return float(np.max(np.abs(a.coeffs[: cap + 1] - b.coeffs[: cap + 1])))
    j = min(a.cap_y, b.cap_y)
    k = min(a.cap_z, b.cap_z)
    return float(np.max(np.abs(a.coeffs[: j + 1, : k + 1] - b.coeffs[: j + 1, : k + 1])))


def s1_mul(a: TruncatedSeries1, b: TruncatedSeries1) -> TruncatedSeries1:
    cap = min(a.cap, b.cap)
    return TruncatedSeries1(np.convolve(a.coeffs[: cap + 1], b.coeffs[: cap + 1])[: cap + 1], cap)


def s1_div(a: TruncatedSeries1, b: TruncatedSeries1) -> TruncatedSeries1:
    cap = min(a.cap, b.cap)
    bc = b.coeffs
    if abs(bc[0]) < _ZERO_TOL:
        raise ZeroConstantTerm(f"divisor has constant term {bc[0]!r}")
    q = np.zeros(cap + 1)
    ac = a.coeffs
    for n in range(cap + 1):
        acc = ac[n] - np.dot(q[:n], bc[n:0:-1]) if n else ac[0]
        q[n] = acc / bc[0]
    return TruncatedSeries1(q, cap)


def s1_sqrt(a: TruncatedSeries1) -> TruncatedSeries1:
    """Principal square root, r_0 = sqrt(a_0)."""
    ac = a.coeffs
    if not ac[0] > 0:
        raise NonPositiveConstantTerm(f"constant term {ac[0]!r} is not positive")
    cap = a.cap
    r = np.zeros(cap + 1)
    r[0] = math.sqrt(ac[0])
    for n in range(1, cap + 1):
        cross = np.dot(r[1:n], r[n - 1 : 0 : -1])
        r[n] = (ac[n] - cross) / (2.0 * r[0])
    return TruncatedSeries1(r, cap)


def s1_compose(outer: TruncatedSeries1, inner: TruncatedSeries1) -> TruncatedSeries1:
    """outer(inner(z)) by Horner's scheme; inner must vanish at 0."""
    if abs(inner.coeffs[0]) > _ZERO_TOL:
        raise NonZeroInnerConstant(f"inner series has constant term {inner.coeffs[0]!r}")
    cap = min(outer.cap, inner.cap)
    inner = inner.truncate(cap)
    acc = TruncatedSeries1.constant(outer.coeffs[cap], cap)
    for c in outer.coeffs[cap - 1 :: -1] if cap else []:
        acc = acc * inner + float(c)
    return acc


def s1_exp(a: TruncatedSeries1) -> TruncatedSeries1:
    """exp(a) as exp(a_0) * (exponential series composed with a - a_0)."""
    a0 = float(a.coeffs[0])
    return math.exp(a0) * s1_compose(TruncatedSeries1.exponential(a.cap), a - a0)


class TruncatedSeries2:
    """Two-variable series ``sum coeffs[j, k] y**j z**k``, j <= cap_y, k <= cap_z."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, cap_y: int | None = None, cap_z: int | None = None):
        c = np.atleast_2d(np.asarray(coeffs, dtype=float))
        cap_y = c.shape[0] - 1 if cap_y is None else cap_y
        cap_z = c.shape[1] - 1 if cap_z is None else cap_z
        out = np.zeros((cap_y + 1, cap_z + 1))
        jm = min(c.shape[0], cap_y + 1)
        km = min(c.shape[1], cap_z + 1)
        out[:jm, :km] = c[:jm, :km]
        self.coeffs = _frozen(out)

    @property
    def cap_y(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def cap_z(self) -> int:
        return self.coeffs.shape[1] - 1

    @classmethod
    def constant(cls, value: float, cap_y: int = DEFAULT_CAP2, cap_z: int = DEFAULT_CAP2):
        return cls([[value]], cap_y, cap_z)

    @classmethod
    def from_poly(cls, terms: dict, cap_y: int = DEFAULT_CAP2, cap_z: int = DEFAULT_CAP2):
        """Build from ``{(j, k): coefficient}``; out-of-cap terms are dropped."""
        c = np.zeros((cap_y + 1, cap_z + 1))
        for (j, k), v in terms.items():
            if j <= cap_y and k <= cap_z:
                c[j, k] += v
        return cls(c)

    def __getitem__(self, idx):
        return self.coeffs[idx]

    def __repr__(self) -> str:
        return f"TruncatedSeries2(cap_y={self.cap_y}, cap_z={self.cap_z})"

    def _caps(self, other):
        return min(self.cap_y, other.cap_y), min(self.cap_z, other.cap_z)

    def _coerce(self, other):
        if isinstance(other, TruncatedSeries2):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return TruncatedSeries2.constant(float(other), self.cap_y, self.cap_z)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        j, k = self._caps(other)
        return TruncatedSeries2(self.coeffs[: j + 1, : k + 1] + other.coeffs[: j + 1, : k + 1])

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries2(-self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return TruncatedSeries2(self.coeffs * float(other))
        if not isinstance(other, TruncatedSeries2):
            return NotImplemented
        return s2_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return TruncatedSeries2(self.coeffs / float(other))
        if not isinstance(other, TruncatedSeries2):
            return NotImplemented
        return s2_mul(self, s2_recip(other))

    def __rtruediv__(self, other):
        return s2_mul(self._coerce(other), s2_recip(self))


def conv2_truncated(a: np.ndarray, b: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """2-D Cauchy product of coefficient grids, truncated to ``shape``."""
    J, K = shape
    out = np.zeros((J, K))
    for j1 in range(min(J, a.shape[0])):
        row = a[j1]
        if not row.any():
            continue
        for j2 in range(min(J - j1, b.shape[0])):
            out[j1 + j2] += np.convolve(row, b[j2])[:K]
    return out


def s2_mul(a: TruncatedSeries2, b: TruncatedSeries2) -> TruncatedSeries2:
    j, k = a._caps(b)
    return TruncatedSeries2(
        conv2_truncated(a.coeffs[: j + 1, : k + 1], b.coeffs[: j + 1, : k + 1], (j + 1, k + 1))
    )


def s2_recip(a: TruncatedSeries2) -> TruncatedSeries2:
    """1/a, lifted one y-order at a time over z-series coefficients."""
    c = a.coeffs
    if abs(c[0, 0]) < _ZERO_TOL:
        raise ZeroConstantTerm(f"constant term {c[0, 0]!r}")
    J, K = a.cap_y, a.cap_z
    rows = [TruncatedSeries1(c[j], K) for j in range(J + 1)]
    r0 = s1_div(TruncatedSeries1.constant(1.0, K), rows[0])
    out = [r0]
    for j in range(1, J + 1):
        acc = TruncatedSeries1.constant(0.0, K)
        for i in range(1, j + 1):
            acc = acc + rows[i] * out[j - i]
        out.append(-(r0 * acc))
    return TruncatedSeries2(np.array([s.coeffs for s in out]))


def s2_exp_linear(t: float, alpha: float, cap_y: int = DEFAULT_CAP2, cap_z: int = DEFAULT_CAP2):
    """exp(t*(1 + alpha*y + alpha*z)), coefficient e^t (t alpha)^(j+k) / (j! k!)."""
    ta = t * alpha
    fy = np.array([ta**j / math.factorial(j) for j in range(cap_y + 1)])
    fz = np.array([ta**k / math.factorial(k) for k in range(cap_z + 1)])
    return TruncatedSeries2(math.exp(t) * np.outer(fy, fz))
