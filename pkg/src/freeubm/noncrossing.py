"""Non-crossing partitions, Kreweras complements and the moment/cumulant
sums over NC(n) that express moments of P Y_t and its adjoint words.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .specfun import (
    cumulant_Y,
    fubm_moment,
    laguerre,
    projection_cumulant_half,
    projection_cumulants,
    q_poly,
    v_poly,
)

MAX_GROUND_SET = 14
_CACHE_LIMIT = 10


class GroundSetTooLarge(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class RangeError(ValueError):
    pass


@dataclass(frozen=True)
class NCPartition:
    """A non-crossing partition of {1..n}, blocks sorted by their minimum."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0]))
        object.__setattr__(self, "blocks", blocks)
        seen = sorted(x for b in blocks for x in b)
        if seen != list(range(1, self.n + 1)):
            raise ValueError(f"blocks do not partition 1..{self.n}: {blocks}")
        if not is_noncrossing(self.n, blocks):
            raise ValueError(f"partition is crossing: {blocks}")

    @classmethod
    def from_blocks(cls, *blocks: Sequence[int]) -> "NCPartition":
        return cls(sum(len(b) for b in blocks), tuple(tuple(b) for b in blocks))

    def __len__(self) -> int:
        return len(self.blocks)

    def block_sizes(self) -> list[int]:
        return [len(b) for b in self.blocks]

    def as_permutation(self) -> list[int]:
        """Each block as an increasing cycle; entry i-1 holds the image of i."""
        perm = [0] * self.n
        for b in self.blocks:
            for a, c in zip(b, b[1:] + b[:1]):
                perm[a - 1] = c
        return perm

    def __str__(self) -> str:
        return "".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)


def is_noncrossing(n: int, blocks) -> bool:
    """Stack scan: a block may only be re-entered when it is on top."""
    owner = {}
    last = {}
    for idx, b in enumerate(blocks):
        for x in b:
            owner[x] = idx
        last[idx] = max(b)
    stack: list[int] = []
    opened: set[int] = set()
    for x in range(1, n + 1):
        b = owner[x]
        if b in opened:
            if not stack or stack[-1] != b:
                return False
        else:
            opened.add(b)
            stack.append(b)
        if last[b] == x:
            stack.pop()
    return True


def _nc_raw(L: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Non-crossing partitions of {0..L-1} by placement of the first block."""
    if L == 0:
        yield ()
        return
    if L <= _CACHE_LIMIT:
        yield from _nc_cached(L)
        return
    yield from _nc_build(L)


@lru_cache(maxsize=None)
def _nc_cached(L: int) -> tuple:
    return tuple(_nc_build(L))


def _nc_build(L: int):
    rest = range(1, L)
    for size in range(L):
        for others in itertools.combinations(rest, size):
            first = (0,) + others
            bounds = first + (L,)
            gaps = [(bounds[i] + 1, bounds[i + 1] - bounds[i] - 1) for i in range(len(first))]
            subs = [
                [tuple(tuple(x + start for x in blk) for blk in p) for p in _nc_raw(length)]
                for start, length in gaps
            ]
            for combo in itertools.product(*subs):
                yield (first,) + tuple(blk for part in combo for blk in part)


def enumerate_nc(n: int) -> Iterator[NCPartition]:
    if n < 1:
        raise RangeError("n must be >= 1")
    if n > MAX_GROUND_SET:
        raise GroundSetTooLarge(f"n={n} exceeds the enumeration cap {MAX_GROUND_SET}")
    for raw in _nc_raw(n):
        yield NCPartition(n, tuple(tuple(x + 1 for x in b) for b in raw))


def _block_lists(n: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Raw 1-based blocks without validation; used in hot loops."""
    if n > MAX_GROUND_SET:
        raise GroundSetTooLarge(f"n={n} exceeds the enumeration cap {MAX_GROUND_SET}")
    for raw in _nc_raw(n):
        yield tuple(tuple(x + 1 for x in b) for b in raw)


def _cycles(perm: list[int]) -> tuple[tuple[int, ...], ...]:
    seen = [False] * len(perm)
    out = []
    for start in range(1, len(perm) + 1):
        if seen[start - 1]:
            continue
        cyc = []
        x = start
        while not seen[x - 1]:
            seen[x - 1] = True
            cyc.append(x)
            x = perm[x - 1]
        out.append(tuple(cyc))
    return tuple(out)


def _kreweras_blocks(n: int, blocks) -> tuple[tuple[int, ...], ...]:
    # K(pi) = pi^{-1} o gamma with gamma = (1 2 ... n)
    inv = [0] * n
    for b in blocks:
        for a, c in zip(b, b[1:] + b[:1]):
            inv[c - 1] = a
    perm = [inv[i % n] for i in range(1, n + 1)]
    return _cycles(perm)


def kreweras(pi: NCPartition) -> NCPartition:
    return NCPartition(pi.n, _kreweras_blocks(pi.n, pi.blocks))


def rotate(pi: NCPartition, shift: int = 1) -> NCPartition:
    """Relabel i -> i + shift (mod n)."""
    n = pi.n
    return NCPartition(n, tuple(tuple((x - 1 + shift) % n + 1 for x in b) for b in pi.blocks))


def parse_letters(word) -> tuple[int, ...]:
    """Exponents (+1 for Y, -1 for Y*) from a string like "YY*Y" or a sequence."""
    if isinstance(word, str):
        out = []
        i = 0
        s = word.replace(" ", "")
        while i < len(s):
            if s[i] not in "YA":
                raise ValueError(f"unexpected letter {s[i]!r} in {word!r}")
            if s[i + 1 : i + 2] == "*":
                out.append(-1)
                i += 2
            else:
                out.append(1)
                i += 1
        return tuple(out)
    out = []
    for letter in word:
        if letter in (1, "Y", "A"):
            out.append(1)
        elif letter in (-1, "Ystar", "Y*", "Astar", "A*"):
            out.append(-1)
        else:
            raise ValueError(f"unexpected letter {letter!r}")
    return tuple(out)


def alternating_word(length: int) -> tuple[int, ...]:
    """Y, Y*, Y, Y*, ... of the given length."""
    return tuple(1 if i % 2 == 0 else -1 for i in range(length))


def trace_functional(kappa: NCPartition, word, t: float) -> float:
    """prod over blocks of tau(Y_t^{net exponent of the block's letters})."""
    letters = parse_letters(word)
    if len(letters) != kappa.n:
        raise LengthMismatch(f"word has {len(letters)} letters, partition has n={kappa.n}")
    return _trace_blocks(kappa.blocks, letters, t)


def _trace_blocks(blocks, letters, t) -> float:
    prod = 1.0
    for b in blocks:
        prod *= fubm_moment(sum(letters[i - 1] for i in b), t)
    return prod


def binom_weight_rhs(n: int, r: int) -> float:
    return n ** (r - 1) / math.factorial(r) * math.comb(n, r + 1)


def weight_sum(n: int, r: int) -> float:
    """sum over pi in NC(n) with n - r blocks of prod |V|^{|V|-1} / |V|!."""
    if not (1 <= n <= MAX_GROUND_SET and 0 <= r <= n - 1):
        raise RangeError(f"need 1 <= n <= {MAX_GROUND_SET} and 0 <= r <= n-1, got n={n}, r={r}")
    terms = []
    for blocks in _block_lists(n):
        if len(blocks) != n - r:
            continue
        w = 1.0
        for b in blocks:
            s = len(b)
            w *= s ** (s - 1) / math.factorial(s)
        terms.append(w)
    return math.fsum(terms)


def moment_PY_cumulant(n: int, alpha: float, t: float) -> float:
    """tau[(P Y_t)^n] as sum over NC(n) of k_pi(Y_t) alpha^{|K(pi)|}."""
    if n == 0:
        return alpha
    kY = [0.0] + [cumulant_Y(s, t) for s in range(1, n + 1)]
    terms = []
    for blocks in _block_lists(n):
        w = alpha ** (n + 1 - len(blocks))
        for b in blocks:
            w *= kY[len(b)]
        terms.append(w)
    return math.fsum(terms)


def word_moment_cumulant(word, alpha: float, t: float) -> float:
    """tau(P Y^{e_1} P Y^{e_2} ... P Y^{e_L}) by the free moment formula.

    Sums k_pi[P, ..., P] tau_{K(pi)}[Y^{e_1}, ..., Y^{e_L}] over NC(L); the
    projection cumulants come from the moment-cumulant inversion. ``t = inf``
    replaces Y_t by a Haar unitary.
    """
    letters = parse_letters(word)
    L = len(letters)
    if L == 0:
        return 1.0
    kP = projection_cumulants(float(alpha), L)
    terms = []
    for blocks in _block_lists(L):
        w = 1.0
        for b in blocks:
            w *= kP[len(b)]
        if w == 0.0:
            continue
        terms.append(w * _trace_blocks(_kreweras_blocks(L, blocks), letters, t))
    return math.fsum(terms)


def composition_sum(r: int, total: int, t: float) -> float:
    """sum over i_1 + ... + i_r = total (i_k >= 0) of Q_{i_1}(t) ... Q_{i_r}(t)."""
    q = [q_poly(i, t) for i in range(total + 1)]
    # r-fold convolution power of the sequence q, read at index ``total``
    acc = [1.0] + [0.0] * total
    for _ in range(r):
        acc = [math.fsum(acc[i] * q[k - i] for i in range(k + 1)) for k in range(total + 1)]
    return acc[total]


def composition_sum_laguerre(r: int, total: int, t: float) -> float:
    """Laguerre form of ``composition_sum``; ``total`` plays the role of m + 1 - r."""
    if total == 0:
        return 1.0
    s = math.fsum(
        j * math.comb(r, j) * laguerre(total - j, j, total * t) for j in range(1, min(r, total) + 1)
    )
    return s / total


def mixed_R_m1_comb(m: int, alpha: float, t: float, check: bool = True) -> float:
    """R_{m,1}(t) from the one-star cumulants and compositions of Q's.

    R_{m,1} = e^t sum_{r=1}^{m+1} (-alpha)^r (v_{r-1} - e^{-t} v_r) S_r, where
    S_r is the composition sum over i_1 + ... + i_r = m + 1 - r.
    """
    if m < 1:
        raise RangeError("m must be >= 1")
    at = alpha * t
    terms = []
    for r in range(1, m + 2):
        total = m + 1 - r
        inner = composition_sum(r, total, at)
        if check:
            alt = composition_sum_laguerre(r, total, at)
            if abs(inner - alt) > 1e-10 * max(1.0, abs(inner)):
                raise ArithmeticError(f"inner sums disagree at r={r}: {inner} vs {alt}")
        terms.append((-alpha) ** r * (v_poly(r - 1, t) - math.exp(-t) * v_poly(r, t)) * inner)
    return math.exp(t) * math.fsum(terms)


def odd_moment_half_cumulant(n: int, t: float) -> float:
    """s_{n,1}(t) at alpha = 1/2 from odd singletons plus even partitions.

    Only partitions whose non-singleton blocks all have even size contribute
    since the odd projection cumulants beyond the first vanish.
    """
    L = 2 * n + 1
    letters = alternating_word(L)
    terms = []
    for blocks in _block_lists(L):
        sizes = [len(b) for b in blocks]
        if any(s > 1 and s % 2 for s in sizes):
            continue
        w = 1.0
        for s in sizes:
            w *= projection_cumulant_half(s)
        terms.append(w * _trace_blocks(_kreweras_blocks(L, blocks), letters, t))
    return math.fsum(terms)
