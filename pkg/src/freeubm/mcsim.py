"""Random-matrix Monte Carlo for words in the compression of unitary Brownian motion.

A path of Brownian motion on U(N) is built as a product of exact unitaries
exp(i H_k) with independent GUE increments H_k of entry variance h/N, so that
E tr_N H_k^2 = h. The projection is the deterministic diagonal
P = diag(1, ..., 1, 0, ..., 0) of rank floor(alpha N).

Word letters: ``A`` stands for P Y and ``A*`` for P Y^*, so that the word
``AA*`` has trace tr_N(P Y P Y^*).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .noncrossing import parse_letters

UNITARITY_TOL = 1e-8
_RENORM_EVERY = 500


class NonUnitaryDrift(ArithmeticError):
    pass


@dataclass(frozen=True)
class SimConfig:
    dim: int
    t: float
    steps: int = 20
    samples: int = 200
    seed: int = 0
    alpha: float = 0.5

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.steps < 1 or self.samples < 1:
            raise ValueError("steps and samples must be >= 1")
        if self.t < 0:
            raise ValueError("t must be non-negative")
        if self.rank < 1:
            raise ValueError(f"rank floor(alpha*dim) = {self.rank} must be >= 1")

    @property
    def rank(self) -> int:
        return int(math.floor(self.alpha * self.dim))


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    stderr: float
    samples: int
    word: str

    def bracket(self, k: float = 3.0, slack: float = 0.0) -> tuple[float, float]:
        w = k * self.stderr + slack
        return self.mean - w, self.mean + w

    def covers(self, value: float, k: float = 3.0, slack: float = 0.0) -> bool:
        return abs(self.mean - value) <= k * self.stderr + slack


def sample_gue(dim: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Hermitian matrix, E|H_ij|^2 = variance off the diagonal, Var(H_ii) = variance."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    sd = math.sqrt(variance / 2)
    G = rng.normal(scale=sd, size=(dim, dim)) + 1j * rng.normal(scale=sd, size=(dim, dim))
    # (G + G^*)/sqrt(2) keeps E|H_ij|^2 = variance and makes the diagonal real with variance `variance`
    return (G + G.conj().T) / math.sqrt(2)


def _expi(H: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(H)
    return (v * np.exp(1j * w)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def unitarity_error(Y: np.ndarray) -> float:
    eye = np.eye(Y.shape[-1])
    return float(np.max(np.abs(np.swapaxes(Y.conj(), -1, -2) @ Y - eye)))


def _polar(Y: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(Y)
    return u @ vh


def unitary_bm_batch(cfg: SimConfig, rngs: Sequence[np.random.Generator]) -> np.ndarray:
    """Independent paths, one per generator, stacked along axis 0.

    Generator i is consumed exactly as by ``unitary_bm_path(cfg, rngs[i])``.
    """
    N = cfg.dim
    Y = np.broadcast_to(np.eye(N, dtype=complex), (len(rngs), N, N)).copy()
    if cfg.t == 0:
        return Y
    var = cfg.t / cfg.steps / N
    for k in range(cfg.steps):
        H = np.stack([sample_gue(N, var, rng) for rng in rngs])
        Y = Y @ _expi(H)
        if (k + 1) % _RENORM_EVERY == 0 and unitarity_error(Y) > UNITARITY_TOL:
            Y = _polar(Y)
    if unitarity_error(Y) > UNITARITY_TOL:
        Y = _polar(Y)
        if unitarity_error(Y) > UNITARITY_TOL:
            raise NonUnitaryDrift("path left the unitary group")
    return Y


def unitary_bm_path(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """Y_t as an ordered product of exp(i H_k), H_k GUE with entry variance (t/steps)/dim."""
    return unitary_bm_batch(cfg, [rng])[0]


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary from the QR decomposition of a complex Ginibre matrix."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def word_label(word) -> str:
    return "".join("A" if e > 0 else "A*" for e in parse_letters(word))


def word_trace(Y: np.ndarray, rank: int, word) -> complex:
    """tr_N of the product over the word with A = P Y, A* = P Y^*.

    Cyclicity and P^2 = P reduce this to a product of rank x rank corner blocks.
    """
    letters = parse_letters(word)
    if not letters:
        raise ValueError("word must be nonempty")
    B = Y[:rank, :rank]
    Bs = Y.conj().T[:rank, :rank]
    prod = np.eye(rank, dtype=complex)
    for e in letters:
        prod = prod @ (B if e > 0 else Bs)
    return complex(np.trace(prod)) / Y.shape[0]


def _streams(seed: int, samples: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(samples)]


def _summarize(values: np.ndarray, word: str) -> SimEstimate:
    n = len(values)
    mean = math.fsum(values) / n
    if n > 1:
        var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        stderr = float("inf")
    return SimEstimate(mean, stderr, n, word)


def _batch_size(dim: int) -> int:
    return max(1, 2048 // (dim * dim) * 16)


def _run(cfg: SimConfig, words, sampler, workers: int) -> list[SimEstimate]:
    parsed = [parse_letters(w) for w in words]

    def chunk(rngs):
        Ys = sampler(rngs)
        return [[word_trace(Y, cfg.rank, w).real for w in parsed] for Y in Ys]

    rngs = _streams(cfg.seed, cfg.samples)
    size = _batch_size(cfg.dim)
    chunks = [rngs[i : i + size] for i in range(0, len(rngs), size)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(chunk, chunks))
    else:
        parts = [chunk(c) for c in chunks]
    data = np.array([row for part in parts for row in part])
    return [_summarize(data[:, i], word_label(w)) for i, w in enumerate(parsed)]


def estimate_word_moments(cfg: SimConfig, words: Sequence, workers: int = 1) -> list[SimEstimate]:
    """Estimates for several words evaluated on the same sample paths.

    Each sample draws from its own pre-split RNG stream, so results do not
    depend on ``workers``.
    """
    return _run(cfg, words, lambda rngs: unitary_bm_batch(cfg, rngs), workers)


def estimate_word_moment(cfg: SimConfig, word, workers: int = 1) -> SimEstimate:
    return estimate_word_moments(cfg, [word], workers)[0]


def estimate_haar_word_moments(cfg: SimConfig, words: Sequence, workers: int = 1) -> list[SimEstimate]:
    """As ``estimate_word_moments`` with Y replaced by a Haar unitary (cfg.t, cfg.steps unused)."""
    return _run(cfg, words, lambda rngs: [haar_unitary(cfg.dim, r) for r in rngs], workers)
