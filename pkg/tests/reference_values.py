"""Closed expressions for low-order moments, used as test oracles."""

import math


def r1(alpha, t):
    return alpha**2 + alpha * (1 - alpha) * math.exp(-t)


def r2(alpha, t):
    a = alpha
    return (
        a * (1 - a) * ((1 - 3 * a + 3 * a * a) - 2 * a * (1 - a) * t) * math.exp(-2 * t)
        + 4 * a * a * (1 - a) ** 2 * math.exp(-t)
        + a**3 * (2 - a)
    )


def s01(alpha, t):
    return alpha * math.exp(-t / 2)


def s11(alpha, t):
    a = alpha
    return math.exp(-t / 2) * a * (a * (2 - a) + (1 - a) * (1 - a - a * t) * math.exp(-t))


def s21(alpha, t):
    a = alpha
    at = a * t
    inner = (
        a * a * (5 - 6 * a + 2 * a * a)
        + a * (1 - a) * ((1 - a) * (6 - 7 * a) - (4 - 3 * a) * at) * math.exp(-t)
        + (1 - a) * ((1 - a) * (5 * a * a - 4 * a + 1) - (4 - 9 * a + 6 * a * a) * at + 2.5 * (1 - a) * at * at) * math.exp(-2 * t)
    )
    return math.exp(-t / 2) * a * inner


def R11(alpha, t):
    return alpha**2 * math.exp(t) + alpha * (1 - alpha)
