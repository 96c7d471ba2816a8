"""Safeguarded scalar root finding for the alternating solvers.

Each dual update needs the root of a strictly monotone scalar function:
exponential-sum budget functions on [0, inf) for the distortion and
perception multipliers, and a pole-sum normalization function on
(max pole, inf) for the barycenter multiplier.  Newton is fast near the
fixed point; every solve is wrapped in a bracketing bisection fallback so
a wild step can never escape.
"""

from __future__ import annotations

import numpy as np

# exp() argument cap; keeps budget evaluations finite far from the root.
LOG_CLIP = 700.0

_BRACKET_GROWTH = 4.0
_BRACKET_CAP = 1e18
_BISECT_STEPS = 200


def exp_clip(x):
    """exp with the argument capped at LOG_CLIP (overflow-safe)."""
    return np.exp(np.minimum(x, LOG_CLIP))


def newton_bisect(f, df, lo, hi, x0, tol, max_newton):
    """Root of a decreasing f with f(lo) >= 0 >= f(hi).

    Newton from x0, falling back to bisection whenever a step leaves the
    current bracket or max_newton steps pass without meeting tol.
    """
    a, b = lo, hi
    x = min(max(x0, a), b)
    for _ in range(max_newton):
        fx = f(x)
        if abs(fx) <= tol:
            return x
        if fx > 0:
            a = x
        else:
            b = x
        dfx = df(x)
        if np.isfinite(dfx) and dfx != 0.0:
            xn = x - fx / dfx
        else:
            xn = 0.5 * (a + b)
        if not (a < xn < b):
            xn = 0.5 * (a + b)
        x = xn
    # Newton stalled; pure bisection from the bracket it left behind.
    for _ in range(_BISECT_STEPS):
        x = 0.5 * (a + b)
        fx = f(x)
        if abs(fx) <= tol or (b - a) <= 1e-16 * max(1.0, abs(x)):
            return x
        if fx > 0:
            a = x
        else:
            b = x
    return 0.5 * (a + b)


def decreasing_root(f, df, x0, tol, max_newton, lo=0.0):
    """Smallest non-negative root of a decreasing f on [lo, inf).

    Returns lo when f(lo) <= 0 (the multiplier rests on its boundary, the
    constraint being slack).  Otherwise grows a bracket geometrically and
    hands off to the safeguarded Newton.
    """
    flo = f(lo)
    if flo <= 0.0:
        return lo
    hi = max(x0, lo + 1.0)
    while f(hi) > 0.0:
        hi = lo + (hi - lo) * _BRACKET_GROWTH
        if hi - lo > _BRACKET_CAP:
            return hi
    return newton_bisect(f, df, lo, hi, x0, tol, max_newton)


def budget_root(cost, log_weight, scale, budget, x0, tol, max_newton):
    """Root of f(t) = sum_ij cost_ij exp(log_weight_ij - t cost_ij / scale) - budget.

    This is the shared shape of the distortion function F(lambda)
    (scale = 1) and the perception function G(gamma) (scale = epsilon);
    both are strictly decreasing in t, so the root is unique when it
    exists, and t = 0 is returned when the budget already holds there.
    """
    cs = cost / scale

    def f(t):
        return float((cost * exp_clip(log_weight - t * cs)).sum() - budget)

    def df(t):
        return float(-(cost * cs * exp_clip(log_weight - t * cs)).sum())

    return decreasing_root(f, df, x0, tol, max_newton)


def pole_sum_root(masses, poles, tol, max_newton):
    """Root of H(eta) = sum_j masses_j / (eta - poles_j) - 1 above all poles.

    Only columns with positive mass constrain the root; H decreases from
    +inf at the largest active pole to -1 at infinity, so the root is
    unique and bracketed by [max(b_min + T, b_max+), b_max + T] where T is
    the total mass.
    """
    active = masses > 0
    u = masses[active]
    b = poles[active]
    if u.size == 0:
        raise ValueError("pole_sum_root needs positive total mass")
    total = float(u.sum())
    bmax = float(b.max())
    bmin = float(b.min())
    hi = bmax + total
    lo = max(bmin + total, np.nextafter(bmax, np.inf))
    if not (lo < hi):
        return hi

    def f(eta):
        return float((u / (eta - b)).sum() - 1.0)

    def df(eta):
        return float(-(u / (eta - b) ** 2).sum())

    return newton_bisect(f, df, lo, hi, 0.5 * (lo + hi), tol, max_newton)
