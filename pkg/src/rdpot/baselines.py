"""Closed-form benchmarks: binary/Hamming and Gaussian/quadratic sources.

These are the two settings with known analytic rate-distortion-perception
expressions (TV perception for the binary source, Wasserstein-2 for the
Gaussian one), plus their critical-transition curve f and upper bound h.
Every solver in this package is validated against these formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, xlogy

from .errors import DomainError
from .probability import Distribution, SupportGrid


def _h_binary(a: float) -> float:
    """Entropy of (a, 1-a) in nats."""
    if a < -1e-12 or a > 1.0 + 1e-12:
        raise DomainError(f"binary entropy argument {a} outside [0, 1]")
    a = min(max(a, 0.0), 1.0)
    return float(-(xlogy(a, a) + xlogy(1.0 - a, 1.0 - a)))


def _h_ternary(a: float, b: float) -> float:
    """Entropy of (a, b, 1-a-b) in nats."""
    c = 1.0 - a - b
    if min(a, b, c) < -1e-12:
        raise DomainError(f"ternary entropy arguments ({a}, {b}) leave the simplex")
    a, b, c = (min(max(x, 0.0), 1.0) for x in (a, b, c))
    return float(-(xlogy(a, a) + xlogy(b, b) + xlogy(c, c)))


def binary_rdp_closed_form(p: float, D: float, P: float) -> float:
    """R(D, P) for a Bernoulli(p) source, Hamming distortion, TV perception.

    For P > p the perception constraint never binds and the pure
    rate-distortion form H_b(p) - H_b(D) applies; for P <= p the plane
    splits into three D-intervals S1 (perception slack), S2 (both
    constraints active), and S3 (zero rate).
    """
    if not (0.0 < p <= 0.5):
        raise DomainError("source bias p must lie in (0, 1/2]")
    if D < 0 or P < 0:
        raise DomainError("budgets must be non-negative")
    q = 1.0 - p
    if P > p:
        return _h_binary(p) - _h_binary(D) if D < p else 0.0
    s1_end = P / (1.0 - 2.0 * (p - P))
    s2_end = 2.0 * p * q - (q - p) * P
    if D < s1_end:
        return _h_binary(p) - _h_binary(D)
    if D < s2_end:
        return (2.0 * _h_binary(p) + _h_binary(p - P)
                - _h_ternary((D - P) / 2.0, p)
                - _h_ternary((D + P) / 2.0, q))
    return 0.0


def binary_transition_f(p: float, D: float) -> float:
    """Critical transition curve f(D) = D(1-2p)/(1-2D) on [0, p]."""
    if not (0.0 < p <= 0.5):
        raise DomainError("source bias p must lie in (0, 1/2]")
    if not (0.0 <= D <= p):
        raise DomainError(f"D={D} outside the transition domain [0, {p}]")
    return D * (1.0 - 2.0 * p) / (1.0 - 2.0 * D)


def binary_upper_h(p: float, P: float) -> float:
    """Zero-rate distortion bound h(P) = 2p(1-p) - (1-2p)P, clamped at p."""
    if not (0.0 < p <= 0.5):
        raise DomainError("source bias p must lie in (0, 1/2]")
    if P < 0:
        raise DomainError("P must be non-negative")
    if P >= p:
        return p
    return 2.0 * p * (1.0 - p) - (1.0 - 2.0 * p) * P


def gaussian_rdp_closed_form(sigma: float, D: float, P: float) -> float:
    """R(D, P) for N(mu, sigma^2), squared error distortion, W2 perception."""
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if D < 0 or P < 0:
        raise DomainError("budgets must be non-negative")
    s2 = sigma * sigma
    if np.sqrt(P) <= sigma - np.sqrt(abs(s2 - D)):
        u = (sigma - np.sqrt(P)) ** 2
        a = s2 * u
        b = a - ((s2 + u - D) / 2.0) ** 2
        if b <= 0:
            # u -> 0 happens only at the corner D = sigma^2, sqrt(P) = sigma,
            # where both branches agree on max(log(s2/D)/2, 0).
            if u < 1e-12:
                return float(max(0.5 * np.log(s2 / D), 0.0))
            raise DomainError("log argument non-positive in the active-perception branch")
        return float(0.5 * np.log(a / b))
    if D <= 0:
        raise DomainError("D must be positive for the rate-distortion branch")
    return float(max(0.5 * np.log(s2 / D), 0.0))


def gaussian_transition_f(sigma: float, D: float) -> float:
    """Critical transition curve f(D) = (sigma - sqrt|sigma^2 - D|)^2."""
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if not (0.0 <= D <= sigma * sigma):
        raise DomainError(f"D={D} outside the transition domain [0, {sigma * sigma}]")
    return float((sigma - np.sqrt(abs(sigma * sigma - D))) ** 2)


def gaussian_upper_h(sigma: float, P: float) -> float:
    """Zero-rate distortion bound h(P) = sigma^2 + (sigma - sqrt P)^2."""
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if P < 0:
        raise DomainError("P must be non-negative")
    s2 = sigma * sigma
    if P >= s2:
        return float(s2)
    return float(s2 + (sigma - np.sqrt(P)) ** 2)


@dataclass(frozen=True)
class GaussianSpec:
    """Truncated, discretized Gaussian source on a uniform grid."""

    mu: float = 0.0
    sigma: float = 2.0
    S: float = 8.0
    delta: float = 0.5

    def __post_init__(self):
        if self.sigma <= 0 or self.S <= 0 or self.delta <= 0:
            raise DomainError("sigma, S, and delta must be positive")
        if self.delta >= self.S:
            raise DomainError("grid spacing must be finer than the truncation width")
        n = 2.0 * self.S / self.delta + 1.0
        if abs(n - round(n)) > 1e-9:
            raise DomainError("2S/delta must be an integer grid count")

    @property
    def count(self) -> int:
        return int(round(2.0 * self.S / self.delta)) + 1

    def grid(self) -> SupportGrid:
        return SupportGrid(-self.S + self.delta * np.arange(self.count))


def _normal_cdf(x, mu, sigma):
    return 0.5 * erfc(-(x - mu) / (sigma * np.sqrt(2.0)))


def discretize_gaussian(spec: GaussianSpec) -> Distribution:
    """Cell probabilities p_i = F(x_i + delta/2) - F(x_i - delta/2).

    The truncated tail mass is folded back by global renormalization, so
    the result sums to 1 exactly.
    """
    grid = spec.grid()
    x = grid.points
    probs = (_normal_cdf(x + spec.delta / 2.0, spec.mu, spec.sigma)
             - _normal_cdf(x - spec.delta / 2.0, spec.mu, spec.sigma))
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    # Nudge the largest cell so the simplex invariant holds bit-exactly.
    probs[np.argmax(probs)] += 1.0 - probs.sum()
    return Distribution(probs, grid)
