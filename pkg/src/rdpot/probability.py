"""Finite-alphabet probability primitives.

Distributions, channels, couplings, cost matrices, and the information
quantities (entropy, KL, mutual information, expected distortion, total
variation) that every solver in this package is built from.

Conventions: all logarithms are natural, so every rate is in nats;
0*log(0) and 0*log(0/0) are taken to be 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .errors import (
    AbsoluteContinuityViolation,
    DimensionMismatch,
    InvalidDistribution,
    ShrinkNotAllowed,
)

# Marginals produced inside iterative solvers are clamped here before logs.
PROB_FLOOR = 1e-300

_SIMPLEX_TOL = 1e-12
_ROW_SUM_TOL = 1e-10
_MARGINAL_TOL = 1e-8


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SupportGrid:
    """Ordered real support points x_1 < x_2 < ... < x_M."""

    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _readonly(self.points))
        pts = self.points
        if pts.ndim != 1 or pts.size == 0:
            raise InvalidDistribution("support grid must be a non-empty 1-D array")
        if not np.all(np.isfinite(pts)):
            raise InvalidDistribution("support grid must be finite")
        if pts.size > 1 and not np.all(np.diff(pts) > 0):
            raise InvalidDistribution("support grid must be strictly increasing")

    def __len__(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class Distribution:
    """Probability vector on a finite support grid."""

    probs: np.ndarray
    support: SupportGrid

    def __post_init__(self):
        object.__setattr__(self, "probs", _readonly(self.probs))
        p = self.probs
        if p.ndim != 1 or p.size != len(self.support):
            raise DimensionMismatch("probs and support sizes differ")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise InvalidDistribution("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > _SIMPLEX_TOL:
            raise InvalidDistribution(f"probabilities sum to {p.sum()!r}, not 1")

    def __len__(self) -> int:
        return self.probs.size

    @staticmethod
    def from_probs(probs, support=None) -> "Distribution":
        """Build a distribution, defaulting the support to 0..M-1."""
        p = np.asarray(probs, dtype=float)
        if support is None:
            support = SupportGrid(np.arange(p.size, dtype=float))
        elif not isinstance(support, SupportGrid):
            support = SupportGrid(support)
        return Distribution(p, support)


@dataclass(frozen=True)
class CostMatrix:
    """M x N matrix of non-negative distortion or transport costs."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _readonly(self.entries))
        e = self.entries
        if e.ndim != 2:
            raise DimensionMismatch("cost matrix must be 2-D")
        if np.any(e < 0) or not np.all(np.isfinite(e)):
            raise InvalidDistribution("cost entries must be finite and non-negative")

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True)
class Channel:
    """Row-stochastic conditional matrix w[i, j] = W(x_hat_j | x_i)."""

    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _readonly(self.w))
        w = self.w
        if w.ndim != 2:
            raise DimensionMismatch("channel matrix must be 2-D")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidDistribution("channel entries must be finite and non-negative")
        if np.any(np.abs(w.sum(axis=1) - 1.0) > _ROW_SUM_TOL):
            raise InvalidDistribution("channel rows must sum to 1")

    @property
    def shape(self):
        return self.w.shape


@dataclass(frozen=True)
class Coupling:
    """Joint matrix with prescribed left/right marginals."""

    pi: np.ndarray
    left: np.ndarray = field(default=None)
    right: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "pi", _readonly(self.pi))
        pi = self.pi
        if pi.ndim != 2:
            raise DimensionMismatch("coupling must be 2-D")
        if np.any(pi < -1e-15) or not np.all(np.isfinite(pi)):
            raise InvalidDistribution("coupling entries must be finite and non-negative")
        left = pi.sum(axis=1) if self.left is None else np.asarray(self.left, dtype=float)
        right = pi.sum(axis=0) if self.right is None else np.asarray(self.right, dtype=float)
        object.__setattr__(self, "left", _readonly(left))
        object.__setattr__(self, "right", _readonly(right))
        if np.max(np.abs(pi.sum(axis=1) - self.left)) > _MARGINAL_TOL:
            raise InvalidDistribution("coupling row sums deviate from stated left marginal")
        if np.max(np.abs(pi.sum(axis=0) - self.right)) > _MARGINAL_TOL:
            raise InvalidDistribution("coupling column sums deviate from stated right marginal")

    @property
    def shape(self):
        return self.pi.shape


def entropy(dist: Distribution) -> float:
    """Shannon entropy -sum p ln p in nats."""
    p = dist.probs
    return float(-xlogy(p, p).sum())


def kl_divergence(p: Distribution, q: Distribution) -> float:
    """KL(p || q) in nats; raises when p charges a zero of q."""
    if len(p) != len(q):
        raise DimensionMismatch("distributions differ in size")
    pv, qv = p.probs, q.probs
    bad = (pv > 0) & (qv == 0)
    if np.any(bad):
        raise AbsoluteContinuityViolation(
            f"p has mass {pv[bad].sum():g} where q vanishes"
        )
    pos = pv > 0
    return float(np.sum(pv[pos] * (np.log(pv[pos]) - np.log(qv[pos]))))


def marginal(ch: Channel, p: Distribution, support: SupportGrid | None = None) -> Distribution:
    """Output distribution r_j = sum_i w_ij p_i."""
    if ch.shape[0] != len(p):
        raise DimensionMismatch("channel rows must match source size")
    r = p.probs @ ch.w
    r = np.clip(r, 0.0, None)
    r = r / r.sum()
    if support is None:
        support = SupportGrid(np.arange(ch.shape[1], dtype=float))
    return Distribution(r, support)


def mutual_information(ch: Channel, p: Distribution) -> float:
    """I(X; X_hat) = sum_ij w_ij p_i (ln w_ij - ln r_j), in nats."""
    if ch.shape[0] != len(p):
        raise DimensionMismatch("channel rows must match source size")
    joint = p.probs[:, None] * ch.w
    r = joint.sum(axis=0)
    term_r = xlogy(joint, np.broadcast_to(r, joint.shape))
    return float((xlogy(joint, ch.w) - term_r).sum())


def expected_distortion(ch: Channel, p: Distribution, d: CostMatrix) -> float:
    """E[Delta] = sum_ij w_ij p_i d_ij."""
    if ch.shape != d.shape or ch.shape[0] != len(p):
        raise DimensionMismatch("channel, source, and cost sizes differ")
    return float((p.probs[:, None] * ch.w * d.entries).sum())


def tv_distance(p: Distribution, q: Distribution) -> float:
    """Total variation distance (1/2) sum |p_i - q_i|."""
    if len(p) != len(q):
        raise DimensionMismatch("distributions differ in size")
    return float(0.5 * np.abs(p.probs - q.probs).sum())


def zero_pad(p: Distribution, target_size: int) -> Distribution:
    """Append zero-probability symbols until the alphabet has target_size.

    New support points continue the grid past its last point, so the padded
    grid stays strictly increasing.
    """
    m = len(p)
    if target_size < m:
        raise ShrinkNotAllowed(f"cannot pad from {m} down to {target_size}")
    if target_size == m:
        return p
    pts = p.support.points
    step = pts[-1] - pts[-2] if m > 1 else 1.0
    extra = pts[-1] + step * np.arange(1, target_size - m + 1)
    probs = np.concatenate([p.probs, np.zeros(target_size - m)])
    return Distribution(probs, SupportGrid(np.concatenate([pts, extra])))


def hamming_matrix(m: int, n: int) -> CostMatrix:
    """Indicator cost 1_{i != j}."""
    if m < 1 or n < 1:
        raise DimensionMismatch("matrix sizes must be at least 1")
    e = np.ones((m, n))
    k = min(m, n)
    e[np.arange(k), np.arange(k)] = 0.0
    return CostMatrix(e)


def squared_error_matrix(g1: SupportGrid, g2: SupportGrid) -> CostMatrix:
    """Quadratic cost (x_i - x_hat_j)^2 between two support grids."""
    return CostMatrix((g1.points[:, None] - g2.points[None, :]) ** 2)


def load_distribution(path) -> Distribution:
    """Read {"support": [...], "probs": [...]} from a JSON file."""
    with open(path) as f:
        obj = json.load(f)
    return Distribution(np.asarray(obj["probs"], dtype=float), SupportGrid(obj["support"]))


def save_distribution(dist: Distribution, path) -> None:
    with open(path, "w") as f:
        json.dump({"support": dist.support.points.tolist(), "probs": dist.probs.tolist()}, f)


def load_cost_matrix(path) -> CostMatrix:
    """Read {"rows": M, "cols": N, "entries": [[...], ...]} from a JSON file."""
    with open(path) as f:
        obj = json.load(f)
    e = np.asarray(obj["entries"], dtype=float)
    if e.shape != (obj["rows"], obj["cols"]):
        raise DimensionMismatch("entries do not match declared rows/cols")
    return CostMatrix(e)


def save_cost_matrix(c: CostMatrix, path) -> None:
    m, n = c.shape
    with open(path, "w") as f:
        json.dump({"rows": m, "cols": n, "entries": c.entries.tolist()}, f)
