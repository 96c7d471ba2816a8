"""Perceptual reversible-data-hiding analysis for gray-scale images.

Pipeline: parse a PGM image, model its prediction errors as a 256-symbol
source, solve for the marked-signal law maximizing the embedding rate
H(Y) - H(X) under distortion and perception budgets, then simulate the
marking to measure PSNR.

The optimal marked law solves max_r H(r) subject to the existence of a
coupling p -> r with distortion cost <= D and one with perception cost
<= P: the objective depends on the channel only through its output
marginal, so each constraint reduces to a transport budget on (p, r).
With both couplings entropically regularized the solver alternates
Sinkhorn scalings and budget Newton solves on the two plans, closing each
sweep with the exact barycenter update r_j proportional to
exp(tau_j_dist + tau_j_perc).

Lossless message embedding/recovery is out of scope; the simulation
reproduces the distributional and PSNR consequences of marking only.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatch, FormatError, SeedRequired, TooSmall
from .probability import (
    CostMatrix,
    Coupling,
    Distribution,
    SupportGrid,
    entropy,
)
from .rdp import DEFAULT_EPSILON, SolverConfig, _log_probs
from .roots import budget_root, exp_clip

PSNR_INF = float("inf")


@dataclass(frozen=True)
class GrayImage:
    """8-bit gray-scale image, pixels stored row-major."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.int64)
        if px.ndim == 1:
            px = px.reshape(self.height, self.width)
        if px.shape != (self.height, self.width):
            raise DimensionMismatch("pixel array does not match declared size")
        if self.width < 1 or self.height < 1:
            raise FormatError("image dimensions must be positive")
        if px.min() < 0 or px.max() > 255:
            raise FormatError("pixel values must lie in [0, 255]")
        arr = px.astype(np.uint8)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @staticmethod
    def from_array(px) -> "GrayImage":
        px = np.asarray(px)
        return GrayImage(width=px.shape[1], height=px.shape[0], pixels=px)


def _read_tokens(data: bytes, count: int, idx: int):
    """Read whitespace/comment-separated ASCII tokens from a PNM header."""
    tokens = []
    size = len(data)
    while len(tokens) < count:
        while idx < size and data[idx:idx + 1].isspace():
            idx += 1
        if idx < size and data[idx] == ord('#'):
            while idx < size and data[idx] not in (10, 13):
                idx += 1
            continue
        start = idx
        while idx < size and not data[idx:idx + 1].isspace():
            idx += 1
        if start == idx:
            raise FormatError("truncated PGM header")
        tokens.append(data[start:idx])
    return tokens, idx


def load_pgm(path) -> GrayImage:
    """Parse a P2 (ASCII) or P5 (binary) PGM with maxval 255."""
    data = Path(path).read_bytes()
    if len(data) < 2 or data[:2] not in (b"P2", b"P5"):
        raise FormatError("not a P2/P5 PGM file")
    magic = data[:2]
    (w_tok, h_tok, max_tok), idx = _read_tokens(data, 3, 2)
    try:
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError as exc:
        raise FormatError(f"bad PGM header: {exc}") from None
    if maxval != 255:
        raise FormatError(f"only maxval 255 supported, got {maxval}")
    if width < 1 or height < 1:
        raise FormatError("bad PGM dimensions")
    n = width * height
    if magic == b"P5":
        idx += 1  # single whitespace after maxval
        payload = data[idx:idx + n]
        if len(payload) != n:
            raise FormatError("truncated P5 payload")
        px = np.frombuffer(payload, dtype=np.uint8)
    else:
        try:
            values = data[idx:].split()
            px = np.array([int(v) for v in values[:n]], dtype=np.int64)
        except ValueError as exc:
            raise FormatError(f"bad P2 payload: {exc}") from None
        if px.size != n:
            raise FormatError("truncated P2 payload")
        if px.min() < 0 or px.max() > 255:
            raise FormatError("P2 pixel out of range")
    return GrayImage(width=width, height=height, pixels=px.reshape(height, width))


def save_pgm(image: GrayImage, path, binary: bool = True) -> None:
    """Write a PGM; binary=True emits P5, otherwise ASCII P2."""
    header = f"{'P5' if binary else 'P2'}\n{image.width} {image.height}\n255\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        if binary:
            f.write(image.pixels.tobytes())
        else:
            lines = [" ".join(str(v) for v in row) for row in image.pixels]
            f.write(("\n".join(lines) + "\n").encode("ascii"))


def _causal_predictions(px: np.ndarray) -> np.ndarray:
    """Floor-mean of the causal neighbors: left and top, raster order."""
    pred = np.zeros_like(px, dtype=np.int64)
    left = px[:, :-1].astype(np.int64)
    top = px[:-1, :].astype(np.int64)
    pred[1:, 1:] = (left[1:, :] + top[:, 1:]) // 2
    pred[0, 1:] = left[0, :]
    pred[1:, 0] = top[:, 0]
    pred[0, 0] = 0
    return pred


def prediction_errors(img: GrayImage):
    """Prediction-error sequence (h - h_pred + 128) mod 256 and its histogram."""
    if img.width < 2 or img.height < 2:
        raise TooSmall("predictor needs at least a 2x2 image")
    px = img.pixels.astype(np.int64)
    errors = (px - _causal_predictions(px) + 128) % 256
    counts = np.bincount(errors.ravel(), minlength=256).astype(float)
    hist = Distribution(counts / counts.sum(), SupportGrid(np.arange(256.0)))
    return errors.ravel(), hist


@dataclass(frozen=True)
class RdhSolution:
    """Marked-signal law with its two budget couplings."""

    r: Distribution
    couplings: tuple
    embedding_rate: float
    achieved_D: float
    achieved_P: float
    iterations: int
    converged: bool


def solve_rdh_rdp(p: Distribution, d: CostMatrix, c: CostMatrix,
                  D: float, P: float, epsilon: float = DEFAULT_EPSILON,
                  cfg: SolverConfig | None = None) -> RdhSolution:
    """Maximize H(Y) - H(X) under transport budgets D (distortion) and P.

    Alternates entropic Sinkhorn updates on the distortion-side and
    perception-side couplings with Newton solves of their budget
    multipliers, then refreshes the marked law from the coupling duals:
    r_j is the normalized exp of the sum of the two column potentials.
    """
    cfg = cfg or SolverConfig()
    n = len(p)
    if d.shape != (n, n) or c.shape != (n, n):
        raise DimensionMismatch("cost matrices must be square on the source alphabet")
    de, ce = d.entries, c.entries
    pv = p.probs
    lp = _log_probs(pv)
    lr = np.full(n, -np.log(n))
    lxi1 = np.zeros(n)
    lfi1 = np.zeros(n)
    lxi2 = np.zeros(n)
    lfi2 = np.zeros(n)
    lam = 1.0
    gam = 1.0
    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_iter + 1):
        lfi1 = lr - logsumexp(-(lam / epsilon) * de + lxi1[:, None], axis=0)
        lxi1 = lp - logsumexp(-(lam / epsilon) * de + lfi1[None, :], axis=1)
        lam = budget_root(de, lxi1[:, None] + lfi1[None, :], epsilon, D, lam,
                          cfg.newton_tol, cfg.newton_max_steps)
        lfi2 = lr - logsumexp(-(gam / epsilon) * ce + lxi2[:, None], axis=0)
        lxi2 = lp - logsumexp(-(gam / epsilon) * ce + lfi2[None, :], axis=1)
        gam = budget_root(ce, lxi2[:, None] + lfi2[None, :], epsilon, P, gam,
                          cfg.newton_tol, cfg.newton_max_steps)
        # Barycenter stationarity: ln r = (tau1 + tau2) up to normalization.
        t = -epsilon * (lfi1 + 0.5) - epsilon * (lfi2 + 0.5)
        lr = t - logsumexp(t)

        r = np.exp(lr)
        res = _rdh_residual(lp, lr, lxi1, lfi1, lam, de, D,
                            lxi2, lfi2, gam, ce, P, epsilon, pv, r)
        if res <= cfg.residual_tol:
            converged = True
            break

    r = np.exp(lr)
    r = r / r.sum()
    pi1 = exp_clip(lxi1[:, None] - (lam / epsilon) * de + lfi1[None, :])
    pi2 = exp_clip(lxi2[:, None] - (gam / epsilon) * ce + lfi2[None, :])
    r_dist = Distribution(r, p.support)
    rate = max(0.0, entropy(r_dist) - entropy(p))
    return RdhSolution(
        r=r_dist,
        couplings=(Coupling(pi1), Coupling(pi2)),
        embedding_rate=rate,
        achieved_D=float((pi1 * de).sum()),
        achieved_P=float((pi2 * ce).sum()),
        iterations=sweeps,
        converged=converged,
    )


def _rdh_residual(lp, lr, lxi1, lfi1, lam, de, D, lxi2, lfi2, gam, ce, P,
                  eps, pv, r) -> float:
    parts = []
    for lxi, lfi, mult, cost, budget in (
        (lxi1, lfi1, lam, de, D),
        (lxi2, lfi2, gam, ce, P),
    ):
        row = logsumexp(-(mult / eps) * cost + lfi[None, :], axis=1)
        parts.append(float(np.abs(exp_clip(lxi + row) - pv).sum()))
        col = logsumexp(-(mult / eps) * cost + lxi[:, None], axis=0)
        parts.append(float(np.abs(exp_clip(lfi + col) - r).sum()))
        f = float((cost * exp_clip(lxi[:, None] + lfi[None, :]
                                   - (mult / eps) * cost)).sum() - budget)
        parts.append(abs(mult * f))
    return float(np.sqrt(sum(x * x for x in parts) / len(parts)))


def derived_channel(p: Distribution, solution: RdhSolution) -> np.ndarray:
    """Row-conditional w_ij = Pi_ij / p_i from the distortion-side coupling."""
    pi = solution.couplings[0].pi
    if pi.shape[0] != len(p):
        raise DimensionMismatch("coupling does not match the source alphabet")
    w = np.zeros_like(pi)
    pos = p.probs > 0
    w[pos] = pi[pos] / p.probs[pos, None]
    w[pos] /= w[pos].sum(axis=1, keepdims=True)
    return w


def psnr(a: GrayImage, b: GrayImage) -> float:
    """Peak signal-to-noise ratio against peak 255; inf for identical images."""
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatch("image sizes differ")
    mse = float(np.mean((a.pixels.astype(float) - b.pixels.astype(float)) ** 2))
    if mse == 0.0:
        return PSNR_INF
    return float(10.0 * np.log10(255.0 ** 2 / mse))


def simulate_marking(img: GrayImage, solution: RdhSolution, seed: int | None):
    """Sample marked errors per pixel and rebuild the marked image.

    Each prediction error x is replaced by a draw from the derived
    conditional w(. | x); the marked pixel is (y + prediction - 128) mod
    256.  The seed fully determines the output.
    """
    if seed is None:
        raise SeedRequired("simulate_marking needs an explicit seed")
    errors, hist = prediction_errors(img)
    if len(solution.r) != 256:
        raise DimensionMismatch("solution alphabet must have 256 symbols")
    w = derived_channel(hist, solution)
    rng = np.random.default_rng(seed)
    marked_errors = np.empty_like(errors)
    # Draw symbol groups in sorted order so the seed pins every sample.
    for s in np.unique(errors):
        mask = errors == s
        cdf = np.cumsum(w[s])
        cdf[-1] = 1.0
        draws = np.searchsorted(cdf, rng.random(int(mask.sum())), side="right")
        marked_errors[mask] = np.clip(draws, 0, 255)
    pred = _causal_predictions(img.pixels.astype(np.int64)).ravel()
    marked_px = (marked_errors + pred - 128) % 256
    marked = GrayImage(width=img.width, height=img.height,
                       pixels=marked_px.reshape(img.height, img.width))
    return marked, psnr(img, marked)
