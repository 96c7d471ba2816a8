"""Alternating Sinkhorn solver for rate-distortion-perception functions.

Minimizes mutual information over channels w subject to an expected
distortion budget D and a perception budget P on the divergence between
the source law p and the reconstruction law r.  The perception constraint
is written in transport form through an auxiliary coupling Pi, giving the
problem a barycenter structure: r is the common marginal of the channel
joint diag(p) w and of Pi.  An entropic term eps * sum Pi ln Pi makes the
coupling block strictly convex; the solver then alternates

  1. Sinkhorn scalings (psi, phi) of the channel kernel K = exp(-lambda d)
     and Newton on the distortion function F(lambda),
  2. Sinkhorn scalings (varphi, xi) of the perception kernel
     M = exp(-gamma c / eps) and Newton on the perception function G(gamma),
  3. Newton on the normalization function H(eta) followed by the
     closed-form barycenter update r_j = (sum_i w_ij p_i)/(eta - beta_j - tau_j),

until the KKT residual drops below tolerance.  All kernels are evaluated
in log space, so large multipliers never overflow.

Total-variation perception is the special case of an indicator cost
matrix; KL perception drops the coupling block entirely and instead
couples (gamma, eta) through the stationarity of r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, xlogy

from .errors import DimensionMismatch, InvalidDistribution, KlDomain, NumericalOverflow
from .probability import (
    Channel,
    CostMatrix,
    Coupling,
    Distribution,
    PROB_FLOOR,
    SupportGrid,
    hamming_matrix,
    kl_divergence,
    tv_distance,
    zero_pad,
)
from .roots import budget_root, exp_clip, pole_sum_root

DEFAULT_EPSILON = 0.01

# Padded alphabet symbols carry this multiple of the largest original cost,
# which keeps them strictly dominated without overflowing any scaling.
_PAD_COST_FACTOR = 3.0

# The KL perception multiplier diverges as P -> 0 (no Slater point); the
# solve is capped here and the gamma residual switches to |G| at the cap.
_KL_GAMMA_CAP = 1e12


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls shared by all alternating solvers."""

    max_iter: int = 1000
    residual_tol: float = 1e-10
    newton_tol: float = 1e-12
    newton_max_steps: int = 50

    def __post_init__(self):
        if self.max_iter < 1:
            raise InvalidDistribution("max_iter must be at least 1")
        if min(self.residual_tol, self.newton_tol) <= 0:
            raise InvalidDistribution("tolerances must be positive")


@dataclass(frozen=True)
class RdpProblem:
    """Instance data for R(D, P): source, costs, budgets, regularization."""

    p: Distribution
    d: CostMatrix
    D: float
    P: float
    c: CostMatrix | None = None
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.d.shape[0] != len(self.p):
            raise DimensionMismatch("distortion matrix rows must match source size")
        if self.c is not None and self.c.shape != self.d.shape:
            raise DimensionMismatch("perception cost must match distortion shape")
        for name in ("D", "P", "epsilon"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidDistribution(f"{name} must be finite")
        if self.D < 0 or self.P < 0 or self.epsilon <= 0:
            raise InvalidDistribution("budgets must be >= 0 and epsilon > 0")


@dataclass(frozen=True)
class ResidualReport:
    """L1 residuals of the seven dual fixed-point equations and their RMS."""

    r_psi: float
    r_phi: float
    r_lambda: float
    r_eta: float
    r_varphi: float
    r_xi: float
    r_gamma: float
    overall: float

    @staticmethod
    def of(r_psi, r_phi, r_lambda, r_eta, r_varphi, r_xi, r_gamma) -> "ResidualReport":
        parts = (r_psi, r_phi, r_lambda, r_eta, r_varphi, r_xi, r_gamma)
        overall = float(np.sqrt(sum(x * x for x in parts) / 7.0))
        return ResidualReport(*[float(x) for x in parts], overall)


@dataclass(frozen=True)
class DualState:
    """Positive Sinkhorn scalings plus the three scalar multipliers.

    The additive dual variables are recoverable as
    alpha_i = -p_i (ln phi_i + 1/2), beta_j = -(ln psi_j + 1/2),
    theta_i = -eps (ln xi_i + 1/2), tau_j = -eps (ln varphi_j + 1/2).
    `r` is the barycenter the scalings are currently expressed against.
    """

    phi: np.ndarray
    psi: np.ndarray
    xi: np.ndarray
    varphi: np.ndarray
    lam: float
    gamma: float
    eta: float
    r: np.ndarray


@dataclass(frozen=True)
class SolverResult:
    """Converged (or best-effort) primal/dual data for one solve."""

    rate: float
    achieved_distortion: float
    achieved_perception: float
    r: Distribution
    w: Channel
    pi: Coupling | None
    residual_trace: tuple
    iterations: int
    converged: bool
    dual: DualState


def _log_probs(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(p)


def _initial_r(p: np.ndarray) -> np.ndarray:
    """r = p, blended with a trace of uniform when p has zero entries.

    A symbol with r_j = 0 can never regain mass under the multiplicative
    updates, so strictly zero source entries must not lock out
    reconstruction symbols.
    """
    if np.all(p > 0):
        return p.copy()
    n = p.size
    return (1.0 - 1e-6) * p + 1e-6 / n


def _guard_finite(*arrays):
    for a in arrays:
        if np.any(np.isnan(a)) or np.any(np.isposinf(a)):
            raise NumericalOverflow("scaling vector left the representable range")


class _WassersteinIteration:
    """One Algorithm-1 sweep over the w, Pi, and r blocks in log space."""

    def __init__(self, p, d, c, D, P, eps, cfg):
        self.p = p
        self.d = d
        self.c = c
        self.D = D
        self.P = P
        self.eps = eps
        self.cfg = cfg
        m, n = d.shape
        self.lp = _log_probs(p)
        self.lr = _log_probs(_initial_r(p))
        self.lphi = np.zeros(m)
        self.lpsi = np.zeros(n)
        self.lxi = np.zeros(m)
        self.lvarphi = np.zeros(n)
        self.lam = 1.0
        self.gam = 1.0
        self.eta = 0.0

    def sweep(self):
        cfg = self.cfg
        d, c, eps = self.d, self.c, self.eps
        # Channel block: Sinkhorn scalings, then the distortion multiplier.
        self.lpsi = -logsumexp(-self.lam * d + (self.lphi + self.lp)[:, None], axis=0)
        self.lphi = -logsumexp(-self.lam * d + (self.lpsi + self.lr)[None, :], axis=1)
        q = (self.lp + self.lphi)[:, None] + (self.lpsi + self.lr)[None, :]
        self.lam = budget_root(d, q, 1.0, self.D, self.lam, cfg.newton_tol, cfg.newton_max_steps)
        self.lw = self.lphi[:, None] - self.lam * d + (self.lpsi + self.lr)[None, :]
        # Coupling block: Sinkhorn scalings, then the perception multiplier.
        self.lvarphi = self.lr - logsumexp(-(self.gam / eps) * c + self.lxi[:, None], axis=0)
        self.lxi = self.lp - logsumexp(-(self.gam / eps) * c + self.lvarphi[None, :], axis=1)
        q2 = self.lxi[:, None] + self.lvarphi[None, :]
        self.gam = budget_root(c, q2, eps, self.P, self.gam, cfg.newton_tol, cfg.newton_max_steps)
        # Barycenter block.
        w = exp_clip(self.lw)
        m_col = self.p @ w
        b = (-self.lpsi - 0.5) + (-eps * (self.lvarphi + 0.5))
        self.eta = pole_sum_root(m_col, b, cfg.newton_tol, cfg.newton_max_steps)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(m_col > 0, m_col / (self.eta - b), 0.0)
        self.r = r
        self.lr = _log_probs(r)
        _guard_finite(self.lphi, self.lpsi, self.lxi, self.lvarphi, np.array([self.eta]))

    def residuals(self) -> ResidualReport:
        return _wasserstein_residuals(
            self.lp, self.lr, self.lphi, self.lpsi, self.lxi, self.lvarphi,
            self.lam, self.gam, self.eta,
            self.d, self.c, self.D, self.P, self.eps, self.p,
        )


def _wasserstein_residuals(lp, lr, lphi, lpsi, lxi, lvarphi, lam, gam, eta,
                           d, c, D, P, eps, p) -> ResidualReport:
    r = np.exp(lr)
    col = logsumexp(-lam * d + (lphi + lp)[:, None], axis=0)
    r_psi = float(np.abs(exp_clip(lpsi + col) - 1.0).sum())
    row = logsumexp(-lam * d + (lpsi + lr)[None, :], axis=1)
    r_phi = float(np.abs(exp_clip(lphi + row) - 1.0).sum())
    q = (lp + lphi)[:, None] + (lpsi + lr)[None, :]
    f_lam = float((d * exp_clip(q - lam * d)).sum() - D)
    r_lambda = abs(lam * f_lam)
    lw = lphi[:, None] - lam * d + (lpsi + lr)[None, :]
    m_col = p @ exp_clip(lw)
    b = (-lpsi - 0.5) + (-eps * (lvarphi + 0.5))
    active = m_col > 0
    r_eta = abs(float((m_col[active] / (eta - b[active])).sum() - 1.0))
    colm = logsumexp(-(gam / eps) * c + lxi[:, None], axis=0)
    r_varphi = float(np.abs(exp_clip(lvarphi + colm) - r).sum())
    rowm = logsumexp(-(gam / eps) * c + lvarphi[None, :], axis=1)
    r_xi = float(np.abs(exp_clip(lxi + rowm) - p).sum())
    q2 = lxi[:, None] + lvarphi[None, :]
    g_gam = float((c * exp_clip(q2 - (gam / eps) * c)).sum() - P)
    r_gamma = abs(gam * g_gam)
    return ResidualReport.of(r_psi, r_phi, r_lambda, r_eta, r_varphi, r_xi, r_gamma)


def _pad_square(p: Distribution, d: CostMatrix, c: CostMatrix):
    """Zero-pad a rectangular instance to a square one.

    Padded source symbols carry zero probability; padded reconstruction
    symbols carry strictly dominated cost columns, so they attract no mass
    at the optimum (the closing argument of the zero-padding technique).
    """
    m, n = d.shape
    size = max(m, n)
    de, ce = d.entries, c.entries
    pad_d = _PAD_COST_FACTOR * de.max() + 1.0
    pad_c = _PAD_COST_FACTOR * ce.max() + 1.0
    if m < size:
        p = zero_pad(p, size)
        de = np.vstack([de, np.full((size - m, n), pad_d)])
        ce = np.vstack([ce, np.full((size - m, n), pad_c)])
    if n < size:
        de = np.hstack([de, np.full((size, size - n), pad_d)])
        ce = np.hstack([ce, np.full((size, size - n), pad_c)])
    return p, CostMatrix(de), CostMatrix(ce)


def _result_support(n: int, p: Distribution) -> SupportGrid:
    if n == len(p):
        return p.support
    return SupportGrid(np.arange(n, dtype=float))


def solve_rdp_wasserstein(prob: RdpProblem, cfg: SolverConfig | None = None) -> SolverResult:
    """R(D, P) with a Wasserstein perception constraint sum Pi c <= P.

    Runs the alternating Sinkhorn scheme until the overall KKT residual
    falls below cfg.residual_tol or cfg.max_iter sweeps elapse; in the
    latter case the best-effort result is returned with converged=False.
    """
    if prob.c is None:
        raise InvalidDistribution("Wasserstein solve needs a perception cost matrix")
    cfg = cfg or SolverConfig()
    m0, n0 = prob.d.shape
    p, d, c = prob.p, prob.d, prob.c
    if m0 != n0:
        p, d, c = _pad_square(p, d, c)
    it = _WassersteinIteration(p.probs, d.entries, c.entries, prob.D, prob.P, prob.epsilon, cfg)
    trace = []
    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_iter + 1):
        it.sweep()
        rep = it.residuals()
        trace.append(rep)
        if rep.overall <= cfg.residual_tol:
            converged = True
            break
    return _export_wasserstein(prob, it, trace, sweeps, converged, m0, n0)


def _export_wasserstein(prob, it, trace, sweeps, converged, m0, n0) -> SolverResult:
    w = exp_clip(it.lw)
    pw = it.p[:, None] * w
    rate = float((pw * (it.lphi[:, None] - it.lam * it.d + it.lpsi[None, :])).sum())
    distortion = float((pw * it.d).sum())
    pi = exp_clip(it.lxi[:, None] - (it.gam / it.eps) * it.c + it.lvarphi[None, :])
    perception = float((pi * it.c).sum())

    dual = DualState(
        phi=np.exp(it.lphi), psi=np.exp(it.lpsi),
        xi=np.exp(it.lxi), varphi=np.exp(it.lvarphi),
        lam=float(it.lam), gamma=float(it.gam), eta=float(it.eta), r=it.r.copy(),
    )
    # Strip internally padded symbols before reporting.
    w_out = w[:m0, :n0]
    r_out = it.r[:n0]
    pi_out = pi[:m0, :n0]
    w_out = w_out / w_out.sum(axis=1, keepdims=True)
    r_dist = Distribution(r_out / r_out.sum(), _result_support(n0, prob.p))
    return SolverResult(
        rate=rate,
        achieved_distortion=distortion,
        achieved_perception=perception,
        r=r_dist,
        w=Channel(w_out),
        pi=Coupling(pi_out),
        residual_trace=tuple(trace),
        iterations=sweeps,
        converged=converged,
        dual=dual,
    )


def solve_rdp_tv(prob: RdpProblem, cfg: SolverConfig | None = None) -> SolverResult:
    """R(D, P) with total-variation perception.

    TV is the transport cost under the indicator matrix 1_{i != j}, so
    this delegates to the Wasserstein solve; the achieved perception is
    re-read as tv_distance(p, r).
    """
    m, n = prob.d.shape
    if m != n:
        raise DimensionMismatch("TV perception requires matched alphabets")
    inner = RdpProblem(prob.p, prob.d, prob.D, prob.P,
                       c=hamming_matrix(m, n), epsilon=prob.epsilon)
    res = solve_rdp_wasserstein(inner, cfg)
    return _with_perception(res, tv_distance(prob.p, res.r))


def _with_perception(res: SolverResult, value: float) -> SolverResult:
    return SolverResult(
        rate=res.rate,
        achieved_distortion=res.achieved_distortion,
        achieved_perception=float(value),
        r=res.r, w=res.w, pi=res.pi,
        residual_trace=res.residual_trace,
        iterations=res.iterations,
        converged=res.converged,
        dual=res.dual,
    )


def _kl_gamma_eta(p, m_col, beta, P, cfg):
    """Coupled solve of G_KL(gamma) = 0 and H_KL(eta) = 0.

    For each gamma, eta is the root of the pole-sum normalization of
    r_j = (gamma p_j + m_j)/(eta - beta_j); the outer function
    G(gamma) = P - KL(p || r(gamma)) is increasing, with gamma = 0 when
    the perception constraint is already slack.
    """
    target = float(xlogy(p, p).sum()) - P

    def r_of(gam):
        u = gam * p + m_col
        eta = pole_sum_root(u, beta, cfg.newton_tol, cfg.newton_max_steps)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(u > 0, u / (eta - beta), 0.0)
        if np.any(r < 0):
            raise KlDomain("negative mass in KL r-update")
        return r, eta

    def g(gam):
        r, _ = r_of(gam)
        pos = p > 0
        if np.any(r[pos] <= 0):
            return -np.inf
        return float((p[pos] * np.log(r[pos])).sum()) - target

    if g(0.0) >= 0:
        _, eta = r_of(0.0)
        return 0.0, eta
    lo, hi = 0.0, 1.0
    while g(hi) < 0:
        lo, hi = hi, hi * 4.0
        if hi >= _KL_GAMMA_CAP:
            _, eta = r_of(_KL_GAMMA_CAP)
            return _KL_GAMMA_CAP, eta
    # g is increasing; bisect down to float resolution (-inf sorts as negative).
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    _, eta = r_of(hi)
    return float(hi), eta


def solve_rdp_kl(prob: RdpProblem, cfg: SolverConfig | None = None) -> SolverResult:
    """R(D, P) with KL(p || r) perception.

    No coupling block is needed: the stationarity of r couples gamma and
    eta directly, and r_j = (gamma p_j + sum_i w_ij p_i)/(eta - beta_j).
    The entropic parameter is unused, so the value carries no
    regularization bias.
    """
    cfg = cfg or SolverConfig()
    m, n = prob.d.shape
    if m != n:
        raise DimensionMismatch("KL perception requires matched alphabets")
    p = prob.p.probs
    d = prob.d.entries
    lp = _log_probs(p)
    lr = _log_probs(_initial_r(p))
    lphi = np.zeros(m)
    lpsi = np.zeros(n)
    lam = 1.0
    gam = 1.0
    eta = 0.0
    trace = []
    converged = False
    sweeps = 0
    r = np.exp(lr)
    for sweeps in range(1, cfg.max_iter + 1):
        lpsi = -logsumexp(-lam * d + (lphi + lp)[:, None], axis=0)
        lphi = -logsumexp(-lam * d + (lpsi + lr)[None, :], axis=1)
        q = (lp + lphi)[:, None] + (lpsi + lr)[None, :]
        lam = budget_root(d, q, 1.0, prob.D, lam, cfg.newton_tol, cfg.newton_max_steps)
        lw = lphi[:, None] - lam * d + (lpsi + lr)[None, :]
        m_col = p @ exp_clip(lw)
        beta = -lpsi - 0.5
        gam, eta = _kl_gamma_eta(p, m_col, beta, prob.P, cfg)
        u = gam * p + m_col
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(u > 0, u / (eta - beta), 0.0)
        lr = _log_probs(r)
        _guard_finite(lphi, lpsi, np.array([eta]))

        rep = _kl_residuals(lp, lr, lphi, lpsi, lam, gam, eta, d, prob.D, prob.P, p, r)
        trace.append(rep)
        if rep.overall <= cfg.residual_tol:
            converged = True
            break

    w = exp_clip(lphi[:, None] - lam * d + (lpsi + lr)[None, :])
    pw = p[:, None] * w
    rate = float((pw * (lphi[:, None] - lam * d + lpsi[None, :])).sum())
    distortion = float((pw * d).sum())
    r_dist = Distribution(r / r.sum(), _result_support(n, prob.p))
    dual = DualState(
        phi=np.exp(lphi), psi=np.exp(lpsi),
        xi=np.ones(m), varphi=np.ones(n),
        lam=float(lam), gamma=float(gam), eta=float(eta), r=r.copy(),
    )
    return SolverResult(
        rate=rate,
        achieved_distortion=distortion,
        achieved_perception=kl_divergence(prob.p, r_dist),
        r=r_dist,
        w=Channel(w / w.sum(axis=1, keepdims=True)),
        pi=None,
        residual_trace=tuple(trace),
        iterations=sweeps,
        converged=converged,
        dual=dual,
    )


def _kl_residuals(lp, lr, lphi, lpsi, lam, gam, eta, d, D, P, p, r) -> ResidualReport:
    col = logsumexp(-lam * d + (lphi + lp)[:, None], axis=0)
    r_psi = float(np.abs(exp_clip(lpsi + col) - 1.0).sum())
    row = logsumexp(-lam * d + (lpsi + lr)[None, :], axis=1)
    r_phi = float(np.abs(exp_clip(lphi + row) - 1.0).sum())
    q = (lp + lphi)[:, None] + (lpsi + lr)[None, :]
    f_lam = float((d * exp_clip(q - lam * d)).sum() - D)
    r_lambda = abs(lam * f_lam)
    m_col = p @ exp_clip(lphi[:, None] - lam * d + (lpsi + lr)[None, :])
    beta = -lpsi - 0.5
    u = gam * p + m_col
    active = u > 0
    r_eta = abs(float((u[active] / (eta - beta[active])).sum() - 1.0))
    pos = (p > 0) & (r > 0)
    kl = float((p[pos] * (np.log(p[pos]) - np.log(r[pos]))).sum())
    g_val = P - kl if not np.any((p > 0) & (r <= 0)) else -np.inf
    r_gamma = abs(g_val) if gam >= _KL_GAMMA_CAP else abs(gam * g_val)
    return ResidualReport.of(r_psi, r_phi, r_lambda, r_eta, 0.0, 0.0, r_gamma)


# Spec-level Newton entry points: each re-solves its scalar condition from
# an explicit dual state, which is how the tests pin them against a
# bracketed-bisection oracle.

def newton_lambda(state: DualState, prob: RdpProblem, cfg: SolverConfig | None = None) -> float:
    """Root of F(lambda) = sum d p phi e^{-lambda d} psi r - D (0 if slack)."""
    cfg = cfg or SolverConfig()
    with np.errstate(divide="ignore"):
        q = (np.log(state.phi) + _log_probs(prob.p.probs))[:, None] \
            + (np.log(state.psi) + _log_probs(state.r))[None, :]
    return float(budget_root(prob.d.entries, q, 1.0, prob.D, state.lam,
                             cfg.newton_tol, cfg.newton_max_steps))


def newton_gamma(state: DualState, prob: RdpProblem, cfg: SolverConfig | None = None) -> float:
    """Root of G(gamma) = sum c xi e^{-gamma c/eps} varphi - P (0 if slack)."""
    if prob.c is None:
        raise InvalidDistribution("gamma solve needs a perception cost matrix")
    cfg = cfg or SolverConfig()
    with np.errstate(divide="ignore"):
        q = np.log(state.xi)[:, None] + np.log(state.varphi)[None, :]
    return float(budget_root(prob.c.entries, q, prob.epsilon, prob.P, state.gamma,
                             cfg.newton_tol, cfg.newton_max_steps))


def newton_eta(state: DualState, prob: RdpProblem, cfg: SolverConfig | None = None) -> float:
    """Root of H(eta) = sum_j (sum_i w_ij p_i)/(eta - beta_j - tau_j) - 1."""
    cfg = cfg or SolverConfig()
    lw = (np.log(state.phi)[:, None] - state.lam * prob.d.entries
          + np.log(state.psi)[None, :] + _log_probs(state.r)[None, :])
    m_col = prob.p.probs @ exp_clip(lw)
    beta = -np.log(state.psi) - 0.5
    tau = -prob.epsilon * (np.log(state.varphi) + 0.5)
    return float(pole_sum_root(m_col, beta + tau, cfg.newton_tol, cfg.newton_max_steps))


def kkt_residuals(state: DualState, prob: RdpProblem) -> ResidualReport:
    """Residual report of the Wasserstein-form fixed-point equations.

    lambda and gamma enter through complementary slackness |lam F| and
    |gam G|, which coincide with |F|, |G| at interior optima and vanish
    correctly when a multiplier rests at zero.
    """
    if prob.c is None:
        raise InvalidDistribution("KKT residuals need a perception cost matrix")
    with np.errstate(divide="ignore"):
        return _wasserstein_residuals(
            _log_probs(prob.p.probs), _log_probs(state.r),
            np.log(state.phi), np.log(state.psi),
            np.log(state.xi), np.log(state.varphi),
            state.lam, state.gamma, state.eta,
            prob.d.entries, prob.c.entries, prob.D, prob.P, prob.epsilon,
            prob.p.probs,
        )
