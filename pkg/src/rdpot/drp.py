"""Alternating Sinkhorn solver for distortion-rate-perception functions.

Minimizes expected distortion subject to a mutual-information budget R and
a transport-form perception budget P.  The structure mirrors the rate
solver with the roles of objective and rate constraint exchanged: the
channel kernel becomes K = exp(-d/gamma) with gamma the rate multiplier
(solved from G2), the coupling kernel M = exp(-lambda c/eps) carries the
perception multiplier lambda (solved from F2), and the barycenter update
gains a factor gamma, r_j = gamma (sum_i w_ij p_i)/(eta - beta_j - tau_j).

Because gamma divides the channel exponent it must stay strictly
positive; an inactive rate constraint pins it at a small floor, and the
regime R >= H(p) is served by the exact identity-channel solution
instead of an iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatch, InvalidDistribution, NumericalOverflow
from .probability import Channel, CostMatrix, Coupling, Distribution, entropy
from .rdp import (
    DEFAULT_EPSILON,
    DualState,
    ResidualReport,
    SolverConfig,
    SolverResult,
    _guard_finite,
    _initial_r,
    _log_probs,
    _result_support,
)
from .roots import budget_root, exp_clip, newton_bisect, pole_sum_root

# gamma -> 0 corresponds to an inactive rate constraint; the multiplier is
# floored here and the rate certified post-hoc.
_GAMMA_FLOOR = 1e-8
_GAMMA_GROWTH = 4.0
_GAMMA_CAP = 1e18


@dataclass(frozen=True)
class DrpProblem:
    """Instance data for D(R, P): source, costs, rate and perception budgets."""

    p: Distribution
    d: CostMatrix
    c: CostMatrix
    R: float
    P: float
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.d.shape[0] != len(self.p):
            raise DimensionMismatch("distortion matrix rows must match source size")
        if self.c.shape != self.d.shape:
            raise DimensionMismatch("perception cost must match distortion shape")
        for name in ("R", "P", "epsilon"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidDistribution(f"{name} must be finite")
        if self.R < 0 or self.P < 0 or self.epsilon <= 0:
            raise InvalidDistribution("budgets must be >= 0 and epsilon > 0")


def _rate_multiplier_root(s, lpr, R, x0, tol, max_newton):
    """Root of G2(gamma) = sum p_i w_ij ln(phi K psi)_ij - R, decreasing in gamma.

    With the additive duals held fixed, ln(phi K psi)_ij = -s_ij/gamma - 1
    and w_ij = r_j exp(-s_ij/gamma - 1), so G2 is an explicit scalar
    function of gamma alone.
    """

    def f(g):
        t = -s / g - 1.0
        with np.errstate(over="ignore"):
            return float((exp_clip(lpr + t) * t).sum() - R)

    def df(g):
        t = -s / g - 1.0
        with np.errstate(over="ignore"):
            return float(-(exp_clip(lpr + t) * s * s).sum() / g ** 3)

    if f(_GAMMA_FLOOR) <= 0.0:
        return _GAMMA_FLOOR
    hi = max(x0, _GAMMA_FLOOR * 2.0)
    while f(hi) > 0.0:
        hi *= _GAMMA_GROWTH
        if hi > _GAMMA_CAP:
            return hi
    return newton_bisect(f, df, _GAMMA_FLOOR, hi, x0, tol, max_newton)


def _identity_result(prob: DrpProblem) -> SolverResult:
    p = prob.p.probs
    n = p.size
    w = np.eye(n)
    dual = DualState(phi=np.ones(n), psi=np.ones(n), xi=np.ones(n),
                     varphi=np.ones(n), lam=0.0, gamma=0.0, eta=1.0, r=p.copy())
    return SolverResult(
        rate=entropy(prob.p),
        achieved_distortion=0.0,
        achieved_perception=0.0,
        r=prob.p,
        w=Channel(w),
        pi=Coupling(np.diag(p)),
        residual_trace=(),
        iterations=0,
        converged=True,
        dual=dual,
    )


def _zero_rate_result(prob: DrpProblem) -> SolverResult:
    """Exact D(0, P): at zero rate every channel row equals r.

    The rate multiplier diverges as R -> 0 (the zero-rate feasible set has
    no interior), which starves the alternating iteration, so the rank-one
    program min_r sum_ij p_i r_j d_ij s.t. transport(p -> r) <= P is
    solved directly as a linear program in the plan.
    """
    from scipy.optimize import linprog

    p = prob.p.probs
    d, c = prob.d.entries, prob.c.entries
    m, n = d.shape
    a_col = p @ d
    cost = np.tile(a_col, m)
    a_eq = np.zeros((m, m * n))
    for k in range(m):
        a_eq[k, k * n:(k + 1) * n] = 1.0
    res = linprog(cost, A_ub=c.ravel()[None, :], b_ub=[prob.P],
                  A_eq=a_eq, b_eq=p, bounds=(0, None), method="highs")
    if not res.success:
        raise InvalidDistribution(f"zero-rate LP failed: {res.message}")
    plan = np.clip(res.x.reshape(m, n), 0.0, None)
    r = plan.sum(axis=0)
    r = r / r.sum()
    w = np.tile(r, (m, 1))
    dual = DualState(phi=np.ones(m), psi=np.ones(n), xi=np.ones(m),
                     varphi=np.ones(n), lam=0.0, gamma=0.0, eta=1.0, r=r.copy())
    return SolverResult(
        rate=0.0,
        achieved_distortion=float(a_col @ r),
        achieved_perception=float((plan * c).sum()),
        r=Distribution(r, _result_support(n, prob.p)),
        w=Channel(w),
        pi=Coupling(plan),
        residual_trace=(),
        iterations=0,
        converged=True,
        dual=dual,
    )


def solve_drp(prob: DrpProblem, cfg: SolverConfig | None = None) -> SolverResult:
    """D(R, P) via the alternating scheme; rate reported alongside.

    At R >= H(p) the identity channel is feasible and exactly optimal
    (zero distortion, zero perception), so it is returned directly.
    """
    cfg = cfg or SolverConfig()
    m, n = prob.d.shape
    if m != n:
        raise DimensionMismatch("DRP solver requires matched alphabets")
    d, c, eps = prob.d.entries, prob.c.entries, prob.epsilon
    if (prob.R >= entropy(prob.p)
            and np.all(np.diag(d) == 0) and np.all(np.diag(c) == 0)):
        return _identity_result(prob)
    if prob.R == 0.0:
        return _zero_rate_result(prob)

    p = prob.p.probs
    lp = _log_probs(p)
    lr = _log_probs(_initial_r(p))
    lphi = np.zeros(m)
    lpsi = np.zeros(n)
    lxi = np.zeros(m)
    lvarphi = np.zeros(n)
    lam = 1.0
    gam = 1.0
    eta = 0.0
    r = np.exp(lr)
    trace = []
    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_iter + 1):
        # Channel block at the current gamma.
        lpsi = -logsumexp(-d / gam + (lphi + lp)[:, None], axis=0)
        lphi = -logsumexp(-d / gam + (lpsi + lr)[None, :], axis=1)
        # Rate multiplier: re-express the scalings against the new gamma.
        s = d - gam * (lphi[:, None] + lpsi[None, :] + 1.0)
        lpr = lp[:, None] + lr[None, :]
        gam_new = _rate_multiplier_root(s, lpr, prob.R, gam, cfg.newton_tol,
                                        cfg.newton_max_steps)
        lphi = gam * (lphi + 0.5) / gam_new - 0.5
        lpsi = gam * (lpsi + 0.5) / gam_new - 0.5
        gam = gam_new
        lw = lphi[:, None] - d / gam + (lpsi + lr)[None, :]
        # Coupling block with the perception multiplier.
        lvarphi = lr - logsumexp(-(lam / eps) * c + lxi[:, None], axis=0)
        lxi = lp - logsumexp(-(lam / eps) * c + lvarphi[None, :], axis=1)
        q2 = lxi[:, None] + lvarphi[None, :]
        lam = budget_root(c, q2, eps, prob.P, lam, cfg.newton_tol, cfg.newton_max_steps)
        # Barycenter block with the gamma-weighted masses.
        w = exp_clip(lw)
        m_col = p @ w
        b = -gam * (lpsi + 0.5) - eps * (lvarphi + 0.5)
        eta = pole_sum_root(gam * m_col, b, cfg.newton_tol, cfg.newton_max_steps)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(m_col > 0, gam * m_col / (eta - b), 0.0)
        lr = _log_probs(r)
        _guard_finite(lphi, lpsi, lxi, lvarphi, np.array([eta]))

        rep = _drp_residuals(lp, lr, lphi, lpsi, lxi, lvarphi, lam, gam, eta,
                             d, c, prob.R, prob.P, eps, p)
        trace.append(rep)
        if rep.overall <= cfg.residual_tol:
            converged = True
            break

    w = exp_clip(lphi[:, None] - d / gam + (lpsi + lr)[None, :])
    pw = p[:, None] * w
    rate = float((pw * (lphi[:, None] - d / gam + lpsi[None, :])).sum())
    distortion = float((pw * d).sum())
    pi = exp_clip(lxi[:, None] - (lam / eps) * c + lvarphi[None, :])
    perception = float((pi * c).sum())
    dual = DualState(
        phi=np.exp(lphi), psi=np.exp(lpsi), xi=np.exp(lxi), varphi=np.exp(lvarphi),
        lam=float(lam), gamma=float(gam), eta=float(eta), r=r.copy(),
    )
    return SolverResult(
        rate=rate,
        achieved_distortion=distortion,
        achieved_perception=perception,
        r=Distribution(r / r.sum(), _result_support(n, prob.p)),
        w=Channel(w / w.sum(axis=1, keepdims=True)),
        pi=Coupling(pi),
        residual_trace=tuple(trace),
        iterations=sweeps,
        converged=converged,
        dual=dual,
    )


def _drp_residuals(lp, lr, lphi, lpsi, lxi, lvarphi, lam, gam, eta,
                   d, c, R, P, eps, p) -> ResidualReport:
    r = np.exp(lr)
    col = logsumexp(-d / gam + (lphi + lp)[:, None], axis=0)
    r_psi = float(np.abs(exp_clip(lpsi + col) - 1.0).sum())
    row = logsumexp(-d / gam + (lpsi + lr)[None, :], axis=1)
    r_phi = float(np.abs(exp_clip(lphi + row) - 1.0).sum())
    s = d - gam * (lphi[:, None] + lpsi[None, :] + 1.0)
    t = -s / gam - 1.0
    g2 = float((exp_clip(lp[:, None] + lr[None, :] + t) * t).sum() - R)
    r_gamma = abs(gam * g2)
    q2 = lxi[:, None] + lvarphi[None, :]
    f2 = float((c * exp_clip(q2 - (lam / eps) * c)).sum() - P)
    r_lambda = abs(lam * f2)
    m_col = p @ exp_clip(lphi[:, None] - d / gam + (lpsi + lr)[None, :])
    b = -gam * (lpsi + 0.5) - eps * (lvarphi + 0.5)
    active = m_col > 0
    r_eta = abs(float((gam * m_col[active] / (eta - b[active])).sum() - 1.0))
    colm = logsumexp(-(lam / eps) * c + lxi[:, None], axis=0)
    r_varphi = float(np.abs(exp_clip(lvarphi + colm) - r).sum())
    rowm = logsumexp(-(lam / eps) * c + lvarphi[None, :], axis=1)
    r_xi = float(np.abs(exp_clip(lxi + rowm) - p).sum())
    return ResidualReport.of(r_psi, r_phi, r_lambda, r_eta, r_varphi, r_xi, r_gamma)
