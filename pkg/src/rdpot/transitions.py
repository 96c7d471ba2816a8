"""Critical-transition machinery for the distortion-perception plane.

Computes the transition curve f(D) (the perception level above which the
perception constraint goes slack and the problem collapses to pure
rate-distortion), the zero-rate upper bound h(P), secant-slope transition
detection on distortion-perception cross-sections, the endpoint identity
of the transition curve, and the n-letter perception scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import DomainError, NoTransitionFound
from .probability import (
    CostMatrix,
    Distribution,
    hamming_matrix,
    kl_divergence,
    tv_distance,
)
from .rdp import (
    RdpProblem,
    SolverConfig,
    SolverResult,
    solve_rdp_kl,
    solve_rdp_tv,
    solve_rdp_wasserstein,
)
from .transport import wasserstein

_MEASURES = ("w2", "tv", "kl")


@dataclass(frozen=True)
class CurveSample:
    """One point of a numerically traced curve."""

    abscissa: float
    ordinate: float
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TransitionPoint:
    """A (D, P) point on the trade-off plane with the rate achieved there."""

    D: float
    P: float
    rate: float
    method: str

    def __post_init__(self):
        if self.D < 0 or self.P < -1e-12:
            raise DomainError("transition coordinates must be non-negative")


def _solve_variant(measure, p, d, c, D, P, epsilon, cfg) -> SolverResult:
    if measure == "w2":
        return solve_rdp_wasserstein(RdpProblem(p, d, D, P, c=c, epsilon=epsilon), cfg)
    if measure == "tv":
        return solve_rdp_tv(RdpProblem(p, d, D, P, epsilon=epsilon), cfg)
    if measure == "kl":
        return solve_rdp_kl(RdpProblem(p, d, D, P, epsilon=epsilon), cfg)
    raise DomainError(f"unknown perception measure {measure!r}; pick from {_MEASURES}")


def _perception_of(measure, p, r, c) -> float:
    if measure == "w2":
        return wasserstein(p, r, c)
    if measure == "tv":
        return tv_distance(p, r)
    return kl_divergence(p, r)


def _inactive_budget(measure, c: CostMatrix | None) -> float:
    # Large enough that the perception multiplier is certified at zero.
    if measure == "kl":
        return 1e3
    return 10.0 * float(c.entries.max())


def transition_curve_via_rd(p: Distribution, d: CostMatrix, c: CostMatrix | None,
                            D_grid, measure: str = "w2",
                            epsilon: float = 0.01,
                            cfg: SolverConfig | None = None) -> list[TransitionPoint]:
    """Sample f(D) by solving the perception-free problem and pushing r forward.

    Each D is solved with the perception budget certified inactive
    (multiplier exactly zero at convergence); the transition ordinate is
    then the chosen divergence between p and the rate-distortion optimal
    reconstruction law.
    """
    if measure == "tv" and c is None:
        c = hamming_matrix(*d.shape)
    points = []
    for D in D_grid:
        res = _solve_variant(measure, p, d, c, float(D),
                             _inactive_budget(measure, c), epsilon, cfg)
        if res.dual.gamma != 0.0:
            raise DomainError(
                f"perception budget not certified inactive at D={D} (gamma={res.dual.gamma})")
        points.append(TransitionPoint(
            D=float(D),
            P=_perception_of(measure, p, res.r, c),
            rate=res.rate,
            method="rd-pushforward",
        ))
    return points


def detect_transition_point(samples, slope_tol: float = 1e-3) -> TransitionPoint:
    """First sample whose secant slope to its successor falls below slope_tol.

    Marks where the ordinate stops varying with the abscissa, e.g. where
    distortion stops responding to the perception budget on a fixed-rate
    cross-section.
    """
    if len(samples) < 3:
        raise ValueError("need at least 3 ordered samples")
    xs = np.array([s.abscissa for s in samples])
    ys = np.array([s.ordinate for s in samples])
    if np.any(np.diff(xs) <= 0):
        raise ValueError("samples must be strictly increasing in abscissa")
    slopes = np.abs(np.diff(ys) / np.diff(xs))
    hits = np.nonzero(slopes < slope_tol)[0]
    if hits.size == 0:
        raise NoTransitionFound(f"no secant slope below {slope_tol}")
    k = int(hits[0])
    return TransitionPoint(
        D=float(ys[k]),
        P=float(xs[k]),
        rate=float(samples[k].meta.get("rate", np.nan)),
        method="secant-slope",
    )


def _min_cost_given_ball_lp(p, a_col, c, P):
    """min_r sum_j a_j r_j s.t. a transport plan from p to r costs <= P.

    Written directly in the plan: min sum_kj Pi_kj a_j with row marginals
    p and sum Pi c <= P; the reconstruction law is the column marginal.
    """
    m, n = c.shape
    cost = np.tile(a_col, m)
    a_ub = c.ravel()[None, :]
    a_eq = np.zeros((m, m * n))
    for k in range(m):
        a_eq[k, k * n:(k + 1) * n] = 1.0
    res = linprog(cost, A_ub=a_ub, b_ub=[P], A_eq=a_eq, b_eq=p,
                  bounds=(0, None), method="highs")
    if not res.success:
        raise DomainError(f"upper-bound LP failed: {res.message}")
    plan = res.x.reshape(m, n)
    return float(res.fun), plan.sum(axis=0)


def _min_cost_given_kl(p, a_col, P):
    """min_r sum a_j r_j s.t. KL(p || r) <= P on the simplex (SLSQP)."""
    n = p.size
    floor = 1e-12

    def kl(r):
        pos = p > 0
        return float(np.sum(p[pos] * (np.log(p[pos]) - np.log(np.clip(r[pos], floor, None)))))

    res = minimize(
        lambda r: float(a_col @ r), p.copy(), method="SLSQP",
        bounds=[(floor, 1.0)] * n,
        constraints=[
            {"type": "eq", "fun": lambda r: r.sum() - 1.0},
            {"type": "ineq", "fun": lambda r: P - kl(r)},
        ],
        options={"maxiter": 500, "ftol": 1e-12},
    )
    if not res.success:
        raise DomainError(f"upper-bound KL solve failed: {res.message}")
    r = np.clip(res.x, 0.0, None)
    return float(a_col @ (r / r.sum())), r / r.sum()


def upper_bound_h(p: Distribution, d: CostMatrix, c: CostMatrix | None,
                  P_grid, measure: str = "w2") -> list[TransitionPoint]:
    """Sample the zero-rate bound h(P) = min_r sum_ij p_i r_j d_ij, d(p,r) <= P.

    At zero rate the channel rows all equal r, so the distortion is linear
    in r and the feasible set is a divergence ball around p; the W2/TV
    cases reduce to an exact LP and the KL case to a small convex solve.
    """
    if measure == "tv" and c is None:
        c = hamming_matrix(*d.shape)
    a_col = p.probs @ d.entries
    points = []
    for P in P_grid:
        if measure == "kl":
            value, _ = _min_cost_given_kl(p.probs, a_col, float(P))
        elif measure in ("w2", "tv"):
            value, _ = _min_cost_given_ball_lp(p.probs, a_col, c.entries, float(P))
        else:
            raise DomainError(f"unknown perception measure {measure!r}")
        points.append(TransitionPoint(D=value, P=float(P), rate=0.0, method="zero-rate"))
    return points


def free_marginal_min_cost(p: Distribution, c: CostMatrix) -> float:
    """min over plans with row marginal p and a free column marginal.

    This is the perception floor at any rate budget: each source symbol
    routes to its cheapest column, so a zero-diagonal cost yields 0.
    """
    return float((p.probs * c.entries.min(axis=1)).sum())


@dataclass(frozen=True)
class EndpointReport:
    """Numeric check of the transition-curve endpoint identity."""

    d_inf_zero: float
    p_at_endpoint: float
    difference: float
    f_points: tuple
    f_below_d: bool
    max_f_excess: float


def endpoint_identity_check(p: Distribution, d: CostMatrix,
                            grid_points: int = 20,
                            epsilon: float = 0.01,
                            cfg: SolverConfig | None = None) -> EndpointReport:
    """Verify D_inf(0) = P(0, D_inf(0)) and f(D) <= D when c = d.

    The zero-rate solution is the one-hot reconstruction at the column
    minimizing sum_i p_i d_ij; its perception cost under the same matrix
    is the same sum, so the endpoint identity is exact.  f samples come
    from the rate-distortion pushforward over a grid of [0, D_inf(0)].
    """
    a_col = p.probs @ d.entries
    j_star = int(np.argmin(a_col))
    d_inf_zero = float(a_col[j_star])
    p_endpoint = float((p.probs * d.entries[:, j_star]).sum())
    grid = np.linspace(0.0, d_inf_zero, grid_points)
    points = transition_curve_via_rd(p, d, d, grid, measure="w2",
                                     epsilon=epsilon, cfg=cfg)
    excess = max(pt.P - pt.D for pt in points)
    return EndpointReport(
        d_inf_zero=d_inf_zero,
        p_at_endpoint=p_endpoint,
        difference=abs(d_inf_zero - p_endpoint),
        f_points=tuple(points),
        f_below_d=excess <= 1e-9,
        max_f_excess=float(excess),
    )


def n_letter_rate(n: int, prob: RdpProblem, cfg: SolverConfig | None = None,
                  measure: str = "w2") -> float:
    """R^[n](D, P) = R(D, P/n) for tensorizing perception measures.

    Wasserstein, TV, and KL all scale linearly over n-fold products, so
    the n-letter solve is the single-letter solve at budget P/n.
    """
    if n < 1:
        raise DomainError("n must be a positive integer")
    scaled = RdpProblem(prob.p, prob.d, prob.D, prob.P / n,
                        c=prob.c, epsilon=prob.epsilon)
    return _solve_variant(measure, scaled.p, scaled.d, scaled.c,
                          scaled.D, scaled.P, scaled.epsilon, cfg).rate
