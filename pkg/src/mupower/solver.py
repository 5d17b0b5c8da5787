"""Centralized optimal power allocation.

The non-convex sum-utility problem is solved by tightening each user's box
to the cap p_u_i at which the individual utility peaks (unique because
beta is strictly decreasing), which makes the objective strictly concave
on the shrunken box:

  * if the caps fit the system budget, the caps are the optimum;
  * otherwise the optimum lies on the slice sum(p) = p_sum_max and is found
    by projected gradient ascent, refined to machine precision by bisecting
    the budget price lambda (each user's power is the inverse of its
    marginal utility at that price).

Every solve is certified against the KKT system before it is returned.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .channel import EffectiveGains
from .utility import (
    UserParams,
    _beta_prime_scalar,
    _beta_scalar,
    _grad_scalar,
    _hess_scalar,
    ee,
    se,
    utility,
    utility_grad,
)

# Iteration budget for the fixed-step gradient-projection phase; the dual
# refinement that follows is exact, so this only bounds time spent in the
# slowly-contracting fixed-step loop (contraction ~ 1 - gp_step * |U''|).
_GP_PHASE_MAX = 500

# Bisection depth for the projection multiplier; a final shift over the
# free coordinates makes the sum exact, so this only has to pin the
# active set.
_PROJ_BISECT_ITER = 48


class ConvergenceError(RuntimeError):
    """An iterative stage exhausted its budget or failed its certificate."""


class BudgetCase(enum.Enum):
    """Whether the system power budget binds at the optimum."""

    SUM_SLACK = "sum_slack"
    SUM_TIGHT = "sum_tight"


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and step sizes for the centralized solver."""

    tol_root: float = 1e-12     # |beta - (1-w)| at the cap root
    tol_kkt: float = 1e-8       # max acceptable KKT residual
    tol_step: float = 1e-10     # sup-norm stop for gradient projection
    max_iter: int = 100_000
    gp_step: float = 1e-3       # watts per unit gradient, no line search
    p_floor: float = 1e-9       # arithmetic floor standing in for p = 0

    def __post_init__(self):
        for name in ("tol_root", "tol_kkt", "tol_step", "gp_step", "p_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class Scenario:
    """A full problem instance: users, gains, and the system budget (W)."""

    users: tuple[UserParams, ...]
    gains: EffectiveGains
    p_sum_max: float
    settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        users = tuple(self.users)
        if len(users) < 1:
            raise ValueError("need at least one user")
        if len(users) != len(self.gains):
            raise ValueError(
                f"{len(users)} users but {len(self.gains)} effective gains"
            )
        if not (np.isfinite(self.p_sum_max) and self.p_sum_max > 0):
            raise ValueError(f"p_sum_max must be > 0, got {self.p_sum_max}")
        object.__setattr__(self, "users", users)

    @classmethod
    def from_arrays(cls, w, p_circuit, p_max, gains, p_sum_max, settings=None):
        """Build a scenario from parallel parameter vectors (scalars broadcast)."""
        if not isinstance(gains, EffectiveGains):
            gains = EffectiveGains(gains)
        n = len(gains)
        w, p_circuit, p_max = (np.broadcast_to(np.asarray(v, dtype=float), (n,)) for v in (w, p_circuit, p_max))
        users = tuple(UserParams(*t) for t in zip(w, p_circuit, p_max))
        return cls(users, gains, float(p_sum_max), settings or SolverSettings())

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def w(self) -> np.ndarray:
        return np.array([u.w for u in self.users])

    @property
    def p_circuit(self) -> np.ndarray:
        return np.array([u.p_circuit for u in self.users])

    @property
    def p_max(self) -> np.ndarray:
        return np.array([u.p_max for u in self.users])

    @property
    def delta(self) -> np.ndarray:
        return self.gains.delta


@dataclass
class KktReport:
    """Residuals of the first-order optimality system at an allocation.

    Multipliers are reconstructed from (p, p_u, lambda): mu for the lower
    bounds (active when p sits at the arithmetic floor), nu for the caps.
    """

    stationarity: np.ndarray     # |U' + mu - nu - lambda| per user
    comp_lower: np.ndarray       # |mu * p|
    comp_upper: np.ndarray       # |nu * (p - p_u)|
    comp_sum: float              # |lambda * (sum p - p_sum_max)|
    box_gap: np.ndarray          # violation of 0 <= p <= p_u
    sum_gap: float               # violation of sum p <= p_sum_max
    mu: np.ndarray
    nu: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(
            max(
                self.stationarity.max(),
                self.comp_lower.max(),
                self.comp_upper.max(),
                self.comp_sum,
                self.box_gap.max(),
                self.sum_gap,
            )
        )


@dataclass
class Diagnostics:
    """Per-user quality measures plus solver effort counters."""

    se: np.ndarray
    ee: np.ndarray
    utilities: np.ndarray
    total_utility: float
    kkt: KktReport
    newton_iterations: np.ndarray
    gp_iterations: int
    refine_evaluations: int


@dataclass
class Allocation:
    """Solver output: powers, caps, budget price and diagnostics.

    Solver-produced instances satisfy p_floor <= p <= p_u <= p_max and
    sum(p) <= p_sum_max (tight in the SUM_TIGHT case). The container does
    not enforce this so that hand-built points can be fed to the KKT
    checker.
    """

    p: np.ndarray
    p_u: np.ndarray
    lam: float
    case: BudgetCase
    diagnostics: Diagnostics | None = None


def _bracketed_newton(f, df, lo, hi, tol_f, max_iter):
    """Root of a strictly decreasing f with f(lo) > 0 > f(hi).

    Newton steps with the analytic derivative, falling back to bisection
    whenever a step leaves the current bracket. Returns (root, n_evals).
    """
    f_lo, f_hi = f(lo), f(hi)
    evals = 2
    if f_hi >= -abs(tol_f):
        return hi, evals
    if f_lo <= 0:
        raise ConvergenceError("root bracket is invalid: f(lo) <= 0")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = f(x)
        evals += 1
        if abs(fx) <= tol_f:
            return x, evals
        if fx > 0:
            lo = x
        else:
            hi = x
        d = df(x)
        step_ok = d < 0
        if step_ok:
            x_new = x - fx / d
            step_ok = lo < x_new < hi
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if x_new == x or hi - lo <= np.finfo(float).eps * max(abs(lo), abs(hi)):
            return x, evals
        x = x_new
    raise ConvergenceError(f"root finder exhausted {max_iter} iterations")


def _compute_pu_counted(params: UserParams, delta_i: float, settings: SolverSettings):
    if not delta_i > 0:
        raise ValueError(f"delta must be > 0, got {delta_i}")
    target = 1.0 - params.w
    if target < _beta_scalar(params.p_max, params.p_circuit, delta_i):
        return params.p_max, 0
    root, evals = _bracketed_newton(
        lambda p: _beta_scalar(p, params.p_circuit, delta_i) - target,
        lambda p: _beta_prime_scalar(p, params.p_circuit, delta_i),
        settings.p_floor,
        params.p_max,
        settings.tol_root,
        settings.max_iter,
    )
    return float(root), evals


def compute_pu(params: UserParams, delta_i: float, settings: SolverSettings) -> float:
    """Individually optimal power cap: p_max if the preference weight
    exceeds 1 - beta(p_max), else the unique root of beta = 1 - w."""
    return _compute_pu_counted(params, delta_i, settings)[0]


def _project_with_multiplier(y, caps, total, p_floor):
    """Euclidean projection onto {p_floor <= x <= caps, sum x = total}.

    The projection is x = clip(y - mu, p_floor, caps) for the scalar mu at
    which the (monotone, piecewise-linear) coordinate sum equals total; mu
    is located by bisection and the residual budget is spread over the
    free coordinates so the sum constraint holds to machine precision.
    """
    y = np.asarray(y, dtype=float)
    caps = np.broadcast_to(np.asarray(caps, dtype=float), y.shape)
    n = y.size
    if float(np.sum(caps)) < total:
        raise ValueError(
            f"projection infeasible: sum of caps {np.sum(caps):.6g} < total {total:.6g}"
        )
    if total < n * p_floor:
        raise ValueError(
            f"projection infeasible: total {total:.6g} < N * p_floor {n * p_floor:.6g}"
        )
    y_list = y.tolist()
    caps_list = caps.tolist()
    lo = min(yi - ci for yi, ci in zip(y_list, caps_list))
    hi = max(y_list) - p_floor
    if hi <= lo:
        hi = lo + 1.0
    for _ in range(_PROJ_BISECT_ITER):
        mid = 0.5 * (lo + hi)
        s = 0.0
        for yi, ci in zip(y_list, caps_list):
            v = yi - mid
            if v < p_floor:
                v = p_floor
            elif v > ci:
                v = ci
            s += v
        if s > total:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)
    x = np.clip(y - mu, p_floor, caps)
    free = (x > p_floor) & (x < caps)
    n_free = int(np.count_nonzero(free))
    if n_free:
        shift = (total - float(np.sum(x))) / n_free
        x = np.where(free, x + shift, x)
        x = np.clip(x, p_floor, caps)
        mu -= shift
    return x, mu


def project_capped_simplex(y, caps, total, p_floor=1e-9) -> np.ndarray:
    """Projection of y onto the capped simplex (see _project_with_multiplier)."""
    x, _ = _project_with_multiplier(y, caps, total, p_floor)
    return x


def _gp_phase(sc: Scenario, p_u: np.ndarray):
    """Fixed-step projected gradient ascent on the budget-tight slice.

    Starts from the projection of the caps and iterates
    p <- project(p + gp_step * grad U(p)) until the sup-norm step drops
    below tol_step or the phase budget runs out. Returns the last iterate,
    iterations used, and the last projection multiplier (an estimate of
    gp_step * lambda).
    """
    st = sc.settings
    w, pc, delta = sc.w, sc.p_circuit, sc.delta
    p, mu = _project_with_multiplier(p_u, p_u, sc.p_sum_max, st.p_floor)
    budget = min(st.max_iter, _GP_PHASE_MAX)
    iters = 0
    for iters in range(1, budget + 1):
        grad = utility_grad(p, w, pc, delta)
        p_next, mu = _project_with_multiplier(
            p + st.gp_step * grad, p_u, sc.p_sum_max, st.p_floor
        )
        move = float(np.max(np.abs(p_next - p)))
        p = p_next
        if move <= st.tol_step:
            break
    return p, iters, mu


def _invert_marginal(lam, w_i, pc_i, delta_i, cap, p_floor, tol):
    """Power at which U'(p) = lam on [p_floor, cap] (U' is decreasing there)."""
    if _grad_scalar(cap, w_i, pc_i, delta_i) >= lam:
        return cap, 1
    if _grad_scalar(p_floor, w_i, pc_i, delta_i) <= lam:
        return p_floor, 2
    return _bracketed_newton(
        lambda p: _grad_scalar(p, w_i, pc_i, delta_i) - lam,
        lambda p: _hess_scalar(p, w_i, pc_i, delta_i),
        p_floor,
        cap,
        tol,
        10_000,
    )


def _dual_refine(sc: Scenario, p_u: np.ndarray):
    """Solve the budget-tight problem exactly by bisecting the price lambda.

    For each candidate price the per-user powers are the clipped inverses
    of the marginal utility; the coordinate sum is decreasing in lambda,
    so bisection pins the price, and the leftover budget is spread across
    the strictly interior coordinates.
    """
    st = sc.settings
    w, pc, delta = sc.w, sc.p_circuit, sc.delta
    total = sc.p_sum_max
    inner_tol = 1e-13
    evals = 0

    def powers_at(lam):
        nonlocal evals
        p = np.empty(sc.n_users)
        for i in range(sc.n_users):
            p[i], used = _invert_marginal(
                lam, w[i], pc[i], delta[i], p_u[i], st.p_floor, inner_tol
            )
            evals += used
        return p

    lo, hi = 0.0, 1.0
    for _ in range(200):
        if float(np.sum(powers_at(hi))) <= total:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket the budget price")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(np.sum(powers_at(mid))) > total:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    lam = 0.5 * (lo + hi)
    p = powers_at(lam)
    interior = (p > st.p_floor) & (p < p_u)
    n_int = int(np.count_nonzero(interior))
    if n_int:
        p = np.where(interior, p + (total - float(np.sum(p))) / n_int, p)
        p = np.clip(p, st.p_floor, p_u)
        lam = float(np.mean(utility_grad(p[interior], w[interior], pc[interior], delta[interior])))
    return p, lam, evals


def kkt_residuals(sc: Scenario, alloc: Allocation) -> KktReport:
    """Residuals of the optimality system at an (arbitrary) allocation.

    Reconstructs the bound multipliers from the price: mu = max(0, lam - U')
    where p sits at the floor, nu = max(0, U' - lam) where p sits at its
    cap, then reports stationarity, complementary slackness, and primal
    feasibility gaps.
    """
    p = np.asarray(alloc.p, dtype=float)
    p_u = np.asarray(alloc.p_u, dtype=float)
    lam = float(alloc.lam)
    grad = utility_grad(p, sc.w, sc.p_circuit, sc.delta)
    floor = sc.settings.p_floor
    scale = np.maximum(1.0, p_u)
    at_lower = (p - floor) <= 1e-10 * scale
    at_upper = (p_u - p) <= 1e-10 * scale
    mu = np.where(at_lower, np.maximum(0.0, lam - grad), 0.0)
    nu = np.where(at_upper, np.maximum(0.0, grad - lam), 0.0)
    total = float(np.sum(p))
    return KktReport(
        stationarity=np.abs(grad + mu - nu - lam),
        comp_lower=np.abs(mu * p),
        comp_upper=np.abs(nu * (p - p_u)),
        comp_sum=abs(lam * (total - sc.p_sum_max)),
        box_gap=np.maximum(np.maximum(p - p_u, -p), 0.0),
        sum_gap=max(0.0, total - sc.p_sum_max),
        mu=mu,
        nu=nu,
    )


def solve_centralized(sc: Scenario) -> Allocation:
    """Optimal power allocation for a scenario, KKT-certified.

    Computes the individual caps, returns them directly when the budget
    has slack, and otherwise ascends the budget-tight slice by gradient
    projection followed by an exact dual-bisection refinement. Raises
    ConvergenceError if the final KKT residual exceeds settings.tol_kkt.
    """
    st = sc.settings
    newton_iters = np.zeros(sc.n_users, dtype=int)
    p_u = np.empty(sc.n_users)
    for i, (user, d) in enumerate(zip(sc.users, sc.delta)):
        p_u[i], newton_iters[i] = _compute_pu_counted(user, d, st)

    gp_iters = 0
    refine_evals = 0
    if float(np.sum(p_u)) <= sc.p_sum_max:
        p = p_u.copy()
        lam = 0.0
        case = BudgetCase.SUM_SLACK
    else:
        p, gp_iters, _mu = _gp_phase(sc, p_u)
        p, lam, refine_evals = _dual_refine(sc, p_u)
        case = BudgetCase.SUM_TIGHT
        # certify the gradient-projection fixed point at the refined allocation
        p_again, _ = _project_with_multiplier(
            p + st.gp_step * utility_grad(p, sc.w, sc.p_circuit, sc.delta),
            p_u,
            sc.p_sum_max,
            st.p_floor,
        )
        if float(np.max(np.abs(p_again - p))) > st.tol_step:
            raise ConvergenceError(
                "refined allocation is not a gradient-projection fixed point"
            )

    alloc = Allocation(p=p, p_u=p_u, lam=lam, case=case)
    report = kkt_residuals(sc, alloc)
    if report.max_residual > st.tol_kkt:
        raise ConvergenceError(
            f"KKT residual {report.max_residual:.3e} exceeds tol_kkt {st.tol_kkt:.1e}"
        )
    utilities = utility(p, sc.w, sc.p_circuit, sc.delta)
    alloc.diagnostics = Diagnostics(
        se=se(p, sc.delta),
        ee=ee(p, sc.p_circuit, sc.delta),
        utilities=utilities,
        total_utility=float(np.sum(utilities)),
        kkt=report,
        newton_iterations=newton_iters,
        gp_iterations=gp_iters,
        refine_evaluations=refine_evals,
    )
    return alloc
