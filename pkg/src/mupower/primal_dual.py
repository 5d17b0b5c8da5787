"""Distributed primal-dual power allocation.

Each user ascends its own marginal utility minus the broadcast budget
price, while the receiver raises the price with the budget violation:

    dP_i/dt    = k_i * [U_i'(P_i) - lambda]  clamped to keep P_i in [0, p_u_i]
    dlambda/dt = g   * [sum(P) - p_sum_max]  clamped to keep lambda >= 0

integrated here with explicit Euler steps of unit virtual time, so k_i
and g are the literal per-iteration gains. The only signalling is one
price broadcast down and one power report per user up, per step.

The quadratic distance to the centralized optimum,

    V = 1/2 sum_i (P_i - P_i*)^2 / k_i + (lambda - lambda*)^2 / (2 g),

is non-increasing along the continuous flow; the integrator records it as
a convergence certificate (up to explicit-Euler slack).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .solver import Allocation, Scenario, _compute_pu_counted, solve_centralized
from .utility import utility, utility_grad


@dataclass(frozen=True)
class PdSettings:
    """Gains and stopping rules for the primal-dual integrator.

    k may be a scalar (broadcast over users) or a per-user vector;
    init_p defaults to half the individual caps when left as None.
    """

    k: float | np.ndarray = 1e-3
    g: float = 1e-3
    init_p: np.ndarray | None = None
    init_lambda: float = 0.0
    tol_eq: float = 1e-10
    max_steps: int = 10_000_000
    record_every: int = 100

    def __post_init__(self):
        if not np.all(np.asarray(self.k) > 0):
            raise ValueError("primal gains k must be > 0")
        if not self.g > 0:
            raise ValueError("dual gain g must be > 0")
        if not self.init_lambda >= 0:
            raise ValueError("init_lambda must be >= 0")
        if not self.tol_eq > 0:
            raise ValueError("tol_eq must be > 0")
        if self.max_steps < 1 or self.record_every < 1:
            raise ValueError("max_steps and record_every must be >= 1")


@dataclass
class Trajectory:
    """Decimated time series of the integration plus overhead counters."""

    t: np.ndarray               # recorded step indices
    p: np.ndarray               # shape (n_records, n_users)
    lam: np.ndarray
    total_utility: np.ndarray
    v: np.ndarray               # Lyapunov distance to the centralized optimum
    messages_broadcast: int     # price broadcasts = steps taken
    messages_uplink: int        # power reports = n_users * steps taken
    converged: bool
    steps_taken: int
    p_final: np.ndarray
    lam_final: float


def clamp_plus(f, z):
    """max(f, 0) while z <= 0, f otherwise (keeps z from leaving z >= 0)."""
    return np.where(np.asarray(z) <= 0, np.maximum(f, 0.0), f)


def clamp_box(f, z, a):
    """max(f, 0) at z <= 0, min(f, 0) at z >= a, f in between (keeps z in [0, a])."""
    z = np.asarray(z)
    return np.where(z <= 0, np.maximum(f, 0.0), np.where(z >= a, np.minimum(f, 0.0), f))


def step(state, sc: Scenario, p_u: np.ndarray, settings: PdSettings):
    """One explicit-Euler step of the primal-dual dynamics.

    The clamp arguments are shifted by the arithmetic floor so the clamp
    boundaries coincide with the box the powers actually live in, and the
    updated state is re-projected into that box to absorb Euler overshoot.
    Costs one price broadcast plus one power report per user.
    """
    p, lam = state
    floor = sc.settings.p_floor
    k = np.broadcast_to(np.asarray(settings.k, dtype=float), p.shape)
    drive = utility_grad(p, sc.w, sc.p_circuit, sc.delta) - lam
    p_new = np.clip(
        p + k * clamp_box(drive, p - floor, p_u - floor), floor, p_u
    )
    lam_drive = clamp_plus(float(np.sum(p)) - sc.p_sum_max, lam)
    lam_new = max(0.0, lam + settings.g * float(lam_drive))
    if not (np.all(np.isfinite(p_new)) and np.isfinite(lam_new)):
        raise FloatingPointError(
            "primal-dual state became non-finite; gains are likely too large"
        )
    return p_new, lam_new


def lyapunov(p, lam, p_star, lam_star, settings: PdSettings) -> float:
    """Gain-weighted squared distance to the reference point (0 iff equal)."""
    p = np.asarray(p, dtype=float)
    k = np.broadcast_to(np.asarray(settings.k, dtype=float), p.shape)
    return float(
        0.5 * np.sum((p - np.asarray(p_star)) ** 2 / k)
        + (lam - lam_star) ** 2 / (2.0 * settings.g)
    )


def integrate(
    sc: Scenario,
    settings: PdSettings | None = None,
    reference: Allocation | None = None,
) -> Trajectory:
    """Run the primal-dual dynamics until per-step motion dies out.

    Convergence is declared when the largest coordinate move (powers and
    price) in one step drops below tol_eq; the Lyapunov monitor needs the
    centralized optimum, which is solved internally unless a reference
    allocation is supplied.
    """
    settings = settings or PdSettings()
    p_u = np.array(
        [_compute_pu_counted(u, d, sc.settings)[0] for u, d in zip(sc.users, sc.delta)]
    )
    if reference is None:
        reference = solve_centralized(sc)
    p_star, lam_star = reference.p, reference.lam

    if settings.init_p is None:
        p = 0.5 * p_u
    else:
        p = np.array(settings.init_p, dtype=float)
        if p.shape != p_u.shape:
            raise ValueError(f"init_p has shape {p.shape}, expected {p_u.shape}")
        if np.any(p <= 0) or np.any(p > p_u):
            raise ValueError("init_p must lie in (0, p_u]")
    p = np.clip(p, sc.settings.p_floor, p_u)
    lam = float(settings.init_lambda)

    rec_t, rec_p, rec_lam, rec_u, rec_v = [], [], [], [], []

    def record(t_idx, p_now, lam_now):
        rec_t.append(t_idx)
        rec_p.append(p_now.copy())
        rec_lam.append(lam_now)
        rec_u.append(float(np.sum(utility(p_now, sc.w, sc.p_circuit, sc.delta))))
        rec_v.append(lyapunov(p_now, lam_now, p_star, lam_star, settings))

    record(0, p, lam)
    converged = False
    steps = 0
    for t in range(1, settings.max_steps + 1):
        p_next, lam_next = step((p, lam), sc, p_u, settings)
        motion = max(float(np.max(np.abs(p_next - p))), abs(lam_next - lam))
        p, lam = p_next, lam_next
        steps = t
        if t % settings.record_every == 0:
            record(t, p, lam)
        if motion <= settings.tol_eq:
            converged = True
            break
    if steps % settings.record_every != 0:
        record(steps, p, lam)

    return Trajectory(
        t=np.array(rec_t, dtype=int),
        p=np.array(rec_p),
        lam=np.array(rec_lam),
        total_utility=np.array(rec_u),
        v=np.array(rec_v),
        messages_broadcast=steps,
        messages_uplink=sc.n_users * steps,
        converged=converged,
        steps_taken=steps,
        p_final=p.copy(),
        lam_final=lam,
    )


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Dump a trajectory as CSV: t, P_1..P_N, lambda, total_utility, V."""
    n = traj.p.shape[1]
    header = ["t"] + [f"P_{i + 1}" for i in range(n)] + ["lambda", "total_utility", "V"]
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for j in range(traj.t.size):
            cells = [str(int(traj.t[j]))]
            cells += [f"{x:.12g}" for x in traj.p[j]]
            cells += [
                f"{traj.lam[j]:.12g}",
                f"{traj.total_utility[j]:.12g}",
                f"{traj.v[j]:.12g}",
            ]
            f.write(",".join(cells) + "\n")
