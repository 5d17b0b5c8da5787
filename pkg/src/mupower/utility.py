"""Per-user objective: SE, EE, their weighted composite, and derivatives.

For transmit power p (W), effective gain delta (1/W), circuit power pc (W)
and preference weight w in [0, 1]:

    se(p)        = ln(1 + delta p)                      [nats/s/Hz]
    ee(p)        = se(p) / (p + pc)                     [nats/J/Hz]
    u(p)         = se^w * ee^(1-w)                      (geometric tradeoff)
    utility(p)   = ln u = ln[ln(1 + delta p)] - (1 - w) ln(p + pc)

The proportional-fair log makes utility -> -inf as p -> 0+, so every
maximizer is strictly interior. The auxiliary function

    beta(p) = delta (p + pc) / [(1 + delta p) ln(1 + delta p)]

is strictly decreasing from +inf, and utility'(p) = [beta(p) - (1-w)] / (p + pc),
so the interior stationary point is the unique root of beta = 1 - w.

All functions broadcast over numpy arrays; natural logs throughout
(divide SE/EE by ln 2 for bit units; optimizers are unaffected).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class UserParams:
    """Per-user knobs: SE/EE weight w, circuit power and cap in watts."""

    w: float
    p_circuit: float
    p_max: float

    def __post_init__(self):
        if not (np.isfinite(self.w) and 0.0 <= self.w <= 1.0):
            raise ValueError(f"w must lie in [0, 1], got {self.w}")
        if not (np.isfinite(self.p_circuit) and self.p_circuit > 0):
            raise ValueError(f"p_circuit must be > 0, got {self.p_circuit}")
        if not (np.isfinite(self.p_max) and self.p_max > 0):
            raise ValueError(f"p_max must be > 0, got {self.p_max}")


def _require(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def se(p, delta):
    """Spectral efficiency ln(1 + delta p); requires p >= 0."""
    p = np.asarray(p, dtype=float)
    _require(bool(np.all(p >= 0)), "transmit power must be >= 0")
    return np.log1p(delta * p)


def ee(p, p_circuit, delta):
    """Energy efficiency ln(1 + delta p) / (p + p_circuit); requires p >= 0."""
    p = np.asarray(p, dtype=float)
    _require(bool(np.all(p >= 0)), "transmit power must be >= 0")
    return np.log1p(delta * p) / (p + p_circuit)


def utility(p, w, p_circuit, delta):
    """Log composite ln[ln(1 + delta p)] - (1 - w) ln(p + p_circuit); p > 0."""
    p = np.asarray(p, dtype=float)
    _require(bool(np.all(p > 0)), "utility needs p > 0 (it diverges at 0)")
    return np.log(np.log1p(delta * p)) - (1.0 - w) * np.log(p + p_circuit)


def composite_u(p, w, p_circuit, delta):
    """Weighted geometric composite se^w * ee^(1-w) = exp(utility); p > 0."""
    return np.exp(utility(p, w, p_circuit, delta))


def beta(p, p_circuit, delta):
    """delta (p + pc) / [(1 + delta p) ln(1 + delta p)]; strictly decreasing, p > 0."""
    p = np.asarray(p, dtype=float)
    _require(bool(np.all(p > 0)), "beta needs p > 0")
    dp = delta * p
    return delta * (p + p_circuit) / ((1.0 + dp) * np.log1p(dp))


def beta_prime(p, p_circuit, delta):
    """Analytic d beta / dp; negative everywhere on p > 0."""
    p = np.asarray(p, dtype=float)
    _require(bool(np.all(p > 0)), "beta_prime needs p > 0")
    dp = delta * p
    log_term = np.log1p(dp)
    num = (log_term - dp) - p_circuit * delta * (log_term + 1.0)
    return delta * num / ((1.0 + dp) * log_term) ** 2


def utility_grad(p, w, p_circuit, delta):
    """Analytic utility'(p) = [beta(p) - (1 - w)] / (p + p_circuit); p > 0."""
    return (beta(p, p_circuit, delta) - (1.0 - w)) / (np.asarray(p) + p_circuit)


def utility_hess(p, w, p_circuit, delta):
    """Analytic utility''(p); strictly negative below the stationary point."""
    p = np.asarray(p, dtype=float)
    total = p + p_circuit
    excess = beta(p, p_circuit, delta) - (1.0 - w)
    return (beta_prime(p, p_circuit, delta) * total - excess) / total**2


# Scalar twins of the functions above for root-finder hot loops, where
# numpy dispatch overhead dominates. Keep the formulas in lockstep.

def _beta_scalar(p: float, p_circuit: float, delta: float) -> float:
    dp = delta * p
    return delta * (p + p_circuit) / ((1.0 + dp) * math.log1p(dp))


def _beta_prime_scalar(p: float, p_circuit: float, delta: float) -> float:
    dp = delta * p
    log_term = math.log1p(dp)
    num = (log_term - dp) - p_circuit * delta * (log_term + 1.0)
    return delta * num / ((1.0 + dp) * log_term) ** 2


def _grad_scalar(p: float, w: float, p_circuit: float, delta: float) -> float:
    return (_beta_scalar(p, p_circuit, delta) - (1.0 - w)) / (p + p_circuit)


def _hess_scalar(p: float, w: float, p_circuit: float, delta: float) -> float:
    total = p + p_circuit
    excess = _beta_scalar(p, p_circuit, delta) - (1.0 - w)
    return (_beta_prime_scalar(p, p_circuit, delta) * total - excess) / total**2
