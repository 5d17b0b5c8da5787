"""Uplink channel model: per-user effective gains under zero-forcing detection.

With N single-antenna users and an M-antenna receiver (M >= N), the ZF
detector decouples the users and leaves user i with SINR delta_i * P_i,
where the effective gain is

    delta_i = 1 / (sigma2 * [(H^H H)^-1]_ii)        [1/W]

Experiments usually specify delta directly in dB, so the raw matrix path
is optional.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Gram matrices with condition estimates above this are treated as rank
# deficient (ZF noise amplification blows up well before this point).
GRAM_CONDITION_LIMIT = 1e12


class SingularGramError(ValueError):
    """Channel Gram matrix H^H H is singular or too ill-conditioned to invert."""


def _gram_condition(h: np.ndarray) -> float:
    """Condition-number estimate of H^H H from the singular values of H."""
    s = np.linalg.svd(h, compute_uv=False)
    if s[-1] == 0.0:
        return np.inf
    return float((s[0] / s[-1]) ** 2)


@dataclass(frozen=True)
class ChannelRealization:
    """Complex M x N uplink channel matrix plus receiver noise power (W).

    Rows index receive antennas, columns index users. Requires M >= N and
    full column rank; construction fails otherwise.
    """

    h: np.ndarray
    sigma2: float

    def __post_init__(self):
        h = np.array(self.h, dtype=complex)
        if h.ndim != 2:
            raise ValueError(f"channel matrix must be 2-D, got shape {h.shape}")
        m, n = h.shape
        if m < n:
            raise ValueError(
                f"need at least as many receive antennas as users, got M={m} < N={n}"
            )
        if not np.all(np.isfinite(h)):
            raise ValueError("channel matrix has non-finite entries")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"noise power must be positive, got {self.sigma2}")
        cond = _gram_condition(h)
        if cond > GRAM_CONDITION_LIMIT:
            raise SingularGramError(
                f"Gram matrix condition estimate {cond:.3e} exceeds "
                f"{GRAM_CONDITION_LIMIT:.0e}; channel columns are not independent"
            )
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def n_antennas(self) -> int:
        return self.h.shape[0]

    @property
    def n_users(self) -> int:
        return self.h.shape[1]


@dataclass(frozen=True)
class EffectiveGains:
    """Linear per-user SINR-per-watt gains delta_i (units 1/W), all > 0."""

    delta: np.ndarray

    def __post_init__(self):
        delta = np.atleast_1d(np.array(self.delta, dtype=float))
        if delta.ndim != 1 or delta.size == 0:
            raise ValueError("delta must be a non-empty vector")
        if not np.all(np.isfinite(delta)) or np.any(delta <= 0):
            raise ValueError("effective gains must be finite and strictly positive")
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)

    def __len__(self) -> int:
        return self.delta.size


def compute_effective_gains(ch: ChannelRealization) -> EffectiveGains:
    """Effective ZF gains delta_i = 1 / (sigma2 * [(H^H H)^-1]_ii).

    The Gram matrix is inverted through its Cholesky factor (it is
    Hermitian positive definite for any full-column-rank H).
    """
    cond = _gram_condition(ch.h)
    if cond > GRAM_CONDITION_LIMIT:
        raise SingularGramError(
            f"Gram matrix condition estimate {cond:.3e} exceeds {GRAM_CONDITION_LIMIT:.0e}"
        )
    gram = ch.h.conj().T @ ch.h
    chol = scipy.linalg.cho_factor(gram)
    gram_inv = scipy.linalg.cho_solve(chol, np.eye(ch.n_users, dtype=complex))
    diag = np.real(np.diagonal(gram_inv))
    return EffectiveGains(1.0 / (ch.sigma2 * diag))


def gains_from_db(delta_db) -> EffectiveGains:
    """Convert power-dB gains to linear: delta = 10^(dB/10)."""
    delta_db = np.atleast_1d(np.asarray(delta_db, dtype=float))
    if not np.all(np.isfinite(delta_db)):
        raise ValueError("dB gains must be finite")
    return EffectiveGains(10.0 ** (delta_db / 10.0))


def random_rayleigh_channel(
    n_antennas: int, n_users: int, seed: int, sigma2: float = 1.0
) -> ChannelRealization:
    """I.i.d. unit-variance circularly-symmetric complex Gaussian channel."""
    rng = np.random.default_rng(seed)
    h = (
        rng.standard_normal((n_antennas, n_users))
        + 1j * rng.standard_normal((n_antennas, n_users))
    ) / np.sqrt(2.0)
    return ChannelRealization(h, sigma2)


def load_channel_csv(path, n_users: int) -> np.ndarray:
    """Read an M x N complex channel matrix from CSV.

    One row per receive antenna. Two cell layouts are accepted:
      * N columns of complex literals, e.g. ``0.3+0.5j``;
      * 2N real columns as (re, im) pairs per user.
    The layout is inferred from the column count.
    """
    with open(path, newline="") as f:
        rows = [row for row in csv.reader(f) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValueError(f"empty channel CSV: {path}")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"ragged rows in channel CSV: {path}")
    if width == n_users:
        try:
            h = np.array([[complex(c.strip()) for c in row] for row in rows])
        except ValueError as exc:
            raise ValueError(f"bad complex entry in {path}: {exc}") from exc
    elif width == 2 * n_users:
        real = np.array([[float(c) for c in row] for row in rows])
        h = real[:, 0::2] + 1j * real[:, 1::2]
    else:
        raise ValueError(
            f"channel CSV has {width} columns; expected {n_users} complex "
            f"or {2 * n_users} (re, im) columns"
        )
    return h
