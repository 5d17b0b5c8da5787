"""Scenario files: flat key/value YAML with units spelled out in key names.

Example::

    n_users: 2
    receive_antennas: 2
    delta_db: [20.0, 20.0]          # or channel_csv + sigma2_watts
    w: [0.5, 0.5]                   # scalars broadcast to all users
    p_max_individual_watts: 1.0
    p_circuit_watts: 0.1
    p_sum_max_watts: 1.5
    pd_gain_primal: 0.001
    pd_gain_dual: 0.001

Exactly one of delta_db / channel_csv must be present; channel_csv paths
are resolved relative to the scenario file and require sigma2_watts.
Solver and primal-dual settings accept overrides under solver_* / pd_*
keys. Unknown keys are rejected.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import yaml

from .channel import ChannelRealization, compute_effective_gains, gains_from_db, load_channel_csv
from .primal_dual import PdSettings
from .solver import Scenario, SolverSettings

_SOLVER_KEYS = {
    "solver_tol_root": "tol_root",
    "solver_tol_kkt": "tol_kkt",
    "solver_tol_step": "tol_step",
    "solver_max_iter": "max_iter",
    "solver_gp_step": "gp_step",
    "solver_p_floor_watts": "p_floor",
}
_PD_KEYS = {
    "pd_gain_primal": "k",
    "pd_gain_dual": "g",
    "pd_init_p_watts": "init_p",
    "pd_init_lambda": "init_lambda",
    "pd_tol_eq": "tol_eq",
    "pd_max_steps": "max_steps",
    "pd_record_every": "record_every",
}
_KNOWN_KEYS = {
    "n_users",
    "receive_antennas",
    "delta_db",
    "channel_csv",
    "sigma2_watts",
    "w",
    "p_max_individual_watts",
    "p_circuit_watts",
    "p_sum_max_watts",
    "seed",
} | set(_SOLVER_KEYS) | set(_PD_KEYS)


@dataclass
class LoadedScenario:
    """A parsed scenario file: the problem instance plus harness settings."""

    scenario: Scenario
    pd: PdSettings
    seed: int | None
    receive_antennas: int | None
    source: str


def _broadcast(value, n, key):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        return np.full(n, float(arr[0]))
    if arr.size != n:
        raise ValueError(f"{key} has {arr.size} entries, expected {n} (n_users)")
    return arr.astype(float)


def build_scenario(doc: dict, base_dir: str = ".", source: str = "<dict>") -> LoadedScenario:
    """Validate a scenario mapping and assemble the solver structures."""
    if not isinstance(doc, dict):
        raise ValueError(f"{source}: scenario document must be a mapping")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise ValueError(f"{source}: unknown keys {sorted(unknown)}")

    if "n_users" not in doc:
        raise ValueError(f"{source}: n_users is required")
    n = int(doc["n_users"])
    if n < 1:
        raise ValueError(f"{source}: n_users must be >= 1, got {n}")

    has_db = "delta_db" in doc
    has_csv = "channel_csv" in doc
    if has_db == has_csv:
        raise ValueError(f"{source}: exactly one of delta_db / channel_csv must be given")
    if has_db:
        gains = gains_from_db(_broadcast(doc["delta_db"], n, "delta_db"))
    else:
        if "sigma2_watts" not in doc:
            raise ValueError(f"{source}: channel_csv requires sigma2_watts")
        path = os.path.join(base_dir, str(doc["channel_csv"]))
        h = load_channel_csv(path, n)
        gains = compute_effective_gains(ChannelRealization(h, float(doc["sigma2_watts"])))

    antennas = doc.get("receive_antennas")
    if antennas is not None:
        antennas = int(antennas)
        if antennas < n:
            raise ValueError(
                f"{source}: receive_antennas {antennas} < n_users {n}"
            )

    for key in ("w", "p_max_individual_watts", "p_circuit_watts", "p_sum_max_watts"):
        if key not in doc:
            raise ValueError(f"{source}: {key} is required")

    solver_kwargs = {}
    for key, attr in _SOLVER_KEYS.items():
        if key in doc:
            solver_kwargs[attr] = int(doc[key]) if attr == "max_iter" else float(doc[key])
    settings = SolverSettings(**solver_kwargs)

    scenario = Scenario.from_arrays(
        w=_broadcast(doc["w"], n, "w"),
        p_circuit=_broadcast(doc["p_circuit_watts"], n, "p_circuit_watts"),
        p_max=_broadcast(doc["p_max_individual_watts"], n, "p_max_individual_watts"),
        gains=gains,
        p_sum_max=float(doc["p_sum_max_watts"]),
        settings=settings,
    )

    pd_kwargs = {}
    for key, attr in _PD_KEYS.items():
        if key not in doc:
            continue
        if attr == "k":
            val = np.asarray(doc[key], dtype=float)
            pd_kwargs[attr] = _broadcast(val, n, key) if val.ndim else float(val)
        elif attr == "init_p":
            pd_kwargs[attr] = _broadcast(doc[key], n, key)
        elif attr in ("max_steps", "record_every"):
            pd_kwargs[attr] = int(doc[key])
        else:
            pd_kwargs[attr] = float(doc[key])
    pd = PdSettings(**pd_kwargs)

    seed = doc.get("seed")
    return LoadedScenario(
        scenario=scenario,
        pd=pd,
        seed=None if seed is None else int(seed),
        receive_antennas=antennas,
        source=source,
    )


def load_scenario(path) -> LoadedScenario:
    """Read and validate a scenario YAML file."""
    with open(path) as f:
        doc = yaml.safe_load(f)
    return build_scenario(doc, base_dir=os.path.dirname(os.path.abspath(path)), source=str(path))
