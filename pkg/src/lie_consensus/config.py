"""Scenario configuration: one JSON document per experiment.

A config names the group and potential by token, carries the graph
inline or by path, and fixes the flow, gains, initial condition and
integrator settings.  Parsing is strict; errors carry the offending
field.  ``config_to_dict(parse_config(...))`` is idempotent so configs
can be machine-generated for sweeps.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import graphs, groups, morse
from .dynamics import FlowMode, FlowSpec, SwarmState
from .errors import ConfigError

SWEEP_PARAMETERS = ("k_P", "k_D", "weight_scale", "dw_scale")


@dataclass(frozen=True)
class ScenarioConfig:
    group: str
    graph: dict
    potential: str
    mode: str = "first_order"
    k_p: float = 1.0
    k_d: float = 0.0
    natural_velocities: object = "zero"
    init: dict = field(default_factory=lambda: {"random": {"max_log_norm": 0.2}})
    integrator: str = "rk4"
    h: float = 1e-3
    t_end: float = 10.0
    sample_every: int = 1
    tol_c: float = 1e-10
    tol_v: float = 1e-8
    window: int = 100


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def parse_config(data, base_dir: str = ".") -> ScenarioConfig:
    """Parse a dict or JSON text into a validated ScenarioConfig."""
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from err
    _require(isinstance(data, dict), "config must be a JSON object")
    known = {
        "group", "graph", "potential", "mode", "k_p", "k_d",
        "natural_velocities", "init", "integrator", "h", "t_end",
        "sample_every", "tolerances",
    }
    unknown = set(data) - known
    _require(not unknown, f"unknown config fields: {sorted(unknown)}")

    _require("group" in data, "field 'group': missing")
    group_token = str(data["group"])
    try:
        desc = groups.parse_descriptor(group_token)
    except ValueError as err:
        raise ConfigError(f"field 'group': {err}") from err

    potential_token = data.get("potential")
    if potential_token is None:
        potential_token = morse.default_potential(desc).token
    try:
        morse.parse_potential(str(potential_token), desc)
    except ValueError as err:
        raise ConfigError(f"field 'potential': {err}") from err

    _require("graph" in data, "field 'graph': missing")
    graph_data = data["graph"]
    if isinstance(graph_data, str):
        path = graph_data if os.path.isabs(graph_data) else os.path.join(base_dir, graph_data)
        try:
            graph_dict = graphs.graph_to_dict(graphs.load_graph(path))
        except (OSError, ValueError, KeyError) as err:
            raise ConfigError(f"field 'graph': cannot load {graph_data!r}: {err}") from err
    else:
        try:
            graph_dict = graphs.graph_to_dict(graphs.graph_from_dict(graph_data))
        except (ValueError, KeyError, TypeError) as err:
            raise ConfigError(f"field 'graph': {err}") from err

    mode = str(data.get("mode", "first_order"))
    _require(
        mode in {m.value for m in FlowMode},
        f"field 'mode': must be one of {sorted(m.value for m in FlowMode)}",
    )
    k_p = float(data.get("k_p", 1.0))
    _require(k_p > 0, "field 'k_p': must be positive")
    k_d = float(data.get("k_d", 0.0))
    if mode == FlowMode.SECOND_ORDER.value:
        _require(k_d > 0, "field 'k_d': must be positive for the second-order flow")

    natural = data.get("natural_velocities", "zero")
    if natural != "zero":
        _require(isinstance(natural, list), "field 'natural_velocities': list or 'zero'")
        m = desc.algebra_dim
        for row in natural:
            _require(
                isinstance(row, list) and len(row) == m,
                f"field 'natural_velocities': each entry needs {m} coordinates",
            )
        natural = [[float(x) for x in row] for row in natural]

    init = data.get("init", {"random": {"max_log_norm": 0.2}})
    _require(isinstance(init, dict), "field 'init': must be an object")
    _require(
        ("positions" in init) != ("random" in init),
        "field 'init': exactly one of 'positions' or 'random'",
    )

    integrator = str(data.get("integrator", "rk4"))
    _require(integrator in ("rk4", "euler"), "field 'integrator': 'rk4' or 'euler'")
    h = float(data.get("h", 1e-3))
    _require(h > 0, "field 'h': must be positive")
    t_end = float(data.get("t_end", 10.0))
    _require(t_end > 0, "field 't_end': must be positive")
    sample_every = int(data.get("sample_every", 1))
    _require(sample_every >= 1, "field 'sample_every': must be >= 1")

    tols = data.get("tolerances", {})
    _require(isinstance(tols, dict), "field 'tolerances': must be an object")

    return ScenarioConfig(
        group=group_token,
        graph=graph_dict,
        potential=str(potential_token),
        mode=mode,
        k_p=k_p,
        k_d=k_d,
        natural_velocities=natural,
        init=init,
        integrator=integrator,
        h=h,
        t_end=t_end,
        sample_every=sample_every,
        tol_c=float(tols.get("tol_c", 1e-10)),
        tol_v=float(tols.get("tol_v", 1e-8)),
        window=int(tols.get("window", 100)),
    )


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), base_dir=os.path.dirname(os.path.abspath(path)))


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "group": cfg.group,
        "graph": cfg.graph,
        "potential": cfg.potential,
        "mode": cfg.mode,
        "k_p": cfg.k_p,
        "k_d": cfg.k_d,
        "natural_velocities": cfg.natural_velocities,
        "init": cfg.init,
        "integrator": cfg.integrator,
        "h": cfg.h,
        "t_end": cfg.t_end,
        "sample_every": cfg.sample_every,
        "tolerances": {"tol_c": cfg.tol_c, "tol_v": cfg.tol_v, "window": cfg.window},
    }


# ---------------------------------------------------------------------------
# resolution into runtime objects


def resolve_spec(cfg: ScenarioConfig) -> FlowSpec:
    desc = groups.parse_descriptor(cfg.group)
    return FlowSpec(
        mode=FlowMode(cfg.mode),
        k_p=cfg.k_p,
        k_d=cfg.k_d,
        graph=graphs.graph_from_dict(cfg.graph),
        potential=morse.parse_potential(cfg.potential, desc),
    )


def _natural_vectors(cfg: ScenarioConfig, desc, n: int):
    if cfg.mode != FlowMode.SYNC.value:
        return None
    if cfg.natural_velocities == "zero":
        return tuple(groups.zero_vector(desc) for _ in range(n))
    rows = cfg.natural_velocities
    if len(rows) != n:
        raise ConfigError(
            f"field 'natural_velocities': {len(rows)} entries for {n} agents"
        )
    return tuple(groups.algebra_vector(desc, row) for row in rows)


def build_initial_state(cfg: ScenarioConfig, rng: np.random.Generator) -> SwarmState:
    """Materialize the initial swarm; random inits draw per-agent algebra
    vectors in the configured log-norm ball and map them through exp."""
    desc = groups.parse_descriptor(cfg.group)
    n = int(cfg.graph["n"])
    if "positions" in cfg.init:
        payloads = cfg.init["positions"]
        if len(payloads) != n:
            raise ConfigError(f"field 'init.positions': {len(payloads)} entries for {n} agents")
        try:
            positions = tuple(groups.element_from_payload(desc, p) for p in payloads)
        except (ValueError, TypeError) as err:
            raise ConfigError(f"field 'init.positions': {err}") from err
    else:
        params = cfg.init["random"]
        radius = float(params.get("max_log_norm", 0.2))
        if radius <= 0:
            raise ConfigError("field 'init.random.max_log_norm': must be positive")
        positions = tuple(
            groups.exp(groups.random_algebra(desc, rng, radius)) for _ in range(n)
        )
    velocities = None
    if cfg.mode == FlowMode.SECOND_ORDER.value:
        rows = cfg.init.get("velocities")
        if rows is None:
            velocities = tuple(groups.zero_vector(desc) for _ in range(n))
        else:
            if len(rows) != n:
                raise ConfigError(f"field 'init.velocities': {len(rows)} entries for {n} agents")
            velocities = tuple(groups.algebra_vector(desc, row) for row in rows)
    return SwarmState(
        positions=positions,
        velocities=velocities,
        natural_velocities=_natural_vectors(cfg, desc, n),
    )


def state_to_dict(state: SwarmState) -> dict:
    out = {"positions": [groups.element_to_payload(g) for g in state.positions]}
    if state.velocities is not None:
        out["velocities"] = [[float(x) for x in v.coords] for v in state.velocities]
    if state.natural_velocities is not None:
        out["natural_velocities"] = [
            [float(x) for x in v.coords] for v in state.natural_velocities
        ]
    return out


def state_from_dict(cfg: ScenarioConfig, data: dict) -> SwarmState:
    desc = groups.parse_descriptor(cfg.group)
    try:
        positions = tuple(groups.element_from_payload(desc, p) for p in data["positions"])
        velocities = None
        if "velocities" in data:
            velocities = tuple(groups.algebra_vector(desc, row) for row in data["velocities"])
        natural = None
        if "natural_velocities" in data:
            natural = tuple(groups.algebra_vector(desc, row) for row in data["natural_velocities"])
        elif cfg.mode == FlowMode.SYNC.value:
            natural = _natural_vectors(cfg, desc, len(positions))
    except (KeyError, ValueError, TypeError) as err:
        raise ConfigError(f"state file: {err}") from err
    return SwarmState(positions=positions, velocities=velocities, natural_velocities=natural)


def apply_parameter(cfg: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    """Return a copy of the config with one sweep parameter applied."""
    if parameter == "k_P":
        return replace(cfg, k_p=float(value))
    if parameter == "k_D":
        return replace(cfg, k_d=float(value))
    if parameter == "weight_scale":
        g = dict(cfg.graph)
        g["edges"] = [[i, j, w * float(value)] for i, j, w in cfg.graph["edges"]]
        return replace(cfg, graph=g)
    if parameter == "dw_scale":
        if cfg.natural_velocities == "zero":
            raise ConfigError("dw_scale sweep requires explicit natural velocities")
        rows = np.array(cfg.natural_velocities, dtype=float)
        mean = rows.mean(axis=0)
        scaled = mean + float(value) * (rows - mean)
        return replace(cfg, natural_velocities=[[float(x) for x in r] for r in scaled])
    raise ConfigError(f"unknown sweep parameter {parameter!r}; choose from {SWEEP_PARAMETERS}")
