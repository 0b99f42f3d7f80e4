"""Experiment configuration: a single JSON object, fully validated.

Unknown keys are rejected, every default is applied explicitly, and the
resolved grid can be re-emitted with ``emit_config`` such that
``parse_config(emit_config(grid)) == grid``.

Schema (all keys optional):

    m, R, eta, local_steps, batch_size, root_seed, scale, n_per_client,
    record_every, start_phase ("A"|"B"), allow_ragged, late_window_frac,
    output_dir,
    method, T                      -- single-run values
    method_list, T_list, p_list, seeds  -- sweep axes
    dims: {d_out, d_in, r}
    topology: {kind, p, policy, alpha, edges}
    heterogeneity: {pattern, delta, k_components} or {skew, delta}

``TADLORA_SEED`` may supply root_seed from the environment; setting both the
environment variable and an explicit config value is an error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Any, Mapping

from tadlora.errors import InvalidConfigError
from tadlora.model import (
    HeterogeneityProfile,
    ModelDims,
    binary_skew_profile,
    three_way_skew_profile,
    uniform_profile,
)
from tadlora.protocol import Method, Phase, RunConfig, TopologyConfig
from tadlora.topology import GRAPH_KINDS, POLICY_KINDS

DEFAULT_T_LIST = (1, 2, 3, 5, 10, 15)
DEFAULT_P_LIST = (0.5, 0.2, 0.1, 0.05, 0.02, 0.01)
DEFAULT_SEEDS = (0, 1, 2)

_TOP_KEYS = {
    "m", "R", "dims", "method", "method_list", "T", "T_list", "p_list",
    "seeds", "eta", "local_steps", "batch_size", "topology", "heterogeneity",
    "root_seed", "scale", "n_per_client", "record_every", "start_phase",
    "allow_ragged", "late_window_frac", "output_dir",
}
_DIMS_KEYS = {"d_out", "d_in", "r"}
_TOPO_KEYS = {"kind", "p", "policy", "alpha", "edges"}
_HET_KEYS = {"pattern", "skew", "delta", "k_components"}
_PATTERNS = ("binary_skew", "three_way_skew", "uniform")


@dataclass(frozen=True)
class ExperimentGrid:
    base: RunConfig
    p_list: tuple[float, ...]
    T_list: tuple[int, ...]
    method_list: tuple[Method, ...]
    seeds: tuple[int, ...]
    output_dir: str | None
    late_window_frac: float

    def cells(self) -> list[tuple[Method, float, int, int]]:
        """All (method, p, T, seed) cells in deterministic order."""
        return [
            (method, p, t, seed)
            for method in self.method_list
            for p in self.p_list
            for t in self.T_list
            for seed in self.seeds
        ]

    def cell_config(self, method: Method, p: float, t: int, seed: int) -> RunConfig:
        return replace(
            self.base,
            method=method,
            T=t,
            topology=replace(self.base.topology, p=p),
            root_seed=seed,
        )


def _reject_unknown(doc: Mapping[str, Any], allowed: set[str], where: str) -> None:
    for key in doc:
        if key not in allowed:
            raise InvalidConfigError(f"unknown key {key!r} in {where}")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidConfigError(msg)


def _parse_method(name: Any) -> Method:
    try:
        return Method(str(name))
    except ValueError:
        valid = ", ".join(m.value for m in Method)
        raise InvalidConfigError(f"method {name!r} not one of: {valid}") from None


def _parse_heterogeneity(doc: Mapping[str, Any], m: int) -> HeterogeneityProfile:
    _reject_unknown(doc, _HET_KEYS, "heterogeneity section")
    delta = float(doc.get("delta", 1.0))
    if "skew" in doc:
        _require("pattern" not in doc, "heterogeneity: give either 'skew' or 'pattern', not both")
        skew = tuple(tuple(float(w) for w in row) for row in doc["skew"])
        return HeterogeneityProfile(skew=skew, delta=delta)
    pattern = doc.get("pattern", "binary_skew")
    _require(pattern in _PATTERNS, f"heterogeneity pattern {pattern!r} not one of {_PATTERNS}")
    if pattern == "binary_skew":
        return binary_skew_profile(m, delta)
    if pattern == "three_way_skew":
        return three_way_skew_profile(m, delta)
    return uniform_profile(m, int(doc.get("k_components", 2)), delta)


def parse_config(doc: str | Mapping[str, Any], env_seed: str | None = None) -> ExperimentGrid:
    """Validate a config document and resolve every default."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise InvalidConfigError(f"config is not valid JSON: {exc}") from None
    _require(isinstance(doc, Mapping), "config document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "config")

    m = int(doc.get("m", 10))
    r_rounds = int(doc.get("R", 150))

    dims_doc = doc.get("dims", {})
    _reject_unknown(dims_doc, _DIMS_KEYS, "dims section")
    dims = ModelDims(
        d_out=int(dims_doc.get("d_out", 16)),
        d_in=int(dims_doc.get("d_in", 12)),
        r=int(dims_doc.get("r", 4)),
    )

    topo_doc = doc.get("topology", {})
    _reject_unknown(topo_doc, _TOPO_KEYS, "topology section")
    kind = topo_doc.get("kind", "complete")
    _require(kind in GRAPH_KINDS, f"topology kind {kind!r} not one of {GRAPH_KINDS}")
    policy = topo_doc.get("policy", "laplacian_step")
    _require(policy in POLICY_KINDS, f"topology policy {policy!r} not one of {POLICY_KINDS}")
    edges = topo_doc.get("edges")
    topology = TopologyConfig(
        kind=kind,
        p=None if topo_doc.get("p") is None else float(topo_doc["p"]),
        policy=policy,
        alpha=None if topo_doc.get("alpha") is None else float(topo_doc["alpha"]),
        edges=None if edges is None else tuple((int(i), int(j)) for i, j in edges),
    )

    het = _parse_heterogeneity(doc.get("heterogeneity", {}), m)

    if env_seed is not None:
        _require(
            "root_seed" not in doc,
            "root_seed set both in the config and via TADLORA_SEED; remove one",
        )
        try:
            root_seed = int(env_seed)
        except ValueError:
            raise InvalidConfigError(f"TADLORA_SEED={env_seed!r} is not an integer") from None
    else:
        root_seed = int(doc.get("root_seed", 0))

    start = str(doc.get("start_phase", "B")).upper()
    _require(start in ("A", "B"), f"start_phase {doc.get('start_phase')!r} must be 'A' or 'B'")

    batch = doc.get("batch_size")
    base = RunConfig(
        dims=dims,
        m=m,
        method=_parse_method(doc.get("method", "tad_lora")),
        T=int(doc.get("T", 1)),
        R=r_rounds,
        eta=float(doc.get("eta", 0.1)),
        local_steps=int(doc.get("local_steps", 1)),
        batch_size=None if batch is None else int(batch),
        topology=topology,
        heterogeneity=het,
        root_seed=root_seed,
        scale=float(doc.get("scale", 1.0)),
        n_per_client=int(doc.get("n_per_client", 64)),
        record_every=int(doc.get("record_every", 1)),
        start_phase=Phase(start),
        allow_ragged=bool(doc.get("allow_ragged", False)),
    )
    base.validate()

    if "T_list" in doc:
        t_list = tuple(int(t) for t in doc["T_list"])
        _require(len(t_list) > 0, "T_list must be nonempty")
        for t in t_list:
            _require(t >= 1, f"T={t} must be >= 1")
            if r_rounds % t != 0 and not base.allow_ragged:
                raise InvalidConfigError(
                    f"T={t} does not divide R={r_rounds}; switching intervals are "
                    f"restricted to divisors of the round horizon"
                )
    else:
        t_list = tuple(t for t in DEFAULT_T_LIST if r_rounds % t == 0)
        if base.T not in t_list:
            t_list = tuple(sorted(set(t_list) | {base.T}))

    if "p_list" in doc:
        p_list = tuple(float(p) for p in doc["p_list"])
        _require(len(p_list) > 0, "p_list must be nonempty")
        for p in p_list:
            _require(0.0 <= p <= 1.0, f"p={p} outside [0, 1]")
    else:
        p_list = DEFAULT_P_LIST

    methods = tuple(
        _parse_method(name) for name in doc.get("method_list", [base.method.value])
    )
    _require(len(methods) > 0, "method_list must be nonempty")

    seeds = tuple(int(s) for s in doc.get("seeds", DEFAULT_SEEDS))
    _require(len(seeds) > 0, "seeds must be nonempty")

    frac = float(doc.get("late_window_frac", 0.4))
    _require(0.0 < frac <= 1.0, f"late_window_frac={frac} outside (0, 1]")

    out = doc.get("output_dir")
    return ExperimentGrid(
        base=base,
        p_list=p_list,
        T_list=t_list,
        method_list=methods,
        seeds=seeds,
        output_dir=None if out is None else str(out),
        late_window_frac=frac,
    )


def emit_config(grid: ExperimentGrid) -> dict[str, Any]:
    """Canonical fully-explicit document; round-trips through parse_config."""
    base = grid.base
    return {
        "m": base.m,
        "R": base.R,
        "dims": {"d_out": base.dims.d_out, "d_in": base.dims.d_in, "r": base.dims.r},
        "method": base.method.value,
        "method_list": [m.value for m in grid.method_list],
        "T": base.T,
        "T_list": list(grid.T_list),
        "p_list": list(grid.p_list),
        "seeds": list(grid.seeds),
        "eta": base.eta,
        "local_steps": base.local_steps,
        "batch_size": base.batch_size,
        "topology": {
            "kind": base.topology.kind,
            "p": base.topology.p,
            "policy": base.topology.policy,
            "alpha": base.topology.alpha,
            "edges": None if base.topology.edges is None else [list(e) for e in base.topology.edges],
        },
        "heterogeneity": {
            "skew": [list(row) for row in base.profile().skew],
            "delta": base.profile().delta,
        },
        "root_seed": base.root_seed,
        "scale": base.scale,
        "n_per_client": base.n_per_client,
        "record_every": base.record_every,
        "start_phase": base.start_phase.value,
        "allow_ragged": base.allow_ragged,
        "late_window_frac": grid.late_window_frac,
        "output_dir": grid.output_dir,
    }
