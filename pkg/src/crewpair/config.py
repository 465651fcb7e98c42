"""YAML experiment configuration and network files.

A config has up to six sections, all optional except ``network``::

    network:            # one of: generate / file / inline flights
      generate: {num_hubs: 3, num_spokes: 8, seed: 0}
    rules: {...}        # LegalityRules fields
    cost: {...}         # CostRules fields
    run: {...}          # RunConfig fields
    vgae: {...}         # VgaeConfig fields
    output: results     # output directory

A network file (written by ``crewpair gen``) holds ``bases`` and a list of
``[origin, destination, dep_time, arr_time]`` flights.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .netgen import NetGenConfig, generate_network
from .network import CostRules, Flight, FlightNetwork, LegalityRules
from .orchestrator import RunConfig
from .vgae import VgaeConfig


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    network: FlightNetwork
    rules: LegalityRules = field(default_factory=LegalityRules)
    cost: CostRules = field(default_factory=CostRules)
    run: RunConfig = field(default_factory=RunConfig)
    output: Path | None = None
    source: Path | None = None


def _build(cls, section: Any, name: str):
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(section) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {', '.join(unknown)}")
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {name!r} section: {exc}") from exc


def network_to_dict(network: FlightNetwork) -> dict:
    return {
        "bases": [b.airport for b in network.bases],
        "flights": [[f.origin, f.destination, f.dep_time, f.arr_time] for f in network],
    }


def network_from_dict(data: dict) -> FlightNetwork:
    try:
        flights = [Flight(k, str(o), str(d), int(dep), int(arr))
                   for k, (o, d, dep, arr) in enumerate(data["flights"])]
        return FlightNetwork(flights, [str(b) for b in data["bases"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad network description: {exc}") from exc


def save_network(network: FlightNetwork, path: str | Path):
    with open(path, "w") as fh:
        yaml.safe_dump(network_to_dict(network), fh, default_flow_style=None, sort_keys=False)


def load_network(path: str | Path) -> FlightNetwork:
    with open(path) as fh:
        return network_from_dict(yaml.safe_load(fh) or {})


def _network(section: Any, rules: LegalityRules, base_dir: Path) -> FlightNetwork:
    if not isinstance(section, dict):
        raise ConfigError("the 'network' section is required and must be a mapping")
    if "generate" in section:
        cfg = _build(NetGenConfig, section["generate"], "network.generate")
        return generate_network(cfg, rules)
    if "file" in section:
        path = Path(section["file"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"network file not found: {path}")
        return load_network(path)
    if "flights" in section:
        return network_from_dict(section)
    raise ConfigError("network section needs one of 'generate', 'file' or 'flights'")


def parse_config(data: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a YAML mapping")
    unknown = sorted(set(data) - {"network", "rules", "cost", "run", "vgae", "output"})
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(unknown)}")
    rules = _build(LegalityRules, data.get("rules"), "rules")
    cost = _build(CostRules, data.get("cost"), "cost")
    run_section = dict(data.get("run") or {})
    if "vgae" in run_section:
        raise ConfigError("put VGAE settings in the top-level 'vgae' section")
    run = _build(RunConfig, run_section, "run")
    if data.get("vgae") is not None:
        run.vgae = _build(VgaeConfig, data["vgae"], "vgae")
    network = _network(data.get("network"), rules, Path(base_dir))
    output = None
    if data.get("output"):
        output = Path(data["output"])
        if not output.is_absolute():
            output = Path(base_dir) / output
    return ExperimentConfig(network, rules, cost, run, output)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    cfg = parse_config(data, path.parent)
    cfg.source = path
    return cfg
