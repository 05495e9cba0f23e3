"""Run-config parsing: named domains, jump models, processes, command blocks.

Configs are TOML. Every run must carry an explicit integer seed (there is
no entropy default: outputs must be reproducible), all name references must
resolve, and unknown keys anywhere are hard errors.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import geometry
from .errors import ConfigError
from .geometry import Domain
from .jumps import GaussianIsotropic, JumpDensity, ProcessSpec, UniformOnSet

__all__ = ["RunConfig", "parse_config", "parse_config_text", "config_hash"]

_DOMAIN_KEYS = {
    "interval": {"shape", "lo", "hi"},
    "box": {"shape", "lo", "hi"},
    "ball": {"shape", "center", "radius"},
    "ellipsoid": {"shape", "center", "form"},
    "translate": {"shape", "base", "shift"},
    "linear_image": {"shape", "base", "matrix"},
    "grid_mask": {"shape", "file"},
}

_JUMP_KEYS = {
    "uniform": {"kind", "support"},
    "gaussian": {"kind", "sigma", "dimension"},
}

_COMMAND_KEYS = {
    "eig": {"process", "domain", "method", "resolution", "waive_assumptions"},
    "shc": {"process", "domain", "times", "n_paths"},
    "lambda_fit": {"csv", "domain", "max_rel_ci"},
    "riesz": {"mode", "count", "cell", "dimension", "f", "g", "h"},
    "lemmas": {
        "process",
        "domain",
        "start",
        "charfun_orders",
        "containment_orders",
        "frequencies",
        "n_accepted",
        "min_acceptance",
        "max_chains",
    },
}

_EXPERIMENT_KEYS = {
    "fk_sweep": {"process", "shapes", "method", "resolution"},
    "equality_case": {
        "regime",
        "domain",
        "support",
        "rate",
        "times",
        "n_paths",
        "expect_equality",
        "ellipsoid",
        "translation",
        "domain_scale",
        "support_scale",
    },
    "nonuniqueness": {"rate", "support", "domain1", "domain2", "times", "n_paths", "rel_tol"},
}

_TOP_KEYS = {"seed", "out", "domains", "jumps", "processes", "experiments"} | set(_COMMAND_KEYS)


@dataclass(frozen=True)
class RunConfig:
    seed: int
    out_dir: str
    domains: dict[str, Domain]
    jumps: dict[str, JumpDensity]
    processes: dict[str, ProcessSpec]
    commands: dict[str, dict]
    experiments: dict[str, dict]
    sha256: str
    raw: dict = field(repr=False, default_factory=dict)


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _reject_unknown(mapping: dict, allowed: set[str], where: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _vector(value, where: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim != 1:
        raise ConfigError(f"{where}: expected a number or flat list of numbers")
    return arr


def _build_domain(name: str, body: dict, domains: dict[str, Domain], base_dir: Path) -> Domain:
    where = f"[domains.{name}]"
    if "shape" not in body:
        raise ConfigError(f"{where}: missing 'shape'")
    shape = body["shape"]
    if shape not in _DOMAIN_KEYS:
        raise ConfigError(f"{where}: unknown shape {shape!r}")
    _reject_unknown(body, _DOMAIN_KEYS[shape], where)

    def ref(key):
        target = body[key]
        if target not in domains:
            raise ConfigError(f"{where}: reference to undefined domain {target!r}")
        return domains[target]

    if shape == "interval":
        return geometry.Interval(float(body["lo"]), float(body["hi"]))
    if shape == "box":
        return geometry.Box(_vector(body["lo"], where), _vector(body["hi"], where))
    if shape == "ball":
        return geometry.Ball(_vector(body["center"], where), float(body["radius"]))
    if shape == "ellipsoid":
        return geometry.Ellipsoid(_vector(body["center"], where), np.asarray(body["form"], float))
    if shape == "translate":
        return geometry.Translate(ref("base"), _vector(body["shift"], where))
    if shape == "linear_image":
        return geometry.apply_linear(ref("base"), np.asarray(body["matrix"], float))
    if shape == "grid_mask":
        return geometry.load_grid_set(base_dir / body["file"])
    raise AssertionError(shape)


def _build_jump(name: str, body: dict, domains: dict[str, Domain]) -> JumpDensity:
    where = f"[jumps.{name}]"
    if "kind" not in body:
        raise ConfigError(f"{where}: missing 'kind'")
    kind = body["kind"]
    if kind not in _JUMP_KEYS:
        raise ConfigError(f"{where}: unknown kind {kind!r}")
    _reject_unknown(body, _JUMP_KEYS[kind], where)
    if kind == "uniform":
        target = body["support"]
        if target not in domains:
            raise ConfigError(f"{where}: reference to undefined domain {target!r}")
        return UniformOnSet(domains[target])
    return GaussianIsotropic(float(body["sigma"]), int(body.get("dimension", 1)))


def parse_config_text(text: str, base_dir: Path | str = ".") -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    base_dir = Path(base_dir)
    _reject_unknown(data, _TOP_KEYS, "config top level")
    if "seed" not in data:
        raise ConfigError("seed required: every run must declare an explicit integer seed")
    if not isinstance(data["seed"], int) or isinstance(data["seed"], bool):
        raise ConfigError("seed must be an integer")
    seed = data["seed"]
    out_dir = data.get("out", ".")

    domains: dict[str, Domain] = {}
    for name, body in data.get("domains", {}).items():
        if not isinstance(body, dict):
            raise ConfigError(f"[domains.{name}] must be a table")
        domains[name] = _build_domain(name, body, domains, base_dir)

    jumps: dict[str, JumpDensity] = {}
    for name, body in data.get("jumps", {}).items():
        if not isinstance(body, dict):
            raise ConfigError(f"[jumps.{name}] must be a table")
        jumps[name] = _build_jump(name, body, domains)

    processes: dict[str, ProcessSpec] = {}
    for name, body in data.get("processes", {}).items():
        _reject_unknown(body, {"rate", "jump"}, f"[processes.{name}]")
        if "rate" not in body or "jump" not in body:
            raise ConfigError(f"[processes.{name}]: 'rate' and 'jump' are required")
        if body["jump"] not in jumps:
            raise ConfigError(f"[processes.{name}]: reference to undefined jump {body['jump']!r}")
        processes[name] = ProcessSpec(float(body["rate"]), jumps[body["jump"]])

    commands: dict[str, dict] = {}
    for cmd, allowed in _COMMAND_KEYS.items():
        if cmd in data:
            body = data[cmd]
            _reject_unknown(body, allowed, f"[{cmd}]")
            _check_refs(cmd, body, domains, processes)
            commands[cmd] = dict(body)

    experiments: dict[str, dict] = {}
    for name, body in data.get("experiments", {}).items():
        if name not in _EXPERIMENT_KEYS:
            raise ConfigError(f"unknown experiment {name!r}")
        _reject_unknown(body, _EXPERIMENT_KEYS[name], f"[experiments.{name}]")
        _check_refs(name, body, domains, processes)
        experiments[name] = dict(body)

    return RunConfig(
        seed=seed,
        out_dir=str(out_dir),
        domains=domains,
        jumps=jumps,
        processes=processes,
        commands=commands,
        experiments=experiments,
        sha256=config_hash(text),
        raw=data,
    )


def _check_refs(section: str, body: dict, domains, processes):
    for key in ("domain", "domain1", "domain2", "support", "ellipsoid"):
        if key in body and body[key] not in domains:
            raise ConfigError(f"[{section}]: reference to undefined domain {body[key]!r}")
    if "process" in body and body["process"] not in processes:
        raise ConfigError(f"[{section}]: reference to undefined process {body['process']!r}")
    if "shapes" in body:
        for ref in body["shapes"]:
            if ref not in domains:
                raise ConfigError(f"[{section}]: reference to undefined domain {ref!r}")


def parse_config(path) -> RunConfig:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), base_dir=path.parent)
