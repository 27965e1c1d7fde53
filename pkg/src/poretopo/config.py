"""Run configuration: a single versioned JSON document.

Only the domain and pore blocks are mandatory; everything else has the
standard defaults (material moduli of PDMS, 4:1 thickness ratio, 60% volume
limit, 50 optimizer iterations, 20 load steps).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .material import MaterialParams
from .mesh import DomainSpec, PoreSpec
from .sensitivity import DesignSpec

SCHEMA_VERSION = 1
MODES = ("optimize", "analyze", "flat-sheet")

PRESET_NAMES = ("cfcs1", "cfcs2", "cfcs3", "cfcs4")


@dataclass(frozen=True)
class SolverOptions:
    load_steps: int = 20
    newton_tol_scale: float = 1e-8
    max_newton_iterations: int = 10
    max_cutbacks: int = 4
    dump_states: bool = False

    def __post_init__(self):
        if self.load_steps < 1:
            raise ConfigError("load_steps must be >= 1")
        if self.newton_tol_scale <= 0:
            raise ConfigError("newton_tol_scale must be positive")
        if self.max_newton_iterations < 1:
            raise ConfigError("max_newton_iterations must be >= 1")
        if self.max_cutbacks < 0:
            raise ConfigError("max_cutbacks must be >= 0")


@dataclass(frozen=True)
class OptimizerOptions:
    iterations: int = 50
    move_limit: float = 0.2

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("optimizer iterations must be >= 1")
        if not 0 < self.move_limit <= 1:
            raise ConfigError("move limit must be in (0, 1]")


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec
    material: MaterialParams
    design: DesignSpec
    solver: SolverOptions = field(default_factory=SolverOptions)
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    initial_value: float = 0.4
    seed: int = 0
    mode: str = "optimize"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 <= self.initial_value <= 1:
            raise ConfigError("initial design value must lie in [0, 1]")

    @property
    def targets(self):
        return [p.target_hd for p in self.domain.pores]

    @property
    def weights(self):
        return [p.weight for p in self.domain.pores]


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return d[key]


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")

    dom = _require(doc, "domain", "configuration")
    pores = []
    for i, p in enumerate(doc.get("pores", [])):
        try:
            pores.append(PoreSpec(
                center=tuple(_require(p, "center", f"pores[{i}]")),
                width=float(_require(p, "width", f"pores[{i}]")),
                height=float(_require(p, "height", f"pores[{i}]")),
                target_hd=float(_require(p, "target_hd", f"pores[{i}]")),
                weight=float(p.get("weight", 1.0)),
            ))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid pores[{i}]: {exc}") from None

    try:
        domain = DomainSpec(
            L1=float(_require(dom, "L1", "domain")),
            L2=float(_require(dom, "L2", "domain")),
            nelx=int(_require(dom, "nelx", "domain")),
            nely=int(_require(dom, "nely", "domain")),
            stretch=float(_require(dom, "stretch", "domain")),
            pores=tuple(pores),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid domain block: {exc}") from None

    m = doc.get("material", {})
    material = MaterialParams(
        shear_modulus=float(m.get("shear_modulus", 0.68)),
        bulk_modulus=float(m.get("bulk_modulus", 3.42)),
        chain_segments=float(m.get("chain_segments", 8.0)),
    )

    d = doc.get("design", {})
    fr = d.get("filter_radius", None)
    design = DesignSpec(
        t_min=float(d.get("t_min", 0.5)),
        t_max=float(d.get("t_max", 2.0)),
        penalty=float(d.get("penalty", 1.0)),
        filter_radius=None if fr is None else float(fr),
        volume_fraction=float(d.get("volume_fraction", 0.6)),
    )

    s = doc.get("solver", {})
    solver = SolverOptions(
        load_steps=int(s.get("load_steps", 20)),
        newton_tol_scale=float(s.get("newton_tol_scale", 1e-8)),
        max_newton_iterations=int(s.get("max_newton_iterations", 10)),
        max_cutbacks=int(s.get("max_cutbacks", 4)),
        dump_states=bool(s.get("dump_states", False)),
    )

    o = doc.get("optimizer", {})
    optimizer = OptimizerOptions(
        iterations=int(o.get("iterations", 50)),
        move_limit=float(o.get("move_limit", 0.2)),
    )

    return RunConfig(
        domain=domain,
        material=material,
        design=design,
        solver=solver,
        optimizer=optimizer,
        initial_value=float(d.get("initial_value", 0.4)),
        seed=int(doc.get("seed", 0)),
        mode=str(doc.get("mode", "optimize")),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration file {path} is not valid JSON: {exc}") from None
    return config_from_dict(doc)


def load_preset(name: str) -> RunConfig:
    """Load one of the shipped design-case presets (cfcs1..cfcs4)."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; available: {PRESET_NAMES}")
    text = resources.files("poretopo.presets").joinpath(f"{name}.json").read_text()
    return config_from_dict(json.loads(text))


def preset_dict(name: str) -> dict:
    """Raw preset document, convenient for overriding fields."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; available: {PRESET_NAMES}")
    text = resources.files("poretopo.presets").joinpath(f"{name}.json").read_text()
    return json.loads(text)
