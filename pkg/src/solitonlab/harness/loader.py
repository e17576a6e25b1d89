"""Read experiment configurations from TOML and validate every invariant.

Violations are collected, not raised one at a time, so a single
``ConfigError`` names each offending field.
"""
from __future__ import annotations

import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
from pydantic import BaseModel, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 fallback
    import tomli as tomllib

from ..core.config import get_settings
from ..core.exceptions import ConfigError
from ..profile.family import GUARD_WIDTH
from .schemas import ExperimentConfig

logger = logging.getLogger(__name__)


def _prune(data: Any, model: type[BaseModel], prefix: str = "") -> Any:
    """Drop keys the schema does not know, logging each one."""
    if not isinstance(data, Mapping):
        return data
    kept: dict[str, Any] = {}
    for key, value in data.items():
        field = model.model_fields.get(key)
        if field is None:
            logger.warning("Ignoring unknown config key %s%s", prefix, key)
            continue
        annotation = field.annotation
        nested = annotation if isinstance(annotation, type) and issubclass(annotation, BaseModel) else None
        if nested is None:
            for arg in getattr(annotation, "__args__", ()):
                if isinstance(arg, type) and issubclass(arg, BaseModel):
                    nested = arg
        kept[key] = _prune(value, nested, f"{prefix}{key}.") if nested is not None else value
    return kept


def _field_problems(error: ValidationError) -> list[str]:
    problems = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "config"
        problems.append(f"{location}: {item['msg']}")
    return problems


def _semantic_problems(config: ExperimentConfig) -> list[str]:
    problems: list[str] = []
    d = config.dimension
    try:
        grid = config.grid.build()
    except ValueError as exc:
        problems.append(f"grid: {exc}")
        grid = None
    try:
        domain = config.parameters.build()
        if not domain.contains(config.initial.mu):
            problems.append(
                f"initial.mu: {config.initial.mu:g} outside parameters "
                f"[{domain.mu_min:g}, {domain.mu_max:g}]"
            )
    except ValueError as exc:
        problems.append(f"parameters: {exc}")
    try:
        config.build_nonlinearity()
    except ValueError as exc:
        problems.append(f"nonlinearity: {exc}")
    try:
        config.build_potential()
    except ValueError as exc:
        problems.append(f"potential: {exc}")
    for name in ("position", "velocity", "bump_center"):
        values = getattr(config.initial, name)
        if values and len(values) != d:
            problems.append(f"initial.{name}: needs {d} entries, got {len(values)}")
    if problems:
        return problems

    sigma = config.sigma0()
    try:
        t_end = config.t_end()
    except ValueError as exc:
        return [f"evolution.t_end: {exc}"]
    if t_end < 0:
        problems.append("evolution.t_end: must be non-negative")
    checkpoint = config.evolution.checkpoint
    if checkpoint is not None and not 0 < checkpoint <= t_end:
        problems.append(f"evolution.checkpoint: {checkpoint:g} outside (0, {t_end:g}]")
    if grid is not None:
        margin = GUARD_WIDTH / np.sqrt(sigma.mu)
        if any(abs(a) + margin > grid.half_extent for a in sigma.a):
            problems.append(
                f"initial.position: soliton at {sigma.a} with guard {margin:.3g} "
                f"does not fit half-extent {grid.half_extent:g}"
            )
    eps_v = config.build_potential().eps_v
    if eps_v > 0 and config.evolution.dt > 0.01 / eps_v:
        problems.append(f"evolution.dt: {config.evolution.dt:g} exceeds 0.01/eps_v")
    return problems


def check_config(config: ExperimentConfig, *, label: str = "") -> ExperimentConfig:
    """Raise ``ConfigError`` listing every cross-field violation of an already typed config."""
    problems = _semantic_problems(config)
    if problems:
        raise ConfigError(problems=[f"{label}{problem}" for problem in problems])
    return config


def parse_config(data: Mapping[str, Any], *, strict: Optional[bool] = None) -> ExperimentConfig:
    strict = get_settings().strict_config if strict is None else strict
    payload = data if strict else _prune(data, ExperimentConfig)
    try:
        config = ExperimentConfig.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(problems=_field_problems(exc)) from exc
    return check_config(config)


def load_config(path: str | Path, *, strict: Optional[bool] = None) -> ExperimentConfig:
    source = Path(path)
    if not source.is_file():
        raise ConfigError(problems=[f"{source}: file not found"])
    try:
        with source.open("rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(problems=[f"{source}: {exc}"]) from exc
    config = parse_config(data, strict=strict)
    logger.info("Loaded config %s (run %s)", source, config.run.name)
    return config


def canonical_json(config: ExperimentConfig) -> str:
    return json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def run_id(config: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def resolved_config(config: ExperimentConfig) -> dict[str, Any]:
    """The config with defaults filled and derived quantities echoed."""
    potential = config.build_potential()
    return {
        **config.model_dump(mode="json"),
        "derived": {
            "t_end": config.t_end(),
            "eps_v": potential.eps_v,
            "potential": potential.describe(),
            "sigma0": config.sigma0().as_dict(),
            "evolution": config.evolution_config().describe(config.grid.build()),
        },
        "run_id": run_id(config),
    }
