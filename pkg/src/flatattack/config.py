"""Run configuration for the FLATATTACK system.

A run is described by one YAML document whose top-level sections map onto
the models below. Unknown keys are errors, missing keys take the defaults
shown here, and the effective configuration (``model_dump(mode="json")``)
is echoed into every manifest. See docs/CONFIG.md for the grammar.

The only environment-driven settings are presentation ones
(``OutputSettings``: FLATATTACK_VERBOSITY, FLATATTACK_COLOR).
"""

import logging
from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from flatattack.attacks.config import AttackConfig
from flatattack.attacks.variants import ALGORITHMS
from flatattack.errors import ConfigError, FlatAttackError
from flatattack.harness.datasets import DatasetSpec
from flatattack.harness.zoo import DEFAULT_ZOO, ModelSpec
from flatattack.models.training import TrainConfig
from flatattack.observability.logging import OutputSettings

logger = logging.getLogger(__name__)

CONFIG_SCHEMA_VERSION = 1

# section -> name of its seed field; filled from the master seed when absent
SEEDED_SECTIONS = {"dataset": "seed", "train": "init_seed", "attack": "seed"}


class ExperimentSection(BaseModel):
    """What ``report`` runs beyond the zoo itself."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    algorithms: list[str] = Field(default_factory=lambda: ["mi", "afa"], min_length=1)
    surrogates: Optional[list[str]] = None
    max_examples: Optional[int] = Field(default=None, ge=1)
    selection: Literal["leading", "boundary"] = "leading"
    reach_fraction: float = Field(default=0.5, gt=0)
    eps_values: list[float] = Field(default_factory=lambda: [4 / 255, 8 / 255, 16 / 255])
    diversity_examples: int = Field(default=50, ge=0)
    ensemble: list[str] = Field(default_factory=list)

    @field_validator("algorithms")
    @classmethod
    def _known_algorithms(cls, value: list[str]) -> list[str]:
        unknown = [a for a in value if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithm {unknown[0]!r}; choose from {', '.join(ALGORITHMS)}")
        return value

    @field_validator("eps_values")
    @classmethod
    def _positive_eps(cls, value: list[float]) -> list[float]:
        if any(e <= 0 for e in value):
            raise ValueError("every eps must be positive")
        return value


class RunConfigFile(BaseModel):
    """Top-level configuration document."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    schema_version: Literal[1] = CONFIG_SCHEMA_VERSION
    seed: int = Field(default=0, ge=0)
    output_dir: str = "runs/default"
    dataset: DatasetSpec = DatasetSpec()
    train: TrainConfig = TrainConfig()
    zoo: list[ModelSpec] = Field(default_factory=lambda: list(DEFAULT_ZOO))
    attack: AttackConfig = AttackConfig()
    experiment: ExperimentSection = ExperimentSection()

    @model_validator(mode="before")
    @classmethod
    def _inherit_master_seed(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        master = data.get("seed", 0)
        for section, key in SEEDED_SECTIONS.items():
            body = data.get(section)
            if body is None:
                data[section] = {key: master}
            elif isinstance(body, dict) and key not in body:
                data[section] = {**body, key: master}
        return data

    def effective(self) -> dict[str, Any]:
        return self.model_dump(mode="json")

    def with_seed(self, seed: int) -> "RunConfigFile":
        """Same run under another master seed, every section seed included."""
        return self.model_copy(
            update={
                "seed": seed,
                "dataset": self.dataset.model_copy(update={"seed": seed}),
                "train": self.train.model_copy(update={"init_seed": seed}),
                "attack": self.attack.updated(seed=seed),
            }
        )


def _describe(error: dict[str, Any]) -> tuple[str, str]:
    loc = [str(p) for p in error["loc"]]
    path = ""
    for part in loc[:-1]:
        path += f"[{part}]" if part.isdigit() else (f".{part}" if path else part)
    key = loc[-1] if loc else "<root>"
    if error["type"] == "extra_forbidden":
        where = f" (in section '{path}')" if path else ""
        return f"unknown key: {key}{where}", ".".join(loc)
    dotted = ".".join(loc) or "<root>"
    return f"invalid value for {dotted}: {error['msg']}", dotted


def _deep_merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_run_config(raw: Any, overrides: Optional[dict[str, Any]] = None) -> RunConfigFile:
    """Validate a raw mapping, applying nested ``overrides`` first.

    Raises:
        ConfigError: Naming the first offending key.
    """
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"a config document must be a mapping, got {type(raw).__name__}")
    data = _deep_merge(raw, overrides or {})
    try:
        return RunConfigFile.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        message, key = _describe(first)
        if e.error_count() > 1:
            message += f" (and {e.error_count() - 1} more)"
        raise ConfigError(message, key=key) from None


def load_run_config(path: Optional[Path], overrides: Optional[dict[str, Any]] = None) -> RunConfigFile:
    """Read a YAML config (or defaults when ``path`` is None) and validate it."""
    raw: Any = {}
    if path is not None:
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text())
        except OSError as e:
            raise FlatAttackError(f"could not read config: {e}", context={"path": str(path)}) from e
        except yaml.YAMLError as e:
            raise ConfigError(f"config is not valid YAML: {e}") from e
    config = parse_run_config(raw, overrides)
    logger.debug("Loaded config (seed=%d, output_dir=%s)", config.seed, config.output_dir)
    return config


def dump_run_config(config: RunConfigFile) -> str:
    """YAML text that ``load_run_config`` reads back to an equal config."""
    return yaml.safe_dump(config.effective(), sort_keys=True)


__all__ = [
    "CONFIG_SCHEMA_VERSION",
    "ExperimentSection",
    "OutputSettings",
    "RunConfigFile",
    "dump_run_config",
    "load_run_config",
    "parse_run_config",
]
