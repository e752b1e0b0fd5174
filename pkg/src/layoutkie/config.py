"""Run configuration: nested key/value files with strict key checking."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .encoder import EncoderConfig
from .heads import HeadConfig

__all__ = ["OptimizerConfig", "RunConfig", "ConfigError", "load_config", "config_to_dict"]

TASKS = ("pretrain", "ee_bio", "ee_spade", "el_spade")


class ConfigError(ValueError):
    pass


@dataclass
class OptimizerConfig:
    learning_rate: float = 5e-5
    weight_decay: float = 0.01
    warmup_fraction: float = 0.1
    batch_size: int = 8
    steps: int = 1000       # pretraining
    epochs: int = 10        # fine-tuning
    grad_clip: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if self.steps <= 0 or self.epochs <= 0:
            raise ConfigError("steps and epochs must be positive")


@dataclass
class RunConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    heads: HeadConfig = field(default_factory=HeadConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    task: str = "pretrain"
    train_count: int | None = None
    train_fraction: float | None = None
    el_gold_heads: bool = True
    relaxed_match: bool = False

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        self.heads.hidden = self.encoder.hidden


def _build(cls, data: dict, path: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown key {path}{key!r}")
        ftype = fields[key].type
        if isinstance(value, dict):
            sub = {
                "encoder": EncoderConfig,
                "heads": HeadConfig,
                "optimizer": OptimizerConfig,
            }.get(key)
            if sub is None:
                raise ConfigError(f"key {path}{key!r} does not take a table")
            kwargs[key] = _build(sub, value, f"{path}{key}.")
        else:
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    data = {}
    if path is not None:
        with open(path, encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in key:
            section, sub = key.split(".", 1)
            data.setdefault(section, {})[sub] = value
        else:
            data[key] = value
    return _build(RunConfig, data, "")


def config_to_dict(cfg) -> dict:
    if dataclasses.is_dataclass(cfg):
        return {f.name: config_to_dict(getattr(cfg, f.name)) for f in dataclasses.fields(cfg)}
    if isinstance(cfg, tuple):
        return list(cfg)
    return cfg
