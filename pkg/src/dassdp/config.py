"""Experiment configuration.

Config files are YAML (JSON is accepted too, being a YAML subset). Every
key is optional; see README.md for an annotated example.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from dassdp.errors import ParameterError
from dassdp.plasticity import PlasticityParams

RULES = ("da-ssdp", "ssdp", "none")
GATE_MODES = ("per-sample", "per-batch")


@dataclass
class TaskConfig:
    name: str = "informative"
    n_train: int = 200
    n_test: int = 400
    n_classes: int = 4
    group_size: int = 10
    p_on: float = 0.5
    p_off: float = 0.1


@dataclass
class ModelConfig:
    hidden: int = 32
    membrane_decay: float = 0.5
    threshold: float = 1.0
    reset_mode: str = "subtract"
    readout_scale: float = 5.0
    init_scale: float = 1.5


@dataclass
class TrainConfig:
    warmup_epochs: int = 20
    total_epochs: int = 60
    batch_size: int = 16
    timesteps: int = 4
    seed: int = 0
    learning_rate: float = 1e-2
    optimizer: str = "adam"
    surrogate_width: float = 1.0
    rule: str = "da-ssdp"
    gate_mode: str = "per-sample"
    hooks: list = field(default_factory=lambda: ["fc2"])
    epsilon_sigma: float = 1e-8
    epsilon_k: float = 1e-3
    plasticity: PlasticityParams = field(default_factory=PlasticityParams)
    task: TaskConfig = field(default_factory=TaskConfig)
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if self.rule not in RULES:
            raise ParameterError(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.gate_mode not in GATE_MODES:
            raise ParameterError(f"gate_mode must be one of {GATE_MODES}, got {self.gate_mode!r}")
        if self.rule == "da-ssdp" and self.hooks and not self.warmup_epochs < self.total_epochs:
            raise ParameterError("warmup_epochs must be < total_epochs when DA-SSDP is enabled")
        if self.warmup_epochs < 0 or self.timesteps < 1 or self.batch_size < 1:
            raise ParameterError("warmup_epochs >= 0, timesteps >= 1 and batch_size >= 1 required")

    @property
    def plasticity_enabled(self) -> bool:
        return self.rule != "none" and bool(self.hooks)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict | None) -> "TrainConfig":
        data = dict(data or {})
        nested = {"plasticity": PlasticityParams, "task": TaskConfig, "model": ModelConfig}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        for key, sub in nested.items():
            if key in data:
                sub_known = {f.name for f in fields(sub)}
                bad = set(data[key]) - sub_known
                if bad:
                    raise ParameterError(f"unknown keys in {key}: {sorted(bad)}")
                data[key] = sub(**data[key])
        return cls(**data)


def load_config(path) -> TrainConfig:
    return TrainConfig.from_dict(yaml.safe_load(Path(path).read_text()))
