"""Run configuration: paper-default parameters with JSON round-trip.

A bare run (no config file) reproduces the published configuration: blot
defaults from the strikethrough parameter list, a 128-px line height, the
six-lexicon tokenizer bank probabilities, and on-the-fly synthesis
probability 0.8.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Optional

from .blots import BlotConfig
from .stackmix import PAPER_DIM_PROBS

DEFAULT_TARGET_HEIGHT = 128
DEFAULT_ON_THE_FLY_PROBA = 0.8


@dataclass(frozen=True)
class StackmixConfig:
    target_height: int = DEFAULT_TARGET_HEIGHT
    bank_probs: tuple[float, ...] = PAPER_DIM_PROBS
    on_the_fly_proba: float = DEFAULT_ON_THE_FLY_PROBA

    def __post_init__(self):
        if not 0.0 <= self.on_the_fly_proba <= 1.0:
            raise ValueError(f"on_the_fly_proba out of [0, 1]: {self.on_the_fly_proba}")
        if self.target_height < 1:
            raise ValueError(f"target_height must be >= 1, got {self.target_height}")
        object.__setattr__(self, "bank_probs", tuple(self.bank_probs))


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    blot: BlotConfig = field(default_factory=BlotConfig)
    stackmix: StackmixConfig = field(default_factory=StackmixConfig)
    paths: dict = field(default_factory=dict)


def run_config_from_dict(doc: dict) -> RunConfig:
    blot = BlotConfig(**doc.get("blot", {}))
    stackmix = StackmixConfig(**doc.get("stackmix", {}))
    return RunConfig(
        seed=int(doc.get("seed", 0)),
        blot=blot,
        stackmix=stackmix,
        paths=dict(doc.get("paths", {})),
    )


def run_config_to_dict(cfg: RunConfig) -> dict:
    return {
        "seed": cfg.seed,
        "blot": dataclasses.asdict(cfg.blot),
        "stackmix": {
            "target_height": cfg.stackmix.target_height,
            "bank_probs": list(cfg.stackmix.bank_probs),
            "on_the_fly_proba": cfg.stackmix.on_the_fly_proba,
        },
        "paths": dict(cfg.paths),
    }


def load_run_config(path: Optional[str]) -> RunConfig:
    """Config file is optional; every field falls back to the paper defaults."""
    if path is None:
        return RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return run_config_from_dict(json.load(fh))


def save_run_config(path, cfg: RunConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(run_config_to_dict(cfg), fh, sort_keys=True, indent=2)
        fh.write("\n")
