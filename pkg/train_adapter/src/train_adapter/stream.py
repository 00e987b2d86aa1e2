"""Infinite labeled-sample stream mirroring training-time usage.

Each draw emits a synthesized line with the configured probability, otherwise
a real training line from a reshuffled cycle; handwritten blots are then
applied with their own probability. All randomness flows through one seeded
state, so a fixed seed and a single consumer give a reproducible stream.

The adapter contains no algorithmic logic of its own: synthesis, blotting,
and file formats all come from the scribeforge package, driven by the same
artifacts and config JSON the CLI uses.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

from scribeforge import (
    BlotConfig,
    RasterImage,
    RngState,
    apply_handwritten_blots,
    filter_corpus,
    load_image,
    load_index,
    load_manifest,
    resize_to_height,
    synthesize_line,
)
from scribeforge.config import RunConfig, load_run_config

DEFAULT_BATCH_SIZE = 16


@dataclass(frozen=True)
class OnTheFlyConfig:
    """Stream parameters; defaults mirror the published training setup."""

    stackmix_proba: float = 0.8
    blot: BlotConfig = field(default_factory=BlotConfig)
    seed: int = 0
    batch_size: int = DEFAULT_BATCH_SIZE
    target_height: int = 128

    def __post_init__(self):
        if not 0.0 <= self.stackmix_proba <= 1.0:
            raise ValueError(f"stackmix_proba out of [0, 1]: {self.stackmix_proba}")
        if self.batch_size < 1 or self.target_height < 1:
            raise ValueError("batch_size and target_height must be >= 1")

    @classmethod
    def from_run_config(cls, cfg: RunConfig, batch_size: int = DEFAULT_BATCH_SIZE):
        return cls(
            stackmix_proba=cfg.stackmix.on_the_fly_proba,
            blot=cfg.blot,
            seed=cfg.seed,
            batch_size=batch_size,
            target_height=cfg.stackmix.target_height,
        )

    @classmethod
    def from_json(cls, path, batch_size: int = DEFAULT_BATCH_SIZE):
        """Read the same config JSON the scribeforge CLI consumes."""
        return cls.from_run_config(load_run_config(path), batch_size=batch_size)

    def with_seed(self, seed: int) -> "OnTheFlyConfig":
        return replace(self, seed=seed)


def sample_stream(
    manifest_path: str,
    index_path: str,
    corpus_path: str,
    config: Optional[OnTheFlyConfig] = None,
) -> Iterator[tuple[RasterImage, str]]:
    """Yield (image, label) forever from CLI-produced artifacts.

    Raises FileNotFoundError at startup when an artifact is missing, and
    ValueError when the requested mix cannot be served (no synthesizable
    corpus lines, or no real lines with stackmix_proba < 1).
    """
    config = config or OnTheFlyConfig()
    for path in (manifest_path, index_path, corpus_path):
        if not os.path.isfile(path):
            raise FileNotFoundError(f"required artifact missing: {path}")

    records = load_manifest(manifest_path)
    index, bank = load_index(index_path)
    with open(corpus_path, "r", encoding="utf-8") as fh:
        kept, _ = filter_corpus(fh.readlines(), index.alphabet)
    corpus = [line for line in kept if all(ch in index.atoms for ch in line)]

    if config.stackmix_proba > 0.0 and not corpus:
        raise ValueError("no synthesizable corpus lines for the requested stackmix_proba")
    if config.stackmix_proba < 1.0 and not records:
        raise ValueError("no real training lines for the requested stackmix_proba")

    rng = RngState(config.seed)
    real_cache: dict[str, RasterImage] = {}
    cycle: list[int] = []

    def next_real():
        nonlocal cycle
        if not cycle:
            cycle = list(range(len(records)))
            rng.shuffle(cycle)
        record = records[cycle.pop()]
        image = real_cache.get(record.line_id)
        if image is None:
            image = resize_to_height(load_image(record.image_path), config.target_height)
            real_cache[record.line_id] = image
        return image, record.transcript

    while True:
        if rng.bernoulli(config.stackmix_proba):
            text = corpus[rng.randint(0, len(corpus) - 1)]
            result = synthesize_line(text, index, bank, rng, config.target_height)
            image, label = result.image, result.label
        else:
            image, label = next_real()
        image = apply_handwritten_blots(image, config.blot, rng)
        yield image, label


def batched(stream: Iterator, size: int) -> Iterator[list]:
    """Group a sample stream into lists of `size` (raw samples, no tensor glue)."""
    if size < 1:
        raise ValueError(f"batch size must be >= 1, got {size}")
    batch = []
    for sample in stream:
        batch.append(sample)
        if len(batch) == size:
            yield batch
            batch = []
