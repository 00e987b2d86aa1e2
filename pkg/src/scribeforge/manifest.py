"""Dataset manifests: TSV of line id, image path, transcript, optional split tag.

Relative image paths are resolved against the manifest's own directory, so a
dataset directory can be moved as a unit. Written manifests relativize paths
the same way, which keeps outputs valid as inputs.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class ManifestRecord:
    line_id: str
    image_path: str  # absolute after load
    transcript: str
    split: Optional[str] = None


def load_manifest(path, check_images: bool = True) -> list[ManifestRecord]:
    base_dir = os.path.dirname(os.path.abspath(path)) or "."
    records: list[ManifestRecord] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) not in (3, 4):
                raise ValueError(f"{path}:{lineno}: expected 3 or 4 tab-separated columns")
            line_id, image_path, transcript = cols[0], cols[1], cols[2]
            split = cols[3] if len(cols) == 4 else None
            if line_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate line id {line_id!r}")
            seen.add(line_id)
            if not os.path.isabs(image_path):
                image_path = os.path.normpath(os.path.join(base_dir, image_path))
            if check_images and not os.path.isfile(image_path):
                raise FileNotFoundError(f"{path}:{lineno}: image missing for {line_id!r}: {image_path}")
            records.append(ManifestRecord(line_id, image_path, transcript, split))
    return records


def save_manifest(path, records: list[ManifestRecord]) -> None:
    base_dir = os.path.dirname(os.path.abspath(path)) or "."
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            rel = os.path.relpath(os.path.abspath(rec.image_path), base_dir)
            cols = [rec.line_id, rel, rec.transcript]
            if rec.split is not None:
                cols.append(rec.split)
            fh.write("\t".join(cols) + "\n")
