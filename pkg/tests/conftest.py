import os
from types import SimpleNamespace

import numpy as np
import pytest

from scribeforge.ctc import Alphabet, BoundarySet, PosteriorMatrix, SymbolSpan, write_posteriors
from scribeforge.manifest import ManifestRecord, save_manifest
from scribeforge.raster import RasterImage, save_png

TOY_DIR = os.path.join(os.path.dirname(__file__), "..", "data", "toy")

MINI_ALPHABET = "ab "
MINI_LINES = {"m0": "ab", "m1": "a b", "m2": "ba"}
MINI_WIDTH, MINI_HEIGHT, MINI_FRAMES = 60, 16, 12


def striped(width, height):
    cols = np.tile(np.arange(width, dtype=np.uint16) % 251, (height, 1))
    return RasterImage(cols.astype(np.uint8))


def even_spans(text, width):
    n = len(text)
    return tuple(
        SymbolSpan(ch, (i * width) // n, ((i + 1) * width) // n) for i, ch in enumerate(text)
    )


def peaked_posteriors(spans, alphabet, width, frames):
    C = len(alphabet) + 1
    probs = np.zeros((frames, C))
    for t in range(frames):
        center = int((t + 0.5) * width / frames)
        ch = next(s.char for s in spans if s.start_px <= center < s.end_px)
        row = np.full(C, 0.04 / (C - 1))
        row[alphabet.index(ch)] = 0.96 - 0.04 / (C - 1)
        probs[t] = row / row.sum()
    return PosteriorMatrix(probs)


@pytest.fixture
def toy_dir():
    assert os.path.isdir(TOY_DIR), "bundled toy dataset missing; run scripts/make_toy_dataset.py"
    return os.path.abspath(TOY_DIR)


@pytest.fixture
def mini_dataset(tmp_path):
    """Three-line dataset with images, posteriors, boundaries, and a manifest."""
    root = tmp_path / "mini"
    (root / "images").mkdir(parents=True)
    (root / "posteriors").mkdir()
    alphabet = Alphabet(MINI_ALPHABET)
    records, boundaries = [], []
    for line_id, text in sorted(MINI_LINES.items()):
        image_path = str(root / "images" / f"{line_id}.png")
        save_png(striped(MINI_WIDTH, MINI_HEIGHT), image_path)
        spans = even_spans(text, MINI_WIDTH)
        write_posteriors(
            str(root / "posteriors" / f"{line_id}.ctcp"),
            peaked_posteriors(spans, alphabet, MINI_WIDTH, MINI_FRAMES),
            alphabet,
        )
        records.append(ManifestRecord(line_id, image_path, text, "train"))
        boundaries.append(BoundarySet(line_id, MINI_WIDTH, spans))
    manifest = str(root / "manifest.tsv")
    save_manifest(manifest, records)
    corpus = str(root / "corpus.txt")
    with open(corpus, "w", encoding="utf-8") as fh:
        fh.write("ab ba\nba ab\nb a\naa bb\n")
    return SimpleNamespace(
        root=str(root),
        manifest=manifest,
        posteriors=str(root / "posteriors"),
        corpus=corpus,
        records=records,
        boundaries=boundaries,
        alphabet=alphabet,
    )
