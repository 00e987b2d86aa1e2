#!/usr/bin/env python3
"""Regenerate the bundled toy dataset under data/toy (deterministic).

Produces 20 synthetic 512x128 line images with hand-authored character
boundaries, matching CTCP1 posterior dumps, a train manifest, and a 200-line
toy corpus over the same alphabet. Everything is seeded, so reruns are
byte-identical; the committed files can be verified by regenerating them.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from scribeforge.bezier import ControlPolygon, Point2, rasterize_stroke, sample_curve
from scribeforge.ctc import Alphabet, BoundarySet, PosteriorMatrix, SymbolSpan, write_posteriors
from scribeforge.manifest import ManifestRecord, save_manifest
from scribeforge.raster import new_blank, save_png
from scribeforge.rng import RngState
from scribeforge.stackmix import save_boundaries

ALPHABET = "abcdefghijklmnopqrstuvwxyz "
WIDTH, HEIGHT = 512, 128
FRAMES = 64
N_LINES = 20
N_CORPUS = 200

# Word pool; the first two transcripts below guarantee full letter coverage.
WORDS = [
    "the", "quick", "brown", "fox", "jumps", "over", "lazy", "dog",
    "pack", "my", "box", "with", "five", "dozen", "jugs", "quartz",
    "vex", "zip", "jam", "whirl", "sky", "fund", "glow", "crab",
]
FIXED_TRANSCRIPTS = ["the quick brown fox", "jumps over my lazy dog"]


def glyph_strokes(ch: str, x0: int, x1: int) -> list[list[Point2]]:
    """Deterministic fake glyph for one character inside its span."""
    if ch == " ":
        return []
    rng = RngState(1000 + ord(ch))
    margin = max(2, (x1 - x0) // 8)
    gx0, gx1 = x0 + margin, max(x0 + margin + 1, x1 - margin)
    top, bottom = 30.0, 100.0
    strokes = []
    for _ in range(2 + rng.randint(0, 1)):
        pts = []
        for _ in range(3):
            pts.append(Point2(rng.uniform(gx0, gx1), rng.uniform(top, bottom)))
        strokes.append(sample_curve(ControlPolygon(tuple(pts)), 40))
    return strokes


def even_spans(transcript: str) -> list[SymbolSpan]:
    n = len(transcript)
    spans = []
    for i, ch in enumerate(transcript):
        spans.append(SymbolSpan(ch, (i * WIDTH) // n, ((i + 1) * WIDTH) // n))
    return spans


def render_line(transcript: str, spans: list[SymbolSpan]):
    image = new_blank(WIDTH, HEIGHT)
    for span in spans:
        for path in glyph_strokes(span.char, span.start_px, span.end_px):
            image = rasterize_stroke(image, path, thickness=2.0, opacity=1.0, ink=0)
    return image


def make_posteriors(spans: list[SymbolSpan], alphabet: Alphabet) -> PosteriorMatrix:
    """Frame-level probabilities peaked on the character under each frame center.

    The first frame of a span that repeats the previous character is turned
    blank-dominated so a CTC path can thread the repeat.
    """
    C = len(alphabet) + 1
    blank = alphabet.blank_index
    probs = np.zeros((FRAMES, C))
    prev_span = -1
    for t in range(FRAMES):
        center = int((t + 0.5) * WIDTH / FRAMES)
        span_idx = next(
            i for i, s in enumerate(spans) if s.start_px <= center < s.end_px
        )
        ch = spans[span_idx].char
        force_blank = (
            span_idx != prev_span
            and prev_span >= 0
            and spans[prev_span].char == ch
        )
        prev_span = span_idx
        row = np.full(C, 0.06 / (C - 2))
        if force_blank:
            row[blank] = 0.88
            row[alphabet.index(ch)] = 0.06
        else:
            row[alphabet.index(ch)] = 0.88
            row[blank] = 0.06
        probs[t] = row / row.sum()
    return PosteriorMatrix(probs)


def pick_words(rng: RngState, count: int) -> str:
    return " ".join(WORDS[rng.randint(0, len(WORDS) - 1)] for _ in range(count))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "toy"))
    args = parser.parse_args()
    out = os.path.abspath(args.out)
    os.makedirs(os.path.join(out, "images"), exist_ok=True)
    os.makedirs(os.path.join(out, "posteriors"), exist_ok=True)

    alphabet = Alphabet(ALPHABET)
    rng = RngState(7)

    # transcripts: 2-3 words each, short enough for 512 px
    transcripts = list(FIXED_TRANSCRIPTS)
    while len(transcripts) < N_LINES:
        text = pick_words(rng, 2 + rng.randint(0, 1))
        if len(text) <= 24:
            transcripts.append(text)
    covered = set("".join(transcripts))
    assert covered >= set(ALPHABET), f"missing characters: {set(ALPHABET) - covered}"

    records, boundary_sets, image_paths = [], [], {}
    for i, transcript in enumerate(transcripts):
        line_id = f"toy{i:02d}"
        spans = even_spans(transcript)
        image = render_line(transcript, spans)
        image_path = os.path.join(out, "images", line_id + ".png")
        save_png(image, image_path)
        write_posteriors(
            os.path.join(out, "posteriors", line_id + ".ctcp"),
            make_posteriors(spans, alphabet),
            alphabet,
        )
        boundary_sets.append(BoundarySet(line_id, WIDTH, tuple(spans)))
        image_paths[line_id] = image_path
        records.append(ManifestRecord(line_id, image_path, transcript, "train"))

    save_manifest(os.path.join(out, "manifest.tsv"), records)
    save_boundaries(
        os.path.join(out, "boundaries.json"), boundary_sets, ALPHABET, image_paths
    )

    corpus_rng = RngState(9001)
    with open(os.path.join(out, "corpus.txt"), "w", encoding="utf-8") as fh:
        for _ in range(N_CORPUS):
            fh.write(pick_words(corpus_rng, 4 + corpus_rng.randint(0, 2)) + "\n")

    print(f"wrote {N_LINES} lines and {N_CORPUS} corpus lines to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
