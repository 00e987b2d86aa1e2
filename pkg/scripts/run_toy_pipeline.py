#!/usr/bin/env python3
"""Drive the full pipeline on the bundled toy dataset and report digests.

segment -> build-index -> synthesize -> augment -> preview, all through the
CLI, into --out (default out/toy_run). Prints a sha256 per artifact so two
runs with the same seed can be compared at a glance.
"""
from __future__ import annotations

import argparse
import hashlib
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from scribeforge.cli import main as cli

HERE = os.path.dirname(os.path.abspath(__file__))
TOY = os.path.join(HERE, "..", "data", "toy")


def run(args: list[str]) -> None:
    rc = cli(args)
    if rc != 0:
        raise SystemExit(f"step failed (exit {rc}): {' '.join(args)}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=os.path.join("out", "toy_run"))
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--n", type=int, default=100, help="synthesized lines")
    args = parser.parse_args()

    toy = os.path.abspath(TOY)
    manifest = os.path.join(toy, "manifest.tsv")
    corpus = os.path.join(toy, "corpus.txt")
    out = os.path.abspath(args.out)
    os.makedirs(out, exist_ok=True)
    boundaries = os.path.join(out, "boundaries.json")
    index = os.path.join(out, "index.json")

    run(["segment", "--manifest", manifest, "--posteriors", os.path.join(toy, "posteriors"),
         "--out", boundaries, "--report", os.path.join(out, "segment_report.json"), "--strict"])
    run(["build-index", "--manifest", manifest, "--boundaries", boundaries, "--out", index])
    run(["synthesize", "--index", index, "--corpus", corpus, "--n", str(args.n),
         "--seed", str(args.seed), "--out", os.path.join(out, "synth")])
    run(["augment", "--manifest", manifest, "--seed", str(args.seed),
         "--out", os.path.join(out, "blotted"), "--strict"])
    run(["preview", "--manifest", manifest, "--index", index, "--corpus", corpus,
         "--n", "4", "--seed", str(args.seed), "--out", os.path.join(out, "sheet.png")])

    print("\nartifact digests:")
    for dirpath, _, filenames in sorted(os.walk(out)):
        for name in sorted(filenames):
            path = os.path.join(dirpath, name)
            digest = hashlib.sha256(open(path, "rb").read()).hexdigest()[:16]
            print(f"  {digest}  {os.path.relpath(path, out)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
