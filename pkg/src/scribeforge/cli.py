"""Batch command-line entry point.

Subcommands: segment, build-index, synthesize, augment, evaluate, preview.
Every command is deterministic given its inputs and seed; paths inside
written artifacts are relative to the artifact's own directory so output
trees are relocatable and rerunnable byte-for-byte.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import metrics
from .blots import apply_handwritten_blots
from .config import RunConfig, load_run_config
from .ctc import extract_boundaries, read_posteriors
from .errors import ScribeforgeError
from .manifest import ManifestRecord, load_manifest, save_manifest
from .raster import image_size, load_image, resize_to_height, save_png, vstack
from .rng import RngState, derive_seed
from .stackmix import (
    build_fragment_index,
    build_mwe_lexicons,
    filter_corpus,
    ImageStore,
    load_boundaries,
    load_index,
    save_boundaries,
    save_index,
    synthesize_line,
    synthesize_page,
)

PREVIEW_GAP = 8


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("SCRIBEFORGE_JOBS", "1")))
    except ValueError:
        return 1


def _parallel_map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load_config(args) -> RunConfig:
    cfg = load_run_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg = RunConfig(seed=args.seed, blot=cfg.blot, stackmix=cfg.stackmix, paths=cfg.paths)
    return cfg


# ---------------------------------------------------------------------------


def cmd_segment(args) -> int:
    records = load_manifest(args.manifest)
    if not records:
        save_boundaries(args.out, [], alphabet="")
        print("segment: empty manifest, wrote empty boundary file", file=sys.stderr)
        return 0

    def align_one(record: ManifestRecord):
        posterior_path = os.path.join(args.posteriors, record.line_id + ".ctcp")
        if not os.path.isfile(posterior_path):
            return record, None, None, f"missing posterior file {posterior_path}"
        try:
            posteriors, alphabet = read_posteriors(posterior_path)
            width, _ = image_size(record.image_path)
            bs = extract_boundaries(posteriors, record.transcript, alphabet, width, record.line_id)
            return record, bs, alphabet, None
        except (ScribeforgeError, ValueError, OSError) as exc:
            return record, None, None, f"{type(exc).__name__}: {exc}"

    results = _parallel_map(align_one, records, args.jobs)

    reference_alphabet = None
    boundary_sets, image_paths, failures = [], {}, []
    for record, bs, alphabet, reason in results:
        if reason is None and reference_alphabet is not None and alphabet.symbols != reference_alphabet:
            reason = "alphabet differs from the first posterior file"
        if reason is not None:
            failures.append({"id": record.line_id, "reason": reason})
            continue
        if reference_alphabet is None:
            reference_alphabet = alphabet.symbols
        boundary_sets.append(bs)
        image_paths[record.line_id] = record.image_path

    save_boundaries(args.out, boundary_sets, alphabet=reference_alphabet or "",
                    image_paths=image_paths)
    report = {"aligned": len(boundary_sets), "failed": failures}
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)
            fh.write("\n")
    print(f"segment: {len(boundary_sets)} aligned, {len(failures)} failed")
    for failure in failures:
        print(f"segment: FAIL {failure['id']}: {failure['reason']}", file=sys.stderr)
    return 1 if failures and args.strict else 0


def cmd_build_index(args) -> int:
    records = load_manifest(args.manifest)
    boundary_sets, alphabet, _ = load_boundaries(args.boundaries)
    by_id = {bs.line_id: bs for bs in boundary_sets}

    train = [r for r in records if r.split in (None, "train")]
    if not train:
        print("build-index: manifest has no train lines", file=sys.stderr)
        return 1
    for record in train:
        bs = by_id.get(record.line_id)
        if bs is None:
            print(f"build-index: no boundaries for line {record.line_id!r}", file=sys.stderr)
            return 1
        if bs.transcript != record.transcript:
            print(
                f"build-index: boundary/transcript mismatch for line {record.line_id!r}",
                file=sys.stderr,
            )
            return 1

    dims = tuple(int(d) for d in args.dims.split(","))
    bank = build_mwe_lexicons([r.transcript for r in train], dims=dims)
    image_paths = {r.line_id: r.image_path for r in train}
    store = ImageStore(paths=image_paths)
    index = build_fragment_index(
        [by_id[r.line_id] for r in train],
        store,
        bank,
        transcripts={r.line_id: r.transcript for r in train},
        alphabet=alphabet or None,
        image_paths=image_paths,
    )
    save_index(args.out, index, bank)
    for lexicon in bank.lexicons:
        print(f"build-index: dim {lexicon.max_dim}: {len(lexicon.expressions)} expressions")
    print(f"build-index: {len(train)} lines, {len(index.fragments)} distinct tokens")
    return 0


def cmd_synthesize(args) -> int:
    cfg = _load_config(args)
    height = args.height if args.height is not None else cfg.stackmix.target_height
    index, bank = load_index(args.index)

    with open(args.corpus, "r", encoding="utf-8") as fh:
        raw_lines = fh.readlines()
    kept, dropped = filter_corpus(raw_lines, index.alphabet)
    synthesizable = [line for line in kept if all(ch in index.atoms for ch in line)]
    skipped = dropped + (len(kept) - len(synthesizable))
    if not synthesizable:
        print("synthesize: zero synthesizable corpus lines", file=sys.stderr)
        return 1

    rng = RngState(cfg.seed)
    os.makedirs(args.out, exist_ok=True)

    if args.page:
        texts = [synthesizable[rng.randint(0, len(synthesizable) - 1)] for _ in range(args.n)]
        page = synthesize_page(texts, index, bank, rng, height, gap=args.gap)
        save_png(page, os.path.join(args.out, "page.png"))
        with open(os.path.join(args.out, "page.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(texts) + "\n")
        print(f"synthesize: wrote 1 page of {args.n} lines, skipped {skipped} corpus lines")
        return 0

    image_dir = os.path.join(args.out, "images")
    os.makedirs(image_dir, exist_ok=True)
    out_records, provenance = [], {}
    for i in range(args.n):
        text = synthesizable[rng.randint(0, len(synthesizable) - 1)]
        result = synthesize_line(text, index, bank, rng, height)
        line_id = f"syn{i:05d}"
        image_path = os.path.join(image_dir, line_id + ".png")
        save_png(result.image, image_path)
        out_records.append(ManifestRecord(line_id, image_path, result.label))
        provenance[line_id] = {
            "label": result.label,
            "lexicon_dim": result.lexicon_dim,
            "parts": [[tok, src, s, e] for tok, src, (s, e) in result.provenance],
        }
    save_manifest(os.path.join(args.out, "manifest.tsv"), out_records)
    with open(os.path.join(args.out, "provenance.json"), "w", encoding="utf-8") as fh:
        json.dump(provenance, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"synthesize: wrote {args.n} lines, skipped {skipped} corpus lines")
    return 0


def cmd_augment(args) -> int:
    cfg = _load_config(args)
    records = load_manifest(args.manifest)
    image_dir = os.path.join(args.out, "images")
    os.makedirs(image_dir, exist_ok=True)

    def blot_one(item):
        i, record = item
        try:
            image = load_image(record.image_path)
            rng = RngState(derive_seed(cfg.seed, i))
            out = apply_handwritten_blots(image, cfg.blot, rng)
            out_path = os.path.join(image_dir, record.line_id + ".png")
            save_png(out, out_path)
            return ManifestRecord(record.line_id, out_path, record.transcript, record.split), None
        except (ScribeforgeError, ValueError, OSError) as exc:
            return None, {"id": record.line_id, "reason": f"{type(exc).__name__}: {exc}"}

    results = _parallel_map(blot_one, list(enumerate(records)), args.jobs)
    out_records = [rec for rec, err in results if rec is not None]
    failures = [err for _, err in results if err is not None]
    save_manifest(os.path.join(args.out, "manifest.tsv"), out_records)
    print(f"augment: {len(out_records)} written, {len(failures)} failed")
    for failure in failures:
        print(f"augment: FAIL {failure['id']}: {failure['reason']}", file=sys.stderr)
    return 1 if failures and args.strict else 0


def cmd_evaluate(args) -> int:
    pairs = metrics.read_eval_tsv(args.pred)
    try:
        report = metrics.evaluate(pairs, lowercase=args.lowercase)
    except ScribeforgeError as exc:
        print(f"evaluate: {exc}", file=sys.stderr)
        return 1
    text = metrics.report_to_json(report)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


def cmd_preview(args) -> int:
    if not args.manifest and not args.index:
        print("preview: need --manifest and/or --index", file=sys.stderr)
        return 2
    cfg = _load_config(args)
    height = cfg.stackmix.target_height
    rng = RngState(cfg.seed)
    rows = []

    if args.manifest:
        records = load_manifest(args.manifest)
        if not records:
            print("preview: empty manifest", file=sys.stderr)
            return 1
        order = list(range(len(records)))
        rng.shuffle(order)
        for idx in order[: args.n]:
            record = records[idx]
            original = resize_to_height(load_image(record.image_path), height)
            rows.append(original)
            rows.append(apply_handwritten_blots(original, cfg.blot, rng))

    if args.index:
        index, bank = load_index(args.index)
        if args.corpus:
            with open(args.corpus, "r", encoding="utf-8") as fh:
                kept, _ = filter_corpus(fh.readlines(), index.alphabet)
            texts = [t for t in kept if all(ch in index.atoms for ch in t)]
        else:
            texts = [rec.boundaries.transcript for rec in index.lines.values()]
            texts.sort()
        if not texts:
            print("preview: nothing synthesizable", file=sys.stderr)
            return 1
        for _ in range(args.n):
            text = texts[rng.randint(0, len(texts) - 1)]
            rows.append(synthesize_line(text, index, bank, rng, height).image)

    sheet = vstack(rows, gap=PREVIEW_GAP)
    save_png(sheet, args.out)
    print(f"preview: wrote {len(rows)} rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scribeforge",
        description="Synthetic handwritten line generation, blot augmentation, and evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="run config JSON (defaults are built in)")
    common.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    common.add_argument("--strict", action="store_true", help="nonzero exit on any per-line failure")
    common.add_argument("--jobs", type=int, default=_default_jobs(),
                        help="worker threads (env SCRIBEFORGE_JOBS)")

    p = sub.add_parser("segment", parents=[common], help="posteriors -> character boundaries")
    p.add_argument("--manifest", required=True)
    p.add_argument("--posteriors", required=True, help="directory of <line id>.ctcp files")
    p.add_argument("--out", required=True, help="boundary JSON to write")
    p.add_argument("--report", default=None, help="alignment report JSON")
    p.set_defaults(fn=cmd_segment)

    p = sub.add_parser("build-index", parents=[common], help="boundaries -> fragment index")
    p.add_argument("--manifest", required=True)
    p.add_argument("--boundaries", required=True)
    p.add_argument("--out", required=True, help="index JSON to write")
    p.add_argument("--dims", default="3,4,5,6,7,8", help="comma-separated token dimensions")
    p.set_defaults(fn=cmd_build_index)

    p = sub.add_parser("synthesize", parents=[common], help="corpus text -> stacked line images")
    p.add_argument("--index", required=True)
    p.add_argument("--corpus", required=True, help="UTF-8 text, one line per record")
    p.add_argument("--n", type=int, required=True, help="number of lines to synthesize")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--height", type=int, default=None, help="target line height in px")
    p.add_argument("--page", action="store_true", help="one multi-line page instead of line files")
    p.add_argument("--gap", type=int, default=PREVIEW_GAP, help="page mode: rows between lines")
    p.set_defaults(fn=cmd_synthesize)

    p = sub.add_parser("augment", parents=[common], help="apply handwritten blots to a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("evaluate", parents=[common], help="CER/WER/ACC from a prediction TSV")
    p.add_argument("--pred", required=True, help="TSV with columns id, prediction, truth")
    p.add_argument("--lowercase", action="store_true", help="fold case before scoring")
    p.add_argument("--out", default=None, help="write the report JSON here too")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("preview", parents=[common], help="contact sheet of sample lines")
    p.add_argument("--manifest", default=None, help="show originals with blotted copies")
    p.add_argument("--index", default=None, help="show synthesized lines")
    p.add_argument("--corpus", default=None, help="texts for synthesized rows")
    p.add_argument("--n", type=int, default=8, help="samples per section")
    p.add_argument("--out", required=True, help="PNG to write")
    p.set_defaults(fn=cmd_preview)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ScribeforgeError, FileNotFoundError, ValueError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
