import hashlib
import json
import os
import subprocess
import sys

import pytest

from scribeforge.cli import main
from scribeforge.manifest import load_manifest
from scribeforge.raster import load_image, load_png
from scribeforge.stackmix import load_boundaries, load_index


def tree_digest(root):
    digests = {}
    for dirpath, _, filenames in os.walk(root):
        for name in filenames:
            path = os.path.join(dirpath, name)
            rel = os.path.relpath(path, root)
            digests[rel] = hashlib.sha256(open(path, "rb").read()).hexdigest()
    return digests


class TestSegment:
    def test_three_lines_tile_width(self, mini_dataset, tmp_path):
        out = tmp_path / "run" / "boundaries.json"
        out.parent.mkdir()
        rc = main(
            [
                "segment",
                "--manifest", mini_dataset.manifest,
                "--posteriors", mini_dataset.posteriors,
                "--out", str(out),
                "--strict",
            ]
        )
        assert rc == 0
        boundary_sets, alphabet, image_paths = load_boundaries(out)
        assert alphabet == "ab "
        assert len(boundary_sets) == 3
        for bs in boundary_sets:
            assert bs.spans[0].start_px == 0
            assert bs.spans[-1].end_px == bs.width
            for a, b in zip(bs.spans, bs.spans[1:]):
                assert a.end_px == b.start_px
        assert set(image_paths) == {"m0", "m1", "m2"}

    def test_empty_manifest_warns_exit_zero(self, tmp_path, capsys):
        manifest = tmp_path / "empty.tsv"
        manifest.write_text("", encoding="utf-8")
        out = tmp_path / "boundaries.json"
        rc = main(["segment", "--manifest", str(manifest), "--posteriors", str(tmp_path), "--out", str(out)])
        assert rc == 0
        assert "empty manifest" in capsys.readouterr().err
        boundary_sets, _, _ = load_boundaries(out)
        assert boundary_sets == []

    def test_corrupt_magic_named_error(self, mini_dataset, tmp_path, capsys):
        bad = os.path.join(mini_dataset.posteriors, "m0.ctcp")
        blob = open(bad, "rb").read()
        open(bad, "wb").write(b"XXXX" + blob[4:])
        out = tmp_path / "boundaries.json"
        rc = main(
            [
                "segment",
                "--manifest", mini_dataset.manifest,
                "--posteriors", mini_dataset.posteriors,
                "--out", str(out),
                "--strict",
            ]
        )
        assert rc == 1
        err = capsys.readouterr().err
        assert "m0" in err and "PosteriorFormatError" in err
        boundary_sets, _, _ = load_boundaries(out)
        assert len(boundary_sets) == 2  # the other lines still align

    def test_missing_posterior_nonstrict_exit_zero(self, mini_dataset, tmp_path):
        os.remove(os.path.join(mini_dataset.posteriors, "m1.ctcp"))
        out = tmp_path / "b.json"
        report = tmp_path / "report.json"
        rc = main(
            [
                "segment",
                "--manifest", mini_dataset.manifest,
                "--posteriors", mini_dataset.posteriors,
                "--out", str(out),
                "--report", str(report),
            ]
        )
        assert rc == 0
        doc = json.loads(report.read_text())
        assert doc["aligned"] == 2
        assert doc["failed"][0]["id"] == "m1"

    def test_parallel_jobs_same_output(self, mini_dataset, tmp_path):
        out1 = tmp_path / "a" / "b.json"
        out2 = tmp_path / "b" / "b.json"
        out1.parent.mkdir()
        out2.parent.mkdir()
        args = ["segment", "--manifest", mini_dataset.manifest,
                "--posteriors", mini_dataset.posteriors]
        assert main(args + ["--out", str(out1), "--jobs", "1"]) == 0
        assert main(args + ["--out", str(out2), "--jobs", "4"]) == 0
        assert out1.read_bytes() == out2.read_bytes()


@pytest.fixture
def segmented(mini_dataset, tmp_path):
    out = tmp_path / "pipeline"
    out.mkdir()
    boundaries = out / "boundaries.json"
    assert main(
        [
            "segment",
            "--manifest", mini_dataset.manifest,
            "--posteriors", mini_dataset.posteriors,
            "--out", str(boundaries),
            "--strict",
        ]
    ) == 0
    index = out / "index.json"
    assert main(
        [
            "build-index",
            "--manifest", mini_dataset.manifest,
            "--boundaries", str(boundaries),
            "--out", str(index),
        ]
    ) == 0
    return SimpleNamespaceLike(mini=mini_dataset, out=out, boundaries=boundaries, index=index)


class SimpleNamespaceLike:
    def __init__(self, **kw):
        self.__dict__.update(kw)


class TestBuildIndex:
    def test_index_is_deterministic(self, segmented, tmp_path):
        # same-depth sibling dir keeps relative image paths identical
        again = tmp_path / "pipeline2" / "index.json"
        again.parent.mkdir()
        assert main(
            [
                "build-index",
                "--manifest", segmented.mini.manifest,
                "--boundaries", str(segmented.boundaries),
                "--out", str(again),
            ]
        ) == 0
        assert again.read_bytes() == segmented.index.read_bytes()

    def test_transcript_mismatch_named_error(self, mini_dataset, segmented, tmp_path, capsys):
        # corrupt the manifest transcript for m0; keep it beside the original
        # so its relative image paths still resolve
        lines = open(mini_dataset.manifest, encoding="utf-8").read().splitlines()
        lines[0] = lines[0].replace("\tab\t", "\tba\t")
        bad_manifest = os.path.join(mini_dataset.root, "bad.tsv")
        with open(bad_manifest, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        rc = main(
            [
                "build-index",
                "--manifest", bad_manifest,
                "--boundaries", str(segmented.boundaries),
                "--out", str(tmp_path / "x.json"),
            ]
        )
        assert rc == 1
        assert "m0" in capsys.readouterr().err

    def test_loadable_and_synthesizes(self, segmented):
        index, bank = load_index(segmented.index)
        assert set("ab ") <= index.atoms
        assert bank.dims == (3, 4, 5, 6, 7, 8)


class TestSynthesize:
    def test_writes_n_files_deterministically(self, segmented, tmp_path):
        out1 = tmp_path / "s1"
        out2 = tmp_path / "s2"
        for out in (out1, out2):
            rc = main(
                [
                    "synthesize",
                    "--index", str(segmented.index),
                    "--corpus", segmented.mini.corpus,
                    "--n", "5",
                    "--seed", "3",
                    "--out", str(out),
                ]
            )
            assert rc == 0
            assert len(os.listdir(out / "images")) == 5
        assert tree_digest(out1) == tree_digest(out2)

    def test_output_manifest_roundtrips(self, segmented, tmp_path):
        out = tmp_path / "s"
        assert main(
            [
                "synthesize",
                "--index", str(segmented.index),
                "--corpus", segmented.mini.corpus,
                "--n", "3",
                "--seed", "1",
                "--out", str(out),
            ]
        ) == 0
        records = load_manifest(out / "manifest.tsv")
        assert len(records) == 3
        provenance = json.loads((out / "provenance.json").read_text(encoding="utf-8"))
        for record in records:
            image = load_image(record.image_path)
            assert image.height == 128  # default target height
            assert provenance[record.line_id]["label"] == record.transcript

    def test_out_of_alphabet_corpus_fails(self, segmented, tmp_path):
        corpus = tmp_path / "bad.txt"
        corpus.write_text("xyz\n123\n", encoding="utf-8")
        rc = main(
            [
                "synthesize",
                "--index", str(segmented.index),
                "--corpus", str(corpus),
                "--n", "2",
                "--out", str(tmp_path / "out"),
            ]
        )
        assert rc == 1

    def test_page_mode(self, segmented, tmp_path):
        out = tmp_path / "page"
        rc = main(
            [
                "synthesize",
                "--index", str(segmented.index),
                "--corpus", segmented.mini.corpus,
                "--n", "3",
                "--seed", "2",
                "--out", str(out),
                "--page",
                "--gap", "4",
                "--height", "32",
            ]
        )
        assert rc == 0
        page = load_png(out / "page.png")
        assert page.height == 3 * 32 + 2 * 4


class TestAugment:
    def test_proba_zero_outputs_identical(self, mini_dataset, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"blot": {"proba": 0.0}}), encoding="utf-8")
        out = tmp_path / "aug"
        rc = main(
            [
                "augment",
                "--manifest", mini_dataset.manifest,
                "--out", str(out),
                "--config", str(cfg),
                "--seed", "4",
                "--strict",
            ]
        )
        assert rc == 0
        for record in load_manifest(out / "manifest.tsv"):
            original = next(r for r in mini_dataset.records if r.line_id == record.line_id)
            assert load_image(record.image_path) == load_image(original.image_path)
            assert record.transcript == original.transcript

    def test_labels_unchanged_with_default_config(self, mini_dataset, tmp_path):
        out = tmp_path / "aug"
        assert main(
            ["augment", "--manifest", mini_dataset.manifest, "--out", str(out), "--seed", "4"]
        ) == 0
        got = {r.line_id: r.transcript for r in load_manifest(out / "manifest.tsv")}
        want = {r.line_id: r.transcript for r in mini_dataset.records}
        assert got == want

    def test_fixed_seed_rerun_identical(self, mini_dataset, tmp_path):
        outs = [tmp_path / "a1", tmp_path / "a2"]
        for out in outs:
            assert main(
                ["augment", "--manifest", mini_dataset.manifest, "--out", str(out), "--seed", "9"]
            ) == 0
        assert tree_digest(outs[0]) == tree_digest(outs[1])

    def test_unreadable_image_reported(self, mini_dataset, tmp_path, capsys):
        first = mini_dataset.records[0]
        open(first.image_path, "wb").write(b"not an image")
        out = tmp_path / "aug"
        rc = main(
            ["augment", "--manifest", mini_dataset.manifest, "--out", str(out), "--strict"]
        )
        assert rc == 1
        assert first.line_id in capsys.readouterr().err


class TestEvaluate:
    def test_end_to_end(self, tmp_path, capsys):
        pred = tmp_path / "pred.tsv"
        pred.write_text("1\tthe cat\tthe hat\n2\tdog\tdog\n", encoding="utf-8")
        report_path = tmp_path / "report.json"
        rc = main(["evaluate", "--pred", str(pred), "--out", str(report_path)])
        assert rc == 0
        doc = json.loads(report_path.read_text())
        assert doc["cer"] == pytest.approx(10.0)
        assert doc["wer"] == pytest.approx(100 / 3)
        assert doc["acc"] == 50.0
        assert doc["n"] == 2
        assert json.loads(capsys.readouterr().out.strip().splitlines()[-1]) == doc

    def test_lowercase_flag(self, tmp_path, capsys):
        pred = tmp_path / "pred.tsv"
        pred.write_text("1\tABC\tabc\n", encoding="utf-8")
        assert main(["evaluate", "--pred", str(pred)]) == 0
        assert json.loads(capsys.readouterr().out)["acc"] == 0.0
        assert main(["evaluate", "--pred", str(pred), "--lowercase"]) == 0
        assert json.loads(capsys.readouterr().out)["acc"] == 100.0


class TestPreview:
    def test_mixed_sheet_rows(self, mini_dataset, segmented, tmp_path):
        out = tmp_path / "sheet.png"
        rc = main(
            [
                "preview",
                "--manifest", mini_dataset.manifest,
                "--index", str(segmented.index),
                "--corpus", mini_dataset.corpus,
                "--n", "2",
                "--seed", "6",
                "--out", str(out),
            ]
        )
        assert rc == 0
        sheet = load_png(out)
        # 2 originals + 2 blotted + 2 synthesized rows at height 128, 8 px gaps
        assert sheet.height == 6 * 128 + 5 * 8

    def test_single_sample(self, segmented, tmp_path):
        out = tmp_path / "one.png"
        rc = main(
            [
                "preview",
                "--index", str(segmented.index),
                "--n", "1",
                "--seed", "6",
                "--out", str(out),
            ]
        )
        assert rc == 0
        assert load_png(out).height == 128

    def test_deterministic(self, mini_dataset, tmp_path):
        outs = [tmp_path / "p1.png", tmp_path / "p2.png"]
        for out in outs:
            assert main(
                [
                    "preview",
                    "--manifest", mini_dataset.manifest,
                    "--n", "2",
                    "--seed", "6",
                    "--out", str(out),
                ]
            ) == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_requires_a_source(self, tmp_path):
        assert main(["preview", "--out", str(tmp_path / "x.png")]) == 2


class TestManifest:
    def test_duplicate_ids_rejected(self, tmp_path):
        img = tmp_path / "a.png"
        from scribeforge.raster import new_blank, save_png

        save_png(new_blank(4, 4), img)
        manifest = tmp_path / "m.tsv"
        manifest.write_text(f"x\t{img}\tab\nx\t{img}\tcd\n", encoding="utf-8")
        with pytest.raises(ValueError, match="duplicate"):
            load_manifest(manifest)

    def test_missing_image_rejected(self, tmp_path):
        manifest = tmp_path / "m.tsv"
        manifest.write_text("x\tnope.png\tab\n", encoding="utf-8")
        with pytest.raises(FileNotFoundError):
            load_manifest(manifest)


class TestRoundTrip:
    def test_synthesized_manifest_feeds_augment(self, segmented, tmp_path):
        synth = tmp_path / "synth"
        assert main(
            [
                "synthesize",
                "--index", str(segmented.index),
                "--corpus", segmented.mini.corpus,
                "--n", "4",
                "--seed", "8",
                "--out", str(synth),
            ]
        ) == 0
        aug = tmp_path / "aug"
        assert main(
            ["augment", "--manifest", str(synth / "manifest.tsv"), "--out", str(aug),
             "--seed", "8", "--strict"]
        ) == 0
        assert len(load_manifest(aug / "manifest.tsv")) == 4


class TestJobsEnv:
    def test_env_var_sets_default(self, monkeypatch):
        from scribeforge.cli import build_parser

        monkeypatch.setenv("SCRIBEFORGE_JOBS", "3")
        args = build_parser().parse_args(
            ["segment", "--manifest", "m", "--posteriors", "p", "--out", "o"]
        )
        assert args.jobs == 3


class TestRunConfig:
    def test_json_roundtrip_and_paper_defaults(self, tmp_path):
        from scribeforge.config import RunConfig, load_run_config, save_run_config

        cfg = load_run_config(None)
        assert cfg.blot.min_h == 50 and cfg.blot.proba == 0.5
        assert cfg.stackmix.on_the_fly_proba == 0.8
        assert cfg.stackmix.target_height == 128
        assert cfg.stackmix.bank_probs == (0.05, 0.15, 0.2, 0.2, 0.2, 0.2)
        path = tmp_path / "run.json"
        save_run_config(path, RunConfig(seed=5))
        assert load_run_config(str(path)) == RunConfig(seed=5)


class TestConsoleEntry:
    def test_module_invocation(self, tmp_path):
        pred = tmp_path / "pred.tsv"
        pred.write_text("1\ta\ta\n", encoding="utf-8")
        proc = subprocess.run(
            [sys.executable, "-m", "scribeforge.cli", "evaluate", "--pred", str(pred)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["acc"] == 100.0
