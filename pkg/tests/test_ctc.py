import numpy as np
import pytest

from oracles import ctc_enumerate
from scribeforge.ctc import (
    Alphabet,
    BoundarySet,
    PosteriorMatrix,
    SymbolSpan,
    extract_boundaries,
    forced_align,
    frames_to_pixels,
    min_path_length,
    read_posteriors,
    write_posteriors,
)
from scribeforge.errors import (
    AlignmentInfeasibleError,
    InvalidTranscriptError,
    PosteriorFormatError,
)

AB = Alphabet("ab")


def posterior(rows) -> PosteriorMatrix:
    return PosteriorMatrix(np.asarray(rows, dtype=np.float64))


def random_posterior(rng, T, C) -> PosteriorMatrix:
    raw = rng.uniform(0.01, 1.0, size=(T, C))
    return PosteriorMatrix(raw / raw.sum(axis=1, keepdims=True))


class TestAlphabet:
    def test_blank_is_last_column(self):
        assert AB.blank_index == 2

    def test_duplicate_symbols_rejected(self):
        with pytest.raises(ValueError):
            Alphabet("aba")

    def test_unknown_char(self):
        with pytest.raises(InvalidTranscriptError):
            AB.index("z")


class TestPosteriorMatrix:
    def test_row_sum_enforced(self):
        with pytest.raises(PosteriorFormatError):
            posterior([[0.5, 0.1, 0.1]])

    def test_negative_rejected(self):
        with pytest.raises(PosteriorFormatError):
            posterior([[1.2, -0.1, -0.1]])

    def test_tolerance(self):
        posterior([[0.5, 0.2, 0.3005]])  # within 1e-3


class TestForcedAlign:
    def test_single_frame_single_char(self):
        pm = posterior([[0.9, 0.0, 0.1]])
        assert forced_align(pm, "a", AB) == [1]

    def test_repeat_needs_separating_blank(self):
        pm = posterior(np.full((2, 3), 1 / 3))
        assert min_path_length("aa") == 3
        with pytest.raises(AlignmentInfeasibleError):
            forced_align(pm, "aa", AB)

    def test_unknown_character(self):
        pm = posterior(np.full((4, 3), 1 / 3))
        with pytest.raises(InvalidTranscriptError):
            forced_align(pm, "az", AB)

    def test_empty_transcript_all_blank(self):
        pm = posterior(np.full((3, 3), 1 / 3))
        assert forced_align(pm, "", AB) == [0, 0, 0]

    def test_designed_case_matches_enumeration(self):
        pm = posterior(
            [
                [0.9, 0.05, 0.05],
                [0.1, 0.1, 0.8],
                [0.05, 0.9, 0.05],
                [0.05, 0.05, 0.9],
            ]
        )
        assignment = forced_align(pm, "ab", AB)
        logp = np.log(pm.probs)
        ext = [2, 0, 2, 1, 2]
        best, paths = ctc_enumerate(logp, ext, blank=2)
        got = sum(logp[t, ext[s]] for t, s in enumerate(assignment))
        assert got == pytest.approx(best, abs=1e-9)
        if len(paths) == 1:
            assert assignment == paths[0]

    def test_oracle_equivalence_randomized(self):
        rng = np.random.default_rng(2024)
        alphabet = Alphabet("ab")
        blank = alphabet.blank_index
        checked = 0
        for T in range(1, 9):
            for L in range(0, 4):
                for _ in range(10):
                    transcript = "".join(rng.choice(list("ab")) for _ in range(L))
                    if T < min_path_length(transcript):
                        continue
                    pm = random_posterior(rng, T, 3)
                    assignment = forced_align(pm, transcript, alphabet)
                    ext = [blank]
                    for ch in transcript:
                        ext.extend([alphabet.index(ch), blank])
                    logp = np.log(pm.probs)
                    best, paths = ctc_enumerate(logp, ext, blank)
                    got = sum(logp[t, ext[s]] for t, s in enumerate(assignment))
                    assert abs(got - best) < 1e-9
                    if len(paths) == 1:
                        assert assignment == paths[0]
                    checked += 1
        assert checked > 100


class TestFramesToPixels:
    def test_single_character_tiles_full_width(self):
        # char on frames 1..2 of 4; leading/trailing blanks absorbed
        spans = frames_to_pixels([0, 1, 1, 2], "a", 400)
        assert spans == [SymbolSpan("a", 0, 400)]

    def test_gap_split_at_midpoint(self):
        # chars on frames {0} and {3}; blank gap {1, 2} splits evenly
        spans = frames_to_pixels([1, 2, 2, 3], "ab", 400)
        assert spans == [SymbolSpan("a", 0, 200), SymbolSpan("b", 200, 400)]

    def test_frame_per_pixel_boundaries(self):
        T = 16
        assignment = [0] * 5 + [1] * 5 + [2] * 6
        spans = frames_to_pixels(assignment, "a", T)
        assert spans == [SymbolSpan("a", 0, 16)]
        assignment = [1] * 5 + [2] * 5 + [3] * 6
        spans = frames_to_pixels(assignment, "ab", 16)
        # odd gap {5..9}: cut = (4+10+1)//2 = 7, the middle frame joins the right side
        assert spans == [SymbolSpan("a", 0, 7), SymbolSpan("b", 7, 16)]

    def test_tiling_and_monotonic(self):
        rng = np.random.default_rng(77)
        alphabet = Alphabet("abc")
        for _ in range(200):
            T = int(rng.integers(3, 9))
            L = int(rng.integers(1, 4))
            transcript = "".join(rng.choice(list("abc")) for _ in range(L))
            if T < min_path_length(transcript):
                continue
            pm = random_posterior(rng, T, 4)
            assignment = forced_align(pm, transcript, alphabet)
            width = int(rng.integers(50, 400))
            spans = frames_to_pixels(assignment, transcript, width)
            assert spans[0].start_px == 0
            assert spans[-1].end_px == width
            for a, b in zip(spans, spans[1:]):
                assert a.end_px == b.start_px
                assert a.start_px < b.start_px

    def test_scale_consistency(self):
        assignment = [1, 2, 2, 3, 3, 4]
        for width in (100, 250, 333):
            spans = frames_to_pixels(assignment, "ab", width)
            doubled = frames_to_pixels(assignment, "ab", 2 * width)
            for s, d in zip(spans, doubled):
                assert abs(d.start_px - 2 * s.start_px) <= 1
                assert abs(d.end_px - 2 * s.end_px) <= 1


class TestExtractBoundaries:
    def test_blank_dominated_single_char(self):
        pm = posterior(
            [
                [0.05, 0.05, 0.9],
                [0.9, 0.05, 0.05],
                [0.05, 0.05, 0.9],
            ]
        )
        bs = extract_boundaries(pm, "a", AB, width=300, line_id="x")
        assert bs.spans == (SymbolSpan("a", 0, 300),)
        assert bs.transcript == "a"

    def test_transcript_always_spelled(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            pm = random_posterior(rng, 8, 3)
            bs = extract_boundaries(pm, "ab", AB, width=128, line_id="x")
            assert bs.transcript == "ab"


class TestBoundarySet:
    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            BoundarySet("x", 100, (SymbolSpan("a", 0, 60), SymbolSpan("b", 50, 100)))

    def test_rejects_out_of_width(self):
        with pytest.raises(ValueError):
            BoundarySet("x", 100, (SymbolSpan("a", 0, 120),))

    def test_rejects_empty_span(self):
        with pytest.raises(ValueError):
            SymbolSpan("a", 10, 10)


class TestPosteriorFile:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(9)
        pm = random_posterior(rng, 12, 3)
        path = tmp_path / "line.ctcp"
        write_posteriors(path, pm, AB)
        loaded, alphabet = read_posteriors(path)
        assert alphabet.symbols == "ab"
        assert loaded.probs == pytest.approx(pm.probs, abs=1e-6)  # float32 storage

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ctcp"
        path.write_bytes(b"NOPE" + bytes(32))
        with pytest.raises(PosteriorFormatError, match="magic"):
            read_posteriors(path)

    def test_truncated(self, tmp_path):
        rng = np.random.default_rng(10)
        pm = random_posterior(rng, 4, 3)
        path = tmp_path / "line.ctcp"
        write_posteriors(path, pm, AB)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 6])
        with pytest.raises(PosteriorFormatError):
            read_posteriors(path)

    def test_renormalization_violation_rejected(self, tmp_path):
        import struct

        path = tmp_path / "bad.ctcp"
        probs = np.array([[0.2, 0.2, 0.2]], dtype="<f4")  # sums to 0.6
        payload = b"CTCP" + bytes([1]) + struct.pack("<II", 1, 3) + probs.tobytes()
        payload += struct.pack("<I", 2) + b"ab"
        path.write_bytes(payload)
        with pytest.raises(PosteriorFormatError):
            read_posteriors(path)

    def test_unicode_alphabet(self, tmp_path):
        alphabet = Alphabet("абв ")
        rng = np.random.default_rng(11)
        pm = random_posterior(rng, 3, 5)
        path = tmp_path / "cyr.ctcp"
        write_posteriors(path, pm, alphabet)
        _, loaded = read_posteriors(path)
        assert loaded.symbols == "абв "
