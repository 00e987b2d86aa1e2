"""Weakly supervised character segmentation from CTC posteriors.

A transcript is force-aligned against the per-frame symbol probabilities of
a CTC-trained recognizer (Viterbi over the blank-interleaved label lattice),
and the surviving frame extents are mapped to pixel spans that tile the line
image without dead zones.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentInfeasibleError, InvalidTranscriptError, PosteriorFormatError

# log(0) stand-in: keeps the DP free of inf-inf NaNs while staying far below
# any reachable log-probability.
LOG_FLOOR = -1e30
ROW_SUM_TOL = 1e-3


@dataclass(frozen=True)
class Alphabet:
    """Ordered distinct symbols; the CTC blank is implicit as the last column."""

    symbols: str

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be distinct")

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, ch: str) -> bool:
        return ch in self.symbols

    @property
    def blank_index(self) -> int:
        return len(self.symbols)

    def index(self, ch: str) -> int:
        i = self.symbols.find(ch)
        if i < 0:
            raise InvalidTranscriptError(f"character {ch!r} not in alphabet")
        return i


class PosteriorMatrix:
    """T x (|symbols|+1) per-frame probabilities; rows must sum to 1 within 1e-3."""

    def __init__(self, probs):
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 2:
            raise PosteriorFormatError(f"expected a 2-D matrix, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise PosteriorFormatError(f"degenerate posterior shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise PosteriorFormatError("posteriors must be finite and non-negative")
        sums = arr.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)[0]
        if bad.size:
            raise PosteriorFormatError(
                f"row {bad[0]} sums to {sums[bad[0]]:.6f}, outside 1 +/- {ROW_SUM_TOL}"
            )
        self.probs = arr
        self.probs.setflags(write=False)

    @property
    def num_frames(self) -> int:
        return self.probs.shape[0]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class SymbolSpan:
    """Pixel extent of one character: [start_px, end_px)."""

    char: str
    start_px: int
    end_px: int

    def __post_init__(self):
        if self.start_px < 0 or self.start_px >= self.end_px:
            raise ValueError(f"bad span [{self.start_px}, {self.end_px}) for {self.char!r}")


@dataclass(frozen=True)
class BoundarySet:
    """Ordered, non-overlapping character spans for one line image."""

    line_id: str
    width: int
    spans: tuple[SymbolSpan, ...]

    def __post_init__(self):
        spans = tuple(self.spans)
        object.__setattr__(self, "spans", spans)
        if self.width < 1:
            raise ValueError(f"bad image width {self.width}")
        prev_end = 0
        for span in spans:
            if span.start_px < prev_end:
                raise ValueError(f"spans out of order or overlapping at {span}")
            if span.end_px > self.width:
                raise ValueError(f"{span} exceeds width {self.width}")
            prev_end = span.end_px

    @property
    def transcript(self) -> str:
        return "".join(span.char for span in self.spans)


def _extended_label(transcript: str, alphabet: Alphabet) -> np.ndarray:
    """Column indices of (blank, c1, blank, c2, ..., blank)."""
    blank = alphabet.blank_index
    ext = [blank]
    for ch in transcript:
        ext.append(alphabet.index(ch))
        ext.append(blank)
    return np.asarray(ext, dtype=np.intp)


def min_path_length(transcript: str) -> int:
    """Fewest frames any valid CTC path needs: length plus one blank per repeat."""
    repeats = sum(1 for a, b in zip(transcript, transcript[1:]) if a == b)
    return len(transcript) + repeats


def forced_align(posteriors: PosteriorMatrix, transcript: str, alphabet: Alphabet) -> list[int]:
    """Maximum-probability frame assignment for a known transcript.

    Viterbi over the blank-interleaved label with the standard CTC moves
    (stay; advance by 1; advance by 2 only across a blank between distinct
    characters), scored in the natural-log domain. Returns the extended-label
    position each frame occupies; even positions are blanks, position 2i+1 is
    transcript character i. Ties prefer staying, giving characters maximal
    frame extent.
    """
    for ch in transcript:
        if ch not in alphabet:
            raise InvalidTranscriptError(f"character {ch!r} not in alphabet")
    T = posteriors.num_frames
    if posteriors.num_classes != len(alphabet) + 1:
        raise ValueError(
            f"posterior has {posteriors.num_classes} columns, alphabet wants {len(alphabet) + 1}"
        )
    if T < min_path_length(transcript):
        raise AlignmentInfeasibleError(
            f"{T} frames cannot carry transcript of minimum path length "
            f"{min_path_length(transcript)}"
        )

    ext = _extended_label(transcript, alphabet)
    S = ext.size
    blank = alphabet.blank_index
    logp = np.where(posteriors.probs > 0.0, np.log(np.maximum(posteriors.probs, 1e-300)), LOG_FLOOR)

    # advance-by-2 lands on s only when s holds a character differing from s-2
    can_skip = np.zeros(S, dtype=bool)
    if S >= 3:
        can_skip[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])

    dp = np.full(S, -np.inf)
    dp[0] = logp[0, ext[0]]
    if S > 1:
        dp[1] = logp[0, ext[1]]
    parents = np.zeros((T, S), dtype=np.int8)  # how far the path advanced into each state

    for t in range(1, T):
        stay = dp
        adv1 = np.full(S, -np.inf)
        adv1[1:] = dp[:-1]
        adv2 = np.full(S, -np.inf)
        adv2[2:] = dp[:-2]
        adv2 = np.where(can_skip, adv2, -np.inf)
        candidates = np.stack([stay, adv1, adv2])
        # argmax keeps the first maximum: stay beats advance on equal scores
        move = np.argmax(candidates, axis=0)
        parents[t] = move
        dp = candidates[move, np.arange(S)] + logp[t, ext]

    # end at the final character (S-2) or the final blank (S-1); ties prefer
    # the character so it keeps its full extent
    if S >= 2 and dp[S - 2] >= dp[S - 1]:
        state = S - 2
    else:
        state = S - 1

    assignment = [0] * T
    for t in range(T - 1, -1, -1):
        assignment[t] = state
        state -= int(parents[t, state])
    return assignment


def frames_to_pixels(assignment: list[int], transcript: str, width: int) -> list[SymbolSpan]:
    """Map per-frame lattice positions to pixel spans that tile [0, width).

    Character i's raw extent is its first..last assigned frame; blank-only
    gaps between neighbors are split at their midpoint frame and absorbed
    into the adjacent spans, and leading/trailing blanks join the first/last
    character, so spans tile the width with no dead zones.
    """
    T = len(assignment)
    if T < 1 or width < 1:
        raise ValueError("assignment and width must be non-empty")
    L = len(transcript)
    if L == 0:
        return []

    first: dict[int, int] = {}
    last: dict[int, int] = {}
    for t, state in enumerate(assignment):
        if state % 2 == 1:
            i = (state - 1) // 2
            first.setdefault(i, t)
            last[i] = t
    if len(first) != L:
        raise ValueError("assignment does not visit every transcript character")

    starts = [0] * L
    ends = [0] * L
    ends[L - 1] = T - 1
    for i in range(L - 1):
        cut = (last[i] + first[i + 1] + 1) // 2
        ends[i] = cut - 1
        starts[i + 1] = cut

    spans = []
    for i, ch in enumerate(transcript):
        start_px = (starts[i] * width) // T
        end_px = ((ends[i] + 1) * width) // T
        spans.append(SymbolSpan(ch, start_px, end_px))
    return spans


def extract_boundaries(
    posteriors: PosteriorMatrix,
    transcript: str,
    alphabet: Alphabet,
    width: int,
    line_id: str,
) -> BoundarySet:
    """Forced alignment composed with the frame-to-pixel mapping."""
    assignment = forced_align(posteriors, transcript, alphabet)
    spans = frames_to_pixels(assignment, transcript, width)
    return BoundarySet(line_id=line_id, width=width, spans=tuple(spans))


# ---------------------------------------------------------------------------
# Posterior dump format "CTCP1" (bit-exact):
#   magic "CTCP", version byte 0x01, LE u32 T, LE u32 C (= |symbols|+1),
#   T*C LE float32 row-major, LE u32 byte length, UTF-8 alphabet string
#   (symbols in column order, blank implicit last).

_MAGIC = b"CTCP"
_VERSION = 1


def write_posteriors(path, posteriors: PosteriorMatrix, alphabet: Alphabet) -> None:
    T, C = posteriors.num_frames, posteriors.num_classes
    if C != len(alphabet) + 1:
        raise ValueError(f"{C} columns inconsistent with {len(alphabet)}-symbol alphabet")
    payload = alphabet.symbols.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes([_VERSION]))
        fh.write(struct.pack("<II", T, C))
        fh.write(posteriors.probs.astype("<f4").tobytes())
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)


def read_posteriors(path) -> tuple[PosteriorMatrix, Alphabet]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 13 or blob[:4] != _MAGIC:
        raise PosteriorFormatError(f"{path}: bad magic bytes (want 'CTCP')")
    if blob[4] != _VERSION:
        raise PosteriorFormatError(f"{path}: unsupported version {blob[4]}")
    T, C = struct.unpack_from("<II", blob, 5)
    data_len = T * C * 4
    offset = 13
    if len(blob) < offset + data_len + 4:
        raise PosteriorFormatError(f"{path}: truncated posterior data")
    probs = np.frombuffer(blob, dtype="<f4", count=T * C, offset=offset).reshape(T, C)
    offset += data_len
    (alpha_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    if len(blob) != offset + alpha_len:
        raise PosteriorFormatError(f"{path}: alphabet length mismatch")
    symbols = blob[offset:].decode("utf-8")
    alphabet = Alphabet(symbols)
    if C != len(alphabet) + 1:
        raise PosteriorFormatError(
            f"{path}: {C} columns inconsistent with {len(alphabet)}-symbol alphabet"
        )
    return PosteriorMatrix(probs), alphabet
