"""Fragment-stacking synthesis of new labeled line images.

Character n-gram lexicons are harvested from training transcripts, a greedy
multi-expression tokenizer splits external corpus text into known tokens,
and each token is matched with an image fragment cut at character boundaries
from the training set; stacking the pieces left to right yields a new image
whose label is exactly the corpus text.
"""
from __future__ import annotations

import json
import os
import threading
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

from .ctc import Alphabet, BoundarySet, SymbolSpan
from .errors import CorruptBoundaryError, UnsynthesizableLineError
from .raster import RasterImage, hstack, load_image, vstack
from .rng import RngState

# Token dimensions and selection probabilities of the published tokenizer bank.
PAPER_DIMS = (3, 4, 5, 6, 7, 8)
PAPER_DIM_PROBS = (0.05, 0.15, 0.2, 0.2, 0.2, 0.2)

_PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class MweLexicon:
    """Multi-character expressions (2..max_dim atomic tokens each) seen in training."""

    max_dim: int
    expressions: frozenset[str]

    def __post_init__(self):
        if self.max_dim < 2:
            raise ValueError(f"max_dim must be >= 2, got {self.max_dim}")
        for expr in self.expressions:
            if not 2 <= len(expr) <= self.max_dim:
                raise ValueError(f"expression {expr!r} outside length [2, {self.max_dim}]")


class TokenizerBank:
    """Lexicons of increasing token dimension plus their selection probabilities."""

    def __init__(self, lexicons: Iterable[MweLexicon], probs: Iterable[float]):
        self.lexicons = tuple(lexicons)
        self.probs = tuple(float(p) for p in probs)
        if len(self.lexicons) != len(self.probs) or not self.lexicons:
            raise ValueError("need one probability per lexicon")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > _PROB_SUM_TOL:
            raise ValueError(f"probabilities must be non-negative and sum to 1: {self.probs}")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(lex.max_dim for lex in self.lexicons)

    def choose(self, rng: RngState) -> MweLexicon:
        u = rng.random()
        acc = 0.0
        for lexicon, p in zip(self.lexicons, self.probs):
            acc += p
            if u < acc:
                return lexicon
        return self.lexicons[-1]


def build_mwe_lexicons(
    transcripts: list[str],
    dims: tuple[int, ...] = PAPER_DIMS,
    probs: Optional[tuple[float, ...]] = None,
) -> TokenizerBank:
    """Harvest every contiguous character n-gram (2 <= n <= dim) per dimension.

    Atomic tokenization is per character, so spaces and punctuation take part
    in expressions like any other symbol.
    """
    if not transcripts:
        raise ValueError("no transcripts to harvest expressions from")
    if probs is None:
        if tuple(dims) == PAPER_DIMS:
            probs = PAPER_DIM_PROBS
        else:
            probs = tuple(1.0 / len(dims) for _ in dims)

    max_dim = max(dims)
    grams: set[str] = set()
    for text in transcripts:
        n = len(text)
        for size in range(2, max_dim + 1):
            for i in range(n - size + 1):
                grams.add(text[i : i + size])

    lexicons = [
        MweLexicon(max_dim=d, expressions=frozenset(g for g in grams if len(g) <= d))
        for d in dims
    ]
    return TokenizerBank(lexicons, probs)


def tokenize(text: str, lexicon: MweLexicon) -> list[str]:
    """Greedy left-to-right longest match against the lexicon.

    At each position the longest known expression is emitted as one token,
    falling back to the single character; no backtracking across overlaps.
    """
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        match = None
        for size in range(min(lexicon.max_dim, n - i), 1, -1):
            candidate = text[i : i + size]
            if candidate in lexicon.expressions:
                match = candidate
                break
        if match is None:
            match = text[i]
        tokens.append(match)
        i += len(match)
    return tokens


@dataclass(frozen=True)
class Fragment:
    """One token's image slice, identified by source line and pixel span."""

    line_id: str
    start_px: int
    end_px: int
    token: str

    def __post_init__(self):
        if not self.token:
            raise ValueError("fragment token must be non-empty")
        if self.start_px < 0 or self.start_px >= self.end_px:
            raise ValueError(f"bad fragment span [{self.start_px}, {self.end_px})")


@dataclass(frozen=True)
class LineRecord:
    line_id: str
    image_path: Optional[str]
    boundaries: BoundarySet


class ImageStore:
    """Lazy id -> image lookup with a cache; safe for concurrent readers."""

    def __init__(self, paths: Optional[dict[str, str]] = None,
                 images: Optional[dict[str, RasterImage]] = None):
        self._paths = dict(paths or {})
        self._cache: dict[str, RasterImage] = dict(images or {})
        self._lock = threading.Lock()

    def get(self, line_id: str) -> RasterImage:
        with self._lock:
            cached = self._cache.get(line_id)
        if cached is not None:
            return cached
        path = self._paths.get(line_id)
        if path is None:
            raise KeyError(f"no image registered for line {line_id!r}")
        image = load_image(path)
        with self._lock:
            self._cache[line_id] = image
        return image

    def preload(self, line_ids: Iterable[str]) -> None:
        for line_id in line_ids:
            self.get(line_id)


class FragmentIndex:
    """Token -> fragments mapping over boundary-annotated training lines."""

    def __init__(
        self,
        lines: dict[str, LineRecord],
        fragments: dict[str, list[Fragment]],
        store: ImageStore,
        alphabet: Optional[str] = None,
    ):
        self.lines = lines
        self.fragments = fragments
        self.store = store
        self.atoms = frozenset(tok for tok in fragments if len(tok) == 1)
        self.alphabet = alphabet if alphabet is not None else "".join(sorted(self.atoms))
        self._slice_cache: Optional[dict[Fragment, RasterImage]] = None

    def fragments_for(self, token: str) -> list[Fragment]:
        return self.fragments.get(token, [])

    def cut(self, fragment: Fragment) -> RasterImage:
        """Slice the fragment's columns out of its source line, at source height."""
        if self._slice_cache is not None:
            cached = self._slice_cache.get(fragment)
            if cached is not None:
                return cached
        image = self.store.get(fragment.line_id)
        piece = RasterImage(image.data[:, fragment.start_px : fragment.end_px])
        if self._slice_cache is not None:
            self._slice_cache[fragment] = piece
        return piece

    def materialize(self) -> None:
        """Cache cut slices for synthesis throughput; index files stay span-only."""
        self._slice_cache = {}
        for frags in self.fragments.values():
            for frag in frags:
                self.cut(frag)


def build_fragment_index(
    boundary_sets: list[BoundarySet],
    images: ImageStore,
    bank: TokenizerBank,
    transcripts: Optional[dict[str, str]] = None,
    alphabet: Optional[str] = None,
    image_paths: Optional[dict[str, str]] = None,
) -> FragmentIndex:
    """Index a fragment for every atomic character and every expression
    occurrence (union of all lexicons) in every line.

    An expression fragment spans from its first character's start to its last
    character's end. When `transcripts` is given, each boundary set's
    characters must spell the line's transcript.
    """
    union_expr: set[str] = set()
    for lexicon in bank.lexicons:
        union_expr |= lexicon.expressions
    max_dim = max(bank.dims)

    lines: dict[str, LineRecord] = {}
    fragments: dict[str, list[Fragment]] = defaultdict(list)
    for bs in boundary_sets:
        text = bs.transcript
        if transcripts is not None:
            want = transcripts.get(bs.line_id)
            if want is None:
                raise CorruptBoundaryError(bs.line_id, "no transcript for this line")
            if want != text:
                raise CorruptBoundaryError(
                    bs.line_id, f"boundary spells {text!r} but transcript is {want!r}"
                )
        path = image_paths.get(bs.line_id) if image_paths else None
        lines[bs.line_id] = LineRecord(bs.line_id, path, bs)
        spans = bs.spans
        for span in spans:
            fragments[span.char].append(
                Fragment(bs.line_id, span.start_px, span.end_px, span.char)
            )
        for i in range(len(text)):
            for size in range(2, max_dim + 1):
                if i + size > len(text):
                    break
                sub = text[i : i + size]
                if sub in union_expr:
                    fragments[sub].append(
                        Fragment(bs.line_id, spans[i].start_px, spans[i + size - 1].end_px, sub)
                    )
    return FragmentIndex(lines, dict(fragments), images, alphabet=alphabet)


class CorpusFilterResult(NamedTuple):
    kept: list[str]
    dropped: int


def filter_corpus(lines: Iterable[str], alphabet) -> CorpusFilterResult:
    """Keep exactly the lines whose every character the alphabet allows.

    Trailing newlines are trimmed first; empty lines are dropped (nothing to
    render). Order is preserved.
    """
    allowed = set(alphabet.symbols if isinstance(alphabet, Alphabet) else alphabet)
    kept: list[str] = []
    dropped = 0
    for raw in lines:
        line = raw.rstrip("\r\n")
        if line and all(ch in allowed for ch in line):
            kept.append(line)
        else:
            dropped += 1
    return CorpusFilterResult(kept, dropped)


@dataclass(frozen=True)
class SynthesisResult:
    image: RasterImage
    label: str
    provenance: tuple[tuple[str, str, tuple[int, int]], ...]  # (token, line id, span)
    lexicon_dim: int


def synthesize_line(
    text: str,
    index: FragmentIndex,
    bank: TokenizerBank,
    rng: RngState,
    target_height: int,
) -> SynthesisResult:
    """Stack fragments for one corpus line: draw a lexicon from the bank,
    tokenize, pick a fragment uniformly per token, and concatenate at the
    target height. Multi-character tokens with no fragment fall back to
    per-character pieces; characters missing entirely raise, listing them all.
    """
    if not text:
        raise ValueError("cannot synthesize an empty line")
    lexicon = bank.choose(rng)
    tokens = tokenize(text, lexicon)

    final_tokens: list[str] = []
    missing: set[str] = set()
    for token in tokens:
        if index.fragments_for(token):
            final_tokens.append(token)
            continue
        for ch in token:
            if index.fragments_for(ch):
                final_tokens.append(ch)
            else:
                missing.add(ch)
    if missing:
        raise UnsynthesizableLineError(missing)

    pieces: list[RasterImage] = []
    provenance: list[tuple[str, str, tuple[int, int]]] = []
    for token in final_tokens:
        candidates = index.fragments_for(token)
        fragment = candidates[rng.randint(0, len(candidates) - 1)]
        pieces.append(index.cut(fragment))
        provenance.append((token, fragment.line_id, (fragment.start_px, fragment.end_px)))

    image = hstack(pieces, target_height)
    return SynthesisResult(
        image=image, label=text, provenance=tuple(provenance), lexicon_dim=lexicon.max_dim
    )


def synthesize_page(
    texts: list[str],
    index: FragmentIndex,
    bank: TokenizerBank,
    rng: RngState,
    target_height: int,
    gap: int = 0,
) -> RasterImage:
    """One synthesized line per text, stacked top to bottom with `gap` rows between."""
    if not texts:
        raise ValueError("no texts to lay out")
    results = [synthesize_line(t, index, bank, rng, target_height) for t in texts]
    return vstack([r.image for r in results], gap=gap)


# ---------------------------------------------------------------------------
# JSON serialization. Boundary files and index files share the line schema:
#   {alphabet, lines: [{id, image_path, width, spans: [[char, start, end], ...]}]}
# with the index adding {expressions: {dim: [expr, ...]}}. Keys are sorted and
# lines ordered by id so identical inputs give identical bytes.


def _relativize(path: Optional[str], base_dir: str) -> Optional[str]:
    if path is None:
        return None
    return os.path.relpath(os.path.abspath(path), base_dir)


def _lines_to_json(lines: Iterable[tuple[str, Optional[str], BoundarySet]], base_dir: str):
    records = []
    for line_id, image_path, bs in sorted(lines, key=lambda item: item[0]):
        records.append(
            {
                "id": line_id,
                "image_path": _relativize(image_path, base_dir),
                "width": bs.width,
                "spans": [[s.char, s.start_px, s.end_px] for s in bs.spans],
            }
        )
    return records


def _dump_json(doc, path) -> None:
    text = json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def save_boundaries(
    path, boundary_sets: list[BoundarySet], alphabet: str,
    image_paths: Optional[dict[str, str]] = None,
) -> None:
    base_dir = os.path.dirname(os.path.abspath(path)) or "."
    lines = [
        (bs.line_id, (image_paths or {}).get(bs.line_id), bs) for bs in boundary_sets
    ]
    _dump_json({"alphabet": alphabet, "lines": _lines_to_json(lines, base_dir)}, path)


def _boundary_from_json(record, base_dir: str) -> tuple[BoundarySet, Optional[str]]:
    spans = tuple(SymbolSpan(ch, int(s), int(e)) for ch, s, e in record["spans"])
    bs = BoundarySet(line_id=record["id"], width=int(record["width"]), spans=spans)
    image_path = record.get("image_path")
    if image_path is not None and not os.path.isabs(image_path):
        image_path = os.path.normpath(os.path.join(base_dir, image_path))
    return bs, image_path


def load_boundaries(path) -> tuple[list[BoundarySet], str, dict[str, str]]:
    """Returns (boundary sets, alphabet string, line id -> resolved image path)."""
    base_dir = os.path.dirname(os.path.abspath(path)) or "."
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    boundary_sets, image_paths = [], {}
    for record in doc["lines"]:
        bs, image_path = _boundary_from_json(record, base_dir)
        boundary_sets.append(bs)
        if image_path is not None:
            image_paths[bs.line_id] = image_path
    return boundary_sets, doc.get("alphabet", ""), image_paths


def save_index(path, index: FragmentIndex, bank: TokenizerBank) -> None:
    base_dir = os.path.dirname(os.path.abspath(path)) or "."
    lines = [
        (rec.line_id, rec.image_path, rec.boundaries) for rec in index.lines.values()
    ]
    doc = {
        "alphabet": index.alphabet,
        "lines": _lines_to_json(lines, base_dir),
        "expressions": {
            str(lex.max_dim): sorted(lex.expressions) for lex in bank.lexicons
        },
    }
    _dump_json(doc, path)


def load_index(path, store: Optional[ImageStore] = None) -> tuple[FragmentIndex, TokenizerBank]:
    """Rebuild the in-memory index (fragments re-derived from spans and
    expressions) plus the tokenizer bank from an index file."""
    base_dir = os.path.dirname(os.path.abspath(path)) or "."
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)

    dims = tuple(sorted(int(d) for d in doc["expressions"]))
    probs = PAPER_DIM_PROBS if dims == PAPER_DIMS else None
    lexicons = [
        MweLexicon(max_dim=d, expressions=frozenset(doc["expressions"][str(d)])) for d in dims
    ]
    bank = TokenizerBank(lexicons, probs if probs else tuple(1.0 / len(dims) for _ in dims))

    boundary_sets, image_paths = [], {}
    for record in doc["lines"]:
        bs, image_path = _boundary_from_json(record, base_dir)
        boundary_sets.append(bs)
        if image_path is not None:
            image_paths[bs.line_id] = image_path
    if store is None:
        store = ImageStore(paths=image_paths)
    index = build_fragment_index(
        boundary_sets, store, bank, alphabet=doc.get("alphabet") or None,
        image_paths=image_paths,
    )
    return index, bank
