"""Recognition quality metrics: character/word error rates and string accuracy.

CER and WER are micro-averaged (summed edit distance over summed reference
length, in percent); characters include spaces, words are maximal runs of
non-space characters. Comparison is case-sensitive unless the lowercase fold
is requested.
"""
from __future__ import annotations

import json
from typing import Iterable, NamedTuple, Sequence

from .errors import UndefinedDenominatorError


class EvalPair(NamedTuple):
    pred: str
    truth: str


class EvalReport(NamedTuple):
    cer: float
    wer: float
    acc: float
    n: int


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Minimum unit-cost insertions/deletions/substitutions turning a into b.

    Generic over element type, so it serves both character and word distance.
    """
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, item_a in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, item_b in enumerate(b, start=1):
            cost = 0 if item_a == item_b else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]


def words(text: str) -> list[str]:
    """Maximal runs of non-space characters; space runs yield no empty words."""
    return [w for w in text.split(" ") if w]


def _normalize(pairs: Iterable, lowercase: bool) -> list[EvalPair]:
    out = []
    for pred, truth in pairs:
        if lowercase:
            pred, truth = pred.lower(), truth.lower()
        out.append(EvalPair(pred, truth))
    return out


def cer(pairs: Iterable, lowercase: bool = False) -> float:
    """100 * sum(char distance) / sum(reference chars), spaces included."""
    pairs = _normalize(pairs, lowercase)
    total_len = sum(len(p.truth) for p in pairs)
    if total_len == 0:
        raise UndefinedDenominatorError("no reference characters to normalize by")
    total_dist = sum(levenshtein(p.pred, p.truth) for p in pairs)
    return 100.0 * total_dist / total_len


def wer(pairs: Iterable, lowercase: bool = False) -> float:
    """100 * sum(word distance) / sum(reference words)."""
    pairs = _normalize(pairs, lowercase)
    split = [(words(p.pred), words(p.truth)) for p in pairs]
    total_len = sum(len(t) for _, t in split)
    if total_len == 0:
        raise UndefinedDenominatorError("no reference words to normalize by")
    total_dist = sum(levenshtein(p, t) for p, t in split)
    return 100.0 * total_dist / total_len


def accuracy(pairs: Iterable, lowercase: bool = False) -> float:
    """Percent of exact string matches."""
    pairs = _normalize(pairs, lowercase)
    if not pairs:
        raise UndefinedDenominatorError("no pairs to score")
    exact = sum(1 for p in pairs if p.pred == p.truth)
    return 100.0 * exact / len(pairs)


def evaluate(pairs: Iterable, lowercase: bool = False) -> EvalReport:
    pairs = _normalize(pairs, lowercase)
    return EvalReport(
        cer=cer(pairs), wer=wer(pairs), acc=accuracy(pairs), n=len(pairs)
    )


def read_eval_tsv(path) -> list[EvalPair]:
    """UTF-8 TSV with columns id, prediction, truth."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated columns")
            pairs.append(EvalPair(pred=cols[1], truth=cols[2]))
    return pairs


def report_to_json(report: EvalReport) -> str:
    return json.dumps(
        {"cer": report.cer, "wer": report.wer, "acc": report.acc, "n": report.n},
        sort_keys=True,
    )
