"""Fuzzy span matching for CSI translations.

The accuracy metric scores how well a translated sentence preserves a
cultural-specific item: it is the maximum, over all reference translations
of the CSI, of the best similarity between that reference and any
word-index span of the output sentence.  Similarity between two strings is
``(1 - d) * 100`` where ``d`` is the Levenshtein distance normalized by
the longer string's length.

The span search is exact.  A length-based lower bound on the edit distance
(``lev(t, s) >= abs(len(t) - len(s))``) lets the search skip spans that
cannot beat the incumbent, and the distance computation itself bails out
early once it exceeds the best achievable cutoff; neither shortcut can
change the maximum.  All incumbent comparisons use integer cross
multiplication, so span selection never depends on float rounding.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class UnitKind(Enum):
    """How a sentence is segmented into matchable units."""

    WHITESPACE = "whitespace"
    PER_CHARACTER = "per_character"


# Languages whose scripts are written without spaces get per-character units.
UNSPACED_LANGUAGES = frozenset({"zh", "ja"})


def unit_kind_for(lang: str) -> UnitKind:
    """Default segmentation for a language code (override where needed)."""
    base = lang.split("-")[0].split("_")[0].lower()
    if base in UNSPACED_LANGUAGES:
        return UnitKind.PER_CHARACTER
    return UnitKind.WHITESPACE


@dataclass(frozen=True)
class NormalizeConfig:
    """Normalization applied to references and candidate spans before matching.

    Defaults favour recall of surface variants; all three steps can be
    switched off independently.
    """

    nfc: bool = True
    casefold: bool = True
    strip_punctuation: bool = True


DEFAULT_NORMALIZE = NormalizeConfig()


def _is_edge_punct(ch: str) -> bool:
    if ch.isspace():
        return True
    cat = unicodedata.category(ch)
    return cat.startswith("P") or cat.startswith("S")


def strip_edge_punctuation(text: str) -> str:
    """Remove leading/trailing punctuation, symbols, and whitespace."""
    start, end = 0, len(text)
    while start < end and _is_edge_punct(text[start]):
        start += 1
    while end > start and _is_edge_punct(text[end - 1]):
        end -= 1
    return text[start:end]


def normalize_text(text: str, config: NormalizeConfig = DEFAULT_NORMALIZE) -> str:
    """Normalize a reference string (or span) for matching."""
    if config.nfc:
        text = unicodedata.normalize("NFC", text)
    if config.casefold:
        text = text.casefold()
    if config.strip_punctuation:
        text = strip_edge_punctuation(text)
    return text


@dataclass(frozen=True)
class TokenizedSentence:
    """A sentence split into word-index units.

    ``units`` are already NFC-normalized (and casefolded when the config says
    so); punctuation stripping happens per candidate span, not per unit, so
    interior punctuation stays matchable.
    """

    original: str
    units: tuple[str, ...]
    unit_kind: UnitKind

    @property
    def joiner(self) -> str:
        return " " if self.unit_kind is UnitKind.WHITESPACE else ""

    def span_text(self, start: int, end: int) -> str:
        """Raw text of units ``start..end`` inclusive (no edge stripping)."""
        return self.joiner.join(self.units[start : end + 1])

    def __len__(self) -> int:
        return len(self.units)


def tokenize(
    text: str,
    unit_kind: UnitKind = UnitKind.WHITESPACE,
    config: NormalizeConfig = DEFAULT_NORMALIZE,
) -> TokenizedSentence:
    """Segment ``text`` into matchable units.

    Whitespace mode splits on runs of whitespace; per-character mode takes
    each non-whitespace code point as a unit, which is the right reading of
    "word index" for unspaced scripts.
    """
    if config.nfc:
        text = unicodedata.normalize("NFC", text)
    if config.casefold:
        normalized = text.casefold()
    else:
        normalized = text
    if unit_kind is UnitKind.WHITESPACE:
        units = tuple(normalized.split())
    else:
        units = tuple(ch for ch in normalized if not ch.isspace())
    return TokenizedSentence(original=text, units=units, unit_kind=unit_kind)


def levenshtein(a: str, b: str) -> int:
    """Plain edit distance (insert/delete/substitute, unit costs)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) > len(b):
        a, b = b, a
    prev = list(range(len(a) + 1))
    for j, cb in enumerate(b, start=1):
        cur = [j]
        for i, ca in enumerate(a, start=1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[i] + 1, cur[i - 1] + 1, prev[i - 1] + cost))
        prev = cur
    return prev[-1]


def _levenshtein_within(a: str, b: str, cutoff: int) -> int:
    """Edit distance if it is <= cutoff, else any value > cutoff.

    Early exit: once every cell of a DP row exceeds the cutoff the true
    distance cannot come back under it.
    """
    if abs(len(a) - len(b)) > cutoff:
        return cutoff + 1
    if a == b:
        return 0
    if len(a) > len(b):
        a, b = b, a
    prev = list(range(len(a) + 1))
    for j, cb in enumerate(b, start=1):
        cur = [j]
        row_min = j
        for i, ca in enumerate(a, start=1):
            cost = 0 if ca == cb else 1
            val = min(prev[i] + 1, cur[i - 1] + 1, prev[i - 1] + cost)
            cur.append(val)
            if val < row_min:
                row_min = val
        if row_min > cutoff:
            return cutoff + 1
        prev = cur
    return prev[-1]


def normalized_levenshtein(a: str, b: str) -> float:
    """Edit distance over Unicode scalar values, normalized by max length.

    Symmetric, in ``[0, 1]``; two empty strings have distance 0 by
    convention.
    """
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


@dataclass(frozen=True)
class SpanMatch:
    """Best span found for one reference string.

    ``span`` is an inclusive ``(i, j)`` pair of unit indices, or ``None``
    for an empty sentence.  ``score = (1 - distance) * 100``.
    """

    score: float
    span: tuple[int, int] | None
    distance: float


_NO_SPAN = SpanMatch(score=0.0, span=None, distance=1.0)


def partial_similarity_ratio(
    reference: str,
    sentence: TokenizedSentence,
    config: NormalizeConfig = DEFAULT_NORMALIZE,
) -> SpanMatch:
    """Exact maximum similarity between ``reference`` and any unit span.

    Scans spans leftmost-first, shortest-first, keeping a span only when it
    is strictly better than the incumbent; ties therefore resolve to the
    leftmost then shortest span without affecting the score.  ``reference``
    must already be normalized (see :func:`normalize_text`).

    Raises ``ValueError`` on an empty reference; returns the empty-span
    sentinel when the sentence has no units.
    """
    if not reference:
        raise ValueError("reference string must be non-empty")
    n = len(sentence)
    if n == 0:
        return _NO_SPAN

    tlen = len(reference)
    # Incumbent distance as an exact fraction num/den.
    best_num = best_den = 0
    best_span: tuple[int, int] | None = None
    have_best = False

    for i in range(n):
        for j in range(i, n):
            span = normalize_text(sentence.span_text(i, j), config)
            slen = len(span)
            mx = max(tlen, slen)
            if have_best:
                if best_num == 0:
                    # A zero-distance span was found; nothing beats it and
                    # iteration order already matched the tie-break.
                    return _finish(best_num, best_den, best_span)
                # Length bound: d >= |tlen - slen| / mx.  Skip unless the
                # bound is strictly below the incumbent.
                if abs(tlen - slen) * best_den >= best_num * mx:
                    continue
                cutoff = (best_num * mx - 1) // best_den
                dist = _levenshtein_within(reference, span, cutoff)
                if dist > cutoff:
                    continue
            else:
                dist = levenshtein(reference, span)
            if not have_best or dist * best_den < best_num * mx:
                best_num, best_den, best_span = dist, mx, (i, j)
                have_best = True

    if not have_best:  # pragma: no cover - n > 0 always yields a span
        return _NO_SPAN
    return _finish(best_num, best_den, best_span)


def _finish(num: int, den: int, span: tuple[int, int] | None) -> SpanMatch:
    distance = num / den
    return SpanMatch(score=(1.0 - distance) * 100.0, span=span, distance=distance)


@dataclass(frozen=True)
class ReferenceSet:
    """Non-empty set of normalized reference translations for one CSI."""

    refs: tuple[str, ...]

    @classmethod
    def from_strings(
        cls, refs: Iterable[str], config: NormalizeConfig = DEFAULT_NORMALIZE
    ) -> "ReferenceSet":
        normalized = tuple(normalize_text(r, config) for r in refs)
        normalized = tuple(r for r in normalized if r)
        if not normalized:
            raise ValueError(
                "no usable reference translations (a no-translation CSI "
                "reached the scorer; exclude NT CSIs before scoring)"
            )
        return cls(refs=normalized)

    def __post_init__(self) -> None:
        if not self.refs:
            raise ValueError("reference set must be non-empty")
        if any(not r for r in self.refs):
            raise ValueError("reference strings must be non-empty")


def csi_match(
    refs: ReferenceSet,
    sentence: TokenizedSentence,
    config: NormalizeConfig = DEFAULT_NORMALIZE,
) -> float:
    """Best span score over all reference translations, in ``[0, 100]``.

    Adding a reference can only raise the result.
    """
    return max(
        partial_similarity_ratio(ref, sentence, config).score for ref in refs.refs
    )


def csi_match_detail(
    refs: ReferenceSet,
    sentence: TokenizedSentence,
    config: NormalizeConfig = DEFAULT_NORMALIZE,
) -> tuple[float, str, SpanMatch]:
    """Like :func:`csi_match` but also reports the winning reference/span."""
    best_ref = refs.refs[0]
    best = partial_similarity_ratio(best_ref, sentence, config)
    for ref in refs.refs[1:]:
        cand = partial_similarity_ratio(ref, sentence, config)
        if cand.score > best.score:
            best, best_ref = cand, ref
    return best.score, best_ref, best
