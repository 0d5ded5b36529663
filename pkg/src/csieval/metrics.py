"""Corpus-level scoring: CSI-Match aggregation, BLEU, Pearson correlation.

Span matching itself lives in :mod:`csieval.matching`; this module wires
it across a corpus and adds the conventional surface metrics used
alongside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from csieval.corpus import Corpus, SystemRun
from csieval.matching import (
    DEFAULT_NORMALIZE,
    NormalizeConfig,
    ReferenceSet,
    UnitKind,
    csi_match,
    tokenize,
    unit_kind_for,
)


class Smoothing(Enum):
    NONE = "none"
    ADD_ONE = "add_one"


@dataclass(frozen=True)
class BleuConfig:
    max_order: int = 4
    tokenization: UnitKind = UnitKind.WHITESPACE
    smoothing: Smoothing = Smoothing.ADD_ONE

    def __post_init__(self) -> None:
        if self.max_order < 1:
            raise ValueError("max_order must be >= 1")


def _tokens(text: str, kind: UnitKind) -> list[str]:
    if kind is UnitKind.WHITESPACE:
        return text.split()
    return [ch for ch in text if not ch.isspace()]


def _ngram_counts(tokens: list[str], order: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - order + 1):
        gram = tuple(tokens[i : i + order])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def bleu(
    hypotheses: list[str],
    references: list[str],
    cfg: BleuConfig = BleuConfig(),
) -> float:
    """Corpus BLEU: clipped n-gram precision, brevity penalty, in [0,100].

    Add-one smoothing (the default) adds 1 to both numerator and
    denominator of every order above 1, so a single missing higher-order
    match does not zero the whole score; order-1 precision is left
    unsmoothed and a zero there yields 0.
    """
    if len(hypotheses) != len(references):
        raise ValueError(
            f"length mismatch: {len(hypotheses)} hypotheses vs "
            f"{len(references)} references"
        )
    if not hypotheses:
        raise ValueError("empty corpus")
    matches = [0] * cfg.max_order
    totals = [0] * cfg.max_order
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_toks = _tokens(hyp, cfg.tokenization)
        ref_toks = _tokens(ref, cfg.tokenization)
        hyp_len += len(hyp_toks)
        ref_len += len(ref_toks)
        for order in range(1, cfg.max_order + 1):
            hyp_grams = _ngram_counts(hyp_toks, order)
            if not hyp_grams:
                continue
            ref_grams = _ngram_counts(ref_toks, order)
            totals[order - 1] += sum(hyp_grams.values())
            matches[order - 1] += sum(
                min(count, ref_grams.get(gram, 0))
                for gram, count in hyp_grams.items()
            )
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    for order in range(1, cfg.max_order + 1):
        num, den = matches[order - 1], totals[order - 1]
        if cfg.smoothing is Smoothing.ADD_ONE and order > 1:
            num += 1
            den += 1
        if num == 0 or den == 0:
            return 0.0
        log_sum += math.log(num / den)
    precision_mean = math.exp(log_sum / cfg.max_order)
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return precision_mean * brevity * 100.0


def pearson(x: list[float], y: list[float]) -> float:
    """Sample Pearson correlation in [-1, 1].

    Uses one square root of the variance product so perfectly (anti)
    correlated inputs land on +/-1 up to rounding.
    """
    if len(x) != len(y):
        raise ValueError("length mismatch")
    if len(x) < 2:
        raise ValueError("need at least 2 points")
    n = len(x)
    mean_x = sum(x) / n
    mean_y = sum(y) / n
    dx = [v - mean_x for v in x]
    dy = [v - mean_y for v in y]
    var_x = sum(d * d for d in dx)
    var_y = sum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise ValueError("degenerate variance")
    cov = sum(a * b for a, b in zip(dx, dy))
    r = cov / math.sqrt(var_x * var_y)
    # Guard against rounding pushing past the bounds.
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class OccurrenceScore:
    sample_id: str
    entity_id: str
    score: float


@dataclass(frozen=True)
class CsiMatchAggregate:
    """Mean CSI-Match over scorable occurrences plus the bookkeeping.

    ``n_nt`` counts occurrences skipped for lacking any target-language
    translation; ``missing`` lists sample ids the run did not cover.
    """

    mean: float
    n_scored: int
    n_nt: int
    missing: tuple[str, ...]
    scores: tuple[OccurrenceScore, ...] = field(repr=False, default=())


def aggregate_csi_match(
    run: SystemRun,
    corpus: Corpus,
    unit_kind: UnitKind | None = None,
    config: NormalizeConfig = DEFAULT_NORMALIZE,
) -> CsiMatchAggregate:
    """Mean CSI-Match of a system's hypotheses over all scorable CSIs.

    Every occurrence with at least one target-language translation
    contributes one term; a sentence with k CSIs contributes k.  NT
    occurrences are excluded and counted, not averaged in as zeros.
    """
    scores: list[OccurrenceScore] = []
    n_nt = 0
    missing: list[str] = []
    for sample in corpus.samples:
        hypothesis = run.hypotheses.get(sample.sample_id)
        if hypothesis is None:
            missing.append(sample.sample_id)
            continue
        kind = unit_kind if unit_kind is not None else unit_kind_for(sample.target_lang)
        sentence = tokenize(hypothesis, kind, config)
        for occ in sample.csis:
            translations = occ.entry.translations.get(sample.target_lang, ())
            if not translations:
                n_nt += 1
                continue
            refs = ReferenceSet.from_strings(translations, config)
            scores.append(
                OccurrenceScore(
                    sample_id=sample.sample_id,
                    entity_id=occ.entry.entity_id,
                    score=csi_match(refs, sentence, config),
                )
            )
    if not scores:
        raise ValueError("no scorable CSIs (all occurrences are NT or uncovered)")
    mean = sum(s.score for s in scores) / len(scores)
    return CsiMatchAggregate(
        mean=mean,
        n_scored=len(scores),
        n_nt=n_nt,
        missing=tuple(missing),
        scores=tuple(scores),
    )
