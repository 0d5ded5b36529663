"""Evaluation toolkit for culturally aware machine translation.

Scores how understandably MT systems render cultural-specific items
(CSIs): span-based fuzzy matching against known translations, pairwise
understandability judging by an LLM, knowledge-injection prompting
strategies, corpus curation utilities, and an annotation service for
human studies.
"""

__version__ = "0.1.0"

from csieval.matching import (
    NormalizeConfig,
    ReferenceSet,
    TokenizedSentence,
    UnitKind,
    csi_match,
    normalized_levenshtein,
    partial_similarity_ratio,
    tokenize,
    unit_kind_for,
)

__all__ = [
    "NormalizeConfig",
    "ReferenceSet",
    "TokenizedSentence",
    "UnitKind",
    "csi_match",
    "normalized_levenshtein",
    "partial_similarity_ratio",
    "tokenize",
    "unit_kind_for",
    "__version__",
]
