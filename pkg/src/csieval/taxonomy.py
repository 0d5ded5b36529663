"""Mapping from Wikiproject topic labels to the five CSI categories.

The table is an ordered list of (pattern, category) pairs; first match
wins.  A trailing ``*`` makes a pattern match its own prefix segment plus
any dotted suffix, but an exact literal match (asterisk included) is
honoured first because some classifier labels carry the asterisk as part
of the label text.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from csieval.corpus import SamplePair

logger = logging.getLogger(__name__)


class CsiCategory(Enum):
    MATERIAL_CULTURE = "Material Culture"
    SOCIAL_CULTURE = "Social Culture"
    ORGANISATIONS_CUSTOMS_IDEAS = "Organisations, Customs and Ideas"
    ECOLOGY = "Ecology"
    GESTURES_AND_HABITS = "Gestures and Habits"


# Classification can never produce this one: no topic pattern maps to it,
# but hand-labeled data may still carry the value.
UNMAPPABLE = CsiCategory.GESTURES_AND_HABITS


@dataclass(frozen=True)
class MappingTable:
    rules: tuple[tuple[str, CsiCategory], ...]

    def __post_init__(self) -> None:
        patterns = [p for p, _ in self.rules]
        if len(patterns) != len(set(patterns)):
            dupes = sorted({p for p in patterns if patterns.count(p) > 1})
            raise ValueError(f"duplicate patterns in mapping table: {dupes}")


def _pattern_matches(pattern: str, topic: str) -> bool:
    if topic == pattern:
        return True
    if pattern.endswith("*"):
        base = pattern[:-1].rstrip(".")
        return topic == base or topic.startswith(base + ".")
    return False


def map_topic(topic: str, table: MappingTable) -> CsiCategory | None:
    """First matching rule's category, or None when nothing matches."""
    for pattern, category in table.rules:
        if _pattern_matches(pattern, topic):
            return category
    return None


def load_mapping_table(path: str | Path | None = None) -> MappingTable:
    """Parse a tab-separated pattern/category config (bundled by default).

    Lines starting with ``#`` and blank lines are ignored.  Categories are
    given by their display names.
    """
    if path is None:
        text = (
            resources.files("csieval")
            .joinpath("data/wikiproject_csi_map.tsv")
            .read_text("utf-8")
        )
        name = "wikiproject_csi_map.tsv"
    else:
        path = Path(path)
        text = path.read_text("utf-8")
        name = path.name
    by_value = {c.value: c for c in CsiCategory}
    rules: list[tuple[str, CsiCategory]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{name}: expected 'pattern<TAB>category' at line {lineno}")
        pattern, category_name = parts[0].strip(), parts[1].strip()
        category = by_value.get(category_name)
        if category is None:
            raise ValueError(f"{name}: unknown category {category_name!r} at line {lineno}")
        rules.append((pattern, category))
    table = MappingTable(rules=tuple(rules))
    covered = {c for _, c in table.rules}
    expected = set(CsiCategory) - {UNMAPPABLE}
    if covered < expected:
        missing = sorted(c.value for c in expected - covered)
        logger.warning("%s: no patterns for categories %s", name, missing)
    return table


@dataclass(frozen=True)
class ClassifiedSample:
    """A kept sample plus the category resolved for each of its CSIs."""

    sample: SamplePair
    topics: dict[str, tuple[str, ...]]
    categories: dict[str, CsiCategory]


def classify_entity(
    topic_labels: Sequence[str], table: MappingTable
) -> CsiCategory | None:
    """Category of the first topic (in the entity's own order) that maps."""
    for topic in topic_labels:
        category = map_topic(topic, table)
        if category is not None:
            return category
    return None


def classify_and_filter(
    samples: Iterable[tuple[SamplePair, dict[str, Sequence[str]]]],
    table: MappingTable,
) -> list[ClassifiedSample]:
    """Keep samples containing at least one entity whose topics map.

    ``samples`` pairs each SamplePair with an entity-id -> topic-labels
    map.  An entity counts as a CSI iff at least one of its topics maps;
    unmapped entities are dropped from the categories but the sample
    survives as long as one CSI remains.
    """
    kept: list[ClassifiedSample] = []
    for sample, topics in samples:
        categories: dict[str, CsiCategory] = {}
        for entity_id, labels in topics.items():
            category = classify_entity(labels, table)
            if category is not None:
                categories[entity_id] = category
        if categories:
            kept.append(
                ClassifiedSample(
                    sample=sample,
                    topics={k: tuple(v) for k, v in topics.items()},
                    categories=categories,
                )
            )
    return kept
