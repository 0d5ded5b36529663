"""Annotated parallel-corpus data model and JSONL loaders.

A corpus is two JSON-lines files: sample pairs with inline CSI occurrence
spans, and a CSI entry table keyed by entity id.  Loading validates the
cross references (spans in bounds, span text equal to the entry surface
after NFC, no dangling entity ids, origin country present) and reports
every problem with its line number instead of stopping at the first.
"""

from __future__ import annotations

import json
import logging
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)


class CorpusError(Exception):
    """Raised when a corpus or run file fails validation.

    ``problems`` lists every individual failure message.
    """

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__(
            "; ".join(problems) if len(problems) <= 3 else
            f"{len(problems)} problems, first: {problems[0]}"
        )


@dataclass(frozen=True)
class CsiEntry:
    entity_id: str
    surface: str
    category: str
    csi_category: str
    origin_country: str | None = None
    translations: dict[str, tuple[str, ...]] = field(default_factory=dict)
    description_src: str | None = None
    description_tgt: str | None = None
    explanation: str | None = None

    def has_translation(self, lang: str) -> bool:
        return bool(self.translations.get(lang))

    def to_record(self) -> dict:
        rec: dict = {
            "entity_id": self.entity_id,
            "surface": self.surface,
            "category": self.category,
            "csi_category": self.csi_category,
            "origin_country": self.origin_country,
            "translations": {k: list(v) for k, v in self.translations.items()},
        }
        for key in ("description_src", "description_tgt", "explanation"):
            value = getattr(self, key)
            if value is not None:
                rec[key] = value
        return rec


@dataclass(frozen=True)
class CsiOccurrence:
    """One CSI mention: entry plus 0-based end-exclusive character span."""

    entry: CsiEntry
    span: tuple[int, int]


@dataclass(frozen=True)
class SamplePair:
    sample_id: str
    source_lang: str
    target_lang: str
    source_text: str
    reference_text: str
    csis: tuple[CsiOccurrence, ...]

    def to_record(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "source_lang": self.source_lang,
            "target_lang": self.target_lang,
            "source_text": self.source_text,
            "reference_text": self.reference_text,
            "csis": [
                {"entity_id": occ.entry.entity_id, "span": list(occ.span)}
                for occ in self.csis
            ],
        }


@dataclass(frozen=True)
class Corpus:
    samples: tuple[SamplePair, ...]
    entries: dict[str, CsiEntry]

    def __len__(self) -> int:
        return len(self.samples)

    def sample(self, sample_id: str) -> SamplePair:
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        raise KeyError(sample_id)


@dataclass(frozen=True)
class DatasetStats:
    sentence_count: int
    csi_count: int
    csi_types: int
    csi_with_translation: int


class RegionGroup(Enum):
    SOURCE = "Source"
    TARGET = "Target"
    OTHER = "Other"


@dataclass(frozen=True)
class SystemRun:
    system_id: str
    strategy_id: str
    hypotheses: dict[str, str]
    turns: dict[str, tuple[tuple[str, str], ...]] = field(default_factory=dict)
    coverage_gaps: tuple[str, ...] = ()


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def _read_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    """Yield (1-based line number, parsed record); malformed lines raise."""
    problems: list[str] = []
    records: list[tuple[int, dict]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                problems.append(f"{path.name}: malformed JSON at line {lineno}: {exc.msg}")
                continue
            if not isinstance(rec, dict):
                problems.append(f"{path.name}: line {lineno} is not an object")
                continue
            records.append((lineno, rec))
    if problems:
        raise CorpusError(problems)
    yield from records


def load_entries(path: str | Path, strict: bool = True) -> dict[str, CsiEntry]:
    """Load the CSI entry table.

    Entries without an origin country are rejected (strict, the default)
    or dropped with a warning; a validated corpus must carry provenance
    for every CSI it keeps.
    """
    path = Path(path)
    entries: dict[str, CsiEntry] = {}
    problems: list[str] = []
    for lineno, rec in _read_jsonl(path):
        try:
            entity_id = rec["entity_id"]
            surface = _nfc(rec["surface"])
            entry = CsiEntry(
                entity_id=entity_id,
                surface=surface,
                category=rec.get("category", ""),
                csi_category=rec.get("csi_category", ""),
                origin_country=rec.get("origin_country"),
                translations={
                    lang: tuple(_nfc(t) for t in texts)
                    for lang, texts in rec.get("translations", {}).items()
                },
                description_src=rec.get("description_src"),
                description_tgt=rec.get("description_tgt"),
                explanation=rec.get("explanation"),
            )
        except (KeyError, TypeError) as exc:
            problems.append(f"{path.name}: bad entry at line {lineno}: {exc!r}")
            continue
        if not entry.surface:
            problems.append(f"{path.name}: empty surface at line {lineno}")
            continue
        if entry.entity_id in entries:
            problems.append(
                f"{path.name}: duplicate entity_id {entry.entity_id} at line {lineno}"
            )
            continue
        if entry.origin_country is None:
            if strict:
                problems.append(
                    f"{path.name}: missing origin_country for {entry.entity_id} "
                    f"at line {lineno}"
                )
            else:
                logger.warning("dropping %s: no origin_country", entry.entity_id)
            continue
        entries[entry.entity_id] = entry
    if problems:
        raise CorpusError(problems)
    return entries


def load_corpus(
    corpus_path: str | Path,
    entries_path: str | Path,
    schema_version: str = "1",
) -> Corpus:
    """Load and fully validate a corpus.

    Raises :class:`CorpusError` carrying every detected problem.  Order of
    samples follows the file.
    """
    if schema_version != "1":
        raise CorpusError([f"unsupported schema_version {schema_version!r}"])
    corpus_path = Path(corpus_path)
    entries = load_entries(entries_path)
    samples: list[SamplePair] = []
    problems: list[str] = []
    seen_ids: set[str] = set()
    for lineno, rec in _read_jsonl(corpus_path):
        try:
            sample_id = rec["sample_id"]
            source_text = rec["source_text"]
            reference_text = _nfc(rec["reference_text"])
            source_lang = rec["source_lang"]
            target_lang = rec["target_lang"]
            raw_csis = rec.get("csis", [])
        except KeyError as exc:
            problems.append(f"missing field {exc} at line {lineno}")
            continue
        if sample_id in seen_ids:
            problems.append(f"duplicate sample_id {sample_id} at line {lineno}")
            continue
        seen_ids.add(sample_id)
        if source_text != _nfc(source_text):
            # Spans index into the stored text; non-NFC text would make
            # them ambiguous after normalization.
            problems.append(
                f"source_text not NFC-normalized at line {lineno} ({sample_id})"
            )
            continue
        occurrences: list[CsiOccurrence] = []
        ok = True
        for c in raw_csis:
            entity_id = c.get("entity_id")
            span = c.get("span")
            entry = entries.get(entity_id)
            if entry is None:
                problems.append(
                    f"dangling entity reference {entity_id!r} at line {lineno}"
                )
                ok = False
                continue
            if (
                not isinstance(span, list)
                or len(span) != 2
                or not all(isinstance(v, int) for v in span)
            ):
                problems.append(f"bad span {span!r} at line {lineno}")
                ok = False
                continue
            start, end = span
            if not (0 <= start < end <= len(source_text)):
                problems.append(
                    f"span {span} out of bounds at line {lineno} ({sample_id})"
                )
                ok = False
                continue
            if _nfc(source_text[start:end]) != _nfc(entry.surface):
                problems.append(f"span/surface mismatch at line {lineno}")
                ok = False
                continue
            occurrences.append(CsiOccurrence(entry=entry, span=(start, end)))
        if not ok:
            continue
        samples.append(
            SamplePair(
                sample_id=sample_id,
                source_lang=source_lang,
                target_lang=target_lang,
                source_text=source_text,
                reference_text=reference_text,
                csis=tuple(occurrences),
            )
        )
    if problems:
        raise CorpusError(problems)
    return Corpus(samples=tuple(samples), entries=entries)


def save_corpus(corpus: Corpus, corpus_path: str | Path, entries_path: str | Path) -> None:
    """Write a corpus back to its two JSONL files (load's inverse)."""
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for sample in corpus.samples:
            fh.write(json.dumps(sample.to_record(), ensure_ascii=False) + "\n")
    with open(entries_path, "w", encoding="utf-8") as fh:
        for entry in corpus.entries.values():
            fh.write(json.dumps(entry.to_record(), ensure_ascii=False) + "\n")


def stats(corpus: Corpus) -> DatasetStats:
    """Corpus-level counts; type counts deduplicate by entity_id."""
    ids: set[str] = set()
    translated: set[str] = set()
    csi_count = 0
    for sample in corpus.samples:
        for occ in sample.csis:
            csi_count += 1
            ids.add(occ.entry.entity_id)
            if occ.entry.has_translation(sample.target_lang):
                translated.add(occ.entry.entity_id)
    return DatasetStats(
        sentence_count=len(corpus.samples),
        csi_count=csi_count,
        csi_types=len(ids),
        csi_with_translation=len(translated),
    )


def nt_subset(corpus: Corpus) -> set[str]:
    """Sample ids with at least one CSI lacking a target-language translation."""
    out: set[str] = set()
    for sample in corpus.samples:
        for occ in sample.csis:
            if not occ.entry.has_translation(sample.target_lang):
                out.add(sample.sample_id)
                break
    return out


def load_lang_map() -> dict[str, str]:
    """Bundled country -> dominant-language table (editable config)."""
    text = (
        resources.files("csieval").joinpath("data/country_languages.json").read_text("utf-8")
    )
    return json.loads(text)


def region_group(
    entry: CsiEntry,
    pair: tuple[str, str],
    lang_map: dict[str, str],
    strict: bool = False,
) -> RegionGroup:
    """Group a CSI by where its origin country's language sits in the pair.

    ``Source`` when the country's dominant language is the source language,
    ``Target`` for the target language, ``Other`` otherwise (including
    unknown countries unless ``strict``).
    """
    source_lang, target_lang = pair
    country = entry.origin_country
    lang = lang_map.get(country) if country else None
    if lang is None:
        if strict:
            raise KeyError(f"no language mapping for country {country!r}")
        logger.warning("country %r not in language map; grouping as Other", country)
        return RegionGroup.OTHER
    if lang == source_lang:
        return RegionGroup.SOURCE
    if lang == target_lang:
        return RegionGroup.TARGET
    return RegionGroup.OTHER


def load_system_run(path: str | Path, corpus: Corpus) -> SystemRun:
    """Load a system-output file and reconcile it against a corpus.

    The first line is a header carrying system and strategy ids; the rest
    map sample ids to hypothesis texts (plus optional conversation turns).
    Samples present in the corpus but absent from the file are reported as
    coverage gaps, never silently dropped.
    """
    path = Path(path)
    rows = list(_read_jsonl(path))
    if not rows:
        raise CorpusError([f"{path.name}: empty run file"])
    problems: list[str] = []
    _, header = rows[0]
    system_id = header.get("system_id")
    strategy_id = header.get("strategy_id")
    if not system_id or not strategy_id:
        raise CorpusError(
            [f"{path.name}: first line must carry system_id and strategy_id"]
        )
    known = {s.sample_id for s in corpus.samples}
    hypotheses: dict[str, str] = {}
    turns: dict[str, tuple[tuple[str, str], ...]] = {}
    for lineno, rec in rows[1:]:
        sample_id = rec.get("sample_id")
        if sample_id is None or "hypothesis" not in rec:
            problems.append(f"{path.name}: line {lineno} lacks sample_id/hypothesis")
            continue
        if sample_id not in known:
            problems.append(f"{path.name}: unknown sample_id {sample_id} at line {lineno}")
            continue
        if sample_id in hypotheses:
            problems.append(f"{path.name}: duplicate sample_id {sample_id} at line {lineno}")
            continue
        hypotheses[sample_id] = _nfc(rec["hypothesis"])
        if "turns" in rec:
            turns[sample_id] = tuple(
                (t["prompt"], t["response"]) for t in rec["turns"]
            )
    if problems:
        raise CorpusError(problems)
    gaps = tuple(
        s.sample_id for s in corpus.samples if s.sample_id not in hypotheses
    )
    if gaps:
        logger.warning("run %s covers %d/%d samples", system_id, len(hypotheses), len(known))
    return SystemRun(
        system_id=system_id,
        strategy_id=strategy_id,
        hypotheses=hypotheses,
        turns=turns,
        coverage_gaps=gaps,
    )


def save_system_run(run: SystemRun, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            json.dumps(
                {"system_id": run.system_id, "strategy_id": run.strategy_id},
                ensure_ascii=False,
            )
            + "\n"
        )
        for sample_id, hyp in run.hypotheses.items():
            rec: dict = {"sample_id": sample_id, "hypothesis": hyp}
            if sample_id in run.turns:
                rec["turns"] = [
                    {"prompt": p, "response": r} for p, r in run.turns[sample_id]
                ]
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def fixture_corpus_paths() -> tuple[Path, Path]:
    """Paths of the bundled 20-pair En-Zh corpus used by tests and demos."""
    base = resources.files("csieval").joinpath("data/fixture_corpus")
    return Path(str(base.joinpath("corpus.jsonl"))), Path(
        str(base.joinpath("csi_entries.jsonl"))
    )
