"""Prompt construction for culture-aware translation.

Five chat strategies (plain instruction, translation injection,
explanation injection, self-explanation, self-ranking), two source
transforms for dictionary-based systems (append, replace), and the
completion-style in-context format used with plain language models.

Templates ship as plain-text files with ``{slot}`` placeholders and can
be overridden per deployment; rendering is deterministic and
byte-stable, which the golden tests rely on.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from csieval.corpus import SamplePair


class PromptError(Exception):
    """Raised when a strategy's knowledge requirements are not met."""


class Strategy(Enum):
    """Chat prompting strategies, keyed by their run-file ids."""

    BASIC = "BI"
    TRANSLATION = "CT"
    EXPLANATION = "CE"
    SELF_EXPLANATION = "SE"
    SELF_RANKING = "SR"


# Strategies whose plan asks the model twice in one conversation.
TWO_TURN = frozenset({Strategy.SELF_EXPLANATION, Strategy.SELF_RANKING})


@dataclass(frozen=True)
class TurnSpec:
    """One fully rendered user turn; ``depends_on`` marks that the prior
    turn's exchange must be in the conversation when this one is sent."""

    prompt: str
    depends_on: int | None = None


@dataclass(frozen=True)
class PromptPlan:
    strategy: Strategy
    turns: tuple[TurnSpec, ...]
    shots: tuple[tuple[str, str], ...] = ()
    source_lang: str = "en"
    target_lang: str = "zh"
    generated_number: int | None = None

    def __post_init__(self) -> None:
        expected = 2 if self.strategy in TWO_TURN else 1
        if len(self.turns) != expected:
            raise ValueError(
                f"{self.strategy.value} plan needs {expected} turns, "
                f"got {len(self.turns)}"
            )
        if self.strategy is Strategy.SELF_RANKING:
            if self.generated_number is None or self.generated_number < 2:
                raise ValueError("self-ranking needs generated_number >= 2")


@dataclass(frozen=True)
class CsiKnowledge:
    """What is known about one CSI surface, in the target language."""

    translations: tuple[str, ...] = ()
    explanation: str | None = None


def knowledge_from_sample(sample: SamplePair) -> dict[str, CsiKnowledge]:
    """Per-surface knowledge pulled from a sample's linked entries."""
    out: dict[str, CsiKnowledge] = {}
    for occ in sample.csis:
        entry = occ.entry
        out[entry.surface] = CsiKnowledge(
            translations=tuple(entry.translations.get(sample.target_lang, ())),
            explanation=entry.explanation,
        )
    return out


_SLOT = re.compile(r"\{(\w+)\}")


def render_template(template: str, slots: Mapping[str, str]) -> str:
    """Fill ``{slot}`` placeholders in a single pass.

    Single-pass substitution means slot values can never be re-expanded,
    no matter what braces they contain.  Unknown placeholders are an
    error; unused slot values are fine.
    """
    missing: list[str] = []

    def fill(match: re.Match) -> str:
        name = match.group(1)
        if name not in slots:
            missing.append(name)
            return match.group(0)
        return slots[name]

    rendered = _SLOT.sub(fill, template)
    if missing:
        raise PromptError(f"template slots without values: {sorted(set(missing))}")
    return rendered


_TEMPLATE_FILES = {
    "bi": "bi.txt",
    "ct": "ct.txt",
    "ce": "ce.txt",
    "se_explain": "se_explain.txt",
    "se_translate": "se_translate.txt",
    "sr_generate": "sr_generate.txt",
    "sr_select": "sr_select.txt",
    "judge_pairwise": "judge_pairwise.txt",
}


def load_templates(directory: str | Path | None = None) -> dict[str, str]:
    """Template id -> text; bundled defaults unless a directory is given."""
    out: dict[str, str] = {}
    for template_id, filename in _TEMPLATE_FILES.items():
        if directory is None:
            text = (
                resources.files("csieval")
                .joinpath(f"data/templates/{filename}")
                .read_text("utf-8")
            )
        else:
            text = (Path(directory) / filename).read_text("utf-8")
        out[template_id] = text
    return out


def load_language_names() -> dict[str, str]:
    text = (
        resources.files("csieval").joinpath("data/language_names.json").read_text("utf-8")
    )
    return json.loads(text)


def language_name(lang: str, names: Mapping[str, str] | None = None) -> str:
    names = names if names is not None else load_language_names()
    try:
        return names[lang]
    except KeyError:
        raise PromptError(f"no display name for language code {lang!r}") from None


def load_shot_bank(
    pair: str, variant: str = "default", directory: str | Path | None = None
) -> tuple[tuple[str, str], ...]:
    """Exemplar pairs for a language pair ("en-zh"), by bank variant."""
    if directory is None:
        try:
            text = (
                resources.files("csieval")
                .joinpath(f"data/shots/{pair}.json")
                .read_text("utf-8")
            )
        except FileNotFoundError:
            raise PromptError(f"no bundled shot bank for {pair!r}") from None
    else:
        text = (Path(directory) / f"{pair}.json").read_text("utf-8")
    bank = json.loads(text)
    if variant not in bank:
        raise PromptError(f"shot bank {pair!r} has no variant {variant!r}")
    return tuple((src, tgt) for src, tgt in bank[variant])


def _surfaces(sample: SamplePair) -> list[str]:
    seen: list[str] = []
    for occ in sample.csis:
        if occ.entry.surface not in seen:
            seen.append(occ.entry.surface)
    return seen


def translations_block(
    surfaces: Sequence[str], knowledge: Mapping[str, CsiKnowledge]
) -> str:
    """One "surface:t1, t2" line per CSI, in occurrence order."""
    lines = []
    for surface in surfaces:
        item = knowledge.get(surface)
        if item is None or not item.translations:
            raise PromptError(
                f"no target translation for CSI {surface!r} "
                "(translation injection cannot cover NT items)"
            )
        lines.append(f"{surface}:{', '.join(item.translations)}")
    return "\n".join(lines)


def explanations_block(
    surfaces: Sequence[str], knowledge: Mapping[str, CsiKnowledge]
) -> str:
    lines = []
    for surface in surfaces:
        item = knowledge.get(surface)
        if item is None or not item.explanation:
            raise PromptError(f"no explanation for CSI {surface!r}")
        lines.append(item.explanation)
    return "\n".join(lines)


def build_prompt(
    strategy: Strategy,
    sample: SamplePair,
    knowledge: Mapping[str, CsiKnowledge] | None = None,
    shots: Sequence[tuple[str, str]] = (),
    generated_number: int = 3,
    templates: Mapping[str, str] | None = None,
    names: Mapping[str, str] | None = None,
) -> PromptPlan:
    """Render a strategy into an executable plan for one sample.

    ``knowledge`` defaults to what the sample's own entries carry.  The
    source sentence appears verbatim in exactly one turn; follow-up turns
    lean on conversation history instead of repeating it.
    """
    if knowledge is None:
        knowledge = knowledge_from_sample(sample)
    if templates is None:
        templates = load_templates()
    surfaces = _surfaces(sample)
    entities = ", ".join(surfaces)
    slots = {
        "source": sample.source_text,
        "source_lang_name": language_name(sample.source_lang, names),
        "target_lang_name": language_name(sample.target_lang, names),
        "entities": entities,
    }
    turns: tuple[TurnSpec, ...]
    gen: int | None = None
    if strategy is Strategy.BASIC:
        turns = (TurnSpec(render_template(templates["bi"], slots)),)
    elif strategy is Strategy.TRANSLATION:
        slots["translations_block"] = translations_block(surfaces, knowledge)
        turns = (TurnSpec(render_template(templates["ct"], slots)),)
    elif strategy is Strategy.EXPLANATION:
        slots["explanations_block"] = explanations_block(surfaces, knowledge)
        turns = (TurnSpec(render_template(templates["ce"], slots)),)
    elif strategy is Strategy.SELF_EXPLANATION:
        if not surfaces:
            raise PromptError("self-explanation needs at least one CSI")
        turns = (
            TurnSpec(render_template(templates["se_explain"], slots)),
            TurnSpec(render_template(templates["se_translate"], slots), depends_on=0),
        )
    elif strategy is Strategy.SELF_RANKING:
        if not surfaces:
            raise PromptError("self-ranking needs at least one CSI")
        gen = generated_number
        slots["generated_number"] = str(generated_number)
        turns = (
            TurnSpec(render_template(templates["sr_generate"], slots)),
            TurnSpec(render_template(templates["sr_select"], slots), depends_on=0),
        )
    else:  # pragma: no cover - enum is closed
        raise PromptError(f"unknown strategy {strategy!r}")
    return PromptPlan(
        strategy=strategy,
        turns=turns,
        shots=tuple(shots),
        source_lang=sample.source_lang,
        target_lang=sample.target_lang,
        generated_number=gen,
    )


def exemplar_prompt(
    source: str,
    source_lang: str,
    target_lang: str,
    templates: Mapping[str, str] | None = None,
    names: Mapping[str, str] | None = None,
) -> str:
    """Basic-instruction prompt for one few-shot exemplar source."""
    if templates is None:
        templates = load_templates()
    slots = {
        "source": source,
        "source_lang_name": language_name(source_lang, names),
        "target_lang_name": language_name(target_lang, names),
    }
    return render_template(templates["bi"], slots)


def append_block(dictionary: Mapping[str, Sequence[str]]) -> str:
    """"surface:t1, t2" pairs joined with commas, in mapping order."""
    if not dictionary:
        raise PromptError("empty CSI dictionary")
    parts = []
    for surface, translations in dictionary.items():
        if not translations:
            raise PromptError(f"no translations for CSI {surface!r}")
        parts.append(f"{surface}:{', '.join(translations)}")
    return ",".join(parts)


def append_transform(source: str, dictionary: Mapping[str, Sequence[str]]) -> str:
    """Prefix the source with its CSI dictionary block."""
    return append_block(dictionary) + source


def replace_transform(
    source: str,
    occurrences: Sequence[tuple[int, int]],
    dictionary: Mapping[str, Sequence[str]],
    strict: bool = False,
) -> str:
    """Swap each CSI span for its first listed translation.

    Spans must not overlap.  Items without a translation are left in
    place (or rejected when ``strict``); replacement runs right to left
    so earlier offsets stay valid.
    """
    ordered = sorted(occurrences, key=lambda span: span[0])
    for (_, prev_end), (next_start, _) in zip(ordered, ordered[1:]):
        if next_start < prev_end:
            raise PromptError("overlapping CSI spans")
    out = source
    for start, end in sorted(occurrences, key=lambda span: span[0], reverse=True):
        if not (0 <= start < end <= len(source)):
            raise PromptError(f"span ({start}, {end}) out of bounds")
        surface = source[start:end]
        translations = dictionary.get(surface, ())
        if not translations:
            if strict:
                raise PromptError(f"no translation to substitute for {surface!r}")
            continue
        out = out[:start] + translations[0] + out[end:]
    return out


def sample_dictionary(sample: SamplePair) -> dict[str, tuple[str, ...]]:
    """Surface -> target translations for a sample, occurrence order."""
    out: dict[str, tuple[str, ...]] = {}
    for occ in sample.csis:
        translations = occ.entry.translations.get(sample.target_lang, ())
        if occ.entry.surface not in out and translations:
            out[occ.entry.surface] = tuple(translations)
    return out


def icl_format(
    shots: Sequence[tuple[str, str]],
    source: str,
    langs: tuple[str, str],
    names: Mapping[str, str] | None = None,
    query_prefix: str = "",
) -> str:
    """Completion-style exemplar block ending in an open query line.

    Each exemplar renders as "English:...=Chinese:..."; the final line
    carries the source and stops after "=Chinese:" for the model to
    complete.  ``query_prefix`` lets dictionary-based variants prepend
    their CSI block to the query line.
    """
    src_name = language_name(langs[0], names)
    tgt_name = language_name(langs[1], names)
    lines = [f"{src_name}:{src}={tgt_name}:{tgt}" for src, tgt in shots]
    lines.append(f"{query_prefix}{src_name}:{source}={tgt_name}:")
    return "\n".join(lines)
