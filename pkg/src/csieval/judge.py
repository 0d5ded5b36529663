"""Pairwise understandability judging of CSI translations.

For every CSI occurrence, a judge model is shown the source sentence and
two candidate translations and asked which renders the CSI more
understandably.  Slot order is a controlled variable: a seeded per-task
coin flip, a fixed reference-first layout, or both orders with split
credit.  Win rates aggregate over all occurrences and over the
no-translation subset separately.
"""

from __future__ import annotations

import json
import re
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Corpus, SystemRun, nt_subset
from .llm import Transport, complete_text
from .prompting import language_name, load_templates, render_template

__all__ = [
    "JudgeError",
    "Verdict",
    "OrderPolicy",
    "JudgeTask",
    "OrderOutcome",
    "JudgeOutcome",
    "build_judge_prompt",
    "parse_verdict",
    "judge_tasks",
    "run_pairwise",
    "win_rate",
    "save_verdicts",
    "load_verdicts",
]


class JudgeError(Exception):
    pass


@dataclass(frozen=True)
class Verdict:
    choice: str
    comparison: str | None
    raw: str


_PREFERRED = re.compile(
    r"^\s*\W*Preferred\W*?\s*[:：]\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE
)
_COMPARISON = re.compile(
    r"^\s*\W*Comparison\W*?\s*[:：]\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE
)
# "A", '"B"', "Translation A.", "**B**"; the letter itself stays
# case-sensitive so prose ("a better fit") cannot pass as a verdict.
_BARE_CHOICE = re.compile(r"^[\W_]*(?:(?i:translation|option)\s+)?([AB])[\W_]*$")


def _clean_choice(text: str) -> str | None:
    match = _BARE_CHOICE.match(text.strip())
    if match:
        return match.group(1)
    return None


def parse_verdict(text: str) -> Verdict:
    """Read the judge's "Preferred:" line, tolerating format drift.

    The last Preferred line wins.  Without one, a standalone A or B on
    the final non-empty line is accepted.  Anything else is an error,
    never a silent default.
    """
    comparison = None
    comp_matches = _COMPARISON.findall(text)
    if comp_matches:
        comparison = comp_matches[-1]
    preferred = _PREFERRED.findall(text)
    for raw_choice in reversed(preferred):
        choice = _clean_choice(raw_choice)
        if choice is not None:
            return Verdict(choice=choice, comparison=comparison, raw=text)
    lines = [line for line in text.splitlines() if line.strip()]
    if lines:
        choice = _clean_choice(lines[-1])
        if choice is not None:
            return Verdict(choice=choice, comparison=comparison, raw=text)
    raise JudgeError(f"no A/B verdict in judge output: {text[:120]!r}")


def build_judge_prompt(
    source: str,
    csi: str,
    translation_a: str,
    translation_b: str,
    target_lang: str,
    templates: Mapping[str, str] | None = None,
    names: Mapping[str, str] | None = None,
) -> str:
    if templates is None:
        templates = load_templates()
    return render_template(
        templates["judge_pairwise"],
        {
            "target_lang_name": language_name(target_lang, names),
            "csi": csi,
            "source": source,
            "a": translation_a,
            "b": translation_b,
        },
    )


class OrderPolicy(Enum):
    SEEDED_RANDOM = "seeded-random"
    REFERENCE_FIRST = "reference-first"
    BOTH_ORDERS = "both-orders"


@dataclass(frozen=True)
class JudgeTask:
    sample_id: str
    csi_index: int
    surface: str
    source: str
    hypothesis: str
    reference: str
    target_lang: str
    is_nt: bool


@dataclass(frozen=True)
class OrderOutcome:
    hyp_slot: str
    choice: str
    raw: str


@dataclass(frozen=True)
class JudgeOutcome:
    sample_id: str
    csi_index: int
    surface: str
    is_nt: bool
    credit: float
    orders: tuple[OrderOutcome, ...]

    def to_record(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "csi_index": self.csi_index,
            "surface": self.surface,
            "is_nt": self.is_nt,
            "credit": self.credit,
            "orders": [
                {"hyp_slot": o.hyp_slot, "choice": o.choice, "raw": o.raw}
                for o in self.orders
            ],
        }


def judge_tasks(run: SystemRun, corpus: Corpus) -> list[JudgeTask]:
    """One pairwise task per CSI occurrence the run has a hypothesis for."""
    nt_ids = nt_subset(corpus)
    tasks = []
    for sample in corpus.samples:
        hypothesis = run.hypotheses.get(sample.sample_id)
        if hypothesis is None:
            continue
        for idx, occ in enumerate(sample.csis):
            start, end = occ.span
            tasks.append(
                JudgeTask(
                    sample_id=sample.sample_id,
                    csi_index=idx,
                    surface=sample.source_text[start:end],
                    source=sample.source_text,
                    hypothesis=hypothesis,
                    reference=sample.reference_text,
                    target_lang=sample.target_lang,
                    is_nt=sample.sample_id in nt_ids,
                )
            )
    return tasks


def _ask(
    task: JudgeTask,
    hyp_first: bool,
    transport: Transport,
    model: str,
    templates: Mapping[str, str] | None,
    names: Mapping[str, str] | None,
    temperature: float,
) -> OrderOutcome:
    a, b = (task.hypothesis, task.reference) if hyp_first else (task.reference, task.hypothesis)
    prompt = build_judge_prompt(
        task.source, task.surface, a, b, task.target_lang, templates, names
    )
    raw = complete_text(transport, model, prompt, temperature=temperature)
    verdict = parse_verdict(raw)
    return OrderOutcome(hyp_slot="A" if hyp_first else "B", choice=verdict.choice, raw=raw)


def _credit(orders: Sequence[OrderOutcome]) -> float:
    wins = sum(1 for o in orders if o.choice == o.hyp_slot)
    return wins / len(orders)


def run_pairwise(
    run: SystemRun,
    corpus: Corpus,
    transport: Transport,
    model: str,
    policy: OrderPolicy = OrderPolicy.SEEDED_RANDOM,
    seed: int = 0,
    temperature: float = 0.0,
    templates: Mapping[str, str] | None = None,
    names: Mapping[str, str] | None = None,
) -> list[JudgeOutcome]:
    """Judge every task under the given slot-order policy.

    Seeded-random derives an independent coin per task from
    (seed, sample id, csi index), so task order and subsetting never
    shift the assignment.  Both-orders asks twice and splits credit.
    """
    tasks = judge_tasks(run, corpus)
    if not tasks:
        raise JudgeError("no judgeable CSIs: run covers no corpus samples")
    outcomes = []
    for task in tasks:
        if policy is OrderPolicy.BOTH_ORDERS:
            orders = (
                _ask(task, True, transport, model, templates, names, temperature),
                _ask(task, False, transport, model, templates, names, temperature),
            )
        else:
            if policy is OrderPolicy.SEEDED_RANDOM:
                coin = random.Random(f"{seed}:{task.sample_id}:{task.csi_index}")
                hyp_first = coin.random() < 0.5
            else:
                hyp_first = False
            orders = (_ask(task, hyp_first, transport, model, templates, names, temperature),)
        outcomes.append(
            JudgeOutcome(
                sample_id=task.sample_id,
                csi_index=task.csi_index,
                surface=task.surface,
                is_nt=task.is_nt,
                credit=_credit(orders),
                orders=orders,
            )
        )
    return outcomes


def win_rate(outcomes: Sequence[JudgeOutcome], nt_only: bool = False) -> float | None:
    """Percent of credit the hypothesis earned; None on an empty subset."""
    pool = [o for o in outcomes if o.is_nt] if nt_only else list(outcomes)
    if not pool:
        return None
    return 100.0 * sum(o.credit for o in pool) / len(pool)


def save_verdicts(outcomes: Sequence[JudgeOutcome], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for outcome in outcomes:
            fh.write(json.dumps(outcome.to_record(), ensure_ascii=False, sort_keys=True) + "\n")


def load_verdicts(path: str | Path) -> list[JudgeOutcome]:
    outcomes = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
                outcomes.append(
                    JudgeOutcome(
                        sample_id=record["sample_id"],
                        csi_index=record["csi_index"],
                        surface=record["surface"],
                        is_nt=record["is_nt"],
                        credit=record["credit"],
                        orders=tuple(
                            OrderOutcome(o["hyp_slot"], o["choice"], o.get("raw", ""))
                            for o in record["orders"]
                        ),
                    )
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise JudgeError(f"bad verdict line {lineno}: {exc}") from exc
    return outcomes
