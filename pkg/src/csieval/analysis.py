"""Post-hoc analytics over annotations and metric scores.

Human annotators label each system output with the translation strategy
it used and rank outputs by understandability.  From those annotations
come strategy distributions, pairwise strategy win rates, and a
correctness signal to correlate metrics against.  Report rendering is
deterministic: fixed column order, fixed label order, "-" for every
empty cell.
"""

from __future__ import annotations

import io
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import RegionGroup
from .metrics import CsiMatchAggregate, OccurrenceScore, pearson

__all__ = [
    "AnalysisError",
    "StrategyLabel",
    "is_correct",
    "StrategyAnnotation",
    "strategy_distribution",
    "WinMatrix",
    "strategy_win_matrix",
    "CorrelationLevel",
    "correlate_with_human",
    "region_report",
    "SystemReport",
    "format_cell",
    "render_report_csv",
    "render_win_matrix_csv",
    "render_report_markdown",
    "write_report",
]


class AnalysisError(Exception):
    pass


class StrategyLabel(Enum):
    TRANSLITERATION = "Transliteration"
    LITERAL_TRANSLATION = "Literal translation"
    DESCRIPTION = "Description"
    SUBSTITUTION = "Substitution"
    COPY = "Copy"
    WRONG = "Wrong"
    OTHER = "Other"


_INCORRECT = frozenset({StrategyLabel.COPY, StrategyLabel.WRONG})


def is_correct(label: StrategyLabel) -> bool:
    """A CSI counts as correctly translated unless copied or wrong."""
    return label not in _INCORRECT


@dataclass(frozen=True)
class StrategyAnnotation:
    sample_id: str
    system_id: str
    label: StrategyLabel
    understandability_rank: int

    def __post_init__(self) -> None:
        if self.understandability_rank < 1:
            raise ValueError("understandability_rank starts at 1")


def strategy_distribution(
    annotations: Iterable[StrategyAnnotation], system_id: str
) -> dict[StrategyLabel, float]:
    """Percentage of each label among one system's annotations."""
    counts = Counter(
        a.label for a in annotations if a.system_id == system_id
    )
    total = sum(counts.values())
    if total == 0:
        raise AnalysisError(f"no annotations for system {system_id!r}")
    return {label: 100.0 * counts[label] / total for label in StrategyLabel}


@dataclass(frozen=True)
class WinMatrix:
    """Pairwise label-vs-label win rates; None marks no encounters."""

    cells: Mapping[tuple[StrategyLabel, StrategyLabel], float | None]

    def cell(self, x: StrategyLabel, y: StrategyLabel) -> float | None:
        return self.cells[(x, y)]


def _sample_groups(
    annotations: Iterable[StrategyAnnotation],
) -> dict[str, list[StrategyAnnotation]]:
    groups: dict[str, list[StrategyAnnotation]] = defaultdict(list)
    for annotation in annotations:
        groups[annotation.sample_id].append(annotation)
    return groups


def strategy_win_matrix(annotations: Iterable[StrategyAnnotation]) -> WinMatrix:
    """Win rate of label X over label Y across all co-occurrences.

    Within one sample every ordered pair of differently labeled systems
    is an encounter; the better understandability rank wins.  Same-label
    pairs and never-met pairs have no rate.
    """
    wins: Counter = Counter()
    encounters: Counter = Counter()
    for group in _sample_groups(annotations).values():
        for first in group:
            for second in group:
                if first is second or first.system_id == second.system_id:
                    continue
                if first.label == second.label:
                    continue
                key = (first.label, second.label)
                encounters[key] += 1
                if first.understandability_rank < second.understandability_rank:
                    wins[key] += 1
    cells: dict[tuple[StrategyLabel, StrategyLabel], float | None] = {}
    for x in StrategyLabel:
        for y in StrategyLabel:
            key = (x, y)
            if x == y or encounters[key] == 0:
                cells[key] = None
            else:
                cells[key] = 100.0 * wins[key] / encounters[key]
    return WinMatrix(cells=cells)


class CorrelationLevel(Enum):
    SYSTEM = "system"
    SAMPLE = "sample"


def correlate_with_human(
    metric_scores: Mapping[str, float],
    annotations: Sequence[StrategyAnnotation],
    level: CorrelationLevel = CorrelationLevel.SYSTEM,
) -> float:
    """Pearson r between a metric and annotation-derived correctness.

    System level pairs each system's metric score with its fraction of
    correct labels; sample level pairs it with each annotation's 0/1
    correctness.  Systems without a metric score are ignored.
    """
    xs: list[float] = []
    ys: list[float] = []
    if level is CorrelationLevel.SYSTEM:
        per_system: dict[str, list[bool]] = defaultdict(list)
        for annotation in annotations:
            per_system[annotation.system_id].append(is_correct(annotation.label))
        for system_id in sorted(per_system):
            if system_id not in metric_scores:
                continue
            flags = per_system[system_id]
            xs.append(metric_scores[system_id])
            ys.append(sum(flags) / len(flags))
    else:
        for annotation in annotations:
            if annotation.system_id not in metric_scores:
                continue
            xs.append(metric_scores[annotation.system_id])
            ys.append(1.0 if is_correct(annotation.label) else 0.0)
    if len(xs) < 2:
        raise AnalysisError("need at least two paired points to correlate")
    return pearson(xs, ys)


def region_report(
    scores_by_group: Mapping[RegionGroup, Sequence[float]],
) -> dict[RegionGroup, float | None]:
    """Mean score per region group; an empty group has no mean."""
    out: dict[RegionGroup, float | None] = {}
    for group in RegionGroup:
        values = list(scores_by_group.get(group, ()))
        out[group] = sum(values) / len(values) if values else None
    return out


def group_occurrence_scores(
    scores: Sequence[OccurrenceScore],
    groups: Mapping[str, RegionGroup],
) -> dict[RegionGroup, list[float]]:
    """Bucket per-occurrence scores by their entity's region group."""
    out: dict[RegionGroup, list[float]] = {group: [] for group in RegionGroup}
    for score in scores:
        if score.entity_id not in groups:
            raise AnalysisError(f"no region group for entity {score.entity_id}")
        out[groups[score.entity_id]].append(score.score)
    return out


@dataclass(frozen=True)
class SystemReport:
    """One report row; None renders as "-"."""

    system_id: str
    strategy_id: str
    csi_match: float | None
    bleu: float | None
    overall_u: float | None
    nt_u: float | None
    n: int

    @classmethod
    def from_parts(
        cls,
        system_id: str,
        strategy_id: str,
        aggregate: CsiMatchAggregate | None = None,
        bleu: float | None = None,
        overall_u: float | None = None,
        nt_u: float | None = None,
    ) -> "SystemReport":
        return cls(
            system_id=system_id,
            strategy_id=strategy_id,
            csi_match=aggregate.mean if aggregate else None,
            bleu=bleu,
            overall_u=overall_u,
            nt_u=nt_u,
            n=aggregate.n_scored if aggregate else 0,
        )


def format_cell(value: float | None) -> str:
    return "-" if value is None else f"{value:.1f}"


_COLUMNS = ("system", "strategy", "csi_match", "bleu", "overall_u", "nt_u", "n")


def _row_cells(row: SystemReport) -> tuple[str, ...]:
    return (
        row.system_id,
        row.strategy_id,
        format_cell(row.csi_match),
        format_cell(row.bleu),
        format_cell(row.overall_u),
        format_cell(row.nt_u),
        str(row.n),
    )


def render_report_csv(rows: Sequence[SystemReport]) -> str:
    if not rows:
        raise AnalysisError("no report rows")
    buf = io.StringIO()
    buf.write(",".join(_COLUMNS) + "\n")
    for row in rows:
        buf.write(",".join(_row_cells(row)) + "\n")
    return buf.getvalue()


def render_win_matrix_csv(matrix: WinMatrix) -> str:
    labels = list(StrategyLabel)
    buf = io.StringIO()
    buf.write("," + ",".join(label.value for label in labels) + "\n")
    for x in labels:
        cells = [format_cell(matrix.cell(x, y)) for y in labels]
        buf.write(x.value + "," + ",".join(cells) + "\n")
    return buf.getvalue()


def render_report_markdown(
    rows: Sequence[SystemReport],
    matrix: WinMatrix | None = None,
    region_means: Mapping[RegionGroup, float | None] | None = None,
) -> str:
    if not rows:
        raise AnalysisError("no report rows")
    lines = ["# Evaluation report", "", "## Systems", ""]
    lines.append("| " + " | ".join(_COLUMNS) + " |")
    lines.append("|" + "---|" * len(_COLUMNS))
    for row in rows:
        lines.append("| " + " | ".join(_row_cells(row)) + " |")
    if region_means is not None:
        lines += ["", "## CSI-Match by origin region", ""]
        lines.append("| region | mean |")
        lines.append("|---|---|")
        for group in RegionGroup:
            lines.append(f"| {group.value} | {format_cell(region_means[group])} |")
    if matrix is not None:
        labels = list(StrategyLabel)
        lines += ["", "## Strategy win rates", ""]
        lines.append("| vs | " + " | ".join(label.value for label in labels) + " |")
        lines.append("|" + "---|" * (len(labels) + 1))
        for x in labels:
            cells = [format_cell(matrix.cell(x, y)) for y in labels]
            lines.append("| " + x.value + " | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def write_report(
    rows: Sequence[SystemReport],
    out_dir: str | Path,
    matrix: WinMatrix | None = None,
    region_means: Mapping[RegionGroup, float | None] | None = None,
) -> dict[str, Path]:
    """Emit report.csv, report.md, and matrix.csv into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report.csv": out / "report.csv", "report.md": out / "report.md"}
    paths["report.csv"].write_text(render_report_csv(rows), encoding="utf-8")
    paths["report.md"].write_text(
        render_report_markdown(rows, matrix, region_means), encoding="utf-8"
    )
    if matrix is not None:
        paths["matrix.csv"] = out / "matrix.csv"
        paths["matrix.csv"].write_text(render_win_matrix_csv(matrix), encoding="utf-8")
    return paths
