"""Command-line surface wiring the modules into reproducible pipelines.

Every network-touching stage runs over an injectable transport, so a
recorded cassette plus fixed seeds replays an entire evaluation bit for
bit.  Exit codes: 0 success, 1 usage, 2 data problem, 3 transport
problem.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .analysis import (
    AnalysisError,
    StrategyAnnotation,
    StrategyLabel,
    SystemReport,
    correlate_with_human,
    group_occurrence_scores,
    region_report,
    render_report_csv,
    strategy_win_matrix,
    write_report,
)
from .annotation import AnnotationError, AnnotationService, create_app
from .corpus import (
    Corpus,
    CorpusError,
    SystemRun,
    load_corpus,
    load_entries,
    load_lang_map,
    load_system_run,
    nt_subset,
    region_group,
    save_system_run,
    stats,
)
from .entities import EntityError, WikidataClient, enrich_entry
from .judge import (
    JudgeError,
    OrderPolicy,
    load_verdicts,
    run_pairwise,
    save_verdicts,
    win_rate,
)
from .llm import (
    LiveTransport,
    LlmError,
    RecordingTransport,
    ReplayTransport,
    Transport,
    run_plan,
)
from .matching import UnitKind, unit_kind_for
from .metrics import BleuConfig, aggregate_csi_match, bleu
from .prompting import (
    PromptError,
    Strategy,
    append_transform,
    build_prompt,
    icl_format,
    load_shot_bank,
    replace_transform,
    sample_dictionary,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRANSPORT = 3

API_KEY_ENV = "CSIEVAL_API_KEY"

STRING_FORMATS = ("icl", "append", "replace")


class CliUsageError(Exception):
    pass


class StageFailure(Exception):
    """Wraps a pipeline-stage error with the stage's name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliUsageError(message)


def _strategy(value: str) -> Strategy:
    try:
        return Strategy(value.upper())
    except ValueError:
        raise CliUsageError(
            f"unknown strategy {value!r}; choose from "
            + ", ".join(s.value.lower() for s in Strategy)
        ) from None


def _segmentation(value: str) -> UnitKind | None:
    if value == "auto":
        return None
    if value == "whitespace":
        return UnitKind.WHITESPACE
    if value == "per-char":
        return UnitKind.PER_CHARACTER
    raise CliUsageError(f"unknown segmentation {value!r}")


def make_transport(
    kind: str,
    cassette: str | None,
    base_url: str | None,
    api_key: str | None = None,
) -> Transport:
    if kind in ("replay", "record") and not cassette:
        raise CliUsageError(f"--transport {kind} requires --cassette")
    if kind == "replay":
        return ReplayTransport(cassette)
    if kind in ("live", "record"):
        if not base_url:
            raise CliUsageError(f"--transport {kind} requires --base-url")
        live = LiveTransport(
            base_url=base_url, api_key=api_key or os.environ.get(API_KEY_ENV)
        )
        return live if kind == "live" else RecordingTransport(live, cassette)
    raise CliUsageError(f"unknown transport {kind!r}")


def _load_shots(corpus: Corpus, variant: str) -> tuple[tuple[str, str], ...]:
    if variant == "none":
        return ()
    first = corpus.samples[0]
    return load_shot_bank(f"{first.source_lang}-{first.target_lang}", variant)


def translate_corpus(
    corpus: Corpus,
    strategy: Strategy,
    transport: Transport,
    model: str,
    shots: Sequence[tuple[str, str]] = (),
    generated_number: int = 3,
    system_id: str | None = None,
    temperature: float = 0.0,
    fallback_basic: bool = True,
) -> tuple[SystemRun, list[str]]:
    """Run one strategy over every sample; returns the run plus the ids
    of samples where missing knowledge forced a basic-instruction
    fallback (knowledge-injection strategies on NT samples)."""
    hypotheses: dict[str, str] = {}
    turns: dict[str, tuple[tuple[str, str], ...]] = {}
    fallbacks: list[str] = []
    for sample in corpus.samples:
        try:
            plan = build_prompt(
                strategy, sample, shots=shots, generated_number=generated_number
            )
        except PromptError:
            if not fallback_basic:
                raise
            plan = build_prompt(Strategy.BASIC, sample, shots=shots)
            fallbacks.append(sample.sample_id)
        result = run_plan(plan, transport, model=model, temperature=temperature)
        hypotheses[sample.sample_id] = result.final_text
        if len(result.exchanges) > 1:
            turns[sample.sample_id] = tuple(
                (e.prompt, e.response) for e in result.exchanges
            )
    run = SystemRun(
        system_id=system_id or model,
        strategy_id=strategy.value,
        hypotheses=hypotheses,
        turns=turns,
    )
    return run, fallbacks


def score_run(
    run: SystemRun,
    corpus: Corpus,
    unit_kind: UnitKind | None = None,
    with_bleu: bool = True,
) -> dict:
    """CSI-Match aggregate plus corpus BLEU, as a JSON-ready dict."""
    aggregate = aggregate_csi_match(run, corpus, unit_kind=unit_kind)
    result: dict = {
        "system_id": run.system_id,
        "strategy_id": run.strategy_id,
        "csi_match_mean": aggregate.mean,
        "n_scored": aggregate.n_scored,
        "n_nt": aggregate.n_nt,
        "missing": list(aggregate.missing),
        "occurrences": [
            {"sample_id": s.sample_id, "entity_id": s.entity_id, "score": s.score}
            for s in aggregate.scores
        ],
    }
    if with_bleu:
        pairs = [
            (run.hypotheses[s.sample_id], s.reference_text)
            for s in corpus.samples
            if s.sample_id in run.hypotheses
        ]
        target = corpus.samples[0].target_lang
        cfg = BleuConfig(tokenization=unit_kind or unit_kind_for(target))
        result["bleu"] = bleu([h for h, _ in pairs], [r for _, r in pairs], cfg)
    return result


def _region_means(corpus: Corpus, aggregate_scores) -> dict:
    lang_map = load_lang_map()
    first = corpus.samples[0]
    pair = (first.source_lang, first.target_lang)
    groups = {
        entity_id: region_group(entry, pair, lang_map)
        for entity_id, entry in corpus.entries.items()
    }
    return region_report(group_occurrence_scores(aggregate_scores, groups))


@dataclass
class RunConfig:
    """Resolved configuration for one end-to-end evaluation."""

    corpus_path: str
    entries_path: str
    out_dir: str
    strategy: Strategy
    model: str
    transport_kind: str = "replay"
    cassette: str | None = None
    base_url: str | None = None
    system_id: str | None = None
    seed: int = 0
    order_policy: OrderPolicy = OrderPolicy.SEEDED_RANDOM
    segmentation: UnitKind | None = None
    shots_variant: str = "none"
    generated_number: int = 3
    temperature: float = 0.0
    skip_judge: bool = False

    def to_record(self) -> dict:
        return {
            "corpus": self.corpus_path,
            "entries": self.entries_path,
            "out": self.out_dir,
            "strategy": self.strategy.value,
            "model": self.model,
            "transport": self.transport_kind,
            "cassette": self.cassette,
            "base_url": self.base_url,
            "system_id": self.system_id or self.model,
            "seed": self.seed,
            "order_policy": self.order_policy.value,
            "segmentation": self.segmentation.value if self.segmentation else "auto",
            "shots": self.shots_variant,
            "generated_number": self.generated_number,
            "temperature": self.temperature,
            "skip_judge": self.skip_judge,
        }


def _run_stage(name: str, fn):
    try:
        return fn()
    except Exception as exc:
        raise StageFailure(name, exc) from exc


def evaluate_end_to_end(config: RunConfig, echo=print) -> dict:
    """translate -> score -> judge -> report, resumable per stage.

    A stage whose output file already exists in the output directory is
    reused, so a failed run continues where it stopped.  With a replay
    cassette and fixed seeds the emitted reports are byte-stable.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = load_corpus(config.corpus_path, config.entries_path)
    stages: dict[str, str] = {}
    fallbacks: list[str] = []

    run_path = out / "run.jsonl"
    if run_path.exists():
        run = _run_stage("translate", lambda: load_system_run(run_path, corpus))
        stages["translate"] = "reused"
    else:
        def translate():
            transport = make_transport(
                config.transport_kind, config.cassette, config.base_url
            )
            shots = _load_shots(corpus, config.shots_variant)
            return translate_corpus(
                corpus,
                config.strategy,
                transport,
                config.model,
                shots=shots,
                generated_number=config.generated_number,
                system_id=config.system_id,
                temperature=config.temperature,
            )

        run, fallbacks = _run_stage("translate", translate)
        save_system_run(run, run_path)
        stages["translate"] = "done"
    echo(f"translate: {stages['translate']} ({len(run.hypotheses)} hypotheses)")

    scores_path = out / "scores.json"
    if scores_path.exists():
        scores = json.loads(scores_path.read_text(encoding="utf-8"))
        stages["score"] = "reused"
    else:
        scores = _run_stage(
            "score", lambda: score_run(run, corpus, unit_kind=config.segmentation)
        )
        scores_path.write_text(
            json.dumps(scores, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        stages["score"] = "done"
    echo(f"score: {stages['score']} (CSI-Match {scores['csi_match_mean']:.1f})")

    verdicts_path = out / "verdicts.jsonl"
    overall_u = nt_u = None
    if config.skip_judge:
        stages["judge"] = "skipped"
        echo("judge: skipped")
    else:
        if verdicts_path.exists():
            outcomes = _run_stage("judge", lambda: load_verdicts(verdicts_path))
            stages["judge"] = "reused"
        else:
            def judge():
                transport = make_transport(
                    config.transport_kind, config.cassette, config.base_url
                )
                return run_pairwise(
                    run,
                    corpus,
                    transport,
                    config.model,
                    policy=config.order_policy,
                    seed=config.seed,
                    temperature=config.temperature,
                )

            outcomes = _run_stage("judge", judge)
            save_verdicts(outcomes, verdicts_path)
            stages["judge"] = "done"
        overall_u = win_rate(outcomes)
        nt_u = win_rate(outcomes, nt_only=True)
        echo(f"judge: {stages['judge']} (Overall-U {overall_u:.1f})")

    def report():
        row = SystemReport(
            system_id=run.system_id,
            strategy_id=run.strategy_id,
            csi_match=scores["csi_match_mean"],
            bleu=scores.get("bleu"),
            overall_u=overall_u,
            nt_u=nt_u,
            n=scores["n_scored"],
        )
        aggregate = aggregate_csi_match(run, corpus, unit_kind=config.segmentation)
        means = _region_means(corpus, aggregate.scores)
        return write_report([row], out, region_means=means)

    paths = _run_stage("report", report)
    stages["report"] = "done"
    echo(f"report: done ({paths['report.csv']})")

    manifest = {
        "config": config.to_record(),
        "stages": stages,
        "fallback_samples": fallbacks,
        "results": {
            "csi_match_mean": scores["csi_match_mean"],
            "bleu": scores.get("bleu"),
            "overall_u": overall_u,
            "nt_u": nt_u,
        },
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return manifest


def _load_corpus_args(args) -> Corpus:
    return load_corpus(args.corpus, args.entries)


def cmd_validate(args) -> int:
    corpus = _load_corpus_args(args)
    counts = stats(corpus)
    print(
        f"OK: {counts.sentence_count} samples, {counts.csi_count} CSI occurrences, "
        f"{counts.csi_types} entities, {counts.csi_with_translation} with translations"
    )
    return EXIT_OK


def cmd_stats(args) -> int:
    corpus = _load_corpus_args(args)
    counts = stats(corpus)
    nt = sorted(nt_subset(corpus))
    if args.json:
        print(
            json.dumps(
                {
                    "sentences": counts.sentence_count,
                    "csi_occurrences": counts.csi_count,
                    "csi_types": counts.csi_types,
                    "csi_with_translation": counts.csi_with_translation,
                    "nt_samples": nt,
                },
                ensure_ascii=False,
                indent=2,
            )
        )
    else:
        print(f"sentences:             {counts.sentence_count}")
        print(f"csi occurrences:       {counts.csi_count}")
        print(f"distinct entities:     {counts.csi_types}")
        print(f"with translation:      {counts.csi_with_translation}")
        print(f"nt samples:            {len(nt)} ({', '.join(nt)})")
    return EXIT_OK


def cmd_score(args) -> int:
    corpus = _load_corpus_args(args)
    run = load_system_run(args.run, corpus)
    result = score_run(
        run, corpus, unit_kind=_segmentation(args.segmentation), with_bleu=args.bleu
    )
    print(
        f"CSI-Match: {result['csi_match_mean']:.1f} "
        f"({result['n_scored']} scored, {result['n_nt']} NT skipped)"
    )
    if args.bleu:
        print(f"BLEU: {result['bleu']:.1f}")
    if result["missing"]:
        print(f"missing hypotheses: {len(result['missing'])}", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(
            json.dumps(result, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    return EXIT_OK


def _render_string_format(kind: str, corpus: Corpus, sample_id: str, shots_variant: str) -> str:
    sample = corpus.sample(sample_id)
    if kind == "icl":
        shots = _load_shots(corpus, shots_variant)
        return icl_format(
            shots, sample.source_text, (sample.source_lang, sample.target_lang)
        )
    dictionary = sample_dictionary(sample)
    if kind == "append":
        return append_transform(sample.source_text, dictionary)
    return replace_transform(
        sample.source_text, [occ.span for occ in sample.csis], dictionary
    )


def cmd_prompt(args) -> int:
    corpus = _load_corpus_args(args)
    sample_ids = [args.sample] if args.sample else [s.sample_id for s in corpus.samples]
    many = len(sample_ids) > 1
    for sample_id in sample_ids:
        if many:
            print(f"## {sample_id}")
        if args.strategy in STRING_FORMATS:
            print(_render_string_format(args.strategy, corpus, sample_id, args.shots))
        else:
            plan = build_prompt(
                _strategy(args.strategy),
                corpus.sample(sample_id),
                generated_number=args.generated_number,
            )
            for index, turn in enumerate(plan.turns):
                if index:
                    print(f"=== turn {index + 1} ===")
                print(turn.prompt)
        if many:
            print()
    return EXIT_OK


def cmd_translate(args) -> int:
    corpus = _load_corpus_args(args)
    transport = make_transport(args.transport, args.cassette, args.base_url)
    shots = _load_shots(corpus, args.shots)
    run, fallbacks = translate_corpus(
        corpus,
        _strategy(args.strategy),
        transport,
        args.model,
        shots=shots,
        generated_number=args.generated_number,
        system_id=args.system_id,
        temperature=args.temperature,
    )
    save_system_run(run, args.out)
    print(f"wrote {len(run.hypotheses)} hypotheses to {args.out}")
    if fallbacks:
        print(
            f"basic-instruction fallback on {len(fallbacks)} samples: "
            + ", ".join(fallbacks),
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_judge(args) -> int:
    corpus = _load_corpus_args(args)
    run = load_system_run(args.run, corpus)
    transport = make_transport(args.transport, args.cassette, args.base_url)
    outcomes = run_pairwise(
        run,
        corpus,
        transport,
        args.model,
        policy=OrderPolicy(args.order_policy),
        seed=args.seed,
    )
    save_verdicts(outcomes, args.out)
    overall = win_rate(outcomes)
    nt = win_rate(outcomes, nt_only=True)
    print(f"Overall-U: {overall:.1f}")
    print(f"NT-U: {'-' if nt is None else f'{nt:.1f}'}")
    return EXIT_OK


def _load_annotations(path: str) -> list[StrategyAnnotation]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    records = data["annotations"] if isinstance(data, dict) else data
    return [
        StrategyAnnotation(
            sample_id=r["sample_id"],
            system_id=r["system_id"],
            label=StrategyLabel(r["label"]),
            understandability_rank=r["understandability_rank"],
        )
        for r in records
    ]


def cmd_report(args) -> int:
    corpus = _load_corpus_args(args)
    if len(args.run) > 1 and args.verdicts:
        raise CliUsageError("--verdicts applies to a single --run")
    segmentation = _segmentation(args.segmentation)
    rows = []
    region_means = None
    for run_path in args.run:
        run = load_system_run(run_path, corpus)
        scores = score_run(run, corpus, unit_kind=segmentation)
        overall_u = nt_u = None
        if args.verdicts:
            outcomes = load_verdicts(args.verdicts)
            overall_u = win_rate(outcomes)
            nt_u = win_rate(outcomes, nt_only=True)
        rows.append(
            SystemReport(
                system_id=run.system_id,
                strategy_id=run.strategy_id,
                csi_match=scores["csi_match_mean"],
                bleu=scores.get("bleu"),
                overall_u=overall_u,
                nt_u=nt_u,
                n=scores["n_scored"],
            )
        )
        if region_means is None:
            aggregate = aggregate_csi_match(run, corpus, unit_kind=segmentation)
            region_means = _region_means(corpus, aggregate.scores)
    matrix = None
    if args.annotations:
        annotations = _load_annotations(args.annotations)
        matrix = strategy_win_matrix(annotations)
    paths = write_report(rows, args.out, matrix=matrix, region_means=region_means)
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = RunConfig(
        corpus_path=args.corpus,
        entries_path=args.entries,
        out_dir=args.out,
        strategy=_strategy(args.strategy),
        model=args.model,
        transport_kind=args.transport,
        cassette=args.cassette,
        base_url=args.base_url,
        system_id=args.system_id,
        seed=args.seed,
        order_policy=OrderPolicy(args.order_policy),
        segmentation=_segmentation(args.segmentation),
        shots_variant=args.shots,
        generated_number=args.generated_number,
        temperature=args.temperature,
        skip_judge=args.skip_judge,
    )
    evaluate_end_to_end(config)
    return EXIT_OK


def cmd_annotate_serve(args) -> int:
    corpus = _load_corpus_args(args)
    runs = [load_system_run(path, corpus) for path in args.runs]
    service = AnnotationService(corpus, args.store)
    session = service.create_session(
        runs, seed=args.seed, session_id=args.session_id, sample_count=args.sample_count
    )
    app = create_app(service)
    ui_dir = Path(args.ui_dir) if args.ui_dir else None
    if ui_dir and ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
        print(f"serving UI from {ui_dir}")
    print(
        f"session {session.session_id!r}: {session.total} tasks, "
        f"{len(runs)} systems, seed {args.seed}"
    )
    if args.check_only:
        return EXIT_OK
    import uvicorn

    print(f"listening on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_fetch_metadata(args) -> int:
    entries = load_entries(args.entries, strict=False)
    source_lang, target_lang = args.lang_pair.split("-", 1)
    wanted = args.ids or [
        entity_id
        for entity_id, entry in entries.items()
        if not entry.has_translation(target_lang)
    ]
    unknown = [entity_id for entity_id in wanted if entity_id not in entries]
    if unknown:
        raise CorpusError([f"unknown entity id {e}" for e in unknown])
    client = WikidataClient(
        base_url=args.base_url, origin_property=args.origin_property
    )
    metas = client.fetch(wanted)
    origin_ids = sorted(
        {m.origin_country_id for m in metas.values() if m.origin_country_id}
    )
    country_labels = {}
    if origin_ids:
        for entity_id, meta in client.fetch(origin_ids).items():
            label = meta.label(source_lang) or meta.label("en")
            if label:
                country_labels[entity_id] = label
    enriched = dict(entries)
    changed = 0
    for entity_id in wanted:
        updated = enrich_entry(
            entries[entity_id],
            metas[entity_id],
            source_lang,
            target_lang,
            country_labels=country_labels,
        )
        if updated is not entries[entity_id]:
            changed += 1
        enriched[entity_id] = updated
    with open(args.out, "w", encoding="utf-8") as fh:
        for entry in enriched.values():
            fh.write(json.dumps(entry.to_record(), ensure_ascii=False) + "\n")
    print(f"fetched {len(wanted)} entities, enriched {changed}, wrote {args.out}")
    return EXIT_OK


def _add_corpus_args(sub) -> None:
    sub.add_argument("--corpus", required=True, help="corpus.jsonl path")
    sub.add_argument("--entries", required=True, help="csi_entries.jsonl path")


def _add_transport_args(sub) -> None:
    sub.add_argument(
        "--transport", choices=("live", "replay", "record"), default="live"
    )
    sub.add_argument("--cassette", help="JSONL cassette for replay/record")
    sub.add_argument("--base-url", help="chat-completions endpoint base URL")
    sub.add_argument("--model", required=True, help="model identifier")


def build_parser() -> _Parser:
    parser = _Parser(prog="csieval", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("validate", help="validate corpus and entry files")
    _add_corpus_args(sub)
    sub.set_defaults(func=cmd_validate)

    sub = subs.add_parser("stats", help="dataset statistics")
    _add_corpus_args(sub)
    sub.add_argument("--json", action="store_true")
    sub.set_defaults(func=cmd_stats)

    sub = subs.add_parser("score", help="CSI-Match and BLEU for a run file")
    _add_corpus_args(sub)
    sub.add_argument("--run", required=True, help="system run JSONL")
    sub.add_argument(
        "--segmentation", choices=("auto", "whitespace", "per-char"), default="auto"
    )
    sub.add_argument("--bleu", action="store_true", help="also compute corpus BLEU")
    sub.add_argument("--out", help="write per-occurrence scores JSON here")
    sub.set_defaults(func=cmd_score)

    sub = subs.add_parser("prompt", help="render prompts without calling a model")
    _add_corpus_args(sub)
    sub.add_argument(
        "--strategy",
        required=True,
        help="bi, ct, ce, se, sr, or string formats icl, append, replace",
    )
    sub.add_argument("--sample", help="sample id (default: all samples)")
    sub.add_argument("--shots", default="default", help="shot bank variant or 'none'")
    sub.add_argument("--generated-number", type=int, default=3)
    sub.set_defaults(func=cmd_prompt)

    sub = subs.add_parser("translate", help="run a prompting strategy over the corpus")
    _add_corpus_args(sub)
    _add_transport_args(sub)
    sub.add_argument("--strategy", required=True)
    sub.add_argument("--out", required=True, help="run JSONL output path")
    sub.add_argument("--system-id", help="defaults to the model id")
    sub.add_argument("--shots", default="none", help="shot bank variant or 'none'")
    sub.add_argument("--generated-number", type=int, default=3)
    sub.add_argument("--temperature", type=float, default=0.0)
    sub.set_defaults(func=cmd_translate)

    sub = subs.add_parser("judge", help="pairwise understandability judging")
    _add_corpus_args(sub)
    _add_transport_args(sub)
    sub.add_argument("--run", required=True)
    sub.add_argument("--out", required=True, help="verdicts JSONL output path")
    sub.add_argument(
        "--order-policy",
        choices=[p.value for p in OrderPolicy],
        default=OrderPolicy.SEEDED_RANDOM.value,
    )
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(func=cmd_judge)

    sub = subs.add_parser("report", help="render report files from artifacts")
    _add_corpus_args(sub)
    sub.add_argument("--run", required=True, action="append", help="repeatable")
    sub.add_argument("--verdicts", help="verdicts JSONL from the judge stage")
    sub.add_argument("--annotations", help="exported annotation JSON")
    sub.add_argument(
        "--segmentation", choices=("auto", "whitespace", "per-char"), default="auto"
    )
    sub.add_argument("--out", required=True, help="output directory")
    sub.set_defaults(func=cmd_report)

    sub = subs.add_parser("evaluate", help="translate, score, judge, report")
    _add_corpus_args(sub)
    _add_transport_args(sub)
    sub.add_argument("--strategy", required=True)
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--system-id")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument(
        "--order-policy",
        choices=[p.value for p in OrderPolicy],
        default=OrderPolicy.SEEDED_RANDOM.value,
    )
    sub.add_argument(
        "--segmentation", choices=("auto", "whitespace", "per-char"), default="auto"
    )
    sub.add_argument("--shots", default="none")
    sub.add_argument("--generated-number", type=int, default=3)
    sub.add_argument("--temperature", type=float, default=0.0)
    sub.add_argument("--skip-judge", action="store_true")
    sub.set_defaults(func=cmd_evaluate)

    sub = subs.add_parser("annotate-serve", help="serve the annotation API")
    _add_corpus_args(sub)
    sub.add_argument("--runs", required=True, nargs="+", help="two or more run files")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--sample-count", type=int)
    sub.add_argument("--session-id", default="default")
    sub.add_argument("--store", default="annotations", help="record store directory")
    sub.add_argument("--host", default="127.0.0.1")
    sub.add_argument("--port", type=int, default=8321)
    sub.add_argument("--ui-dir", help="static frontend directory to mount")
    sub.add_argument(
        "--check-only",
        action="store_true",
        help="build the session and exit without serving",
    )
    sub.set_defaults(func=cmd_annotate_serve)

    sub = subs.add_parser("fetch-metadata", help="enrich entries from a knowledge base")
    sub.add_argument("--entries", required=True)
    sub.add_argument("--out", required=True)
    sub.add_argument("--lang-pair", default="en-zh")
    sub.add_argument("--ids", nargs="*", help="entity ids (default: untranslated)")
    sub.add_argument("--base-url", default="https://www.wikidata.org/w")
    sub.add_argument("--origin-property", default="P495")
    sub.set_defaults(func=cmd_fetch_metadata)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageFailure as exc:
        print(f"evaluate aborted at {exc}", file=sys.stderr)
        if isinstance(exc.cause, (LlmError, EntityError)):
            return EXIT_TRANSPORT
        return EXIT_DATA
    except CorpusError as exc:
        for problem in exc.problems:
            print(problem, file=sys.stderr)
        return EXIT_DATA
    except (LlmError, EntityError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_TRANSPORT
    except (
        PromptError,
        JudgeError,
        AnalysisError,
        AnnotationError,
        FileNotFoundError,
        KeyError,
        ValueError,
    ) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
