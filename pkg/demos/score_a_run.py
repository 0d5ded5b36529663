"""Score a system run against the bundled fixture corpus.

The run file is the identity run recorded alongside the replay cassette:
every hypothesis equals the curated reference, so 16 of the 17 scored
occurrences hit 100 and one lands at 0 because the corpus curators chose
a different rendering than the knowledge base suggests.

    python3 demos/score_a_run.py
"""

from pathlib import Path

from csieval.corpus import fixture_corpus_paths, load_corpus, load_system_run
from csieval.metrics import aggregate_csi_match, bleu

RUN_FILE = Path("tests/fixtures/cassettes/ct_run.jsonl")


def main() -> None:
    corpus = load_corpus(*fixture_corpus_paths())
    run = load_system_run(RUN_FILE, corpus)
    print(f"run: system={run.system_id} strategy={run.strategy_id}")

    aggregate = aggregate_csi_match(run, corpus)
    print(
        f"CSI-Match {aggregate.mean:.1f} over {aggregate.n_scored} occurrences "
        f"({aggregate.n_nt} untranslatable samples skipped)"
    )
    for score in aggregate.scores:
        flag = "" if score.score == 100.0 else "   <- curated reference diverges"
        print(f"  {score.sample_id}  {score.entity_id}  {score.score:6.1f}{flag}")

    hyps = [run.hypotheses[s.sample_id] for s in corpus.samples]
    refs = [s.reference_text for s in corpus.samples]
    print(f"BLEU {bleu(hyps, refs):.1f} (identity run, so 100 by construction)")


if __name__ == "__main__":
    main()
