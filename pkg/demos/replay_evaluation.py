"""Replay a full evaluation from the recorded cassette, twice.

No network, no API key: every model exchange comes from
tests/fixtures/cassettes/fixture_eval.jsonl. Running the pipeline a
second time into a second directory produces byte-identical artifacts,
which is the property that makes results portable between machines.

    python3 demos/replay_evaluation.py
"""

import tempfile
from pathlib import Path

from csieval.cli import RunConfig, evaluate_end_to_end
from csieval.corpus import fixture_corpus_paths
from csieval.prompting import Strategy

CASSETTE = "tests/fixtures/cassettes/fixture_eval.jsonl"


def main() -> None:
    corpus_path, entries_path = (str(p) for p in fixture_corpus_paths())
    work = Path(tempfile.mkdtemp(prefix="csieval-demo-"))
    outputs = []
    for name in ("first", "second"):
        print(f"--- evaluate into {work / name}")
        config = RunConfig(
            corpus_path=corpus_path,
            entries_path=entries_path,
            out_dir=str(work / name),
            strategy=Strategy.TRANSLATION,
            model="stub-model",
            transport_kind="replay",
            cassette=CASSETTE,
            seed=7,
        )
        evaluate_end_to_end(config)
        outputs.append(work / name)

    print("\nartifact comparison:")
    for artifact in ("run.jsonl", "scores.json", "verdicts.jsonl", "report.csv", "report.md"):
        same = (outputs[0] / artifact).read_bytes() == (outputs[1] / artifact).read_bytes()
        print(f"  {artifact:14} {'byte-identical' if same else 'DIFFERS'}")

    print("\nreport.csv:")
    print((outputs[0] / "report.csv").read_text(encoding="utf-8"))


if __name__ == "__main__":
    main()
