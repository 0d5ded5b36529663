"""Walk a blinded annotation session over HTTP.

Builds the annotation service on two runs of the fixture corpus, then
plays a scripted annotator against the FastAPI app: fetch a task, rank
the blinded outputs, label the translation strategies, submit, repeat.
At the end the export endpoint de-blinds letters back to system ids.

    python3 demos/annotation_session.py
"""

import tempfile

from fastapi.testclient import TestClient

from csieval.annotation import AnnotationService, create_app
from csieval.corpus import SystemRun, fixture_corpus_paths, load_corpus


def fabricate_runs(corpus):
    """Two fake systems: one echoes references, one mangles them."""
    faithful = SystemRun(
        system_id="sys-faithful",
        strategy_id="CT",
        hypotheses={s.sample_id: s.reference_text for s in corpus.samples},
        turns={},
    )
    sloppy = SystemRun(
        system_id="sys-sloppy",
        strategy_id="BI",
        hypotheses={s.sample_id: s.reference_text[::-1] for s in corpus.samples},
        turns={},
    )
    return [faithful, sloppy]


def main() -> None:
    corpus = load_corpus(*fixture_corpus_paths())
    store = tempfile.mkdtemp(prefix="csieval-annotations-")
    service = AnnotationService(corpus, store)
    session = service.create_session(
        fabricate_runs(corpus), seed=11, sample_count=3
    )
    print(f"session with {session.total} tasks, record store at {store}")

    client = TestClient(create_app(service))
    annotator = "demo-annotator"
    while True:
        reply = client.get(
            f"/api/session/{session.session_id}/next-task",
            params={"annotator": annotator},
        ).json()
        if reply["done"]:
            break
        task = reply["task"]
        letters = sorted(task["outputs"])
        print(f"\ntask {task['sample_id']}: outputs {letters} (system ids hidden)")
        body = {
            "annotator_id": annotator,
            "sample_id": task["sample_id"],
            "ranks": {letter: rank for rank, letter in enumerate(letters, start=1)},
            "labels": {letter: "Literal translation" for letter in letters},
        }
        posted = client.post(
            f"/api/session/{session.session_id}/annotations", json=body
        )
        print(f"submitted -> {posted.status_code}")

    progress = client.get(f"/api/session/{session.session_id}/progress").json()
    print(f"\nprogress: {progress}")
    export = client.get(f"/api/session/{session.session_id}/export").json()
    print("de-blinded export:")
    for record in export["annotations"]:
        print(
            f"  {record['sample_id']}  {record['system_id']:13}"
            f"  rank {record['understandability_rank']}  {record['label']}"
        )


if __name__ == "__main__":
    main()
