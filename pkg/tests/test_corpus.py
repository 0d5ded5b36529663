"""Corpus loading, validation, stats, and run reconciliation."""

import json
import random

import pytest

from csieval.corpus import (
    Corpus,
    CorpusError,
    CsiEntry,
    DatasetStats,
    RegionGroup,
    SamplePair,
    fixture_corpus_paths,
    load_corpus,
    load_entries,
    load_lang_map,
    load_system_run,
    nt_subset,
    region_group,
    save_corpus,
    save_system_run,
    stats,
)

ENTRY_A = {
    "entity_id": "E1",
    "surface": "goulash",
    "category": "Culture.Food and drink",
    "csi_category": "Material Culture",
    "origin_country": "Hungary",
    "translations": {"zh": ["匈牙利炖牛肉"]},
}
ENTRY_B = {
    "entity_id": "E2",
    "surface": "ceilidh",
    "category": "Culture.Performing arts",
    "csi_category": "Organisations, Customs and Ideas",
    "origin_country": "United Kingdom",
    "translations": {},
}


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def sample_record(sample_id, source, csis, reference="参考译文"):
    return {
        "sample_id": sample_id,
        "source_lang": "en",
        "target_lang": "zh",
        "source_text": source,
        "reference_text": reference,
        "csis": csis,
    }


@pytest.fixture
def tiny(tmp_path):
    """Three samples over entities {E1, E1, E2}; E2 untranslated."""
    entries = tmp_path / "entries.jsonl"
    corpus = tmp_path / "corpus.jsonl"
    write_jsonl(entries, [ENTRY_A, ENTRY_B])
    src1 = "We ate goulash at noon."
    src2 = "Hot goulash again."
    src3 = "The ceilidh lasted all night."
    write_jsonl(
        corpus,
        [
            sample_record("t1", src1, [{"entity_id": "E1", "span": [7, 14]}]),
            sample_record("t2", src2, [{"entity_id": "E1", "span": [4, 11]}]),
            sample_record("t3", src3, [{"entity_id": "E2", "span": [4, 11]}]),
        ],
    )
    return corpus, entries


class TestLoadCorpus:
    def test_bundled_fixture_loads_clean(self):
        corpus_path, entries_path = fixture_corpus_paths()
        corpus = load_corpus(corpus_path, entries_path)
        assert len(corpus) == 20
        assert corpus.sample("enzh-01").csis[0].entry.surface == "cannoli"

    def test_empty_file_gives_empty_corpus(self, tmp_path):
        corpus_file = tmp_path / "c.jsonl"
        entries_file = tmp_path / "e.jsonl"
        corpus_file.write_text("")
        entries_file.write_text("")
        corpus = load_corpus(corpus_file, entries_file)
        assert len(corpus) == 0

    def test_malformed_line_reports_line_number(self, tmp_path):
        corpus_file = tmp_path / "c.jsonl"
        entries_file = tmp_path / "e.jsonl"
        write_jsonl(entries_file, [ENTRY_A])
        corpus_file.write_text('{"sample_id": "x"}\n{not json\n')
        with pytest.raises(CorpusError, match="line 2"):
            load_corpus(corpus_file, entries_file)

    def test_span_surface_mismatch(self, tmp_path):
        corpus_file = tmp_path / "c.jsonl"
        entries_file = tmp_path / "e.jsonl"
        write_jsonl(entries_file, [ENTRY_A])
        write_jsonl(
            corpus_file,
            [sample_record("x", "We ate goulash.", [{"entity_id": "E1", "span": [0, 6]}])],
        )
        with pytest.raises(CorpusError, match="span/surface mismatch at line 1"):
            load_corpus(corpus_file, entries_file)

    def test_span_out_of_bounds(self, tmp_path):
        corpus_file = tmp_path / "c.jsonl"
        entries_file = tmp_path / "e.jsonl"
        write_jsonl(entries_file, [ENTRY_A])
        write_jsonl(
            corpus_file,
            [sample_record("x", "goulash", [{"entity_id": "E1", "span": [0, 99]}])],
        )
        with pytest.raises(CorpusError, match="out of bounds"):
            load_corpus(corpus_file, entries_file)

    def test_dangling_entity_reference(self, tmp_path):
        corpus_file = tmp_path / "c.jsonl"
        entries_file = tmp_path / "e.jsonl"
        write_jsonl(entries_file, [ENTRY_A])
        write_jsonl(
            corpus_file,
            [sample_record("x", "goulash", [{"entity_id": "E9", "span": [0, 7]}])],
        )
        with pytest.raises(CorpusError, match="dangling entity reference"):
            load_corpus(corpus_file, entries_file)

    def test_duplicate_sample_id(self, tmp_path):
        corpus_file = tmp_path / "c.jsonl"
        entries_file = tmp_path / "e.jsonl"
        write_jsonl(entries_file, [ENTRY_A])
        rec = sample_record("x", "goulash", [{"entity_id": "E1", "span": [0, 7]}])
        write_jsonl(corpus_file, [rec, rec])
        with pytest.raises(CorpusError, match="duplicate sample_id"):
            load_corpus(corpus_file, entries_file)

    def test_missing_origin_country_rejected(self, tmp_path):
        entries_file = tmp_path / "e.jsonl"
        entry = dict(ENTRY_A)
        del entry["origin_country"]
        write_jsonl(entries_file, [entry])
        with pytest.raises(CorpusError, match="missing origin_country"):
            load_entries(entries_file)

    def test_missing_origin_country_dropped_when_lenient(self, tmp_path):
        entries_file = tmp_path / "e.jsonl"
        entry = dict(ENTRY_A)
        del entry["origin_country"]
        write_jsonl(entries_file, [entry, ENTRY_B])
        entries = load_entries(entries_file, strict=False)
        assert set(entries) == {"E2"}

    def test_all_problems_collected(self, tmp_path):
        corpus_file = tmp_path / "c.jsonl"
        entries_file = tmp_path / "e.jsonl"
        write_jsonl(entries_file, [ENTRY_A])
        write_jsonl(
            corpus_file,
            [
                sample_record("a", "goulash", [{"entity_id": "E9", "span": [0, 7]}]),
                sample_record("b", "goulash", [{"entity_id": "E1", "span": [0, 3]}]),
            ],
        )
        with pytest.raises(CorpusError) as err:
            load_corpus(corpus_file, entries_file)
        assert len(err.value.problems) == 2

    def test_round_trip_is_identity(self, tiny, tmp_path):
        corpus = load_corpus(*tiny)
        out_c = tmp_path / "out_c.jsonl"
        out_e = tmp_path / "out_e.jsonl"
        save_corpus(corpus, out_c, out_e)
        again = load_corpus(out_c, out_e)
        assert again == corpus


class TestStats:
    def test_tiny_counts(self, tiny):
        corpus = load_corpus(*tiny)
        assert stats(corpus) == DatasetStats(
            sentence_count=3, csi_count=3, csi_types=2, csi_with_translation=1
        )

    def test_fixture_counts_frozen(self):
        corpus = load_corpus(*fixture_corpus_paths())
        assert stats(corpus) == DatasetStats(
            sentence_count=20, csi_count=21, csi_types=20, csi_with_translation=16
        )

    def test_empty_corpus_all_zero(self):
        empty = Corpus(samples=(), entries={})
        assert stats(empty) == DatasetStats(0, 0, 0, 0)

    def test_permutation_invariant(self):
        corpus = load_corpus(*fixture_corpus_paths())
        rng = random.Random(5)
        shuffled = list(corpus.samples)
        rng.shuffle(shuffled)
        assert stats(Corpus(tuple(shuffled), corpus.entries)) == stats(corpus)


class TestNtSubset:
    def test_fixture_nt_ids(self):
        corpus = load_corpus(*fixture_corpus_paths())
        assert nt_subset(corpus) == {"enzh-07", "enzh-08", "enzh-09", "enzh-10"}

    def test_partition(self):
        corpus = load_corpus(*fixture_corpus_paths())
        nt = nt_subset(corpus)
        all_ids = {s.sample_id for s in corpus.samples}
        assert nt <= all_ids
        assert len(nt) + len(all_ids - nt) == len(all_ids)


class TestRegionGroup:
    def test_rule_instantiations(self):
        lang_map = load_lang_map()
        pair = ("en", "zh")
        austria = CsiEntry("q", "x", "c", "Material Culture", origin_country="Austria")
        china = CsiEntry("q", "x", "c", "Material Culture", origin_country="China")
        usa = CsiEntry("q", "x", "c", "Material Culture", origin_country="United States")
        assert region_group(austria, pair, lang_map) is RegionGroup.OTHER
        assert region_group(china, pair, lang_map) is RegionGroup.TARGET
        assert region_group(usa, pair, lang_map) is RegionGroup.SOURCE

    def test_unknown_country(self):
        entry = CsiEntry("q", "x", "c", "Material Culture", origin_country="Atlantis")
        assert region_group(entry, ("en", "zh"), {}) is RegionGroup.OTHER
        with pytest.raises(KeyError):
            region_group(entry, ("en", "zh"), {}, strict=True)


class TestSystemRun:
    def run_lines(self, corpus, skip=()):
        lines = [{"system_id": "sysA", "strategy_id": "BI"}]
        for sample in corpus.samples:
            if sample.sample_id in skip:
                continue
            lines.append(
                {"sample_id": sample.sample_id, "hypothesis": sample.reference_text}
            )
        return lines

    def test_full_coverage(self, tiny, tmp_path):
        corpus = load_corpus(*tiny)
        run_file = tmp_path / "run.jsonl"
        write_jsonl(run_file, self.run_lines(corpus))
        run = load_system_run(run_file, corpus)
        assert run.system_id == "sysA"
        assert run.strategy_id == "BI"
        assert run.coverage_gaps == ()
        assert len(run.hypotheses) == 3

    def test_gap_report(self, tiny, tmp_path):
        corpus = load_corpus(*tiny)
        run_file = tmp_path / "run.jsonl"
        write_jsonl(run_file, self.run_lines(corpus, skip={"t2"}))
        run = load_system_run(run_file, corpus)
        assert run.coverage_gaps == ("t2",)

    def test_duplicate_sample(self, tiny, tmp_path):
        corpus = load_corpus(*tiny)
        run_file = tmp_path / "run.jsonl"
        lines = self.run_lines(corpus)
        lines.append(lines[1])
        write_jsonl(run_file, lines)
        with pytest.raises(CorpusError, match="duplicate sample_id t1"):
            load_system_run(run_file, corpus)

    def test_unknown_sample(self, tiny, tmp_path):
        corpus = load_corpus(*tiny)
        run_file = tmp_path / "run.jsonl"
        lines = self.run_lines(corpus)
        lines.append({"sample_id": "nope", "hypothesis": "x"})
        write_jsonl(run_file, lines)
        with pytest.raises(CorpusError, match="unknown sample_id nope"):
            load_system_run(run_file, corpus)

    def test_missing_header(self, tiny, tmp_path):
        corpus = load_corpus(*tiny)
        run_file = tmp_path / "run.jsonl"
        write_jsonl(run_file, [{"sample_id": "t1", "hypothesis": "x"}])
        with pytest.raises(CorpusError, match="system_id"):
            load_system_run(run_file, corpus)

    def test_round_trip_with_turns(self, tiny, tmp_path):
        corpus = load_corpus(*tiny)
        run_file = tmp_path / "run.jsonl"
        lines = self.run_lines(corpus)
        lines[1]["turns"] = [{"prompt": "p1", "response": "r1"}]
        write_jsonl(run_file, lines)
        run = load_system_run(run_file, corpus)
        assert run.turns["t1"] == (("p1", "r1"),)
        out = tmp_path / "out.jsonl"
        save_system_run(run, out)
        assert load_system_run(out, corpus) == run
