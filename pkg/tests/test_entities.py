"""Entity payload parsing, batched fetching, and entry enrichment."""

import json

import httpx
import pytest

from csieval.corpus import fixture_corpus_paths, load_corpus
from csieval.entities import (
    EntityError,
    EntityMetadata,
    WikidataClient,
    enrich_entry,
    fetch_entity_metadata,
    parse_entity_payload,
    translations_for,
)


def wd_entity(qid, labels=None, descriptions=None, aliases=None, origin=None):
    claims = {}
    if origin:
        claims["P495"] = [
            {
                "mainsnak": {
                    "snaktype": "value",
                    "datavalue": {"value": {"id": origin}, "type": "wikibase-entityid"},
                }
            }
        ]
    return {
        "type": "item",
        "id": qid,
        "labels": {l: {"language": l, "value": v} for l, v in (labels or {}).items()},
        "descriptions": {
            l: {"language": l, "value": v} for l, v in (descriptions or {}).items()
        },
        "aliases": {
            l: [{"language": l, "value": v} for v in vs]
            for l, vs in (aliases or {}).items()
        },
        "claims": claims,
    }


def payload(*nodes):
    return {"entities": {node["id"]: node for node in nodes}, "success": 1}


HAGGIS = wd_entity(
    "Q307",
    labels={"en": "haggis", "zh": "哈吉斯"},
    descriptions={"en": "Scottish savoury pudding", "zh": "苏格兰传统菜肴"},
    aliases={"zh": ["羊肚杂碎布丁", "哈吉斯"]},
    origin="Q145",
)


class TestParsePayload:
    def test_full_entity(self):
        meta = parse_entity_payload("Q307", payload(HAGGIS))
        assert meta.labels["en"] == "haggis"
        assert meta.descriptions["zh"] == "苏格兰传统菜肴"
        assert meta.aliases["zh"] == ("羊肚杂碎布丁", "哈吉斯")
        assert meta.origin_country_id == "Q145"

    def test_absent_entity_rejected(self):
        with pytest.raises(EntityError, match="Q999 absent"):
            parse_entity_payload("Q999", payload(HAGGIS))

    def test_missing_marker_rejected(self):
        gone = {"id": "Q998", "missing": ""}
        with pytest.raises(EntityError, match="reported missing"):
            parse_entity_payload("Q998", {"entities": {"Q998": gone}})

    def test_broken_claim_statements_skipped(self):
        node = wd_entity("Q1", labels={"en": "x"})
        node["claims"]["P495"] = [
            {"mainsnak": {"snaktype": "novalue"}},
            {"mainsnak": {"datavalue": {"value": {"id": "Q38"}}}},
        ]
        assert parse_entity_payload("Q1", payload(node)).origin_country_id == "Q38"

    def test_origin_property_configurable(self):
        node = wd_entity("Q1", labels={"en": "x"})
        node["claims"]["P17"] = [{"mainsnak": {"datavalue": {"value": {"id": "Q16"}}}}]
        meta = parse_entity_payload("Q1", payload(node), origin_property="P17")
        assert meta.origin_country_id == "Q16"
        assert parse_entity_payload("Q1", payload(node)).origin_country_id is None

    def test_no_claims_block(self):
        meta = parse_entity_payload("Q1", payload({"id": "Q1"}))
        assert meta == EntityMetadata("Q1", {}, {}, {})


class TestTranslationsFor:
    def test_label_comes_first(self):
        meta = parse_entity_payload("Q307", payload(HAGGIS))
        assert translations_for(meta, "zh") == ("哈吉斯", "羊肚杂碎布丁")

    def test_alias_duplicate_of_label_dropped(self):
        meta = parse_entity_payload("Q307", payload(HAGGIS))
        assert translations_for(meta, "zh").count("哈吉斯") == 1

    def test_aliases_only_when_no_label(self):
        node = wd_entity("Q1", aliases={"fr": ["truc", "machin"]})
        meta = parse_entity_payload("Q1", payload(node))
        assert translations_for(meta, "fr") == ("truc", "machin")

    def test_empty_language(self):
        meta = parse_entity_payload("Q307", payload(HAGGIS))
        assert translations_for(meta, "ko") == ()


def make_client(handler, **kwargs):
    http_client = httpx.Client(
        transport=httpx.MockTransport(handler), base_url="http://wd.test/w"
    )
    return WikidataClient(http_client=http_client, **kwargs)


class TestClient:
    def test_fetch_parses_and_shapes_request(self):
        seen = {}

        def handler(request):
            seen["params"] = dict(request.url.params)
            seen["path"] = request.url.path
            return httpx.Response(200, json=payload(HAGGIS))

        metas = make_client(handler).fetch(["Q307"])
        assert metas["Q307"].labels["en"] == "haggis"
        assert seen["path"] == "/w/api.php"
        assert seen["params"] == {
            "action": "wbgetentities",
            "ids": "Q307",
            "props": "labels|descriptions|aliases|claims",
            "format": "json",
        }

    def test_batches_of_fifty(self):
        ids_seen = []

        def handler(request):
            batch = request.url.params["ids"].split("|")
            ids_seen.append(len(batch))
            return httpx.Response(
                200, json=payload(*[wd_entity(q, labels={"en": q}) for q in batch])
            )

        qids = [f"Q{i}" for i in range(1, 121)]
        metas = make_client(handler).fetch(qids)
        assert ids_seen == [50, 50, 20]
        assert set(metas) == set(qids)

    def test_duplicate_ids_fetched_once(self):
        calls = []

        def handler(request):
            calls.append(request.url.params["ids"])
            return httpx.Response(200, json=payload(HAGGIS))

        make_client(handler).fetch(["Q307", "Q307"])
        assert calls == ["Q307"]

    def test_retries_then_succeeds(self):
        statuses = [503, 429, 200]
        sleeps = []

        def handler(request):
            status = statuses.pop(0)
            body = payload(HAGGIS) if status == 200 else {}
            return httpx.Response(status, json=body)

        client = make_client(handler, sleep=sleeps.append)
        assert client.fetch_one("Q307").entity_id == "Q307"
        assert sleeps == [0.5, 1.0]

    def test_gives_up_after_bounded_attempts(self):
        client = make_client(lambda r: httpx.Response(502), sleep=lambda s: None, max_retries=2)
        with pytest.raises(EntityError, match="after 3 attempts: status 502"):
            client.fetch_one("Q307")

    def test_client_error_fails_fast(self):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(404)

        with pytest.raises(EntityError, match="status 404"):
            make_client(handler).fetch_one("Q307")
        assert len(calls) == 1

    def test_malformed_body_rejected(self):
        client = make_client(lambda r: httpx.Response(200, text="<html>"))
        with pytest.raises(EntityError, match="malformed entity payload"):
            client.fetch_one("Q307")

    def test_fetch_entity_metadata_wrapper(self):
        client = make_client(lambda r: httpx.Response(200, json=payload(HAGGIS)))
        assert fetch_entity_metadata(client, ["Q307"])["Q307"].entity_id == "Q307"


@pytest.fixture(scope="module")
def corpus():
    return load_corpus(*fixture_corpus_paths())


class TestEnrichEntry:
    def test_fills_missing_translation(self, corpus):
        entry = corpus.entries["Q307"]
        assert not entry.has_translation("zh")
        meta = parse_entity_payload("Q307", payload(HAGGIS))
        enriched = enrich_entry(entry, meta, "en", "zh")
        assert enriched.translations["zh"] == ("哈吉斯", "羊肚杂碎布丁")
        assert enriched.has_translation("zh")

    def test_curated_translation_not_overwritten(self, corpus):
        entry = corpus.entries["Q303"]
        curated = entry.translations["zh"]
        meta = parse_entity_payload(
            "Q303", payload(wd_entity("Q303", labels={"zh": "别的名字"}))
        )
        assert enrich_entry(entry, meta, "en", "zh").translations["zh"] == curated

    def test_fills_descriptions_and_origin(self, corpus):
        entry = corpus.entries["Q307"]
        meta = parse_entity_payload("Q307", payload(HAGGIS))
        enriched = enrich_entry(
            entry, meta, "en", "zh", country_labels={"Q145": "United Kingdom"}
        )
        assert enriched.description_tgt == "苏格兰传统菜肴"
        assert enriched.origin_country == entry.origin_country or enriched.origin_country

    def test_origin_filled_only_when_absent(self):
        from csieval.corpus import CsiEntry

        bare = CsiEntry("Q307", "haggis", "Culture.Food and drink", "Material Culture")
        meta = parse_entity_payload("Q307", payload(HAGGIS))
        enriched = enrich_entry(
            bare, meta, "en", "zh", country_labels={"Q145": "United Kingdom"}
        )
        assert enriched.origin_country == "United Kingdom"
        assert enriched.description_src == "Scottish savoury pudding"

    def test_unknown_origin_label_left_unset(self):
        from csieval.corpus import CsiEntry

        bare = CsiEntry("Q307", "haggis", "Culture.Food and drink", "Material Culture")
        meta = parse_entity_payload("Q307", payload(HAGGIS))
        assert enrich_entry(bare, meta, "en", "zh").origin_country is None

    def test_mismatched_ids_rejected(self, corpus):
        meta = parse_entity_payload("Q307", payload(HAGGIS))
        with pytest.raises(EntityError, match="cannot enrich"):
            enrich_entry(corpus.entries["Q303"], meta, "en", "zh")

    def test_nothing_to_add_returns_same_entry(self, corpus):
        entry = corpus.entries["Q304"]
        meta = EntityMetadata("Q304", {}, {}, {})
        assert enrich_entry(entry, meta, "en", "zh") is entry

    def test_record_round_trip_after_enrichment(self, corpus):
        entry = corpus.entries["Q307"]
        meta = parse_entity_payload("Q307", payload(HAGGIS))
        enriched = enrich_entry(entry, meta, "en", "zh")
        rec = enriched.to_record()
        assert json.loads(json.dumps(rec, ensure_ascii=False)) == rec
        assert rec["translations"]["zh"] == ["哈吉斯", "羊肚杂碎布丁"]
