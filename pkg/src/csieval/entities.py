"""Entity metadata fetching and knowledge-base enrichment.

Speaks the wbgetentities wire format: labels, descriptions, and aliases
keyed by language, plus claims holding the country-of-origin statement.
Candidate translations for a language are the label followed by the
aliases, so the most canonical name always sorts first.  Enrichment
fills gaps in an existing entry without overwriting curated values.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence

import httpx

from .corpus import CsiEntry

__all__ = [
    "EntityError",
    "EntityMetadata",
    "parse_entity_payload",
    "translations_for",
    "WikidataClient",
    "fetch_entity_metadata",
    "enrich_entry",
]

ORIGIN_COUNTRY_PROPERTY = "P495"
_BATCH_LIMIT = 50
_RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})


class EntityError(RuntimeError):
    pass


@dataclass(frozen=True)
class EntityMetadata:
    entity_id: str
    labels: dict[str, str]
    descriptions: dict[str, str]
    aliases: dict[str, tuple[str, ...]]
    origin_country_id: str | None = None

    def label(self, lang: str) -> str | None:
        return self.labels.get(lang)

    def description(self, lang: str) -> str | None:
        return self.descriptions.get(lang)


def _lang_values(block: Mapping | None) -> dict[str, str]:
    out: dict[str, str] = {}
    for lang, item in (block or {}).items():
        value = item.get("value") if isinstance(item, Mapping) else None
        if isinstance(value, str):
            out[lang] = value
    return out


def _claim_target(claims: Mapping | None, property_id: str) -> str | None:
    for statement in (claims or {}).get(property_id, []):
        try:
            target = statement["mainsnak"]["datavalue"]["value"]["id"]
        except (KeyError, TypeError):
            continue
        if isinstance(target, str):
            return target
    return None


def parse_entity_payload(
    entity_id: str,
    payload: Mapping,
    origin_property: str = ORIGIN_COUNTRY_PROPERTY,
) -> EntityMetadata:
    """Extract one entity from a wbgetentities response body."""
    entities = payload.get("entities")
    if not isinstance(entities, Mapping) or entity_id not in entities:
        raise EntityError(f"entity {entity_id} absent from payload")
    node = entities[entity_id]
    if node.get("missing") is not None:
        raise EntityError(f"entity {entity_id} reported missing")
    aliases: dict[str, tuple[str, ...]] = {}
    for lang, items in (node.get("aliases") or {}).items():
        values = tuple(
            item["value"]
            for item in items
            if isinstance(item, Mapping) and isinstance(item.get("value"), str)
        )
        if values:
            aliases[lang] = values
    return EntityMetadata(
        entity_id=entity_id,
        labels=_lang_values(node.get("labels")),
        descriptions=_lang_values(node.get("descriptions")),
        aliases=aliases,
        origin_country_id=_claim_target(node.get("claims"), origin_property),
    )


def translations_for(meta: EntityMetadata, lang: str) -> tuple[str, ...]:
    """Label first, then aliases, duplicates dropped in order."""
    candidates = []
    label = meta.labels.get(lang)
    if label:
        candidates.append(label)
    candidates.extend(meta.aliases.get(lang, ()))
    seen: set[str] = set()
    out = []
    for candidate in candidates:
        if candidate not in seen:
            seen.add(candidate)
            out.append(candidate)
    return tuple(out)


class WikidataClient:
    """Batched wbgetentities fetcher with bounded retry."""

    def __init__(
        self,
        base_url: str = "https://www.wikidata.org/w",
        timeout: float = 30.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
        origin_property: str = ORIGIN_COUNTRY_PROPERTY,
        http_client: httpx.Client | None = None,
    ) -> None:
        self._client = http_client or httpx.Client(base_url=base_url, timeout=timeout)
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.origin_property = origin_property
        self._sleep = sleep

    def fetch(self, entity_ids: Iterable[str]) -> dict[str, EntityMetadata]:
        ids = list(dict.fromkeys(entity_ids))
        out: dict[str, EntityMetadata] = {}
        for at in range(0, len(ids), _BATCH_LIMIT):
            batch = ids[at : at + _BATCH_LIMIT]
            payload = self._get_payload(batch)
            for entity_id in batch:
                out[entity_id] = parse_entity_payload(
                    entity_id, payload, self.origin_property
                )
        return out

    def fetch_one(self, entity_id: str) -> EntityMetadata:
        return self.fetch([entity_id])[entity_id]

    def _get_payload(self, batch: Sequence[str]) -> Mapping:
        params = {
            "action": "wbgetentities",
            "ids": "|".join(batch),
            "props": "labels|descriptions|aliases|claims",
            "format": "json",
        }
        last_error = "exhausted retries"
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                resp = self._client.get("/api.php", params=params)
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
                continue
            if resp.status_code == 200:
                try:
                    return resp.json()
                except ValueError as exc:
                    raise EntityError(f"malformed entity payload: {exc}") from exc
            last_error = f"status {resp.status_code}"
            if resp.status_code not in _RETRY_STATUSES:
                raise EntityError(f"entity fetch failed: {last_error}")
        raise EntityError(
            f"entity fetch failed after {self.max_retries + 1} attempts: {last_error}"
        )


def fetch_entity_metadata(
    client: WikidataClient, entity_ids: Iterable[str]
) -> dict[str, EntityMetadata]:
    return client.fetch(entity_ids)


def enrich_entry(
    entry: CsiEntry,
    meta: EntityMetadata,
    source_lang: str,
    target_lang: str,
    country_labels: Mapping[str, str] | None = None,
) -> CsiEntry:
    """Fill an entry's empty fields from fetched metadata.

    Curated values always win; only missing translations, descriptions,
    and origin country are added.  ``country_labels`` maps origin
    entity ids to display names (one extra fetch, done by the caller).
    """
    if meta.entity_id != entry.entity_id:
        raise EntityError(
            f"metadata for {meta.entity_id} cannot enrich entry {entry.entity_id}"
        )
    updates: dict = {}
    if not entry.has_translation(target_lang):
        fetched = translations_for(meta, target_lang)
        if fetched:
            translations = dict(entry.translations)
            translations[target_lang] = fetched
            updates["translations"] = translations
    if entry.description_src is None and meta.description(source_lang):
        updates["description_src"] = meta.description(source_lang)
    if entry.description_tgt is None and meta.description(target_lang):
        updates["description_tgt"] = meta.description(target_lang)
    if entry.origin_country is None and meta.origin_country_id:
        name = (country_labels or {}).get(meta.origin_country_id)
        if name:
            updates["origin_country"] = name
    return replace(entry, **updates) if updates else entry
