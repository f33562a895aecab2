"""Entity mentions: remote annotation, offline gazetteer, hypernym lookup,
and projection of source spans to the target side through word alignments.

The remote annotator speaks the Spotlight-style HTTP annotate API (GET with
``text`` and ``confidence`` parameters, JSON response listing resources
with ``@URI``, ``@surfaceForm`` and a character ``@offset``). The gazetteer
annotator is the deterministic offline substitute used for tests and
fixtures; both produce the same mention type, so everything downstream is
agnostic about which one ran.

Annotations are stored as JSON Lines, one record per sentence:
``{"line_no": ..., "mentions": [{"start", "end", "surface", "uri",
"hypernym"}, ...]}``.
"""

import json
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import requests

from .corpus import TokenSeq
from .errors import HttpError, InvalidParams, MalformedResponse

log = logging.getLogger(__name__)


@dataclass
class EntityMention:
    start: int  # token span [start, end) on the source side
    end: int
    surface: TokenSeq
    uri: str
    hypernym: TokenSeq | None = None


@dataclass
class MentionBundle:
    """A mention together with everything the templates may substitute."""

    mention: EntityMention
    tgt_start: int  # projected target span [tgt_start, tgt_end)
    tgt_end: int
    translation: TokenSeq  # target tokens inside the projected span
    hypernym_tgt: TokenSeq  # table-translated hypernym, or the source one


class Gazetteer:
    """Offline surface-form lookup: token sequence -> (uri, hypernym)."""

    def __init__(self, entries: dict[tuple[str, ...], tuple[str, TokenSeq | None]]):
        for key in entries:
            if not key:
                raise InvalidParams("gazetteer entries must have a non-empty surface")
        self.entries = dict(entries)
        self.max_len = max((len(k) for k in entries), default=0)

    @classmethod
    def from_tsv(cls, path) -> "Gazetteer":
        """Columns: surface form (space-separated tokens), uri, hypernym label
        (may be empty)."""
        entries = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                surface, uri, label = line.split("\t")
                hypernym = label.lower().split() or None
                entries[tuple(surface.split())] = (uri, hypernym)
        return cls(entries)


def annotate_gazetteer(sentence: TokenSeq, gazetteer: Gazetteer) -> list[EntityMention]:
    """Greedy longest-match left-to-right over token n-grams; matches never
    overlap."""
    mentions = []
    i = 0
    n = len(sentence)
    while i < n:
        matched = 0
        for width in range(min(gazetteer.max_len, n - i), 0, -1):
            key = tuple(sentence[i:i + width])
            if key in gazetteer.entries:
                uri, hypernym = gazetteer.entries[key]
                mentions.append(
                    EntityMention(i, i + width, list(key), uri, list(hypernym) if hypernym else None)
                )
                matched = width
                break
        i += matched or 1
    return mentions


def project_entity_span(
    mention: EntityMention,
    links: set[tuple[int, int]],
    tgt_len: int,
) -> tuple[int, int] | None:
    """Target interval covering everything linked to the mention, or None.

    None when nothing is linked, and also when the candidate interval
    contains a target token linked to a source token outside the mention
    (the interval would not be a clean translation of the entity).
    """
    hit = [j for i, j in links if mention.start <= i < mention.end]
    if not hit:
        return None
    lo, hi = min(hit), max(hit) + 1
    if lo < 0 or hi > tgt_len:
        return None
    for i, j in links:
        if lo <= j < hi and not (mention.start <= i < mention.end):
            return None
    return lo, hi


# ---------------------------------------------------------------------------
# remote annotator


def token_char_spans(sentence: TokenSeq) -> list[tuple[int, int]]:
    """Character [start, end) of each token in the single-space-joined text."""
    spans = []
    pos = 0
    for tok in sentence:
        spans.append((pos, pos + len(tok)))
        pos += len(tok) + 1
    return spans


def mentions_from_response(payload: dict, sentence: TokenSeq) -> list[EntityMention]:
    """Convert an annotate-API JSON payload into token-span mentions.

    A mention whose character boundaries do not coincide with token
    boundaries is dropped with a warning (spans must stay faithful to the
    linker, never expanded). Overlapping mentions keep the earlier, longer
    one. A missing resource list means no mentions.
    """
    resources = payload.get("Resources") or []
    if not isinstance(resources, list):
        raise MalformedResponse("'Resources' is not a list")
    spans = token_char_spans(sentence)
    start_of = {s: k for k, (s, _) in enumerate(spans)}
    end_of = {e: k for k, (_, e) in enumerate(spans)}
    found = []
    for res in resources:
        try:
            uri = res["@URI"]
            surface = res["@surfaceForm"]
            offset = int(res["@offset"])
        except (TypeError, KeyError, ValueError) as exc:
            raise MalformedResponse(f"bad resource record: {res!r}") from exc
        end_char = offset + len(surface)
        tok_start = start_of.get(offset)
        tok_end = end_of.get(end_char)
        if tok_start is None or tok_end is None:
            log.warning(
                "dropping mention %r at chars %d-%d: not aligned to token boundaries",
                surface, offset, end_char,
            )
            continue
        found.append(EntityMention(tok_start, tok_end + 1, sentence[tok_start:tok_end + 1], uri))
    found.sort(key=lambda m: (m.start, -(m.end - m.start)))
    kept: list[EntityMention] = []
    for m in found:
        if kept and m.start < kept[-1].end:
            log.warning("dropping mention %r: overlaps an earlier one", " ".join(m.surface))
            continue
        kept.append(m)
    return kept


def _default_transport(timeout: float):
    session = requests.Session()

    def transport(url: str, params: dict | None):
        resp = session.get(
            url, params=params, headers={"Accept": "application/json"}, timeout=timeout
        )
        return resp.status_code, resp.text

    return transport


class SpotlightClient:
    """Client for a Spotlight-style entity annotation endpoint.

    ``transport`` is a callable ``(url, params) -> (status_code, body_text)``
    so tests can replay recorded responses without a network. Results are
    cached per sentence; failed requests are retried with exponential
    backoff before raising HttpError.
    """

    def __init__(
        self,
        endpoint: str,
        confidence: float = 0.5,
        *,
        transport=None,
        max_retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 10.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.confidence = confidence
        self.max_retries = max_retries
        self.backoff = backoff
        self._transport = transport or _default_transport(timeout)
        self._cache: dict[str, list[EntityMention]] = {}

    def annotate(self, sentence: TokenSeq) -> list[EntityMention]:
        text = " ".join(sentence)
        if not text:
            return []
        cached = self._cache.get(text)
        if cached is not None:
            return list(cached)
        payload = self._request(text)
        mentions = mentions_from_response(payload, sentence)
        self._cache[text] = mentions
        return list(mentions)

    def _request(self, text: str) -> dict:
        params = {"text": text, "confidence": str(self.confidence)}
        delay = self.backoff
        last = "no attempt made"
        for attempt in range(self.max_retries + 1):
            try:
                status, body = self._transport(self.endpoint, params)
            except requests.RequestException as exc:
                last = f"request failed: {exc}"
            else:
                if status == 200:
                    try:
                        data = json.loads(body)
                    except ValueError as exc:
                        raise MalformedResponse(f"invalid JSON from annotator: {exc}") from exc
                    if not isinstance(data, dict):
                        raise MalformedResponse("annotator response is not a JSON object")
                    return data
                last = f"HTTP {status}"
                if status < 500:
                    break  # client errors will not improve on retry
            if attempt < self.max_retries:
                time.sleep(delay)
                delay *= 2
        raise HttpError(f"annotator request failed: {last}")


def annotate_corpus(client, sentences: list[TokenSeq], max_in_flight: int = 4):
    """Annotate many sentences with bounded request concurrency; results come
    back in input order."""
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(client.annotate, sentences))


# ---------------------------------------------------------------------------
# hypernyms

GOLD_HYPERNYM = "http://purl.org/linguistics/gold/hypernym"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
ONTOLOGY_PREFIX = "http://dbpedia.org/ontology/"
_GENERIC_LABELS = {"thing", "agent"}


class OfflineHypernyms:
    """uri -> hypernym label map, usually loaded from a two-column TSV."""

    def __init__(self, mapping: dict[str, str]):
        self.mapping = dict(mapping)

    @classmethod
    def from_tsv(cls, path) -> "OfflineHypernyms":
        mapping = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                uri, label = line.split("\t")
                mapping[uri] = label
        return cls(mapping)

    def lookup(self, uri: str) -> str | None:
        return self.mapping.get(uri)


def _label_from_uri(uri: str) -> str:
    name = uri.rsplit("/", 1)[-1].replace("_", " ")
    return re.sub(r"(?<=[a-z0-9])(?=[A-Z])", " ", name).lower()


class RemoteHypernyms:
    """Hypernym lookup against the knowledge base's per-resource data.

    Prefers an explicit hypernym fact; otherwise falls back to the most
    specific ontology type, approximated as the label with the most words
    (longer, then lexicographically smaller, on ties).
    """

    def __init__(self, data_base: str = "https://dbpedia.org/data", *, transport=None,
                 timeout: float = 10.0):
        self.data_base = data_base.rstrip("/")
        self._transport = transport or _default_transport(timeout)

    def lookup(self, uri: str) -> str | None:
        name = uri.rsplit("/", 1)[-1]
        url = f"{self.data_base}/{name}.json"
        try:
            status, body = self._transport(url, None)
        except requests.RequestException as exc:
            raise HttpError(f"hypernym lookup failed: {exc}") from exc
        if status != 200:
            raise HttpError(f"hypernym lookup failed: HTTP {status}")
        try:
            data = json.loads(body)
        except ValueError as exc:
            raise MalformedResponse(f"invalid JSON from knowledge base: {exc}") from exc
        facts = data.get(uri, {}) if isinstance(data, dict) else {}
        gold = facts.get(GOLD_HYPERNYM)
        if gold:
            label = _label_from_uri(str(gold[0].get("value", "")))
            return label or None
        labels = []
        for fact in facts.get(RDF_TYPE, []):
            value = str(fact.get("value", ""))
            if value.startswith(ONTOLOGY_PREFIX):
                label = _label_from_uri(value)
                if label and label not in _GENERIC_LABELS:
                    labels.append(label)
        if not labels:
            return None
        return sorted(labels, key=lambda s: (-len(s.split()), -len(s), s))[0]


def resolve_hypernym(uri: str, resolver) -> TokenSeq | None:
    """Tokenized, lowercased hypernym for a knowledge-base uri; multi-word
    labels are kept whole (every word is returned)."""
    label = resolver.lookup(uri)
    if label is None:
        return None
    return label.lower().split() or None


# ---------------------------------------------------------------------------
# annotations file


def write_annotations(path, annotated: list[tuple[int, list[EntityMention]]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for line_no, mentions in annotated:
            record = {
                "line_no": line_no,
                "mentions": [
                    {
                        "start": m.start,
                        "end": m.end,
                        "surface": m.surface,
                        "uri": m.uri,
                        "hypernym": m.hypernym,
                    }
                    for m in mentions
                ],
            }
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_annotations(path) -> dict[int, list[EntityMention]]:
    annotations: dict[int, list[EntityMention]] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            annotations[record["line_no"]] = [
                EntityMention(m["start"], m["end"], m["surface"], m["uri"], m.get("hypernym"))
                for m in record["mentions"]
            ]
    return annotations
