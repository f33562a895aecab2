import json
import logging

import pytest
import requests

from conftest import load_spotlight_fixture
from tagcopy.errors import HttpError, InvalidParams, MalformedResponse
from tagcopy.link import (
    EntityMention,
    Gazetteer,
    OfflineHypernyms,
    RemoteHypernyms,
    SpotlightClient,
    annotate_corpus,
    annotate_gazetteer,
    mentions_from_response,
    project_entity_span,
    read_annotations,
    resolve_hypernym,
    token_char_spans,
    write_annotations,
)


class TestGazetteer:
    def test_single_match(self):
        gaz = Gazetteer({("myanmar",): ("kb:M", ["state"])})
        mentions = annotate_gazetteer(["myanmar", "was"], gaz)
        assert len(mentions) == 1
        assert (mentions[0].start, mentions[0].end) == (0, 1)
        assert mentions[0].uri == "kb:M"
        assert mentions[0].hypernym == ["state"]

    def test_longest_match_wins(self):
        gaz = Gazetteer({
            ("new", "york"): ("kb:NY", ["city"]),
            ("new", "york", "times"): ("kb:NYT", ["newspaper"]),
        })
        mentions = annotate_gazetteer(["new", "york", "times"], gaz)
        assert len(mentions) == 1
        assert mentions[0].uri == "kb:NYT"
        assert (mentions[0].start, mentions[0].end) == (0, 3)

    def test_no_match(self):
        gaz = Gazetteer({("myanmar",): ("kb:M", ["state"])})
        assert annotate_gazetteer(["nothing", "here"], gaz) == []

    def test_matches_do_not_overlap_and_are_sorted(self):
        gaz = Gazetteer({("a", "b"): ("kb:AB", None), ("b", "c"): ("kb:BC", None)})
        mentions = annotate_gazetteer(["a", "b", "c", "b", "c"], gaz)
        assert [(m.start, m.end) for m in mentions] == [(0, 2), (3, 5)]

    def test_empty_key_rejected(self):
        with pytest.raises(InvalidParams):
            Gazetteer({(): ("kb:X", None)})

    def test_from_tsv(self, toy_gazetteer):
        assert toy_gazetteer.entries[("new", "york")][0] == "http://example.org/kb/New_York"
        assert toy_gazetteer.entries[("osaka",)][1] == ["port", "city"]
        assert toy_gazetteer.entries[("ruritania",)][1] is None


class TestProjection:
    def test_single_link(self):
        mention = EntityMention(0, 1, ["myanmar"], "kb:M")
        assert project_entity_span(mention, {(0, 2)}, 4) == (2, 3)

    def test_rejects_outside_alignment_inside_candidate(self):
        mention = EntityMention(0, 2, ["new", "york"], "kb:NY")
        links = {(0, 1), (1, 3), (5, 2)}
        assert project_entity_span(mention, links, 6) is None

    def test_no_links(self):
        mention = EntityMention(0, 1, ["myanmar"], "kb:M")
        assert project_entity_span(mention, set(), 4) is None

    def test_contains_all_linked_targets(self):
        mention = EntityMention(1, 3, ["a", "b"], "kb:X")
        links = {(1, 4), (2, 2), (0, 0)}
        assert project_entity_span(mention, links, 6) == (2, 5)

    def test_accepted_spans_are_clean(self):
        # accepted interval covers every linked target and nothing linked outside
        import random

        rng = random.Random(21)
        for _ in range(300):
            n, m = rng.randrange(1, 7), rng.randrange(1, 7)
            start = rng.randrange(n)
            end = rng.randrange(start + 1, n + 1)
            mention = EntityMention(start, end, ["w"] * (end - start), "kb:X")
            links = {
                (rng.randrange(n), rng.randrange(m))
                for _ in range(rng.randrange(0, 8))
            }
            span = project_entity_span(mention, links, m)
            if span is None:
                continue
            lo, hi = span
            inside_targets = {j for i, j in links if start <= i < end}
            assert inside_targets <= set(range(lo, hi))
            assert lo in inside_targets and hi - 1 in inside_targets
            assert not any(
                lo <= j < hi and not (start <= i < end) for i, j in links
            )


class TestSpanArithmetic:
    def test_token_char_spans(self):
        assert token_char_spans(["ab", "c", "def"]) == [(0, 2), (3, 4), (5, 8)]


class TestResponseParsing:
    def test_simple_mention(self):
        payload = load_spotlight_fixture("resp_simple.json")
        sentence = payload["@text"].split()
        mentions = mentions_from_response(payload, sentence)
        assert len(mentions) == 1
        assert (mentions[0].start, mentions[0].end) == (0, 1)
        assert mentions[0].uri == "http://dbpedia.org/resource/Myanmar"
        assert mentions[0].surface == ["myanmar"]

    def test_multiword_and_second_mention(self):
        payload = load_spotlight_fixture("resp_multi.json")
        sentence = payload["@text"].split()
        mentions = mentions_from_response(payload, sentence)
        assert [(m.start, m.end, m.uri) for m in mentions] == [
            (1, 4, "http://dbpedia.org/resource/The_New_York_Times"),
            (5, 6, "http://dbpedia.org/resource/The_Gambia"),
        ]

    def test_missing_resources_means_no_mentions(self):
        payload = load_spotlight_fixture("resp_empty.json")
        assert mentions_from_response(payload, payload["@text"].split()) == []

    def test_boundary_mismatch_dropped_with_warning(self, caplog):
        payload = load_spotlight_fixture("resp_boundary.json")
        sentence = payload["@text"].split()
        with caplog.at_level(logging.WARNING, logger="tagcopy.link"):
            mentions = mentions_from_response(payload, sentence)
        assert [(m.start, m.end, m.uri) for m in mentions] == [
            (3, 4, "http://dbpedia.org/resource/Danube"),
        ]
        assert any("token boundaries" in rec.message for rec in caplog.records)

    def test_overlap_keeps_earlier_longer_mention(self, caplog):
        payload = load_spotlight_fixture("resp_overlap.json")
        sentence = payload["@text"].split()
        with caplog.at_level(logging.WARNING, logger="tagcopy.link"):
            mentions = mentions_from_response(payload, sentence)
        assert [(m.start, m.end, m.uri) for m in mentions] == [
            (2, 4, "http://dbpedia.org/resource/Sierra_Leone"),
        ]

    def test_malformed_resource_record(self):
        with pytest.raises(MalformedResponse):
            mentions_from_response({"Resources": [{"@URI": "u"}]}, ["a"])
        with pytest.raises(MalformedResponse):
            mentions_from_response({"Resources": "nope"}, ["a"])


class FakeTransport:
    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = []

    def __call__(self, url, params):
        self.calls.append((url, dict(params) if params else None))
        reply = self.replies.pop(0) if len(self.replies) > 1 else self.replies[0]
        if isinstance(reply, Exception):
            raise reply
        return reply


def _ok(payload) -> tuple[int, str]:
    return 200, json.dumps(payload)


class TestClient:
    def test_annotate_parses_and_caches(self):
        payload = load_spotlight_fixture("resp_simple.json")
        transport = FakeTransport([_ok(payload)])
        client = SpotlightClient("http://annotator/annotate", transport=transport)
        sentence = payload["@text"].split()
        first = client.annotate(sentence)
        second = client.annotate(sentence)
        assert [m.uri for m in first] == ["http://dbpedia.org/resource/Myanmar"]
        assert [m.uri for m in second] == [m.uri for m in first]
        assert len(transport.calls) == 1
        assert transport.calls[0][1]["confidence"] == "0.5"

    def test_retries_then_succeeds(self):
        payload = load_spotlight_fixture("resp_simple.json")
        transport = FakeTransport([
            requests.ConnectionError("down"),
            (503, "busy"),
            _ok(payload),
        ])
        client = SpotlightClient(
            "http://annotator/annotate", transport=transport, max_retries=3, backoff=0.001
        )
        mentions = client.annotate(payload["@text"].split())
        assert len(mentions) == 1
        assert len(transport.calls) == 3

    def test_gives_up_after_bounded_retries(self):
        transport = FakeTransport([requests.ConnectionError("down")])
        client = SpotlightClient(
            "http://annotator/annotate", transport=transport, max_retries=2, backoff=0.001
        )
        with pytest.raises(HttpError):
            client.annotate(["word"])
        assert len(transport.calls) == 3  # initial try + 2 retries

    def test_client_error_fails_fast(self):
        transport = FakeTransport([(400, "bad request")])
        client = SpotlightClient("http://annotator/annotate", transport=transport, backoff=0.001)
        with pytest.raises(HttpError):
            client.annotate(["word"])
        assert len(transport.calls) == 1

    def test_invalid_json_is_malformed(self):
        transport = FakeTransport([(200, "<html>not json</html>")])
        client = SpotlightClient("http://annotator/annotate", transport=transport)
        with pytest.raises(MalformedResponse):
            client.annotate(["word"])

    def test_empty_sentence_short_circuits(self):
        transport = FakeTransport([])
        client = SpotlightClient("http://annotator/annotate", transport=transport)
        assert client.annotate([]) == []
        assert transport.calls == []

    def test_corpus_annotation_preserves_order(self):
        def transport(url, params):
            text = params["text"]
            return _ok({
                "@text": text,
                "Resources": [
                    {"@URI": f"kb:{text.split()[0]}", "@surfaceForm": text.split()[0], "@offset": "0"}
                ],
            })

        client = SpotlightClient("http://annotator/annotate", transport=transport)
        sentences = [[f"w{i}", "tail"] for i in range(20)]
        results = annotate_corpus(client, sentences, max_in_flight=4)
        assert [m[0].uri for m in results] == [f"kb:w{i}" for i in range(20)]


class TestHypernyms:
    def test_offline_lookup(self):
        resolver = OfflineHypernyms({"kb:M": "state"})
        assert resolve_hypernym("kb:M", resolver) == ["state"]

    def test_absent_uri(self):
        resolver = OfflineHypernyms({})
        assert resolve_hypernym("kb:Q", resolver) is None

    def test_multiword_label_kept_whole(self):
        resolver = OfflineHypernyms({"kb:M": "Sovereign State"})
        assert resolve_hypernym("kb:M", resolver) == ["sovereign", "state"]

    def test_from_tsv(self, toy_dir):
        resolver = OfflineHypernyms.from_tsv(toy_dir / "hypernyms.tsv")
        assert resolve_hypernym("http://example.org/kb/Osaka", resolver) == ["port", "city"]

    def test_remote_prefers_gold_fact(self):
        uri = "http://dbpedia.org/resource/Myanmar"
        body = {
            uri: {
                "http://purl.org/linguistics/gold/hypernym": [
                    {"type": "uri", "value": "http://dbpedia.org/resource/State"}
                ],
                "http://www.w3.org/1999/02/22-rdf-syntax-ns#type": [
                    {"type": "uri", "value": "http://dbpedia.org/ontology/Country"}
                ],
            }
        }
        resolver = RemoteHypernyms(transport=FakeTransport([_ok(body)]))
        assert resolve_hypernym(uri, resolver) == ["state"]

    def test_remote_falls_back_to_most_specific_type(self):
        uri = "http://dbpedia.org/resource/Osaka"
        body = {
            uri: {
                "http://www.w3.org/1999/02/22-rdf-syntax-ns#type": [
                    {"type": "uri", "value": "http://dbpedia.org/ontology/Place"},
                    {"type": "uri", "value": "http://dbpedia.org/ontology/PopulatedPlace"},
                    {"type": "uri", "value": "http://www.w3.org/2002/07/owl#Thing"},
                ],
            }
        }
        resolver = RemoteHypernyms(transport=FakeTransport([_ok(body)]))
        assert resolve_hypernym(uri, resolver) == ["populated", "place"]

    def test_remote_http_error(self):
        resolver = RemoteHypernyms(transport=FakeTransport([(500, "boom")]))
        with pytest.raises(HttpError):
            resolver.lookup("http://dbpedia.org/resource/X")


class TestAnnotationsFile:
    def test_round_trip(self, tmp_path):
        mentions = [
            EntityMention(0, 1, ["myanmar"], "kb:M", ["state"]),
            EntityMention(3, 5, ["new", "york"], "kb:NY", None),
        ]
        write_annotations(tmp_path / "ann.jsonl", [(0, mentions), (4, [])])
        loaded = read_annotations(tmp_path / "ann.jsonl")
        assert set(loaded) == {0, 4}
        assert loaded[0] == mentions
        assert loaded[4] == []
