"""Entity tagging templates: rendering, corpus tagging, and detagging.

Seven methods rewrite a sentence around an entity span E with translation T
and hypernym H (start/mid1/mid2/end are the tag vocabulary):

    baseline  unchanged
    tag       <start> E <end>
    add       <start> E <mid1> H <end>
    trans     <start> E <mid1> T <end>
    transa    <start> E <mid1> T <mid2> H <end>
    transr    <start> H <mid1> T <end>
    hypa      E H            (no delimiters; the "soft" variant)

On the target side the delimited methods substitute the projected
translation span with the *same* rendered content as the source side, which
is what makes verbatim copying learnable; hypa keeps the translation span
and appends the table-translated hypernym (or the source-language hypernym
when the table cannot cover it).

Tagged corpora are written as parallel text files plus a JSON Lines
manifest that records, per tagged line, the method, the tag vocabulary and
every bundle's components; the manifest is the ground truth the evaluation
module scores against.
"""

import json
from dataclasses import dataclass
from enum import Enum

from .corpus import ParallelCorpus, TokenSeq
from .errors import InvalidParams, LengthMismatch, MissingComponent
from .lexicon import TranslationTable, translate_tokens, translate_tokens_strict
from .link import EntityMention, MentionBundle, project_entity_span


class TemplateMethod(str, Enum):
    BASELINE = "baseline"
    TAG = "tag"
    ADD = "add"
    TRANS = "trans"
    TRANSA = "transa"
    TRANSR = "transr"
    HYPA = "hypa"


TAGGED_METHODS = (
    TemplateMethod.TAG,
    TemplateMethod.ADD,
    TemplateMethod.TRANS,
    TemplateMethod.TRANSA,
    TemplateMethod.TRANSR,
    TemplateMethod.HYPA,
)

_NEEDS_TRANSLATION = {TemplateMethod.TRANS, TemplateMethod.TRANSA, TemplateMethod.TRANSR}
_NEEDS_HYPERNYM = {
    TemplateMethod.ADD,
    TemplateMethod.TRANSA,
    TemplateMethod.TRANSR,
    TemplateMethod.HYPA,
}

# region layout between <start> and <end>, per delimited method
REGION_SLOTS = {
    TemplateMethod.TAG: ("entity",),
    TemplateMethod.ADD: ("entity", "hypernym"),
    TemplateMethod.TRANS: ("entity", "translation"),
    TemplateMethod.TRANSA: ("entity", "translation", "hypernym"),
    TemplateMethod.TRANSR: ("hypernym", "translation"),
}


@dataclass(frozen=True)
class TagVocabulary:
    """The four reserved delimiter tokens.

    The default maps onto the external translation model's pre-existing
    reserved tokens so tagging adds no new vocabulary; the plain variant is
    easier on the eyes in tests and examples.
    """

    start: str = "<special2>"
    mid1: str = "<special3>"
    mid2: str = "<special4>"
    end: str = "<special5>"

    def __post_init__(self):
        if len({self.start, self.mid1, self.mid2, self.end}) != 4:
            raise InvalidParams("tag vocabulary tokens must be four distinct tokens")

    def tokens(self) -> frozenset[str]:
        return frozenset((self.start, self.mid1, self.mid2, self.end))


SPECIAL_VOCAB = TagVocabulary()
PLAIN_VOCAB = TagVocabulary("<start>", "<mid1>", "<mid2>", "<end>")


@dataclass
class TaggedPair:
    src: TokenSeq
    tgt: TokenSeq
    method: TemplateMethod
    bundles: list[MentionBundle]
    tagged: bool
    line_no: int


@dataclass
class TagStats:
    total_pairs: int
    tagged_pairs: int

    @property
    def tag_fraction(self) -> float:
        return self.tagged_pairs / self.total_pairs if self.total_pairs else 0.0


def _tag_content(method: TemplateMethod, bundle: MentionBundle, vocab: TagVocabulary) -> TokenSeq:
    """The token run substituted for the entity; identical on both sides."""
    e = bundle.mention.surface
    t = bundle.translation
    h = bundle.mention.hypernym
    if method in _NEEDS_TRANSLATION and not t:
        raise MissingComponent(f"method {method.value!r} needs an entity translation")
    if method in _NEEDS_HYPERNYM and not h:
        raise MissingComponent(f"method {method.value!r} needs a hypernym")
    v = vocab
    if method is TemplateMethod.TAG:
        return [v.start, *e, v.end]
    if method is TemplateMethod.ADD:
        return [v.start, *e, v.mid1, *h, v.end]
    if method is TemplateMethod.TRANS:
        return [v.start, *e, v.mid1, *t, v.end]
    if method is TemplateMethod.TRANSA:
        return [v.start, *e, v.mid1, *t, v.mid2, *h, v.end]
    if method is TemplateMethod.TRANSR:
        return [v.start, *h, v.mid1, *t, v.end]
    if method is TemplateMethod.HYPA:
        return [*e, *h]
    raise InvalidParams(f"method {method.value!r} has no tag content")


def render_source_template(
    method: TemplateMethod,
    bundle: MentionBundle,
    sentence: TokenSeq,
    vocab: TagVocabulary = SPECIAL_VOCAB,
) -> TokenSeq:
    """Replace the entity span of the source sentence with the template."""
    if method is TemplateMethod.BASELINE:
        return list(sentence)
    m = bundle.mention
    return sentence[:m.start] + _tag_content(method, bundle, vocab) + sentence[m.end:]


def render_target_template(
    method: TemplateMethod,
    bundle: MentionBundle,
    tgt_sentence: TokenSeq,
    vocab: TagVocabulary = SPECIAL_VOCAB,
) -> TokenSeq:
    """Rewrite the projected translation span of the target sentence.

    Delimited methods substitute the same rendered content as the source
    side; hypa keeps the translation and appends the target-side hypernym.
    """
    if method is TemplateMethod.BASELINE:
        return list(tgt_sentence)
    if method is TemplateMethod.HYPA:
        if not bundle.hypernym_tgt:
            raise MissingComponent("method 'hypa' needs a target-side hypernym")
        return tgt_sentence[:bundle.tgt_end] + bundle.hypernym_tgt + tgt_sentence[bundle.tgt_end:]
    content = _tag_content(method, bundle, vocab)
    return tgt_sentence[:bundle.tgt_start] + content + tgt_sentence[bundle.tgt_end:]


def tag_corpus(
    corpus: ParallelCorpus,
    annotations: list[list[EntityMention]],
    alignments: list[set[tuple[int, int]]],
    table: TranslationTable,
    method: TemplateMethod,
    vocab: TagVocabulary = SPECIAL_VOCAB,
) -> tuple[list[TaggedPair], TagStats]:
    """Tag every pair whose mentions are eligible.

    A mention is eligible iff it has a uri, a hypernym, and a projectable
    target span. The criterion never looks at the method, so the tagged
    (line, span) set is identical across all methods; a pair counts as
    tagged when it has at least one eligible mention (baseline included,
    where rendering is the identity but the bundles still feed evaluation
    and tag-only subsets). Eligible mentions are rendered right to left so
    earlier spans keep their indices.
    """
    if len(annotations) != len(corpus.pairs):
        raise LengthMismatch(
            f"{len(annotations)} annotation rows for {len(corpus.pairs)} pairs"
        )
    if len(alignments) != len(corpus.pairs):
        raise LengthMismatch(
            f"{len(alignments)} alignment rows for {len(corpus.pairs)} pairs"
        )
    out = []
    tagged_pairs = 0
    for pair, mentions, links in zip(corpus.pairs, annotations, alignments):
        bundles = []
        for m in sorted(mentions, key=lambda m: m.start):
            if not m.uri or not m.hypernym:
                continue
            span = project_entity_span(m, links, len(pair.tgt))
            if span is None:
                continue
            lo, hi = span
            translation = pair.tgt[lo:hi]
            hypernym_tgt = translate_tokens_strict(table, m.hypernym) or list(m.hypernym)
            bundles.append(MentionBundle(m, lo, hi, translation, hypernym_tgt))
        if not bundles:
            out.append(TaggedPair(list(pair.src), list(pair.tgt), method, [], False, pair.line_no))
            continue
        src = list(pair.src)
        tgt = list(pair.tgt)
        for b in sorted(bundles, key=lambda b: b.mention.start, reverse=True):
            src = render_source_template(method, b, src, vocab)
        for b in sorted(bundles, key=lambda b: b.tgt_start, reverse=True):
            tgt = render_target_template(method, b, tgt, vocab)
        tagged_pairs += 1
        out.append(TaggedPair(src, tgt, method, bundles, True, pair.line_no))
    return out, TagStats(len(corpus.pairs), tagged_pairs)


# ---------------------------------------------------------------------------
# detagging


def _find(tokens: TokenSeq, needle: str, start: int) -> int | None:
    try:
        return tokens.index(needle, start)
    except ValueError:
        return None


def split_region(inner: TokenSeq, method: TemplateMethod, vocab: TagVocabulary):
    """Split region content on the method's separators.

    Returns a dict keyed by the method's slot names, or None when the
    content is malformed (separators missing, duplicated, out of order, or
    stray delimiter tokens inside).
    """
    slots = REGION_SLOTS.get(method)
    if slots is None:
        return None
    expected = [vocab.mid1, vocab.mid2][: len(slots) - 1]
    marks = vocab.tokens()
    parts: list[TokenSeq] = [[]]
    for tok in inner:
        if expected and tok == expected[0]:
            expected.pop(0)
            parts.append([])
        elif tok in marks:
            return None
        else:
            parts[-1].append(tok)
    if expected:
        return None
    return dict(zip(slots, parts))


def extract_regions(output: TokenSeq, vocab: TagVocabulary) -> list[TokenSeq]:
    """Balanced start..end region contents, in order of appearance."""
    regions = []
    i = 0
    while i < len(output):
        if output[i] == vocab.start:
            j = _find(output, vocab.end, i + 1)
            if j is None:
                break
            regions.append(output[i + 1:j])
            i = j + 1
        else:
            i += 1
    return regions


def detag(
    output: TokenSeq,
    method: TemplateMethod,
    table: TranslationTable,
    vocab: TagVocabulary = SPECIAL_VOCAB,
) -> tuple[TokenSeq, int]:
    """Strip tag regions from raw model output.

    tag/add regions become the word-by-word table translation of their
    entity segment (words the table misses stay verbatim, add's hypernym
    segment is discarded); trans/transa/transr regions keep their
    translation segment; hypa and baseline pass through untouched.
    Malformed regions (unbalanced or with unexpected separators) lose their
    delimiter tokens, keep the rest verbatim, and are tallied in the
    returned incident count.
    """
    if method in (TemplateMethod.BASELINE, TemplateMethod.HYPA):
        return list(output), 0
    marks = vocab.tokens()
    out: TokenSeq = []
    incidents = 0
    i = 0
    while i < len(output):
        tok = output[i]
        if tok == vocab.start:
            j = _find(output, vocab.end, i + 1)
            if j is None:
                incidents += 1
                out.extend(t for t in output[i + 1:] if t not in marks)
                break
            inner = output[i + 1:j]
            segments = split_region(inner, method, vocab)
            if segments is None:
                incidents += 1
                out.extend(t for t in inner if t not in marks)
            elif method in (TemplateMethod.TAG, TemplateMethod.ADD):
                out.extend(translate_tokens(table, segments["entity"]))
            else:
                out.extend(segments["translation"])
            i = j + 1
        elif tok in marks:
            incidents += 1  # stray delimiter outside any region
            i += 1
        else:
            out.append(tok)
            i += 1
    return out, incidents


# ---------------------------------------------------------------------------
# tagged corpus + manifest files


@dataclass
class BundleRecord:
    """Manifest view of one tagged bundle (plain lists, JSON-shaped)."""

    src_span: list[int]
    tgt_span: list[int]
    entity: TokenSeq
    translation: TokenSeq
    hypernym: TokenSeq
    hypernym_tgt: TokenSeq
    uri: str


@dataclass
class ManifestEntry:
    line_no: int  # row index in the tagged parallel files
    method: TemplateMethod
    vocab: TagVocabulary
    bundles: list[BundleRecord]


def write_tagged(
    tagged: list[TaggedPair],
    src_path,
    tgt_path,
    manifest_path,
    vocab: TagVocabulary,
) -> TagStats:
    """Write the tagged parallel files plus the manifest of tagged rows.

    Manifest line_no refers to the row index in the emitted files (the
    files the external translation system reads and answers line by line).
    """
    with open(src_path, "w", encoding="utf-8") as fs, open(tgt_path, "w", encoding="utf-8") as ft:
        for tp in tagged:
            fs.write(" ".join(tp.src) + "\n")
            ft.write(" ".join(tp.tgt) + "\n")
    n_tagged = 0
    with open(manifest_path, "w", encoding="utf-8") as f:
        for row, tp in enumerate(tagged):
            if not tp.tagged:
                continue
            n_tagged += 1
            record = {
                "line_no": row,
                "method": tp.method.value,
                "tag_vocab": {
                    "start": vocab.start,
                    "mid1": vocab.mid1,
                    "mid2": vocab.mid2,
                    "end": vocab.end,
                },
                "bundles": [
                    {
                        "src_span": [b.mention.start, b.mention.end],
                        "tgt_span": [b.tgt_start, b.tgt_end],
                        "entity": b.mention.surface,
                        "translation": b.translation,
                        "hypernym": b.mention.hypernym,
                        "hypernym_tgt": b.hypernym_tgt,
                        "uri": b.mention.uri,
                    }
                    for b in tp.bundles
                ],
            }
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    return TagStats(len(tagged), n_tagged)


def read_manifest(path) -> list[ManifestEntry]:
    entries = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            tv = record["tag_vocab"]
            entries.append(
                ManifestEntry(
                    line_no=record["line_no"],
                    method=TemplateMethod(record["method"]),
                    vocab=TagVocabulary(tv["start"], tv["mid1"], tv["mid2"], tv["end"]),
                    bundles=[
                        BundleRecord(
                            src_span=b["src_span"],
                            tgt_span=b["tgt_span"],
                            entity=b["entity"],
                            translation=b["translation"],
                            hypernym=b["hypernym"],
                            hypernym_tgt=b["hypernym_tgt"],
                            uri=b.get("uri", ""),
                        )
                        for b in record["bundles"]
                    ],
                )
            )
    return entries
