"""Word translation table built from symmetrized alignment links."""

from collections import Counter, defaultdict
from dataclasses import dataclass

from .corpus import ParallelCorpus, TokenSeq
from .errors import LengthMismatch


@dataclass(frozen=True)
class TableEntry:
    target: str
    count: int
    prob: float


@dataclass
class TranslationTable:
    entries: dict[str, TableEntry]
    direction: str = "src-tgt"

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def build_translation_table(
    corpus: ParallelCorpus,
    alignments: list[set[tuple[int, int]]],
    min_count: int = 1,
) -> TranslationTable:
    """Count linked word pairs and keep the best target per source word.

    Ties on link count go to the target word with the higher target-side
    corpus frequency, then to the lexicographically smaller one. Candidates
    linked fewer than ``min_count`` times are ignored; the stored
    probability is the winning count over all links of that source word.
    """
    if len(alignments) != len(corpus.pairs):
        raise LengthMismatch(
            f"{len(alignments)} alignment rows for {len(corpus.pairs)} sentence pairs"
        )
    pair_counts: dict[str, Counter] = defaultdict(Counter)
    tgt_freq: Counter = Counter()
    for pair, links in zip(corpus.pairs, alignments):
        tgt_freq.update(pair.tgt)
        for i, j in links:
            if i >= len(pair.src) or j >= len(pair.tgt) or i < 0 or j < 0:
                raise LengthMismatch(
                    f"line {pair.line_no}: link {i}-{j} out of bounds for "
                    f"{len(pair.src)}x{len(pair.tgt)} tokens"
                )
            pair_counts[pair.src[i]][pair.tgt[j]] += 1

    entries: dict[str, TableEntry] = {}
    for src_word, cands in pair_counts.items():
        total = sum(cands.values())
        best = None
        best_rank = None
        # ascending word order + strictly-greater keeps the lexicographically
        # smallest target among full ties
        for tgt_word in sorted(cands):
            c = cands[tgt_word]
            if c < min_count:
                continue
            rank = (c, tgt_freq[tgt_word])
            if best_rank is None or rank > best_rank:
                best, best_rank = tgt_word, rank
        if best is not None:
            entries[src_word] = TableEntry(best, cands[best], cands[best] / total)
    return TranslationTable(entries)


def translate_word(table: TranslationTable, word: str) -> str | None:
    """Exact-match lookup; the word must already be normalized."""
    entry = table.entries.get(word)
    return entry.target if entry is not None else None


def translate_tokens(table: TranslationTable, tokens: TokenSeq) -> TokenSeq:
    """Word-by-word translation; words missing from the table pass through."""
    out = []
    for w in tokens:
        t = translate_word(table, w)
        out.append(t if t is not None else w)
    return out


def translate_tokens_strict(table: TranslationTable, tokens: TokenSeq) -> TokenSeq | None:
    """Word-by-word translation, or None unless every word is in the table."""
    out = []
    for w in tokens:
        t = translate_word(table, w)
        if t is None:
            return None
        out.append(t)
    return out


def save_table(table: TranslationTable, path) -> None:
    """TSV dump: src, tgt, link count, probability (6 decimals), sorted by src."""
    with open(path, "w", encoding="utf-8") as f:
        for src_word in sorted(table.entries):
            e = table.entries[src_word]
            f.write(f"{src_word}\t{e.target}\t{e.count}\t{e.prob:.6f}\n")


def load_table(path, direction: str = "src-tgt") -> TranslationTable:
    entries = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            src_word, tgt_word, count, prob = line.rstrip("\n").split("\t")
            entries[src_word] = TableEntry(tgt_word, int(count), float(prob))
    return TranslationTable(entries, direction)
