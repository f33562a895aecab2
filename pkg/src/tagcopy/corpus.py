"""Parallel corpus reading, normalization, and holdout splitting.

Input text is expected to be pre-tokenized: UTF-8, LF line endings, one
sentence per line, tokens separated by single spaces. Normalization here is
deliberately limited to lowercasing and accent stripping so the toolkit
stays language-neutral; sub-word or language-specific segmentation belongs
to upstream tools.
"""

import random
import unicodedata
from dataclasses import dataclass

from .errors import InsufficientData, LineCountMismatch

TokenSeq = list[str]


@dataclass(frozen=True)
class NormProfile:
    """Switches applied to every input line."""

    lowercase: bool = True
    strip_accents: bool = True


def _strip_accents(text: str) -> str:
    # canonical decomposition, then drop combining marks; this exact recipe
    # keeps the transform bit-reproducible across runs and machines
    decomposed = unicodedata.normalize("NFD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def tokenize_normalize(raw_line: str, profile: NormProfile = NormProfile()) -> TokenSeq:
    """Whitespace-split a line and apply the normalization profile.

    Idempotent: feeding the space-joined result back in reproduces it.
    Tokens that consist solely of combining marks vanish after stripping
    and are dropped.
    """
    if profile.lowercase:
        raw_line = raw_line.lower()
    if profile.strip_accents:
        raw_line = _strip_accents(raw_line)
    return raw_line.split()


@dataclass(frozen=True)
class SentencePair:
    src: TokenSeq
    tgt: TokenSeq
    line_no: int  # 0-based line in the original source file


@dataclass
class ParallelCorpus:
    pairs: list[SentencePair]
    src_lang: str = "src"
    tgt_lang: str = "tgt"
    dropped_count: int = 0

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def read_parallel(
    src_path,
    tgt_path,
    profile: NormProfile = NormProfile(),
    src_lang: str = "src",
    tgt_lang: str = "tgt",
) -> ParallelCorpus:
    """Read a line-parallel file pair into a corpus.

    Line i of each file becomes pair i. Pairs where either side normalizes
    to nothing are dropped (crawled corpora contain them) and counted in
    ``dropped_count``; surviving pairs keep their original line numbers.
    """
    with open(src_path, encoding="utf-8") as f:
        src_lines = f.read().splitlines()
    with open(tgt_path, encoding="utf-8") as f:
        tgt_lines = f.read().splitlines()
    if len(src_lines) != len(tgt_lines):
        raise LineCountMismatch(
            f"{src_path} has {len(src_lines)} lines but {tgt_path} has {len(tgt_lines)}"
        )
    pairs = []
    dropped = 0
    for i, (raw_src, raw_tgt) in enumerate(zip(src_lines, tgt_lines)):
        src = tokenize_normalize(raw_src, profile)
        tgt = tokenize_normalize(raw_tgt, profile)
        if not src or not tgt:
            dropped += 1
            continue
        pairs.append(SentencePair(src, tgt, i))
    return ParallelCorpus(pairs, src_lang, tgt_lang, dropped)


def write_parallel(corpus: ParallelCorpus, src_path, tgt_path) -> None:
    """Write both sides back out, one space-joined sentence per line."""
    with open(src_path, "w", encoding="utf-8") as fs, open(tgt_path, "w", encoding="utf-8") as ft:
        for pair in corpus.pairs:
            fs.write(" ".join(pair.src) + "\n")
            ft.write(" ".join(pair.tgt) + "\n")


def split_holdout(corpus: ParallelCorpus, n_valid: int, n_test: int, seed: int):
    """Randomly hold out validation and test pairs.

    Pair indices are shuffled with Python's Mersenne Twister seeded with
    ``seed``; the first ``n_valid`` become the validation split and the
    next ``n_test`` the test split. The same seed always yields the same
    partition, and each split keeps the original file order.
    """
    n = len(corpus.pairs)
    if n_valid < 0 or n_test < 0 or n_valid + n_test > n:
        raise InsufficientData(f"cannot hold out {n_valid}+{n_test} pairs from a corpus of {n}")
    indices = list(range(n))
    random.Random(seed).shuffle(indices)
    valid_ix = sorted(indices[:n_valid])
    test_ix = sorted(indices[n_valid:n_valid + n_test])
    train_ix = sorted(indices[n_valid + n_test:])

    def take(ix):
        return ParallelCorpus([corpus.pairs[i] for i in ix], corpus.src_lang, corpus.tgt_lang)

    return take(train_ix), take(valid_ix), take(test_ix)
