"""Evaluation: corpus BLEU, copy accuracy, per-POS translation accuracy,
and paired randomization significance.

Reports exist in two forms: TSV for machines and an aligned-column text
summary for humans. Percentages are printed with 2 decimals, BLEU with 2
decimals, p-values with 4.
"""

import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass

from .corpus import TokenSeq
from .errors import CountMismatch, EmptyCorpus, EmptyInput, InvalidParams, LengthMismatch
from .template import ManifestEntry, TemplateMethod, extract_regions, split_region

UNALIGNED_TAG = "X"

# which tag components each method is scored on (dashes elsewhere)
COMPONENTS = {
    TemplateMethod.BASELINE: ("translation",),
    TemplateMethod.TAG: ("entity",),
    TemplateMethod.ADD: ("entity", "hypernym"),
    TemplateMethod.TRANS: ("entity", "translation"),
    TemplateMethod.TRANSA: ("entity", "translation", "hypernym"),
    TemplateMethod.TRANSR: ("translation", "hypernym"),
    TemplateMethod.HYPA: ("translation", "hypernym"),
}


# ---------------------------------------------------------------------------
# BLEU


@dataclass
class BleuScore:
    score: float  # 0..100
    precisions: list[float]
    brevity_penalty: float
    hyp_len: int
    ref_len: int


def _ngrams(tokens: TokenSeq, n: int) -> Counter:
    return Counter(tuple(tokens[k:k + n]) for k in range(len(tokens) - n + 1))


def bleu(hypotheses, references, max_n: int = 4, subset=None) -> BleuScore:
    """Corpus-level BLEU with clipped n-gram precisions, single reference.

    Any zero n-gram precision zeroes the score (multi-bleu convention); the
    brevity penalty is min(1, exp(1 - r/c)). ``subset`` restricts scoring to
    the given line indices, which is how tag-only evaluation works.
    """
    if len(hypotheses) != len(references):
        raise CountMismatch(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if subset is not None:
        keep = set(subset)
        pairs = [hr for k, hr in enumerate(zip(hypotheses, references)) if k in keep]
    else:
        pairs = list(zip(hypotheses, references))
    if not pairs:
        raise EmptyCorpus("nothing to score")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for hyp, ref in pairs:
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hgrams = _ngrams(hyp, n)
            if not hgrams:
                continue
            rgrams = _ngrams(ref, n)
            totals[n - 1] += sum(hgrams.values())
            matches[n - 1] += sum(min(c, rgrams[g]) for g, c in hgrams.items())
    precisions = [m / t if t else 0.0 for m, t in zip(matches, totals)]
    if hyp_len == 0:
        bp = 0.0
    else:
        bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    if min(precisions) <= 0.0:
        score = 0.0
    else:
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / max_n)
    return BleuScore(score, precisions, bp, hyp_len, ref_len)


def format_bleu(result: BleuScore) -> str:
    parts = "/".join(f"{100.0 * p:.1f}" for p in result.precisions)
    return (
        f"BLEU = {result.score:.2f}, {parts} "
        f"(BP={result.brevity_penalty:.3f}, hyp_len={result.hyp_len}, ref_len={result.ref_len})"
    )


def write_bleu_tsv(result: BleuScore, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        names = "\t".join(f"p{n}" for n in range(1, len(result.precisions) + 1))
        f.write(f"score\t{names}\tbp\thyp_len\tref_len\n")
        precs = "\t".join(f"{100.0 * p:.2f}" for p in result.precisions)
        f.write(
            f"{result.score:.2f}\t{precs}\t{result.brevity_penalty:.4f}"
            f"\t{result.hyp_len}\t{result.ref_len}\n"
        )


# ---------------------------------------------------------------------------
# copy accuracy


@dataclass
class CopyReport:
    method: TemplateMethod
    total: int
    correct: int
    no_tag: int
    wrong_tag: int
    matched: dict[str, int]  # per scored component

    def accuracy(self, component: str) -> float:
        return self.matched[component] / self.total if self.total else 0.0


def _consume(tokens: TokenSeq, needle: TokenSeq, used: list[bool]) -> bool:
    """Find an unconsumed contiguous occurrence of needle and mark it used."""
    if not needle:
        return False
    n = len(needle)
    for k in range(len(tokens) - n + 1):
        if tokens[k:k + n] == needle and not any(used[k:k + n]):
            for t in range(k, k + n):
                used[t] = True
            return True
    return False


def copy_accuracy(manifest: list[ManifestEntry], outputs, method: TemplateMethod) -> CopyReport:
    """Score how faithfully tagged content reached the raw model output.

    Delimited methods match the k-th balanced region of an output line to
    the k-th manifest bundle and compare segments exactly: a bundle with no
    region is a no_tag error, a region with any scored segment wrong is a
    wrong_tag error. Baseline and hypa have no delimiters: their expected
    token runs (translation; plus the target-side hypernym for hypa) are
    searched anywhere in the output, each occurrence consumable once, and
    misses land in no_tag.
    """
    components = COMPONENTS[method]
    matched = {c: 0 for c in components}
    total = correct = no_tag = wrong_tag = 0
    for entry in manifest:
        if not 0 <= entry.line_no < len(outputs):
            raise CountMismatch(
                f"manifest row {entry.line_no} outside the {len(outputs)} output lines"
            )
        out = outputs[entry.line_no]
        if method in (TemplateMethod.BASELINE, TemplateMethod.HYPA):
            used_t = [False] * len(out)
            used_h = [False] * len(out)
            for b in entry.bundles:
                total += 1
                hits = {"translation": _consume(out, b.translation, used_t)}
                if method is TemplateMethod.HYPA:
                    hits["hypernym"] = _consume(out, b.hypernym_tgt, used_h)
                for c in components:
                    matched[c] += hits[c]
                if all(hits[c] for c in components):
                    correct += 1
                else:
                    no_tag += 1
            continue
        regions = extract_regions(out, entry.vocab)
        for k, b in enumerate(entry.bundles):
            total += 1
            if k >= len(regions):
                no_tag += 1
                continue
            segments = split_region(regions[k], method, entry.vocab)
            hits = dict.fromkeys(components, False)
            if segments is not None:
                if "entity" in hits:
                    hits["entity"] = segments["entity"] == b.entity
                if "translation" in hits:
                    hits["translation"] = segments["translation"] == b.translation
                if "hypernym" in hits:
                    hits["hypernym"] = segments["hypernym"] == b.hypernym
            for c in components:
                matched[c] += hits[c]
            if all(hits.values()):
                correct += 1
            else:
                wrong_tag += 1
    return CopyReport(method, total, correct, no_tag, wrong_tag, matched)


def format_copy_report(report: CopyReport) -> str:
    lines = [f"copy accuracy ({report.method.value}), {report.total} tagged entities"]
    for c in ("entity", "translation", "hypernym"):
        shown = f"{100.0 * report.accuracy(c):6.2f}%  ({report.matched[c]}/{report.total})" \
            if c in report.matched else "     -"
        lines.append(f"  {c:<12} {shown}")
    lines.append("  breakdown")
    for name, value in (("correct", report.correct), ("no_tag", report.no_tag),
                        ("wrong_tag", report.wrong_tag)):
        pct = 100.0 * value / report.total if report.total else 0.0
        lines.append(f"  {name:<12} {pct:6.2f}%  ({value}/{report.total})")
    return "\n".join(lines)


def write_copy_tsv(report: CopyReport, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("kind\tname\tcount\ttotal\tpct\n")
        for c in ("entity", "translation", "hypernym"):
            if c in report.matched:
                pct = 100.0 * report.accuracy(c)
                f.write(f"component\t{c}\t{report.matched[c]}\t{report.total}\t{pct:.2f}\n")
        for name, value in (("correct", report.correct), ("no_tag", report.no_tag),
                            ("wrong_tag", report.wrong_tag)):
            pct = 100.0 * value / report.total if report.total else 0.0
            f.write(f"breakdown\t{name}\t{value}\t{report.total}\t{pct:.2f}\n")


# ---------------------------------------------------------------------------
# POS projection and accuracy


def pos_project(src_pos: list[str], links: set[tuple[int, int]], tgt_len: int) -> list[str]:
    """Project source POS tags onto target tokens through alignment links.

    A target token linked to several source tokens takes the POS of the
    lowest-indexed one; unaligned target tokens get the placeholder tag.
    """
    by_tgt: dict[int, int] = {}
    for i, j in links:
        if not (0 <= i < len(src_pos)) or not (0 <= j < tgt_len):
            raise LengthMismatch(
                f"link {i}-{j} out of bounds for {len(src_pos)} source tags "
                f"and {tgt_len} target tokens"
            )
        if j not in by_tgt or i < by_tgt[j]:
            by_tgt[j] = i
    return [src_pos[by_tgt[j]] if j in by_tgt else UNALIGNED_TAG for j in range(tgt_len)]


@dataclass
class PosRow:
    pos: str
    position: str  # "pre" or "post"
    sys_acc: float
    base_acc: float
    diff: float
    p_value: float
    n: int


@dataclass
class PosReport:
    rows: list[PosRow]


def _claim(candidates: list[str], out_tokens: TokenSeq, used: list[bool]) -> bool:
    for want in candidates:
        for k, tok in enumerate(out_tokens):
            if tok == want and not used[k]:
                used[k] = True
                return True
    return False


def pos_accuracy(
    system_outputs,
    baseline_outputs,
    manifest: list[ManifestEntry],
    pos_tags,
    alignments,
    references,
    *,
    resamples: int = 10000,
    seed: int = 0,
) -> PosReport:
    """Word translation accuracy per (POS, pre/post tag position).

    Runs over tagged sentences only. For each source token outside the tag
    spans that is aligned to at least one reference token, the token counts
    as correct for a system when one of those reference tokens can still be
    found in that system's detagged output; each output occurrence is
    consumed at most once, scanning source tokens left to right. Rows pair
    the system against the baseline and carry a randomization p-value.
    """
    sizes = {
        len(system_outputs),
        len(baseline_outputs),
        len(pos_tags),
        len(alignments),
        len(references),
    }
    if len(sizes) != 1:
        raise CountMismatch(
            "line-parallel inputs differ in length: "
            f"system={len(system_outputs)}, baseline={len(baseline_outputs)}, "
            f"pos={len(pos_tags)}, alignments={len(alignments)}, references={len(references)}"
        )
    cells: dict[tuple[str, str], tuple[list[bool], list[bool]]] = defaultdict(lambda: ([], []))
    for entry in manifest:
        ln = entry.line_no
        if not 0 <= ln < len(references):
            raise CountMismatch(f"manifest row {ln} outside the {len(references)} input lines")
        if not entry.bundles:
            continue
        spans = [tuple(b.src_span) for b in entry.bundles]
        first_start = min(s for s, _ in spans)
        inside = set()
        for s, e in spans:
            inside.update(range(s, e))
        pos_row = pos_tags[ln]
        ref = references[ln]
        ref_of: dict[int, list[int]] = defaultdict(list)
        for i, j in alignments[ln]:
            if not (0 <= j < len(ref)):
                raise LengthMismatch(f"line {ln}: link {i}-{j} outside the reference")
            ref_of[i].append(j)
        sys_used = [False] * len(system_outputs[ln])
        base_used = [False] * len(baseline_outputs[ln])
        for i, tag in enumerate(pos_row):
            if i in inside or i not in ref_of:
                continue
            expected = [ref[j] for j in sorted(ref_of[i])]
            where = "pre" if i < first_start else "post"
            sys_flags, base_flags = cells[(tag, where)]
            sys_flags.append(_claim(expected, system_outputs[ln], sys_used))
            base_flags.append(_claim(expected, baseline_outputs[ln], base_used))
    rows = []
    for tag, where in sorted(cells):
        sys_flags, base_flags = cells[(tag, where)]
        sys_acc = sum(sys_flags) / len(sys_flags)
        base_acc = sum(base_flags) / len(base_flags)
        p = significance(sys_flags, base_flags, resamples=resamples, seed=seed)
        rows.append(PosRow(tag, where, sys_acc, base_acc, sys_acc - base_acc, p, len(sys_flags)))
    return PosReport(rows)


def write_pos_tsv(report: PosReport, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("pos\tposition\tsys_acc\tbase_acc\tdiff\tp\tn\n")
        for r in report.rows:
            f.write(
                f"{r.pos}\t{r.position}\t{100.0 * r.sys_acc:.2f}\t{100.0 * r.base_acc:.2f}"
                f"\t{100.0 * r.diff:+.2f}\t{r.p_value:.4f}\t{r.n}\n"
            )


def format_pos_report(report: PosReport) -> str:
    header = f"{'pos':<10}{'position':<10}{'sys':>8}{'base':>8}{'diff':>8}{'p':>8}{'n':>6}"
    lines = [header]
    for r in report.rows:
        star = " *" if r.p_value < 0.05 else ""
        lines.append(
            f"{r.pos:<10}{r.position:<10}{100.0 * r.sys_acc:>8.2f}{100.0 * r.base_acc:>8.2f}"
            f"{100.0 * r.diff:>+8.2f}{r.p_value:>8.4f}{r.n:>6}{star}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# significance


def significance(system_flags, baseline_flags, resamples: int = 10000, seed: int = 0) -> float:
    """Two-sided paired approximate-randomization p-value.

    Each resample swaps every pair's labels with probability 1/2 and asks
    whether the absolute accuracy difference reaches the observed one.
    Swapping a pair flips the sign of its contribution to the difference,
    so a resample reduces to drawing random signs over the pairs that
    disagree; ties count as hits. Smoothed as (hits + 1) / (resamples + 1),
    deterministic for a given seed.
    """
    if len(system_flags) != len(baseline_flags):
        raise CountMismatch(
            f"{len(system_flags)} system flags vs {len(baseline_flags)} baseline flags"
        )
    n = len(system_flags)
    if n == 0:
        raise EmptyInput("no paired observations")
    if resamples <= 0:
        raise InvalidParams(f"resamples must be >= 1, got {resamples}")
    diffs = [int(s) - int(b) for s, b in zip(system_flags, baseline_flags)]
    observed = abs(sum(diffs))  # in units of 1/n
    m = sum(1 for d in diffs if d)
    rng = random.Random(seed)
    hits = 0
    for _ in range(resamples):
        d = 2 * rng.getrandbits(m).bit_count() - m if m else 0
        if abs(d) >= observed:
            hits += 1
    return (hits + 1) / (resamples + 1)
