"""Diagonal-prior lexical word aligner.

Conditional alignment model in the style of the fast log-linear
reparameterized aligners: each emitted token independently picks a
conditioning token (or NULL) with a position prior that decays
exponentially with distance from the diagonal, times a lexical translation
probability theta. For conditioning length n and emitted length m the
prior at emitted position j is

    prior(NULL) = p0
    prior(i)    = (1 - p0) * exp(tension * -|(i+1)/n - (j+1)/m|) / Z

with Z summing the exponentials over i = 0..n-1. Training is plain EM over
the lexical table (optionally variational Bayes with a symmetric Dirichlet
prior). Theta support is restricted to co-occurring word pairs, plus
(NULL, f) for every emitted word f, and starts uniform per row.

File formats
------------
Alignments use Pharaoh format: one line per sentence pair, space-separated
``i-j`` links, 0-based, source index first (in both directions). Models are
dumped as TSV text with ``repr`` floats, so a dump reloads to the exact
same model.
"""

import math
from dataclasses import dataclass, field

from .corpus import ParallelCorpus, SentencePair
from .errors import (
    EmptyCorpus,
    EmptyPair,
    InvalidParams,
    LengthMismatch,
    ZeroProbability,
)

# Conditioning-side NULL word. Real tokens are whitespace-split and hence
# never empty, so the empty string cannot collide with corpus text.
NULL_WORD = ""

FORWARD = "src-tgt"
REVERSE = "tgt-src"

HEURISTICS = ("intersection", "union", "grow-diag-final-and")

_EMPTY_ROW: dict[str, float] = {}


@dataclass
class AlignModel:
    """Lexical table plus the two prior hyperparameters.

    ``theta[e][f]`` is the probability of emitting f conditioned on e.
    ``perplexity_history`` holds the training perplexity observed at the
    start of each EM iteration (i.e. under the parameters entering it).
    """

    theta: dict[str, dict[str, float]]
    tension: float
    p0: float
    direction: str = FORWARD
    perplexity_history: list[float] = field(default_factory=list)

    def prob(self, e: str, f: str) -> float:
        return self.theta.get(e, _EMPTY_ROW).get(f, 0.0)


@dataclass
class AlignmentVector:
    """Per emitted position, the chosen conditioning position (None = NULL)."""

    links: list[int | None]
    n_conditioning: int


class _DiagonalPrior:
    """Position prior rows, cached by (emitted length, conditioning length)."""

    def __init__(self, tension: float, p0: float):
        self.tension = tension
        self.p0 = p0
        self._cache: dict[tuple[int, int], list[list[float]]] = {}

    def rows(self, m: int, n: int) -> list[list[float]]:
        """One row per emitted position j; NULL mass (p0) is not included."""
        rows = self._cache.get((m, n))
        if rows is None:
            rows = []
            for j in range(m):
                w = [math.exp(self.tension * -abs((i + 1) / n - (j + 1) / m)) for i in range(n)]
                scale = (1.0 - self.p0) / sum(w)
                rows.append([x * scale for x in w])
            self._cache[(m, n)] = rows
        return rows


_PRIOR_CACHE: dict[tuple[float, float], _DiagonalPrior] = {}


def _prior_for(tension: float, p0: float) -> _DiagonalPrior:
    prior = _PRIOR_CACHE.get((tension, p0))
    if prior is None:
        prior = _PRIOR_CACHE[(tension, p0)] = _DiagonalPrior(tension, p0)
    return prior


def _sides(pair: SentencePair, direction: str):
    """(conditioning tokens, emitted tokens) for the given direction."""
    if direction == FORWARD:
        return pair.src, pair.tgt
    return pair.tgt, pair.src


def train_alignment(
    corpus: ParallelCorpus,
    *,
    iterations: int = 5,
    tension: float = 4.0,
    p0: float = 0.08,
    vb: bool = False,
    alpha: float = 0.01,
    direction: str = FORWARD,
    on_iteration=None,
) -> AlignModel:
    """Run EM over the corpus and return the trained model.

    With ``vb`` the M-step applies the digamma transform to the expected
    counts with Dirichlet hyperparameter ``alpha`` (rows are then no longer
    exactly normalized); otherwise the M-step is the plain count-ratio MLE
    update. ``on_iteration(k, model)`` is invoked after each M-step with the
    live model, for inspection; the model must be treated as read-only.
    """
    if not corpus.pairs:
        raise EmptyCorpus("cannot train on an empty corpus")
    if iterations <= 0:
        raise InvalidParams(f"iterations must be >= 1, got {iterations}")
    if not 0.0 <= p0 < 1.0:
        raise InvalidParams(f"p0 must be in [0, 1), got {p0}")
    if tension < 0.0:
        raise InvalidParams(f"tension must be >= 0, got {tension}")
    if vb and alpha <= 0.0:
        raise InvalidParams(f"alpha must be > 0 in vb mode, got {alpha}")
    if direction not in (FORWARD, REVERSE):
        raise InvalidParams(f"unknown direction {direction!r}")

    theta: dict[str, dict[str, float]] = {NULL_WORD: {}}
    for pair in corpus.pairs:
        cond, emit = _sides(pair, direction)
        null_row = theta[NULL_WORD]
        for f in emit:
            null_row[f] = 0.0
        for e in cond:
            row = theta.setdefault(e, {})
            for f in emit:
                row[f] = 0.0
    for row in theta.values():
        uniform = 1.0 / len(row)
        for f in row:
            row[f] = uniform

    model = AlignModel(theta, tension, p0, direction)
    prior = _prior_for(tension, p0)
    total_emitted = sum(len(_sides(p, direction)[1]) for p in corpus.pairs)

    for k in range(iterations):
        counts = {e: dict.fromkeys(row, 0.0) for e, row in theta.items()}
        null_row = theta[NULL_WORD]
        null_counts = counts[NULL_WORD]
        loglik = 0.0
        for pair in corpus.pairs:
            cond, emit = _sides(pair, direction)
            n = len(cond)
            rows = prior.rows(len(emit), n)
            for j, f in enumerate(emit):
                prow = rows[j]
                null_score = p0 * null_row[f]
                scores = [prow[i] * theta[cond[i]][f] for i in range(n)]
                z = null_score + sum(scores)
                loglik += math.log(z)
                inv = 1.0 / z
                null_counts[f] += null_score * inv
                for i in range(n):
                    counts[cond[i]][f] += scores[i] * inv
        model.perplexity_history.append(math.exp(-loglik / total_emitted))
        _reestimate(theta, counts, vb, alpha)
        if on_iteration is not None:
            on_iteration(k, model)
    return model


def _reestimate(theta, counts, vb: bool, alpha: float) -> None:
    if vb:
        from scipy.special import digamma  # heavyweight import, only needed here

        for e, crow in counts.items():
            trow = theta[e]
            denom = digamma(sum(crow.values()) + alpha * len(crow))
            for f, c in crow.items():
                trow[f] = math.exp(digamma(c + alpha) - denom)
        return
    for e, crow in counts.items():
        total = sum(crow.values())
        if total <= 0.0:
            continue  # e.g. the NULL row with p0 = 0: keep previous probabilities
        inv = 1.0 / total
        trow = theta[e]
        for f, c in crow.items():
            trow[f] = c * inv


def viterbi_align(model: AlignModel, pair: SentencePair) -> AlignmentVector:
    """Best link per emitted position, decoded independently.

    Each emitted position takes the argmax of prior times lexical
    probability over NULL and all conditioning positions, with theta = 0
    for unseen pairs. Exact ties prefer a real position over NULL and the
    smaller position index; a word scoring zero everywhere stays NULL.
    """
    cond, emit = _sides(pair, model.direction)
    if not cond or not emit:
        raise EmptyPair(f"pair at line {pair.line_no} has an empty side")
    n = len(cond)
    rows = _prior_for(model.tension, model.p0).rows(len(emit), n)
    links: list[int | None] = []
    for j, f in enumerate(emit):
        prow = rows[j]
        null_score = model.p0 * model.prob(NULL_WORD, f)
        best_i = 0
        best = -1.0
        for i in range(n):
            s = prow[i] * model.prob(cond[i], f)
            if s > best:
                best, best_i = s, i
        links.append(best_i if best > 0.0 and best >= null_score else None)
    return AlignmentVector(links, n)


def align_corpus(model: AlignModel, corpus: ParallelCorpus) -> list[AlignmentVector]:
    return [viterbi_align(model, pair) for pair in corpus.pairs]


def vector_links(vec: AlignmentVector, direction: str) -> set[tuple[int, int]]:
    """Convert a decode vector to (src index, tgt index) link pairs."""
    if direction == FORWARD:
        return {(i, j) for j, i in enumerate(vec.links) if i is not None}
    return {(j, i) for j, i in enumerate(vec.links) if i is not None}


def symmetrize(
    fwd: AlignmentVector,
    rev: AlignmentVector,
    heuristic: str = "grow-diag-final-and",
) -> set[tuple[int, int]]:
    """Combine forward (src->tgt) and reverse (tgt->src) decodes of the same
    sentence pair into one (src, tgt) link set."""
    if len(fwd.links) != rev.n_conditioning or len(rev.links) != fwd.n_conditioning:
        raise LengthMismatch(
            f"forward decode covers {fwd.n_conditioning}x{len(fwd.links)} tokens, "
            f"reverse covers {len(rev.links)}x{rev.n_conditioning}"
        )
    return symmetrize_links(vector_links(fwd, FORWARD), vector_links(rev, REVERSE), heuristic)


def symmetrize_links(
    fwd_links: set[tuple[int, int]],
    rev_links: set[tuple[int, int]],
    heuristic: str = "grow-diag-final-and",
) -> set[tuple[int, int]]:
    """Same as :func:`symmetrize` but on (src, tgt) link sets directly."""
    if heuristic == "intersection":
        return fwd_links & rev_links
    if heuristic == "union":
        return fwd_links | rev_links
    if heuristic == "grow-diag-final-and":
        return _grow_diag_final_and(fwd_links, rev_links)
    raise InvalidParams(f"unknown symmetrization heuristic {heuristic!r}")


_NEIGHBORS = ((-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1))


def _grow_diag_final_and(fwd_links, rev_links):
    union = fwd_links | rev_links
    alignment = set(fwd_links & rev_links)
    src_aligned = {i for i, _ in alignment}
    tgt_aligned = {j for _, j in alignment}
    # grow: repeatedly adopt union links 8-adjacent to the current alignment
    # while either end is still uncovered; sweeps run in sorted order so the
    # result is deterministic
    added = True
    while added:
        added = False
        for i, j in sorted(alignment):
            for di, dj in _NEIGHBORS:
                cand = (i + di, j + dj)
                if (
                    cand in union
                    and cand not in alignment
                    and (cand[0] not in src_aligned or cand[1] not in tgt_aligned)
                ):
                    alignment.add(cand)
                    src_aligned.add(cand[0])
                    tgt_aligned.add(cand[1])
                    added = True
    # final-and: adopt remaining union links with both ends uncovered
    for cand in sorted(union - alignment):
        if cand[0] not in src_aligned and cand[1] not in tgt_aligned:
            alignment.add(cand)
            src_aligned.add(cand[0])
            tgt_aligned.add(cand[1])
    return alignment


def corpus_perplexity(model: AlignModel, corpus: ParallelCorpus) -> float:
    """exp of the per-emitted-token negative log-likelihood (natural log)."""
    if not corpus.pairs:
        raise EmptyCorpus("no pairs to score")
    prior = _prior_for(model.tension, model.p0)
    loglik = 0.0
    total = 0
    for pair in corpus.pairs:
        cond, emit = _sides(pair, model.direction)
        n = len(cond)
        rows = prior.rows(len(emit), n)
        for j, f in enumerate(emit):
            prow = rows[j]
            z = model.p0 * model.prob(NULL_WORD, f)
            for i in range(n):
                z += prow[i] * model.prob(cond[i], f)
            if z <= 0.0:
                raise ZeroProbability(
                    f"line {pair.line_no}: emitted token {j} ({f!r}) has probability 0"
                )
            loglik += math.log(z)
        total += len(emit)
    return math.exp(-loglik / total)


def write_pharaoh(link_sets, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for links in link_sets:
            f.write(" ".join(f"{i}-{j}" for i, j in sorted(links)) + "\n")


def read_pharaoh(path) -> list[set[tuple[int, int]]]:
    sets = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            links = set()
            for part in line.split():
                i, _, j = part.partition("-")
                links.add((int(i), int(j)))
            sets.append(links)
    return sets


def save_model(model: AlignModel, path) -> None:
    """Text dump of the model; floats are written with repr so that loading
    restores bit-identical values."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"direction\t{model.direction}\n")
        f.write(f"tension\t{model.tension!r}\n")
        f.write(f"p0\t{model.p0!r}\n")
        for e in sorted(model.theta):
            row = model.theta[e]
            for t in sorted(row):
                f.write(f"{e}\t{t}\t{row[t]!r}\n")


def load_model(path) -> AlignModel:
    header: dict[str, str] = {}
    theta: dict[str, dict[str, float]] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            parts = line.rstrip("\n").split("\t")
            if len(parts) == 2:
                header[parts[0]] = parts[1]
            elif len(parts) == 3:
                e, t, p = parts
                theta.setdefault(e, {})[t] = float(p)
    return AlignModel(
        theta,
        float(header["tension"]),
        float(header["p0"]),
        header.get("direction", FORWARD),
    )
