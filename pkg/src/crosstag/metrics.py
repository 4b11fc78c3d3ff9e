"""Scoring, model combination, significance testing, and corpus analysis."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .alignments import BilingualAlignment
from .corpus import PUNCT_TAG, TaggedCorpus
from .errors import ConfigError, DataError


def accuracy(
    predicted: Sequence[Sequence[str]],
    gold: Sequence[Sequence[str]],
) -> float:
    """Token accuracy with punctuation excluded from both sides."""
    if len(predicted) != len(gold):
        raise DataError("accuracy: sentence counts differ")
    correct = total = 0
    for pred_sent, gold_sent in zip(predicted, gold):
        if len(pred_sent) != len(gold_sent):
            raise DataError("accuracy: sentence lengths differ")
        for p, g in zip(pred_sent, gold_sent):
            if g == PUNCT_TAG:
                continue
            total += 1
            correct += int(p == g)
    if total == 0:
        raise DataError("accuracy: no non-punctuation tokens to score")
    return correct / total


def vote(
    predictions: Sequence[Sequence[Sequence[str]]],
    tag_order: Sequence[str],
) -> list[list[str]]:
    """Plurality vote across partner models, token by token.

    Ties break to the tag earliest in ``tag_order`` among the tied.
    """
    if not predictions:
        raise ConfigError("vote: no predictions given")
    order = {t: i for i, t in enumerate(tag_order)}
    first = predictions[0]
    for other in predictions[1:]:
        if len(other) != len(first) or any(
            len(a) != len(b) for a, b in zip(other, first)
        ):
            raise DataError("vote: predictions are not length-matched")
    result = []
    for s in range(len(first)):
        sent = []
        for i in range(len(first[s])):
            votes = Counter(pred[s][i] for pred in predictions)
            top = max(votes.values())
            winner = min(
                (t for t, c in votes.items() if c == top), key=order.__getitem__
            )
            sent.append(winner)
        result.append(sent)
    return result


def best_pair_oracle(per_partner_accuracy: Mapping[str, float]) -> tuple[str, float]:
    """The partner with the highest accuracy (ties: first by id)."""
    if not per_partner_accuracy:
        raise ConfigError("best_pair_oracle: no evaluated pairs")
    best = max(sorted(per_partner_accuracy), key=per_partner_accuracy.__getitem__)
    return best, per_partner_accuracy[best]


def sign_test(
    pred_a: Sequence[Sequence[str]],
    pred_b: Sequence[Sequence[str]],
    gold: Sequence[Sequence[str]],
) -> float:
    """Two-sided exact sign test over tokens where exactly one system is
    correct; punctuation tokens are excluded.  Returns 1.0 when the
    systems never disagree in correctness."""
    a_wins = b_wins = 0
    for s in range(len(gold)):
        for i in range(len(gold[s])):
            g = gold[s][i]
            if g == PUNCT_TAG:
                continue
            a_ok = pred_a[s][i] == g
            b_ok = pred_b[s][i] == g
            if a_ok and not b_ok:
                a_wins += 1
            elif b_ok and not a_ok:
                b_wins += 1
    n = a_wins + b_wins
    if n == 0:
        return 1.0
    k = max(a_wins, b_wins)
    tail = sum(math.comb(n, m) for m in range(k, n + 1))
    return min(1.0, 2.0 * tail / 2.0**n)


def cross_lingual_entropy(
    corpus: TaggedCorpus,
    alignments: Sequence[BilingualAlignment],
    target: str,
    partner: str,
) -> float:
    """H(target tag | aligned partner tag) in bits, from gold tags on
    aligned token pairs."""
    joint: Counter[tuple[str, str]] = Counter()
    for alignment in alignments:
        sent_t = corpus.sentences[target][alignment.sentence_index]
        sent_p = corpus.sentences[partner][alignment.sentence_index]
        for i, j in alignment.edges:
            gt = sent_t[i].gold_tag
            gp = sent_p[j].gold_tag
            if gt is None or gp is None:
                raise DataError("cross_lingual_entropy: gold tags required")
            joint[(gp, gt)] += 1
    total = sum(joint.values())
    if total == 0:
        raise DataError("cross_lingual_entropy: no aligned pairs")
    partner_totals: Counter[str] = Counter()
    for (gp, _), c in joint.items():
        partner_totals[gp] += c
    h = 0.0
    for (gp, _), c in joint.items():
        p_joint = c / total
        p_cond = c / partner_totals[gp]
        h -= p_joint * math.log2(p_cond)
    return h


def average_ranks(scores: Sequence[float], higher_is_better: bool = True) -> list[float]:
    """Rank positions (1 = best); tied scores share the average rank."""
    order = sorted(
        range(len(scores)),
        key=lambda i: (-scores[i] if higher_is_better else scores[i]),
    )
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        shared = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def pearson_rank_correlation(
    ranking_a: Sequence[float], ranking_b: Sequence[float]
) -> float:
    """Pearson's coefficient applied to two rank vectors (equivalent to
    Spearman's rho when there are no ties)."""
    n = len(ranking_a)
    if n != len(ranking_b):
        raise ConfigError("rank vectors must have equal length")
    if n < 2:
        raise ConfigError("need at least two items to correlate")
    mean_a = sum(ranking_a) / n
    mean_b = sum(ranking_b) / n
    da = [a - mean_a for a in ranking_a]
    db = [b - mean_b for b in ranking_b]
    var_a = sum(d * d for d in da)
    var_b = sum(d * d for d in db)
    if var_a == 0.0 or var_b == 0.0:
        raise ConfigError("rank vector has zero variance")
    cov = sum(x * y for x, y in zip(da, db))
    return cov / math.sqrt(var_a * var_b)


def trigram_entropy(corpus: TaggedCorpus, lang_id: str) -> float:
    """Conditional entropy H(t3 | t1, t2) of interior gold tag trigrams,
    in bits (no boundary padding, so a deterministic cycle scores 0)."""
    trigrams: Counter[tuple[str, str, str]] = Counter()
    for sent in corpus.sentences[lang_id]:
        tags = [tok.gold_tag for tok in sent]
        if any(t is None for t in tags):
            raise DataError(f"trigram_entropy: {lang_id} lacks gold tags")
        for k in range(len(tags) - 2):
            trigrams[(tags[k], tags[k + 1], tags[k + 2])] += 1
    total = sum(trigrams.values())
    if total == 0:
        raise DataError("trigram_entropy: corpus has no trigrams")
    ctx_totals: Counter[tuple[str, str]] = Counter()
    for (t1, t2, _), c in trigrams.items():
        ctx_totals[(t1, t2)] += c
    h = 0.0
    for (t1, t2, _), c in trigrams.items():
        h -= (c / total) * math.log2(c / ctx_totals[(t1, t2)])
    return h


# ---------------------------------------------------------------------------
# Run records


METRICS_HEADER = (
    "#model\tlanguages\tlexicon\tseed\tepochs\tlang\taccuracy\t"
    "runtime_s\tactive_values"
)


@dataclass
class MetricsRecord:
    """One flat row per (run, language)."""

    model: str
    languages: tuple[str, ...]
    lexicon_mode: str
    seed: int
    epochs: int
    lang: str
    accuracy: float
    runtime_seconds: float
    active_values: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise DataError(f"accuracy out of range: {self.accuracy}")
        if self.runtime_seconds < 0:
            raise DataError("negative runtime")

    def to_row(self) -> str:
        active = "" if self.active_values is None else str(self.active_values)
        return (
            f"{self.model}\t{','.join(self.languages)}\t{self.lexicon_mode}\t"
            f"{self.seed}\t{self.epochs}\t{self.lang}\t{self.accuracy!r}\t"
            f"{self.runtime_seconds!r}\t{active}"
        )

    @classmethod
    def from_row(cls, row: str) -> "MetricsRecord":
        fields = row.split("\t")
        if len(fields) != 9:
            raise DataError(f"bad metrics row: {row!r}")
        return cls(
            model=fields[0],
            languages=tuple(fields[1].split(",")),
            lexicon_mode=fields[2],
            seed=int(fields[3]),
            epochs=int(fields[4]),
            lang=fields[5],
            accuracy=float(fields[6]),
            runtime_seconds=float(fields[7]),
            active_values=int(fields[8]) if fields[8] else None,
        )


def write_metrics(records: Sequence[MetricsRecord], path: str | Path) -> None:
    lines = [METRICS_HEADER] + [r.to_row() for r in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_metrics(path: str | Path) -> list[MetricsRecord]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read metrics file {path}: {exc}") from exc
    records = []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        records.append(MetricsRecord.from_row(line))
    return records


def summarize(records: Sequence[MetricsRecord]) -> str:
    """Aggregate rows into a per-model accuracy table (seeds averaged).

    Rows are (model, lexicon); columns are the average over languages
    followed by each language.
    """
    langs = sorted({r.lang for r in records})
    groups: dict[tuple[str, str], dict[str, list[float]]] = {}
    for r in records:
        per_lang = groups.setdefault((r.model, r.lexicon_mode), {})
        per_lang.setdefault(r.lang, []).append(r.accuracy)
    header = ["model", "lexicon", "avg"] + langs
    lines = ["\t".join(header)]
    for (model, lexicon), per_lang in sorted(groups.items()):
        means = {
            lang: sum(vals) / len(vals) for lang, vals in per_lang.items()
        }
        avg = sum(means.values()) / len(means)
        cells = [model, lexicon, f"{100 * avg:.1f}"]
        for lang in langs:
            cells.append(f"{100 * means[lang]:.1f}" if lang in means else "-")
        lines.append("\t".join(cells))
    return "\n".join(lines)
