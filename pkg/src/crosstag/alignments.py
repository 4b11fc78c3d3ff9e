"""Word-alignment processing for both multilingual models.

Two structures are produced from directional aligner output:

* one-to-one, crossing-free bilingual alignments (the merged-node model
  needs an acyclic graph), and
* densely connected multilingual alignment sets, each the site of one
  superlingual tag in the latent-variable model.

File formats: directional/bilingual alignments use one line per
sentence, ``sentIdx i-j i-j ...`` with 0-based token indices; alignment
sets use ``sentIdx<TAB>lang:pos,lang:pos,...`` with one set per line.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import TaggedCorpus
from .errors import DataError

Edge = tuple[int, int]
Member = tuple[str, int]  # (language id, token position)

DENSITY_THRESHOLD = 2.0 / 3.0


@dataclass(frozen=True)
class BilingualAlignment:
    """One-to-one alignment edges for a single sentence pair."""

    sentence_index: int
    edges: frozenset[Edge]

    def __post_init__(self):
        left = [i for i, _ in self.edges]
        right = [j for _, j in self.edges]
        if len(set(left)) != len(left) or len(set(right)) != len(right):
            raise DataError(
                f"sentence {self.sentence_index}: alignment is not one-to-one"
            )

    def is_monotone(self) -> bool:
        for (i, j), (i2, j2) in combinations(self.edges, 2):
            if (i - i2) * (j - j2) <= 0:
                return False
        return True


@dataclass(frozen=True)
class AlignmentSet:
    """A densely connected token cluster spanning at least two languages."""

    sentence_index: int
    members: frozenset[Member]
    source_edges: frozenset[tuple[Member, Member]]

    def __post_init__(self):
        if len(self.members) < 2:
            raise DataError("alignment set must have at least 2 members")
        if len({lang for lang, _ in self.members}) < 2:
            raise DataError("alignment set must span at least 2 languages")

    def density(self) -> float:
        possible = len(self.members) * (len(self.members) - 1) // 2
        return len(self.source_edges) / possible


def intersect_directional(
    fwd: Iterable[Edge],
    rev: Iterable[Edge],
    sentence_index: int = 0,
    len_a: int | None = None,
    len_b: int | None = None,
) -> BilingualAlignment:
    """Intersect two directional one-to-many alignments into a one-to-one set.

    Both inputs must already be oriented as (index in language A, index
    in language B); reverse-direction aligner output is flipped by the
    file reader, not here.
    """
    edges = frozenset(fwd) & frozenset(rev)
    for i, j in edges:
        if i < 0 or j < 0:
            raise DataError(f"sentence {sentence_index}: negative token index")
        if len_a is not None and i >= len_a:
            raise DataError(
                f"sentence {sentence_index}: index {i} out of range for length {len_a}"
            )
        if len_b is not None and j >= len_b:
            raise DataError(
                f"sentence {sentence_index}: index {j} out of range for length {len_b}"
            )
    return BilingualAlignment(sentence_index, edges)


def remove_crossing_edges(alignment: BilingualAlignment) -> BilingualAlignment:
    """Drop crossing edges left to right; the result is strictly monotone.

    Edges are visited sorted by (i, j); an edge is kept iff it neither
    crosses nor shares a coordinate with any previously kept edge.
    """
    kept: list[Edge] = []
    for i, j in sorted(alignment.edges):
        if all((i - i2) * (j - j2) > 0 for i2, j2 in kept):
            kept.append((i, j))
    return BilingualAlignment(alignment.sentence_index, frozenset(kept))


def _dense_set_from_seed(
    seed: Member,
    neighbours: Mapping[Member, set[Member]],
) -> frozenset[Member]:
    """Shrink the seed's neighbourhood until it is densely connected.

    While density < 2/3, the member with the fewest links into the rest
    of the candidate is removed (ties by (language, position) ascending;
    the seed itself is never removed).
    """
    members = {seed} | neighbours[seed]
    while True:
        pairs = len(members) * (len(members) - 1) // 2
        links = sum(
            1 for a, b in combinations(sorted(members), 2) if b in neighbours[a]
        )
        if links >= DENSITY_THRESHOLD * pairs:
            return frozenset(members)
        degree = {
            m: sum(1 for other in members if other != m and other in neighbours[m])
            for m in members
        }
        weakest = min(
            (m for m in members if m != seed),
            key=lambda m: (degree[m], m),
        )
        members.remove(weakest)


def build_alignment_sets(
    pairwise: Mapping[tuple[str, str], Iterable[Edge]],
    sentence_index: int = 0,
) -> list[AlignmentSet]:
    """Aggregate pairwise alignments of one sentence into dense clusters.

    For every aligned token, the token plus everything aligned to it is
    tested for 2/3 pairwise density and shrunk if necessary.  Duplicate
    clusters are merged, and a 2-member cluster contained in a larger
    retained cluster is pruned as redundant (its single edge is already
    represented there); larger nested clusters are kept as distinct,
    more tightly connected contexts.
    """
    neighbours: dict[Member, set[Member]] = {}
    edge_set: set[tuple[Member, Member]] = set()
    for (lang_a, lang_b), edges in sorted(pairwise.items()):
        for i, j in edges:
            a, b = (lang_a, i), (lang_b, j)
            neighbours.setdefault(a, set()).add(b)
            neighbours.setdefault(b, set()).add(a)
            edge_set.add((min(a, b), max(a, b)))

    candidates: dict[frozenset[Member], None] = {}
    for seed in sorted(neighbours):
        members = _dense_set_from_seed(seed, neighbours)
        candidates.setdefault(members, None)

    retained = [
        members
        for members in candidates
        if not (
            len(members) == 2
            and any(members < other for other in candidates)
        )
    ]
    retained.sort(key=sorted)
    return [
        AlignmentSet(
            sentence_index,
            members,
            frozenset(
                (a, b)
                for a, b in edge_set
                if a in members and b in members
            ),
        )
        for members in retained
    ]


def alignment_density(
    corpus: TaggedCorpus,
    alignments: Sequence[BilingualAlignment],
    lang_a: str,
    lang_b: str,
) -> dict[str, float]:
    """Fraction of each language's tokens participating in the alignments."""
    aligned_a = sum(len({i for i, _ in a.edges}) for a in alignments)
    aligned_b = sum(len({j for _, j in a.edges}) for a in alignments)
    total_a = corpus.token_count(lang_a)
    total_b = corpus.token_count(lang_b)
    return {
        lang_a: aligned_a / total_a if total_a else 0.0,
        lang_b: aligned_b / total_b if total_b else 0.0,
    }


@dataclass(frozen=True)
class CoverageStats:
    n_sets: int
    covered_tokens: int
    total_tokens: int
    sets_per_token: dict[int, int]  # bucket (1, 2, 3 == "3 or more") -> tokens
    languages_per_set: dict[int, int]  # bucket (2, 3, 4 == "4 or more") -> sets

    @property
    def coverage(self) -> float:
        return self.covered_tokens / self.total_tokens if self.total_tokens else 0.0


def coverage_stats(
    sets_by_sentence: Mapping[int, Sequence[AlignmentSet]],
    corpus: TaggedCorpus,
) -> CoverageStats:
    """Token-coverage and set-shape summary over all alignment sets."""
    n_sets = 0
    per_token: dict[tuple[int, Member], int] = {}
    lang_buckets = {2: 0, 3: 0, 4: 0}
    for sent_idx, sets in sets_by_sentence.items():
        for aset in sets:
            n_sets += 1
            n_langs = len({lang for lang, _ in aset.members})
            lang_buckets[min(n_langs, 4)] += 1
            for member in aset.members:
                key = (sent_idx, member)
                per_token[key] = per_token.get(key, 0) + 1
    token_buckets = {1: 0, 2: 0, 3: 0}
    for count in per_token.values():
        token_buckets[min(count, 3)] += 1
    total = sum(corpus.token_count(lang.id) for lang in corpus.languages)
    return CoverageStats(n_sets, len(per_token), total, token_buckets, lang_buckets)


# ---------------------------------------------------------------------------
# File I/O


def read_alignment_file(
    path: str | Path, flip: bool = False
) -> dict[int, frozenset[Edge]]:
    """Read ``sentIdx i-j ...`` lines; ``flip`` swaps each pair (for the
    reverse-direction aligner run)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read alignment file {path}: {exc}") from exc
    result: dict[int, frozenset[Edge]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        try:
            sent_idx = int(fields[0])
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad sentence index {fields[0]!r}") from None
        edges = []
        for item in fields[1:]:
            parts = item.split("-")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: malformed edge {item!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed edge {item!r}") from None
            edges.append((j, i) if flip else (i, j))
        if sent_idx in result:
            raise DataError(f"{path}:{lineno}: duplicate sentence index {sent_idx}")
        result[sent_idx] = frozenset(edges)
    return result


def write_alignment_file(
    alignments: Mapping[int, BilingualAlignment], path: str | Path
) -> None:
    lines = []
    for sent_idx in sorted(alignments):
        edges = " ".join(f"{i}-{j}" for i, j in sorted(alignments[sent_idx].edges))
        lines.append(f"{sent_idx} {edges}".rstrip())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_bilingual_file(path: str | Path) -> dict[int, BilingualAlignment]:
    return {
        idx: BilingualAlignment(idx, edges)
        for idx, edges in read_alignment_file(path).items()
    }


def write_alignment_sets(
    sets_by_sentence: Mapping[int, Sequence[AlignmentSet]], path: str | Path
) -> None:
    lines = []
    for sent_idx in sorted(sets_by_sentence):
        for aset in sets_by_sentence[sent_idx]:
            members = ",".join(f"{lang}:{pos}" for lang, pos in sorted(aset.members))
            lines.append(f"{sent_idx}\t{members}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_alignment_sets(path: str | Path) -> dict[int, list[AlignmentSet]]:
    """Read sets back from disk.

    The file format stores members only; the pairwise links that
    justified each set at construction time are not persisted, so
    reloaded sets carry the full member clique as ``source_edges``.
    Training uses members alone, density recounts apply to freshly
    built sets.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read alignment-set file {path}: {exc}") from exc
    result: dict[int, list[AlignmentSet]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise DataError(f"{path}:{lineno}: expected 'sentIdx<TAB>members'")
        try:
            sent_idx = int(fields[0])
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad sentence index") from None
        members = []
        for item in fields[1].split(","):
            lang, _, pos = item.partition(":")
            if not lang or not pos:
                raise DataError(f"{path}:{lineno}: malformed member {item!r}")
            try:
                members.append((lang, int(pos)))
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed member {item!r}") from None
        mset = frozenset(members)
        aset = AlignmentSet(
            sent_idx,
            mset,
            frozenset((a, b) for a, b in combinations(sorted(mset), 2)),
        )
        result.setdefault(sent_idx, []).append(aset)
    return result
