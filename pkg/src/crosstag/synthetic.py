"""Synthetic parallel corpora from a known coupled HMM.

The generator mirrors the bilingual generative story: per-language
trigram transitions and emissions, plus a coupling table over aligned
tag pairs.  Emission supports are built so that each word is ambiguous
between two tags in a way the partner language can resolve, which is
the regime where multilingual training should beat the monolingual
baseline.  Used by the acceptance suite and the kernel benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignments import BilingualAlignment
from .corpus import PUNCT_TAG, Language, TaggedCorpus, Token, split_train_test


@dataclass
class CoupledSpec:
    """Knobs for the generator; defaults match the acceptance scenario:
    500 sentences, 5 tags (4 content + punctuation), 50 word types per
    language, roughly half the tokens aligned."""

    n_sentences: int = 500
    n_content_tags: int = 4
    n_word_types: int = 50
    min_len: int = 6
    max_len: int = 12
    align_prob: float = 0.5
    coupling_strength: float = 8.0
    self_transition: float = 0.15
    seed: int = 12345


def _row_normalize(mat: np.ndarray) -> np.ndarray:
    return mat / mat.sum(axis=-1, keepdims=True)


def _transition_tables(n_tags: int, rng: np.random.Generator, self_loop: float) -> np.ndarray:
    """Structured bigram transitions: each tag has a preferred successor
    and a weaker second choice, leaving real but incomplete context
    signal for disambiguation."""
    mat = np.full((n_tags, n_tags), 0.25)
    order = rng.permutation(n_tags)
    for k, t in enumerate(order):
        mat[t, order[(k + 1) % n_tags]] += 1.4
        mat[t, order[(k + 2) % n_tags]] += 0.5
        mat[t, t] = self_loop
    return _row_normalize(mat)


def _emission_tables(
    n_tags: int, n_words: int, rng: np.random.Generator, pair_layout: list[tuple[int, int]]
) -> np.ndarray:
    """Zipf-weighted vocabulary: one type in five is an unambiguous
    anchor (pinning tag identities, as real tag dictionaries do), the
    rest are shared by one tag pair from ``pair_layout`` -- the
    ambiguity a coupled partner language can resolve."""
    mat = np.zeros((n_tags, n_words))
    ranks = 1.0 / np.arange(1, n_words + 1)
    for w in range(n_words):
        if w % 3 == 0:
            mat[(w // 3) % n_tags, w] = ranks[w]
        else:
            t1, t2 = pair_layout[w % len(pair_layout)]
            share = rng.uniform(0.35, 0.65)
            mat[t1, w] = ranks[w] * share
            mat[t2, w] = ranks[w] * (1.0 - share)
    return _row_normalize(mat)


def generate_coupled_corpus(
    spec: CoupledSpec | None = None,
) -> tuple[TaggedCorpus, dict[int, BilingualAlignment]]:
    """A two-language parallel corpus with gold tags and its alignments.

    Language "aa" confuses tag pairs (0,1) and (2,3); language "bb"
    confuses (0,2) and (1,3).  The coupling concentrates on the tag
    diagonal, so an aligned partner word usually disambiguates.
    """
    spec = spec or CoupledSpec()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_content_tags
    tags = [f"T{k}" for k in range(n)]
    tagset = tuple(sorted(tags + [PUNCT_TAG]))

    trans_a = _transition_tables(n, rng, spec.self_transition)
    trans_b = _transition_tables(n, rng, spec.self_transition)
    pairs_a = [(0, 1), (2, 3)] if n >= 4 else [(0, 1)]
    pairs_b = [(0, 2), (1, 3)] if n >= 4 else [(0, 1)]
    emit_a = _emission_tables(n, spec.n_word_types, rng, pairs_a)
    emit_b = _emission_tables(n, spec.n_word_types, rng, pairs_b)
    coupling = np.ones((n, n)) + spec.coupling_strength * np.eye(n)
    coupling /= coupling.sum()

    init = np.full(n, 1.0 / n)
    sentences_a = []
    sentences_b = []
    alignments: dict[int, BilingualAlignment] = {}
    for s in range(spec.n_sentences):
        length = int(rng.integers(spec.min_len, spec.max_len + 1))
        aligned = rng.random(length) < spec.align_prob
        tags_a = np.zeros(length, dtype=int)
        tags_b = np.zeros(length, dtype=int)
        prev_a = prev_b = -1
        for i in range(length):
            pa = init if prev_a < 0 else trans_a[prev_a]
            pb = init if prev_b < 0 else trans_b[prev_b]
            if aligned[i]:
                joint = np.multiply.outer(pa, pb) * coupling
                joint /= joint.sum()
                flat = rng.choice(n * n, p=joint.ravel())
                tags_a[i], tags_b[i] = divmod(flat, n)
            else:
                tags_a[i] = rng.choice(n, p=pa)
                tags_b[i] = rng.choice(n, p=pb)
            prev_a, prev_b = tags_a[i], tags_b[i]
        words_a = [rng.choice(spec.n_word_types, p=emit_a[t]) for t in tags_a]
        words_b = [rng.choice(spec.n_word_types, p=emit_b[t]) for t in tags_b]
        sent_a = [
            Token(f"a{w:03d}", tags[t]) for w, t in zip(words_a, tags_a)
        ] + [Token(".", PUNCT_TAG, is_punct=True)]
        sent_b = [
            Token(f"b{w:03d}", tags[t]) for w, t in zip(words_b, tags_b)
        ] + [Token(".", PUNCT_TAG, is_punct=True)]
        sentences_a.append(tuple(sent_a))
        sentences_b.append(tuple(sent_b))
        edges = frozenset(
            {(int(i), int(i)) for i in np.flatnonzero(aligned)} | {(length, length)}
        )
        alignments[s] = BilingualAlignment(s, edges)

    corpus = TaggedCorpus(
        languages=(Language("aa", tagset), Language("bb", tagset)),
        sentences={"aa": tuple(sentences_a), "bb": tuple(sentences_b)},
    )
    return split_train_test(corpus, 0.75), alignments


def main(argv: list[str] | None = None) -> int:
    """Write a generated corpus and its alignment file to a directory."""
    import argparse
    from pathlib import Path

    from .alignments import write_alignment_file
    from .corpus import save_corpus

    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--sentences", type=int, default=500)
    parser.add_argument("--seed", type=int, default=12345)
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus, alignments = generate_coupled_corpus(
        CoupledSpec(n_sentences=args.sentences, seed=args.seed)
    )
    save_corpus(corpus, {"aa": out / "aa.corpus", "bb": out / "bb.corpus"})
    write_alignment_file(alignments, out / "aa-bb.align")
    print(f"wrote {corpus.n_sentences} sentences to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
