"""Sentence-aligned multilingual corpora and per-word tag dictionaries.

File formats
------------
Corpus (per language, UTF-8): one token per line as ``surface<TAB>tag``
where the tag column is ``_`` when no gold tag is available; a blank
line separates sentences.  Loading then saving a file reproduces it
byte for byte.

Lexicon (per language): one line per word type, ``surface<TAB>t1,t2,...``.

The reserved tag ``PUNCT`` marks punctuation tokens.  Every tagset
contains it exactly once, and punctuation word types are never allowed
any other tag.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, DataError

PUNCT_TAG = "PUNCT"
ABSENT = "_"

MAX_TAGSET = 64


@dataclass(frozen=True)
class Language:
    """A language id plus its ordered tag inventory (PUNCT included)."""

    id: str
    tagset: tuple[str, ...]

    def __post_init__(self):
        if not self.tagset:
            raise DataError(f"language {self.id!r}: empty tagset")
        if len(set(self.tagset)) != len(self.tagset):
            raise DataError(f"language {self.id!r}: duplicate tags in tagset")
        if self.tagset.count(PUNCT_TAG) != 1:
            raise DataError(
                f"language {self.id!r}: tagset must contain {PUNCT_TAG} exactly once"
            )
        if len(self.tagset) > MAX_TAGSET:
            raise DataError(
                f"language {self.id!r}: tagset size {len(self.tagset)} exceeds {MAX_TAGSET}"
            )

    @property
    def content_tags(self) -> tuple[str, ...]:
        """Tags other than the punctuation tag, in tagset order."""
        return tuple(t for t in self.tagset if t != PUNCT_TAG)


@dataclass(frozen=True)
class Token:
    surface: str
    gold_tag: str | None
    is_punct: bool = False

    def __post_init__(self):
        if self.is_punct and self.gold_tag != PUNCT_TAG:
            raise DataError(
                f"token {self.surface!r}: punctuation must carry the {PUNCT_TAG} tag"
            )


Sentence = tuple[Token, ...]


@dataclass(frozen=True)
class TaggedCorpus:
    """Parallel sentences for one or more languages, aligned by index.

    ``train_ids``/``test_ids`` partition (a subset of) the sentence
    indices; sentences in neither set are ignored by training and
    evaluation but keep their index, so external alignment files stay
    valid after operations such as :func:`halve_training_data`.
    """

    languages: tuple[Language, ...]
    sentences: Mapping[str, tuple[Sentence, ...]]
    train_ids: tuple[int, ...] = ()
    test_ids: tuple[int, ...] = ()

    def __post_init__(self):
        counts = {lang.id: len(self.sentences[lang.id]) for lang in self.languages}
        if len(set(counts.values())) > 1:
            raise DataError(f"sentence counts differ across languages: {counts}")
        for lang in self.languages:
            valid = set(lang.tagset)
            for s, sent in enumerate(self.sentences[lang.id]):
                if not sent:
                    raise DataError(f"{lang.id}: sentence {s} is empty")
                for tok in sent:
                    if tok.gold_tag is not None and tok.gold_tag not in valid:
                        raise DataError(
                            f"{lang.id}: sentence {s}: unknown tag {tok.gold_tag!r} "
                            f"for word {tok.surface!r}"
                        )

    @property
    def n_sentences(self) -> int:
        return len(self.sentences[self.languages[0].id])

    def language(self, lang_id: str) -> Language:
        for lang in self.languages:
            if lang.id == lang_id:
                return lang
        raise ConfigError(f"no such language: {lang_id!r}")

    def token_count(self, lang_id: str) -> int:
        return sum(len(s) for s in self.sentences[lang_id])

    def has_gold(self, lang_id: str) -> bool:
        return all(
            tok.gold_tag is not None
            for sent in self.sentences[lang_id]
            for tok in sent
        )

    def restricted_to(self, lang_ids: Sequence[str]) -> "TaggedCorpus":
        """A view keeping only the named languages (same sentences/split)."""
        langs = tuple(self.language(l) for l in lang_ids)
        sents = {l: self.sentences[l] for l in lang_ids}
        return TaggedCorpus(langs, sents, self.train_ids, self.test_ids)


def _parse_language_file(path: Path) -> list[list[tuple[str, str | None]]]:
    sentences: list[list[tuple[str, str | None]]] = []
    current: list[tuple[str, str | None]] = []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line == "":
            if current:
                sentences.append(current)
                current = []
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise DataError(f"{path}:{lineno}: expected 'surface<TAB>tag', got {line!r}")
        surface, tag = fields
        if not surface:
            raise DataError(f"{path}:{lineno}: empty surface form")
        current.append((surface, None if tag == ABSENT else tag))
    if current:
        sentences.append(current)
    if not sentences:
        raise DataError(f"{path}: no sentences")
    return sentences


def load_corpus(
    paths: Mapping[str, str | Path],
    tagsets: Mapping[str, Sequence[str]] | None = None,
) -> TaggedCorpus:
    """Load one vertical-format file per language into a TaggedCorpus.

    When ``tagsets`` is omitted, each language's tagset is derived from
    the gold tags present in its file (plus PUNCT).  Punctuation tokens
    are recognized by carrying the PUNCT tag.
    """
    if not paths:
        raise ConfigError("load_corpus: no input files")
    raw = {lang: _parse_language_file(Path(p)) for lang, p in sorted(paths.items())}
    counts = {lang: len(sents) for lang, sents in raw.items()}
    if len(set(counts.values())) > 1:
        raise DataError(f"sentence counts differ across languages: {counts}")

    languages = []
    sentences: dict[str, tuple[Sentence, ...]] = {}
    for lang_id, sents in raw.items():
        if tagsets is not None and lang_id in tagsets:
            tagset = tuple(tagsets[lang_id])
            if PUNCT_TAG not in tagset:
                tagset = tagset + (PUNCT_TAG,)
        else:
            seen = sorted({t for sent in sents for _, t in sent if t is not None})
            tagset = tuple(sorted(set(seen) | {PUNCT_TAG}))
        language = Language(lang_id, tagset)
        languages.append(language)
        sentences[lang_id] = tuple(
            tuple(
                Token(surface, tag, is_punct=(tag == PUNCT_TAG))
                for surface, tag in sent
            )
            for sent in sents
        )
    return TaggedCorpus(tuple(languages), sentences)


def save_corpus(corpus: TaggedCorpus, paths: Mapping[str, str | Path]) -> None:
    """Write each language back to vertical format (round-trips loads)."""
    for lang in corpus.languages:
        path = Path(paths[lang.id])
        lines = []
        for sent in corpus.sentences[lang.id]:
            for tok in sent:
                tag = tok.gold_tag if tok.gold_tag is not None else ABSENT
                lines.append(f"{tok.surface}\t{tag}")
            lines.append("")
        path.write_text("\n".join(lines), encoding="utf-8")


def split_train_test(corpus: TaggedCorpus, train_fraction: float) -> TaggedCorpus:
    """Mark the first ``ceil(train_fraction * N)`` sentences as training data."""
    if not 0.0 < train_fraction <= 1.0:
        raise ConfigError(f"train_fraction must be in (0, 1], got {train_fraction}")
    n = corpus.n_sentences
    n_train = math.ceil(train_fraction * n)
    return replace(
        corpus,
        train_ids=tuple(range(n_train)),
        test_ids=tuple(range(n_train, n)),
    )


def halve_training_data(corpus: TaggedCorpus) -> TaggedCorpus:
    """Keep the first ``ceil(n/2)`` training sentences; test set unchanged.

    Dropped sentences stay in the corpus (outside both partitions) so
    sentence indices in alignment files remain valid.
    """
    if not corpus.train_ids:
        raise ConfigError("halve_training_data: corpus has no train partition")
    keep = math.ceil(len(corpus.train_ids) / 2)
    return replace(corpus, train_ids=corpus.train_ids[:keep])


# ---------------------------------------------------------------------------
# Lexicons


def parse_lexicon_mode(mode: str) -> tuple[str, int | None]:
    """Parse a mode string: ``full``, ``count>K`` or ``top-K``."""
    if mode == "full":
        return "full", None
    if mode.startswith("count>"):
        try:
            k = int(mode[len("count>"):])
        except ValueError:
            raise ConfigError(f"bad lexicon mode {mode!r}") from None
        if k < 0:
            raise ConfigError(f"bad lexicon mode {mode!r}")
        return "count", k
    if mode.startswith("top-"):
        try:
            k = int(mode[len("top-"):])
        except ValueError:
            raise ConfigError(f"bad lexicon mode {mode!r}") from None
        if k <= 0:
            raise ConfigError(f"bad lexicon mode {mode!r}")
        return "top", k
    raise ConfigError(f"bad lexicon mode {mode!r}")


@dataclass(frozen=True)
class Lexicon:
    """Per-language map from word type to its permitted tags.

    ``entries`` holds only the retained dictionary entries.  Lookups for
    uncovered types fall back to the full tagset minus PUNCT, except for
    known punctuation types, which map to PUNCT alone in every mode.
    """

    languages: tuple[Language, ...]
    mode: str
    entries: Mapping[str, Mapping[str, tuple[str, ...]]]
    punct_types: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        for lang in self.languages:
            valid = set(lang.tagset)
            for surface, tags in self.entries[lang.id].items():
                if not tags:
                    raise DataError(f"{lang.id}: empty tag set for {surface!r}")
                bad = set(tags) - valid
                if bad:
                    raise DataError(f"{lang.id}: unknown tags {bad} for {surface!r}")

    def language(self, lang_id: str) -> Language:
        for lang in self.languages:
            if lang.id == lang_id:
                return lang
        raise ConfigError(f"no such language: {lang_id!r}")

    def allowed(self, lang_id: str, surface: str) -> tuple[str, ...]:
        """Permitted tags for a word type (never empty)."""
        entry = self.entries[lang_id].get(surface)
        if entry is not None:
            return entry
        if surface in self.punct_types.get(lang_id, frozenset()):
            return (PUNCT_TAG,)
        return self.language(lang_id).content_tags

    def words_per_tag(self, lang_id: str, vocabulary: Iterable[str]) -> dict[str, int]:
        """|W_t|: how many vocabulary types are permitted each tag."""
        sizes = {t: 0 for t in self.language(lang_id).tagset}
        for surface in vocabulary:
            for t in self.allowed(lang_id, surface):
                sizes[t] += 1
        return sizes

    def mean_tags_per_token(self, corpus: TaggedCorpus, lang_id: str) -> float:
        total = n = 0
        for sent in corpus.sentences[lang_id]:
            for tok in sent:
                total += len(self.allowed(lang_id, tok.surface))
                n += 1
        return total / n


def build_lexicon(corpus: TaggedCorpus, mode: str = "full") -> Lexicon:
    """Derive a tag dictionary from gold annotations.

    ``full`` keeps an entry for every word type (the set of gold tags it
    bears anywhere in the corpus).  ``count>K`` keeps entries only for
    types occurring more than K times; ``top-K`` only for the K most
    frequent types per language (frequency ties broken by surface order).
    """
    kind, k = parse_lexicon_mode(mode)
    entries: dict[str, dict[str, tuple[str, ...]]] = {}
    punct_types: dict[str, frozenset[str]] = {}
    for lang in corpus.languages:
        if not corpus.has_gold(lang.id):
            raise DataError(f"build_lexicon: language {lang.id!r} lacks gold tags")
        tag_order = {t: i for i, t in enumerate(lang.tagset)}
        by_type: dict[str, set[str]] = {}
        freq: Counter[str] = Counter()
        for sent in corpus.sentences[lang.id]:
            for tok in sent:
                by_type.setdefault(tok.surface, set()).add(tok.gold_tag)
                freq[tok.surface] += 1
        full = {
            surface: tuple(sorted(tags, key=tag_order.__getitem__))
            for surface, tags in by_type.items()
        }
        punct_types[lang.id] = frozenset(
            s for s, tags in full.items() if tags == (PUNCT_TAG,)
        )
        if kind == "full":
            kept = full
        elif kind == "count":
            kept = {s: tags for s, tags in full.items() if freq[s] > k}
        else:  # top-K
            ranked = sorted(full, key=lambda s: (-freq[s], s))[:k]
            kept = {s: full[s] for s in sorted(ranked)}
        entries[lang.id] = kept
    return Lexicon(corpus.languages, mode, entries, punct_types)


def save_lexicon(lexicon: Lexicon, paths: Mapping[str, str | Path]) -> None:
    for lang in lexicon.languages:
        lines = [
            f"{surface}\t{','.join(tags)}"
            for surface, tags in sorted(lexicon.entries[lang.id].items())
        ]
        Path(paths[lang.id]).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_lexicon(
    paths: Mapping[str, str | Path],
    languages: Sequence[Language],
    mode: str = "full",
    punct_types: Mapping[str, frozenset[str]] | None = None,
) -> Lexicon:
    entries: dict[str, dict[str, tuple[str, ...]]] = {}
    for lang in languages:
        table: dict[str, tuple[str, ...]] = {}
        path = Path(paths[lang.id])
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read lexicon file {path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise DataError(f"{path}:{lineno}: expected 'surface<TAB>tags'")
            table[fields[0]] = tuple(fields[1].split(","))
        entries[lang.id] = table
    if punct_types is None:
        punct_types = {
            lang.id: frozenset(
                s for s, tags in entries[lang.id].items() if tags == (PUNCT_TAG,)
            )
            for lang in languages
        }
    return Lexicon(tuple(languages), mode, entries, punct_types)
