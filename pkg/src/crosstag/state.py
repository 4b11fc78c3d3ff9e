"""Numeric corpus encoding, sufficient statistics, and sampler state.

Tag ids index each language's tagset. In transition tables one extra
symbol is appended: index ``n_tags`` acts as the start symbol in
context positions and as the end tag in prediction positions (the two
never meet, so a single padded axis serves both).  Transition
normalizers therefore use ``n_tags + 1`` (real tags plus the end tag).

All count arrays are int64 and all id arrays int32; the sampling
kernels (compiled or pure) mutate them in place.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .alignments import AlignmentSet, BilingualAlignment
from .corpus import Language, Lexicon, TaggedCorpus
from .errors import ConfigError, DataError

CHECKPOINT_VERSION = 1


@dataclass
class EncodedLanguage:
    """One language's training tokens and lexicon in array form."""

    language: Language
    vocab: dict[str, int]  # full corpus vocabulary (train + test types)
    id_to_word: list[str]
    words: np.ndarray  # int32[n_train_tokens], word id per token
    sent_start: np.ndarray  # int32[n_train_sents + 1]
    gold: np.ndarray  # int32[n_train_tokens], -1 when absent
    allowed_off: np.ndarray  # int32[V + 1]
    allowed_tag: np.ndarray  # int32[total allowed]
    wt_size: np.ndarray  # int64[T], |W_t| over the full vocabulary

    @property
    def n_tags(self) -> int:
        return len(self.language.tagset)

    @property
    def n_tokens(self) -> int:
        return len(self.words)

    @property
    def n_words(self) -> int:
        return len(self.id_to_word)

    def allowed_for_word(self, word_id: int) -> np.ndarray:
        return self.allowed_tag[self.allowed_off[word_id]:self.allowed_off[word_id + 1]]


def encode_language(
    corpus: TaggedCorpus, lexicon: Lexicon, lang_id: str
) -> EncodedLanguage:
    """Flatten a language's training sentences into kernel-ready arrays."""
    language = corpus.language(lang_id)
    tag_id = {t: i for i, t in enumerate(language.tagset)}

    surfaces = sorted(
        {tok.surface for sent in corpus.sentences[lang_id] for tok in sent}
    )
    vocab = {s: i for i, s in enumerate(surfaces)}

    words: list[int] = []
    gold: list[int] = []
    sent_start = [0]
    for sent_idx in corpus.train_ids:
        for tok in corpus.sentences[lang_id][sent_idx]:
            words.append(vocab[tok.surface])
            gold.append(tag_id[tok.gold_tag] if tok.gold_tag is not None else -1)
        sent_start.append(len(words))

    allowed_off = [0]
    allowed_tag: list[int] = []
    for surface in surfaces:
        tags = sorted(tag_id[t] for t in lexicon.allowed(lang_id, surface))
        if not tags:
            raise DataError(f"{lang_id}: empty permitted-tag set for {surface!r}")
        allowed_tag.extend(tags)
        allowed_off.append(len(allowed_tag))

    wt_size = np.zeros(len(language.tagset), dtype=np.int64)
    for surface in surfaces:
        for t in lexicon.allowed(lang_id, surface):
            wt_size[tag_id[t]] += 1

    return EncodedLanguage(
        language=language,
        vocab=vocab,
        id_to_word=surfaces,
        words=np.asarray(words, dtype=np.int32),
        sent_start=np.asarray(sent_start, dtype=np.int32),
        gold=np.asarray(gold, dtype=np.int32),
        allowed_off=np.asarray(allowed_off, dtype=np.int32),
        allowed_tag=np.asarray(allowed_tag, dtype=np.int32),
        wt_size=wt_size,
    )


@dataclass
class LanguageCounts:
    """Emission and trigram-transition sufficient statistics."""

    emit: np.ndarray  # int64[T, V]
    emit_tot: np.ndarray  # int64[T]
    trans: np.ndarray  # int64[T+1, T+1, T+1]
    ctx_tot: np.ndarray  # int64[T+1, T+1]

    @classmethod
    def zeros(cls, n_tags: int, n_words: int) -> "LanguageCounts":
        pad = n_tags + 1
        return cls(
            emit=np.zeros((n_tags, n_words), dtype=np.int64),
            emit_tot=np.zeros(n_tags, dtype=np.int64),
            trans=np.zeros((pad, pad, pad), dtype=np.int64),
            ctx_tot=np.zeros((pad, pad), dtype=np.int64),
        )


def count_language(enc: EncodedLanguage, y: np.ndarray) -> LanguageCounts:
    """Rebuild one language's count tables from a tag assignment."""
    counts = LanguageCounts.zeros(enc.n_tags, enc.n_words)
    start = end = enc.n_tags
    for s in range(len(enc.sent_start) - 1):
        lo, hi = enc.sent_start[s], enc.sent_start[s + 1]
        prev2, prev1 = start, start
        for pos in range(lo, hi):
            t = int(y[pos])
            counts.emit[t, enc.words[pos]] += 1
            counts.emit_tot[t] += 1
            counts.trans[prev2, prev1, t] += 1
            counts.ctx_tot[prev2, prev1] += 1
            prev2, prev1 = prev1, t
        counts.trans[prev2, prev1, end] += 1
        counts.ctx_tot[prev2, prev1] += 1
    return counts


@dataclass
class Hyperparams:
    """Dirichlet and DP parameters; alpha and psi0 stay fixed after init."""

    emission_prior: dict[str, float]
    transition_prior: dict[str, float]
    coupling_prior: float | None = None
    dp_concentration: float = 1.0
    superlingual_prior: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        values = list(self.emission_prior.values()) + list(
            self.transition_prior.values()
        ) + list(self.superlingual_prior.values())
        if self.coupling_prior is not None:
            values.append(self.coupling_prior)
        values.append(self.dp_concentration)
        if any(v <= 0 for v in values):
            raise ConfigError("hyperparameters must be strictly positive")

    @classmethod
    def defaults(
        cls, lang_ids: Sequence[str], with_coupling: bool = False
    ) -> "Hyperparams":
        return cls(
            emission_prior={l: 1.0 for l in lang_ids},
            transition_prior={l: 1.0 for l in lang_ids},
            coupling_prior=1.0 if with_coupling else None,
            dp_concentration=1.0,
            superlingual_prior={l: 1.0 for l in lang_ids},
        )


@dataclass
class CouplingCounts:
    """Aligned tag-pair counts for one ordered language pair."""

    pairs: np.ndarray  # int64[T, T']
    total: np.ndarray  # int64[1], equals pairs.sum()

    @classmethod
    def zeros(cls, n_tags_a: int, n_tags_b: int) -> "CouplingCounts":
        return cls(
            pairs=np.zeros((n_tags_a, n_tags_b), dtype=np.int64),
            total=np.zeros(1, dtype=np.int64),
        )


@dataclass
class SuperlingualCounts:
    """Per-value tag counts for the DP over superlingual tags.

    A value is active while ``usage > 0``; retired slots are recycled
    through ``free_slots``.  Arrays grow by doubling when the kernel
    signals that no free slot remains.
    """

    counts: np.ndarray  # int64[cap, L, T_max]
    totals: np.ndarray  # int64[cap, L]
    usage: np.ndarray  # int64[cap], sets currently assigned each value
    free_slots: list[int]
    n_assigned: int = 0

    @classmethod
    def zeros(cls, capacity: int, n_langs: int, max_tags: int) -> "SuperlingualCounts":
        return cls(
            counts=np.zeros((capacity, n_langs, max_tags), dtype=np.int64),
            totals=np.zeros((capacity, n_langs), dtype=np.int64),
            usage=np.zeros(capacity, dtype=np.int64),
            free_slots=list(range(capacity - 1, -1, -1)),
        )

    @property
    def capacity(self) -> int:
        return len(self.usage)

    @property
    def k_active(self) -> int:
        return int((self.usage > 0).sum())

    def active_values(self) -> np.ndarray:
        return np.flatnonzero(self.usage > 0)

    def grow(self) -> None:
        old = self.capacity
        new = old * 2
        for name in ("counts", "totals", "usage"):
            arr = getattr(self, name)
            shape = (new,) + arr.shape[1:]
            bigger = np.zeros(shape, dtype=arr.dtype)
            bigger[:old] = arr
            setattr(self, name, bigger)
        self.free_slots = list(range(new - 1, old - 1, -1)) + self.free_slots


@dataclass
class EncodedSets:
    """Alignment sets flattened against the concatenated token space."""

    set_off: np.ndarray  # int32[n_sets + 1]
    set_lang: np.ndarray  # int32[n_members], language index per member
    set_tok: np.ndarray  # int32[n_members], global token index per member
    sent_of_set: np.ndarray  # int32[n_sets]
    cover_off: np.ndarray  # int32[n_global_tokens + 1]
    cover_set: np.ndarray  # int32[...], covering set ids per token

    @property
    def n_sets(self) -> int:
        return len(self.set_off) - 1


class SamplerState:
    """Everything a Gibbs run owns: encoded data, counts, tags, RNG.

    The same class backs all three samplers; the coupling section is
    present only for the merged-node model, the superlingual section
    only for the latent-variable model.
    """

    def __init__(
        self,
        encoded: Sequence[EncodedLanguage],
        hyper: Hyperparams,
        rng: np.random.Generator,
    ):
        self.encoded = list(encoded)
        self.lang_ids = [e.language.id for e in self.encoded]
        self.hyper = hyper
        self.rng = rng
        self.iteration = 0
        self.y = [np.zeros(e.n_tokens, dtype=np.int32) for e in self.encoded]
        self.counts = [LanguageCounts.zeros(e.n_tags, e.n_words) for e in self.encoded]
        self.hist = [
            np.zeros((e.n_tokens, e.n_tags), dtype=np.int32) for e in self.encoded
        ]
        self.clamped = [False] * len(self.encoded)
        # merged-node section
        self.coupling: CouplingCounts | None = None
        self.partner: list[np.ndarray] | None = None
        # latent-variable section
        self.sets: EncodedSets | None = None
        self.z_of_set: np.ndarray | None = None
        self.sup: SuperlingualCounts | None = None
        self.mh_proposals = 0
        self.mh_accepts = 0

    def lang_index(self, lang_id: str) -> int:
        return self.lang_ids.index(lang_id)

    # -- initialization ----------------------------------------------------

    def init_tags_uniform(self) -> None:
        """Draw every slot uniformly from its word's permitted tags."""
        for li, enc in enumerate(self.encoded):
            draws = self.rng.random(enc.n_tokens)
            y = self.y[li]
            for pos in range(enc.n_tokens):
                allowed = enc.allowed_for_word(int(enc.words[pos]))
                y[pos] = allowed[int(draws[pos] * len(allowed))]
        self.recount()

    def clamp_to_gold(self, lang_id: str) -> None:
        li = self.lang_index(lang_id)
        if (self.encoded[li].gold < 0).any():
            raise DataError(f"{lang_id}: gold tags required for supervision")
        self.y[li][:] = self.encoded[li].gold
        self.clamped[li] = True

    def recount(self) -> None:
        """Recompute every count table from the current assignment."""
        for li, enc in enumerate(self.encoded):
            self.counts[li] = count_language(enc, self.y[li])
        if self.partner is not None:
            self.coupling = CouplingCounts.zeros(
                self.encoded[0].n_tags, self.encoded[1].n_tags
            )
            p0 = self.partner[0]
            for i in range(len(p0)):
                j = int(p0[i])
                if j >= 0:
                    self.coupling.pairs[self.y[0][i], self.y[1][j]] += 1
                    self.coupling.total[0] += 1
        if self.sets is not None:
            cap = self.sup.capacity if self.sup is not None else 16
            max_tags = max(e.n_tags for e in self.encoded)
            sup = SuperlingualCounts.zeros(cap, len(self.encoded), max_tags)
            base = self.token_base()
            for s in range(self.sets.n_sets):
                z = int(self.z_of_set[s])
                sup.usage[z] += 1
                sup.n_assigned += 1
                for m in range(self.sets.set_off[s], self.sets.set_off[s + 1]):
                    li = int(self.sets.set_lang[m])
                    tok = int(self.sets.set_tok[m]) - base[li]
                    sup.counts[z, li, self.y[li][tok]] += 1
                    sup.totals[z, li] += 1
            sup.free_slots = [
                slot for slot in range(cap - 1, -1, -1) if sup.usage[slot] == 0
            ]
            self.sup = sup

    def token_base(self) -> list[int]:
        """Offsets of each language's tokens in the concatenated space."""
        base = [0]
        for enc in self.encoded[:-1]:
            base.append(base[-1] + enc.n_tokens)
        return base

    def y_all(self) -> np.ndarray:
        return np.concatenate(self.y).astype(np.int32)

    def update_histograms(self) -> None:
        for li in range(len(self.encoded)):
            n = self.encoded[li].n_tokens
            self.hist[li][np.arange(n), self.y[li]] += 1

    def modal_tags(self, lang_index: int) -> np.ndarray:
        """Most frequent sampled tag per slot (ties: lowest tag id)."""
        return np.argmax(self.hist[lang_index], axis=1).astype(np.int32)

    # -- consistency -------------------------------------------------------

    def check_counts(self) -> None:
        """Assert the tables match a recount of the current tags."""
        for li, enc in enumerate(self.encoded):
            fresh = count_language(enc, self.y[li])
            for name in ("emit", "emit_tot", "trans", "ctx_tot"):
                if not np.array_equal(getattr(fresh, name), getattr(self.counts[li], name)):
                    raise AssertionError(f"{enc.language.id}: stale {name} counts")
        if self.partner is not None and self.coupling is not None:
            pairs = np.zeros_like(self.coupling.pairs)
            p0 = self.partner[0]
            for i in range(len(p0)):
                j = int(p0[i])
                if j >= 0:
                    pairs[self.y[0][i], self.y[1][j]] += 1
            if not np.array_equal(pairs, self.coupling.pairs):
                raise AssertionError("stale coupling counts")
            if self.coupling.total[0] != pairs.sum():
                raise AssertionError("coupling total out of sync")
        if self.sets is not None:
            if int(self.sup.usage.sum()) != self.sets.n_sets:
                raise AssertionError("superlingual usage does not cover all sets")
            snapshot = (
                self.sup.counts.copy(),
                self.sup.totals.copy(),
                self.sup.usage.copy(),
            )
            self.recount()
            for fresh, old in zip(
                (self.sup.counts, self.sup.totals, self.sup.usage), snapshot
            ):
                if not np.array_equal(fresh, old):
                    raise AssertionError("stale superlingual counts")

    # -- checkpointing -----------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Dump everything needed for a bit-exact resume."""
        arrays: dict[str, np.ndarray] = {}
        for li in range(len(self.encoded)):
            arrays[f"y_{li}"] = self.y[li]
            arrays[f"hist_{li}"] = self.hist[li]
        if self.z_of_set is not None:
            arrays["z_of_set"] = self.z_of_set
        meta = {
            "version": CHECKPOINT_VERSION,
            "lang_ids": self.lang_ids,
            "iteration": self.iteration,
            "clamped": self.clamped,
            "mh_proposals": self.mh_proposals,
            "mh_accepts": self.mh_accepts,
            "hyper": {
                "emission_prior": self.hyper.emission_prior,
                "transition_prior": self.hyper.transition_prior,
                "coupling_prior": self.hyper.coupling_prior,
                "dp_concentration": self.hyper.dp_concentration,
                "superlingual_prior": self.hyper.superlingual_prior,
            },
            "rng_state": _jsonable(self.rng.bit_generator.state),
            "sup_capacity": self.sup.capacity if self.sup is not None else None,
            "sup_n_assigned": self.sup.n_assigned if self.sup is not None else None,
        }
        arrays["meta_json"] = np.frombuffer(
            json.dumps(meta).encode("utf-8"), dtype=np.uint8
        )
        np.savez_compressed(path, **arrays)

    def restore(self, path: str | Path) -> None:
        """Load a checkpoint previously written by :meth:`save`.

        The state must have been constructed over the same corpus,
        lexicon, and model structure as the saved run.
        """
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta_json"]).decode("utf-8"))
            if meta["version"] != CHECKPOINT_VERSION:
                raise DataError(f"unsupported checkpoint version {meta['version']}")
            if meta["lang_ids"] != self.lang_ids:
                raise DataError("checkpoint languages do not match this state")
            for li in range(len(self.encoded)):
                self.y[li][:] = data[f"y_{li}"]
                self.hist[li][:] = data[f"hist_{li}"]
            if self.z_of_set is not None:
                self.z_of_set[:] = data["z_of_set"]
                while self.sup is not None and self.sup.capacity < meta["sup_capacity"]:
                    self.sup.grow()
        self.iteration = meta["iteration"]
        self.clamped = meta["clamped"]
        self.mh_proposals = meta["mh_proposals"]
        self.mh_accepts = meta["mh_accepts"]
        h = meta["hyper"]
        self.hyper = Hyperparams(
            emission_prior=h["emission_prior"],
            transition_prior=h["transition_prior"],
            coupling_prior=h["coupling_prior"],
            dp_concentration=h["dp_concentration"],
            superlingual_prior=h["superlingual_prior"],
        )
        self.rng.bit_generator.state = _un_jsonable(meta["rng_state"])
        self.recount()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _un_jsonable(obj):
    if isinstance(obj, dict) and "__ndarray__" in obj:
        return np.asarray(obj["__ndarray__"], dtype=obj["dtype"])
    if isinstance(obj, dict):
        return {k: _un_jsonable(v) for k, v in obj.items()}
    return obj


# ---------------------------------------------------------------------------
# Structure encoders for the two multilingual models


def encode_partners(
    state_langs: Sequence[EncodedLanguage],
    corpus: TaggedCorpus,
    alignments: Mapping[int, BilingualAlignment],
) -> list[np.ndarray]:
    """Per-token partner indices (into the other language) or -1.

    Only training sentences are consulted; alignments must already be
    one-to-one and monotone.
    """
    enc_a, enc_b = state_langs
    partner_a = np.full(enc_a.n_tokens, -1, dtype=np.int32)
    partner_b = np.full(enc_b.n_tokens, -1, dtype=np.int32)
    for slot, sent_idx in enumerate(corpus.train_ids):
        alignment = alignments.get(sent_idx)
        if alignment is None:
            continue
        if not alignment.is_monotone():
            raise DataError(
                f"sentence {sent_idx}: merged-node training needs monotone alignments"
            )
        lo_a = int(enc_a.sent_start[slot])
        hi_a = int(enc_a.sent_start[slot + 1])
        lo_b = int(enc_b.sent_start[slot])
        hi_b = int(enc_b.sent_start[slot + 1])
        for i, j in alignment.edges:
            if lo_a + i >= hi_a or lo_b + j >= hi_b:
                raise DataError(f"sentence {sent_idx}: alignment index out of range")
            partner_a[lo_a + i] = lo_b + j
            partner_b[lo_b + j] = lo_a + i
    return [partner_a, partner_b]


def encode_sets(
    state_langs: Sequence[EncodedLanguage],
    corpus: TaggedCorpus,
    sets_by_sentence: Mapping[int, Sequence[AlignmentSet]],
) -> EncodedSets:
    """Flatten alignment sets over training sentences into CSR arrays."""
    lang_index = {e.language.id: li for li, e in enumerate(state_langs)}
    base = [0]
    for enc in state_langs[:-1]:
        base.append(base[-1] + enc.n_tokens)
    n_global = base[-1] + state_langs[-1].n_tokens

    slot_of_sentence = {sent: slot for slot, sent in enumerate(corpus.train_ids)}
    set_off = [0]
    set_lang: list[int] = []
    set_tok: list[int] = []
    sent_of_set: list[int] = []
    cover: list[list[int]] = [[] for _ in range(n_global)]
    for sent_idx in sorted(sets_by_sentence):
        slot = slot_of_sentence.get(sent_idx)
        if slot is None:
            continue  # test-side sets never join training
        for aset in sorted(sets_by_sentence[sent_idx], key=lambda a: sorted(a.members)):
            set_id = len(sent_of_set)
            for lang_id, pos in sorted(aset.members):
                if lang_id not in lang_index:
                    raise DataError(f"alignment set references unknown language {lang_id!r}")
                li = lang_index[lang_id]
                enc = state_langs[li]
                lo = int(enc.sent_start[slot])
                hi = int(enc.sent_start[slot + 1])
                if lo + pos >= hi:
                    raise DataError(
                        f"sentence {sent_idx}: set member {lang_id}:{pos} out of range"
                    )
                set_lang.append(li)
                set_tok.append(base[li] + lo + pos)
                cover[base[li] + lo + pos].append(set_id)
            set_off.append(len(set_lang))
            sent_of_set.append(sent_idx)

    cover_off = [0]
    cover_set: list[int] = []
    for token_sets in cover:
        cover_set.extend(token_sets)
        cover_off.append(len(cover_set))
    return EncodedSets(
        set_off=np.asarray(set_off, dtype=np.int32),
        set_lang=np.asarray(set_lang, dtype=np.int32),
        set_tok=np.asarray(set_tok, dtype=np.int32),
        sent_of_set=np.asarray(sent_of_set, dtype=np.int32),
        cover_off=np.asarray(cover_off, dtype=np.int32),
        cover_set=np.asarray(cover_set, dtype=np.int32),
    )
