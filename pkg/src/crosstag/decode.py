"""MAP parameter tables, Viterbi decoding, and the supervised baseline.

A trained model is, per language, a smoothed trigram transition table
(contexts padded with the start symbol, predictions padded with the end
tag) plus an emission table over the training vocabulary and an
unknown-word column.  Decoding restricts every token to its
lexicon-permitted tags; out-of-vocabulary words may take any
non-punctuation tag.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .corpus import Language, Lexicon, TaggedCorpus
from .errors import ConfigError, DataError
from .state import EncodedLanguage, LanguageCounts, SamplerState, count_language

START_SYMBOL = "<S>"
END_SYMBOL = "</S>"

# Effectively unsmoothed tables for the maximum-likelihood baseline; the
# tiny floor keeps every Viterbi path finite.
ML_FLOOR = 1e-10


class TrainedModel:
    """Per-language decoding tables with their vocabulary."""

    def __init__(
        self,
        language: Language,
        id_to_word: Sequence[str],
        trans_probs: np.ndarray,
        emit_probs: np.ndarray,
        unk_probs: np.ndarray,
    ):
        self.language = language
        self.id_to_word = list(id_to_word)
        self.vocab = {w: i for i, w in enumerate(self.id_to_word)}
        self.trans_probs = trans_probs
        self.emit_probs = emit_probs
        self.unk_probs = unk_probs

    @property
    def n_tags(self) -> int:
        return len(self.language.tagset)

    def save(self, path: str | Path) -> None:
        meta = {
            "lang": self.language.id,
            "tagset": list(self.language.tagset),
            "vocab": self.id_to_word,
        }
        np.savez_compressed(
            path,
            trans_probs=self.trans_probs,
            emit_probs=self.emit_probs,
            unk_probs=self.unk_probs,
            meta_json=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        )

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta_json"]).decode("utf-8"))
            return cls(
                Language(meta["lang"], tuple(meta["tagset"])),
                meta["vocab"],
                data["trans_probs"],
                data["emit_probs"],
                data["unk_probs"],
            )

    def export_tables(self, trans_path: str | Path, emit_path: str | Path) -> None:
        """Plain-text tables: ``t1 t2 t3 prob`` and ``t w prob`` rows."""
        tags = list(self.language.tagset)
        ctx_syms = tags + [START_SYMBOL]
        pred_syms = tags + [END_SYMBOL]
        lines = []
        for a, sa in enumerate(ctx_syms):
            for b, sb in enumerate(ctx_syms):
                for c, sc in enumerate(pred_syms):
                    lines.append(f"{sa} {sb} {sc} {self.trans_probs[a, b, c]!r}")
        Path(trans_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        lines = []
        for t, st in enumerate(tags):
            for w, sw in enumerate(self.id_to_word):
                if self.emit_probs[t, w] > 0.0:
                    lines.append(f"{st} {sw} {self.emit_probs[t, w]!r}")
        Path(emit_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def lexicon_mask(enc: EncodedLanguage) -> np.ndarray:
    """Boolean [tags, words] mask of lexicon-permitted pairs."""
    mask = np.zeros((enc.n_tags, enc.n_words), dtype=bool)
    for w in range(enc.n_words):
        for t in enc.allowed_for_word(w):
            mask[t, w] = True
    return mask


def tables_from_counts(
    language: Language,
    id_to_word: Sequence[str],
    counts: LanguageCounts,
    wt_size: np.ndarray,
    emission_prior: float,
    transition_prior: float,
    unk_constant: bool = False,
    allowed_mask: np.ndarray | None = None,
) -> TrainedModel:
    """Smoothed probability tables from count tables.

    ``unk_constant`` gives unknown words the same score under every
    tag (the supervised baseline's pseudo-count convention); otherwise
    unknown words get the zero-count smoothed emission probability.
    Pairs outside ``allowed_mask`` are zeroed so each tag's emission
    row sums to one over its permitted word types.
    """
    n_tags = len(language.tagset)
    trans = (counts.trans + transition_prior) / (
        counts.ctx_tot[:, :, None] + (n_tags + 1) * transition_prior
    )
    denom = counts.emit_tot + wt_size * emission_prior
    emit = (counts.emit + emission_prior) / denom[:, None]
    if allowed_mask is not None:
        emit = np.where(allowed_mask, emit, 0.0)
    if unk_constant:
        unk = np.ones(n_tags)
    else:
        unk = emission_prior / denom
    return TrainedModel(language, id_to_word, trans, emit, unk)


def map_estimates(state: SamplerState, modal: Sequence[np.ndarray] | None = None) -> list[TrainedModel]:
    """Per-language tables at the modal tags with the final sampled
    hyperparameters as smoothing."""
    if state.iteration == 0:
        raise ConfigError("map_estimates: no sampling iterations have run")
    models = []
    for li, enc in enumerate(state.encoded):
        tags = modal[li] if modal is not None else state.modal_tags(li)
        counts = count_language(enc, tags)
        models.append(
            tables_from_counts(
                enc.language,
                enc.id_to_word,
                counts,
                enc.wt_size,
                state.hyper.emission_prior[enc.language.id],
                state.hyper.transition_prior[enc.language.id],
                allowed_mask=lexicon_mask(enc),
            )
        )
    return models


def viterbi_decode(
    sentence: Sequence[str],
    model: TrainedModel,
    lexicon: Lexicon,
) -> list[str]:
    """Highest-probability tag sequence for one sentence."""
    preds = decode_sentences([list(sentence)], model, lexicon)
    return preds[0]


def decode_sentences(
    sentences: Sequence[Sequence[str]],
    model: TrainedModel,
    lexicon: Lexicon,
) -> list[list[str]]:
    lang = model.language
    tag_id = {t: i for i, t in enumerate(lang.tagset)}
    words = []
    sent_start = [0]
    allowed_off = [0]
    allowed_tag: list[int] = []
    for sentence in sentences:
        if not sentence:
            raise DataError("cannot decode an empty sentence")
        for surface in sentence:
            words.append(model.vocab.get(surface, -1))
            permitted = sorted(tag_id[t] for t in lexicon.allowed(lang.id, surface))
            if not permitted:
                raise DataError(f"no permitted tags for {surface!r}")
            allowed_tag.extend(permitted)
            allowed_off.append(len(allowed_tag))
        sent_start.append(len(words))

    with np.errstate(divide="ignore"):
        log_trans = np.log(model.trans_probs)
        log_emit = np.where(
            model.emit_probs > 0.0, np.log(np.maximum(model.emit_probs, 1e-300)), -np.inf
        )
        log_unk = np.log(model.unk_probs)
    out = np.zeros(len(words), dtype=np.int32)
    kernels.viterbi_sweep(
        np.asarray(words, dtype=np.int32),
        np.asarray(sent_start, dtype=np.int32),
        np.asarray(allowed_off, dtype=np.int32),
        np.asarray(allowed_tag, dtype=np.int32),
        log_trans,
        log_emit,
        log_unk,
        out,
    )
    result = []
    cursor = 0
    for sentence in sentences:
        tags = [lang.tagset[out[cursor + k]] for k in range(len(sentence))]
        result.append(tags)
        cursor += len(sentence)
    return result


def decode_corpus(
    models: Mapping[str, TrainedModel],
    corpus: TaggedCorpus,
    lexicon: Lexicon,
    sentence_ids: Sequence[int] | None = None,
) -> dict[str, dict[int, list[str]]]:
    """Viterbi-tag the (monolingual) test split of each language."""
    ids = list(sentence_ids) if sentence_ids is not None else list(corpus.test_ids)
    predictions: dict[str, dict[int, list[str]]] = {}
    for lang_id, model in models.items():
        sentences = [
            [tok.surface for tok in corpus.sentences[lang_id][s]] for s in ids
        ]
        tagged = decode_sentences(sentences, model, lexicon) if sentences else []
        predictions[lang_id] = {s: tags for s, tags in zip(ids, tagged)}
    return predictions


def train_supervised(corpus: TaggedCorpus, lexicon: Lexicon) -> dict[str, TrainedModel]:
    """Maximum-likelihood tables from gold training tags.

    Unknown test words score equally under every tag, so their choice
    falls to the transition structure alone.
    """
    from .state import encode_language

    models = {}
    for lang in corpus.languages:
        enc = encode_language(corpus, lexicon, lang.id)
        if (enc.gold < 0).any():
            raise DataError(f"train_supervised: {lang.id} lacks gold tags on train data")
        counts = count_language(enc, enc.gold)
        models[lang.id] = tables_from_counts(
            lang, enc.id_to_word, counts, enc.wt_size, ML_FLOOR, ML_FLOOR,
            unk_constant=True, allowed_mask=lexicon_mask(enc),
        )
    return models
