"""Monolingual Bayesian trigram HMM trained by collapsed Gibbs sampling.

This is the baseline both multilingual models reduce to when a corpus
carries no alignments, and it supplies their initialization.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .corpus import Lexicon, TaggedCorpus
from .decode import TrainedModel, map_estimates
from .errors import ConfigError
from .state import Hyperparams, SamplerState, encode_language
from .training import MH_INIT_ROUNDS, dummy_cover, initial_mh, mh_round

DEFAULT_EPOCHS = 200


@dataclass
class TrainResult:
    models: dict[str, TrainedModel]
    modal_tags: list[np.ndarray]
    state: SamplerState
    runtime_seconds: float
    mh_acceptance: float
    active_values_per_epoch: list[int] | None = None


def make_mono_state(
    corpus: TaggedCorpus, lexicon: Lexicon, lang_id: str, rng: np.random.Generator
) -> SamplerState:
    enc = encode_language(corpus, lexicon, lang_id)
    state = SamplerState([enc], Hyperparams.defaults([lang_id]), rng)
    state.init_tags_uniform()
    return state


def mono_epoch(state: SamplerState) -> None:
    """One Gibbs sweep plus one hyperparameter round."""
    enc = state.encoded[0]
    counts = state.counts[0]
    lang_id = enc.language.id
    uniforms = state.rng.random(enc.n_tokens)
    cover_off, cover_set, z_of_set, sup_counts, sup_tot = dummy_cover(state, 0)
    kernels.tag_sweep(
        enc.words, enc.sent_start, state.y[0],
        enc.allowed_off, enc.allowed_tag,
        counts.emit, counts.emit_tot, counts.trans, counts.ctx_tot, enc.wt_size,
        state.hyper.emission_prior[lang_id], state.hyper.transition_prior[lang_id],
        cover_off, cover_set, z_of_set, sup_counts, sup_tot,
        0, 1.0, 0,
        uniforms,
    )
    mh_round(state)
    state.iteration += 1
    state.update_histograms()


def train_mono(
    corpus: TaggedCorpus,
    lexicon: Lexicon,
    lang_id: str,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    rng: np.random.Generator | None = None,
    mh_init_rounds: int = MH_INIT_ROUNDS,
) -> TrainResult:
    """Train on the corpus train split and return MAP decoding tables."""
    if not corpus.train_ids:
        raise ConfigError("train_mono: corpus has no training sentences")
    started = time.perf_counter()
    if rng is None:
        rng = np.random.default_rng(seed)
    state = make_mono_state(corpus, lexicon, lang_id, rng)
    initial_mh(state, mh_init_rounds)
    for _ in range(epochs):
        mono_epoch(state)
    modal = [state.modal_tags(0)]
    models = map_estimates(state, modal)
    return TrainResult(
        models={lang_id: models[0]},
        modal_tags=modal,
        state=state,
        runtime_seconds=time.perf_counter() - started,
        mh_acceptance=state.mh_accepts / max(state.mh_proposals, 1),
    )


def tag_distribution(
    state: SamplerState, lang_index: int, sentence_slot: int, index: int
) -> tuple[np.ndarray, np.ndarray]:
    """Conditional distribution over permitted tags at one slot, given
    everything else (the quantity one Gibbs draw samples from)."""
    enc = state.encoded[lang_index]
    counts = state.counts[lang_index]
    lang_id = enc.language.id
    lo = int(enc.sent_start[sentence_slot])
    hi = int(enc.sent_start[sentence_slot + 1])
    if not lo <= lo + index < hi:
        raise ConfigError(f"token index {index} outside sentence {sentence_slot}")
    cover_off, cover_set, z_of_set, sup_counts, sup_tot = dummy_cover(state, lang_index)
    return kernels.tag_conditional(
        lo + index, lo, hi, enc.words, state.y[lang_index],
        enc.allowed_off, enc.allowed_tag,
        counts.emit, counts.emit_tot, counts.trans, counts.ctx_tot, enc.wt_size,
        state.hyper.emission_prior[lang_id], state.hyper.transition_prior[lang_id],
        cover_off, cover_set, z_of_set, sup_counts, sup_tot,
        0, 1.0, 0,
    )


def sample_tag_mono(
    state: SamplerState, lang_index: int, sentence_slot: int, index: int
) -> int:
    """Resample one slot in place (single-site Gibbs step)."""
    from .kernels.pure import _pick

    cands, probs = tag_distribution(state, lang_index, sentence_slot, index)
    enc = state.encoded[lang_index]
    pos = int(enc.sent_start[sentence_slot]) + index
    total = float(probs.sum())
    new = int(cands[_pick(probs, total, state.rng.random())])
    _reassign(state, lang_index, pos, new)
    return new


def _reassign(state: SamplerState, lang_index: int, pos: int, new_tag: int) -> None:
    from .kernels import pure as _p

    enc = state.encoded[lang_index]
    counts = state.counts[lang_index]
    slot = int(np.searchsorted(enc.sent_start, pos, side="right")) - 1
    lo, hi = int(enc.sent_start[slot]), int(enc.sent_start[slot + 1])
    old = int(state.y[lang_index][pos])
    w = int(enc.words[pos])
    _p._remove_tag_events(pos, lo, hi, old, w, counts.emit, counts.emit_tot,
                          counts.trans, counts.ctx_tot, state.y[lang_index], enc.n_tags, -1)
    state.y[lang_index][pos] = new_tag
    _p._remove_tag_events(pos, lo, hi, new_tag, w, counts.emit, counts.emit_tot,
                          counts.trans, counts.ctx_tot, state.y[lang_index], enc.n_tags, +1)
