"""Bilingual merged-node model: aligned words form joint bi-tag nodes.

Aligned pairs are sampled jointly over all permitted tag pairs, coupled
through a smoothed tag-pair table; unaligned words go through the exact
monolingual sampler, so with an empty alignment the model is the
monolingual baseline for both languages.
"""

from __future__ import annotations

import time
from typing import Mapping

import numpy as np

from . import kernels
from .alignments import BilingualAlignment
from .corpus import Lexicon, TaggedCorpus
from .decode import map_estimates
from .errors import ConfigError
from .mono import DEFAULT_EPOCHS, TrainResult
from .state import (
    CouplingCounts,
    Hyperparams,
    SamplerState,
    encode_language,
    encode_partners,
)
from .training import MH_INIT_ROUNDS, dummy_cover, initial_mh, mh_round


def make_merged_state(
    corpus: TaggedCorpus,
    lexicon: Lexicon,
    lang_pair: tuple[str, str],
    alignments: Mapping[int, BilingualAlignment],
    rng: np.random.Generator,
) -> SamplerState:
    if len(lang_pair) != 2 or lang_pair[0] == lang_pair[1]:
        raise ConfigError("merged-node training needs two distinct languages")
    encs = [encode_language(corpus, lexicon, l) for l in lang_pair]
    state = SamplerState(encs, Hyperparams.defaults(list(lang_pair), with_coupling=True), rng)
    state.partner = encode_partners(encs, corpus, alignments)
    state.coupling = CouplingCounts.zeros(encs[0].n_tags, encs[1].n_tags)
    state.init_tags_uniform()
    return state


def merged_epoch(state: SamplerState) -> None:
    enc0, enc1 = state.encoded
    c0, c1 = state.counts
    h = state.hyper
    uniforms = state.rng.random(enc0.n_tokens + enc1.n_tokens)
    cover0 = dummy_cover(state, 0)
    cover1 = dummy_cover(state, 1)
    kernels.merged_sweep(
        enc0.words, enc0.sent_start, state.y[0], enc0.allowed_off, enc0.allowed_tag,
        c0.emit, c0.emit_tot, c0.trans, c0.ctx_tot, enc0.wt_size,
        h.emission_prior[enc0.language.id], h.transition_prior[enc0.language.id],
        enc1.words, enc1.sent_start, state.y[1], enc1.allowed_off, enc1.allowed_tag,
        c1.emit, c1.emit_tot, c1.trans, c1.ctx_tot, enc1.wt_size,
        h.emission_prior[enc1.language.id], h.transition_prior[enc1.language.id],
        state.partner[0], state.partner[1],
        state.coupling.pairs, state.coupling.total, h.coupling_prior,
        cover0[0], cover1[0], cover0[1], cover0[3], cover0[4],
        uniforms,
    )
    mh_round(state)
    state.iteration += 1
    state.update_histograms()


def train_merged(
    corpus: TaggedCorpus,
    lexicon: Lexicon,
    lang_pair: tuple[str, str],
    alignments: Mapping[int, BilingualAlignment],
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    rng: np.random.Generator | None = None,
    mh_init_rounds: int = MH_INIT_ROUNDS,
) -> TrainResult:
    if not corpus.train_ids:
        raise ConfigError("train_merged: corpus has no training sentences")
    started = time.perf_counter()
    if rng is None:
        rng = np.random.default_rng(seed)
    state = make_merged_state(corpus, lexicon, lang_pair, alignments, rng)
    initial_mh(state, mh_init_rounds)
    for _ in range(epochs):
        merged_epoch(state)
    modal = [state.modal_tags(0), state.modal_tags(1)]
    models = map_estimates(state, modal)
    return TrainResult(
        models={lang_pair[0]: models[0], lang_pair[1]: models[1]},
        modal_tags=modal,
        state=state,
        runtime_seconds=time.perf_counter() - started,
        mh_acceptance=state.mh_accepts / max(state.mh_proposals, 1),
    )


def joint_pair_distribution(
    state: SamplerState, sentence_slot: int, i: int, j: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Joint conditional over permitted tag pairs for the aligned pair
    (i, j) of one training sentence; i and j are sentence-local."""
    enc0, enc1 = state.encoded
    c0, c1 = state.counts
    h = state.hyper
    lo0 = int(enc0.sent_start[sentence_slot])
    hi0 = int(enc0.sent_start[sentence_slot + 1])
    lo1 = int(enc1.sent_start[sentence_slot])
    hi1 = int(enc1.sent_start[sentence_slot + 1])
    gi, gj = lo0 + i, lo1 + j
    if int(state.partner[0][gi]) != gj:
        raise ConfigError(f"positions ({i}, {j}) are not aligned in this sentence")
    return kernels.pair_conditional(
        gi, gj, lo0, hi0, lo1, hi1,
        enc0.words, state.y[0], enc0.allowed_off, enc0.allowed_tag,
        c0.emit, c0.emit_tot, c0.trans, c0.ctx_tot, enc0.wt_size,
        h.emission_prior[enc0.language.id], h.transition_prior[enc0.language.id],
        enc1.words, state.y[1], enc1.allowed_off, enc1.allowed_tag,
        c1.emit, c1.emit_tot, c1.trans, c1.ctx_tot, enc1.wt_size,
        h.emission_prior[enc1.language.id], h.transition_prior[enc1.language.id],
        state.partner[0], state.partner[1],
        state.coupling.pairs, state.coupling.total, h.coupling_prior,
    )
