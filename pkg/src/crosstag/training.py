"""Shared training machinery: hyperparameter updates and sweep plumbing."""

from __future__ import annotations

import numpy as np

from .formulas import (
    coupling_ll,
    emission_ll,
    mh_resample_hyperparam,
    transition_ll,
)
from .state import SamplerState

MH_INIT_ROUNDS = 200


def mh_round(state: SamplerState) -> None:
    """One Metropolis-Hastings update per re-estimated hyperparameter.

    Order is fixed for reproducibility: per language (in state order)
    the emission then transition prior, then the coupling prior when
    the model has one.  The DP concentration and superlingual base
    parameters are never updated.
    """
    for li, enc in enumerate(state.encoded):
        lang_id = enc.language.id
        counts = state.counts[li]
        value, accepted, _ = mh_resample_hyperparam(
            state.hyper.emission_prior[lang_id],
            lambda u: emission_ll(counts, enc.wt_size, u),
            state.rng,
        )
        state.hyper.emission_prior[lang_id] = value
        state.mh_proposals += 1
        state.mh_accepts += int(accepted)
        value, accepted, _ = mh_resample_hyperparam(
            state.hyper.transition_prior[lang_id],
            lambda u: transition_ll(counts, enc.n_tags, u),
            state.rng,
        )
        state.hyper.transition_prior[lang_id] = value
        state.mh_proposals += 1
        state.mh_accepts += int(accepted)
    if state.coupling is not None and state.hyper.coupling_prior is not None:
        value, accepted, _ = mh_resample_hyperparam(
            state.hyper.coupling_prior,
            lambda u: coupling_ll(state.coupling, u),
            state.rng,
        )
        state.hyper.coupling_prior = value
        state.mh_proposals += 1
        state.mh_accepts += int(accepted)


def initial_mh(state: SamplerState, rounds: int = MH_INIT_ROUNDS) -> None:
    """Hyperparameter-only burn-in run before the first Gibbs epoch."""
    for _ in range(rounds):
        mh_round(state)


def dummy_cover(state: SamplerState, lang_index: int) -> tuple:
    """Placeholder superlingual arrays for models without them."""
    cache = getattr(state, "_dummy_cover", None)
    if cache is None:
        cache = {}
        state._dummy_cover = cache
    if lang_index not in cache:
        n = state.encoded[lang_index].n_tokens
        cache[lang_index] = (
            np.zeros(n + 1, dtype=np.int32),  # cover_off
            np.zeros(0, dtype=np.int32),  # cover_set
            np.zeros(0, dtype=np.int32),  # z_of_set
            np.zeros((1, 1, 1), dtype=np.int64),  # sup_counts
            np.zeros((1, 1), dtype=np.int64),  # sup_tot
        )
    return cache[lang_index]
