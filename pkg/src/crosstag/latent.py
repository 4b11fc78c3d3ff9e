"""Multilingual latent-variable model with Dirichlet-process superlingual tags.

Every densely aligned token cluster carries one latent value drawn from
a Dirichlet process; each value indexes one tag distribution per
language, and those distributions join each language's HMM factors as
extra experts.  With no alignment sets the model is exactly the
monolingual baseline run once per language.
"""

from __future__ import annotations

import time
from collections import Counter
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .alignments import AlignmentSet
from .corpus import Lexicon, TaggedCorpus
from .decode import map_estimates
from .errors import ConfigError, DataError
from .mono import TrainResult, train_mono
from .state import (
    Hyperparams,
    SamplerState,
    SuperlingualCounts,
    encode_language,
    encode_sets,
)
from .training import MH_INIT_ROUNDS, initial_mh, mh_round

DEFAULT_EPOCHS = 1000
MODAL_WINDOW = 100  # final epochs that vote on the modal tags

# Tag symbols merged into one initial superlingual value (determiners
# and articles play the same role in the corpora this models target).
DEFAULT_VALUE_MERGE = {"Article": "Determiner"}


def initial_value_symbols(
    corpus: TaggedCorpus, merge_map: Mapping[str, str] | None = None
) -> list[str]:
    """One initial superlingual value per tag symbol in the merged union
    of all languages' tagsets."""
    merge = DEFAULT_VALUE_MERGE if merge_map is None else dict(merge_map)
    union = {t for lang in corpus.languages for t in lang.tagset}
    merged = {merge.get(t, t) for t in union}
    return sorted(merged)


def initialize_latent(
    corpus: TaggedCorpus,
    lexicon: Lexicon,
    sets_by_sentence: Mapping[int, Sequence[AlignmentSet]],
    mono_tags: Mapping[str, np.ndarray],
    rng: np.random.Generator,
    supervised: Sequence[str] = (),
    merge_map: Mapping[str, str] | None = None,
) -> SamplerState:
    """Build the sampler state: monolingual tags, one initial value per
    part-of-speech category, each set assigned its members' majority tag."""
    lang_ids = [lang.id for lang in corpus.languages]
    encs = [encode_language(corpus, lexicon, l) for l in lang_ids]
    state = SamplerState(encs, Hyperparams.defaults(lang_ids), rng)
    for li, lang_id in enumerate(lang_ids):
        if lang_id in supervised:
            state.clamp_to_gold(lang_id)
        else:
            if lang_id not in mono_tags:
                raise ConfigError(f"initialize_latent: no monolingual result for {lang_id}")
            state.y[li][:] = mono_tags[lang_id]
    state.sets = encode_sets(encs, corpus, sets_by_sentence)

    merge = DEFAULT_VALUE_MERGE if merge_map is None else dict(merge_map)
    symbols = initial_value_symbols(corpus, merge_map)
    value_of_symbol = {s: v for v, s in enumerate(symbols)}
    base = state.token_base()
    z = np.zeros(state.sets.n_sets, dtype=np.int32)
    for s in range(state.sets.n_sets):
        votes: Counter[int] = Counter()
        for m in range(state.sets.set_off[s], state.sets.set_off[s + 1]):
            li = int(state.sets.set_lang[m])
            tok = int(state.sets.set_tok[m]) - base[li]
            symbol = encs[li].language.tagset[state.y[li][tok]]
            votes[value_of_symbol[merge.get(symbol, symbol)]] += 1
        top = max(votes.values())
        z[s] = min(v for v, c in votes.items() if c == top)
    state.z_of_set = z
    capacity = max(2 * len(symbols), len(symbols) + 8)
    state.sup = SuperlingualCounts.zeros(capacity, len(encs), max(e.n_tags for e in encs))
    state.recount()
    return state


def latent_epoch(state: SamplerState, record_hist: bool) -> int:
    """Tag sweeps per language, then superlingual sweeps, then MH.

    Returns the number of active superlingual values after the epoch.
    """
    h = state.hyper
    sets = state.sets
    sup = state.sup
    base = state.token_base()
    for li, enc in enumerate(state.encoded):
        if state.clamped[li]:
            continue
        counts = state.counts[li]
        uniforms = state.rng.random(enc.n_tokens)
        kernels.tag_sweep(
            enc.words, enc.sent_start, state.y[li],
            enc.allowed_off, enc.allowed_tag,
            counts.emit, counts.emit_tot, counts.trans, counts.ctx_tot, enc.wt_size,
            h.emission_prior[enc.language.id], h.transition_prior[enc.language.id],
            sets.cover_off, sets.cover_set, state.z_of_set,
            sup.counts, sup.totals,
            li, h.superlingual_prior[enc.language.id], base[li],
            uniforms,
        )
    uniforms = state.rng.random(sets.n_sets)
    y_all = state.y_all()
    n_tags_per_lang = np.asarray([e.n_tags for e in state.encoded], dtype=np.int64)
    psi0 = np.asarray(
        [h.superlingual_prior[e.language.id] for e in state.encoded], dtype=np.float64
    )
    start = 0
    while start < sets.n_sets:
        # The free-slot stack needs room for every retirement the sweep
        # might push, so it is sized to the full capacity.
        free = np.zeros(sup.capacity, dtype=np.int32)
        free[: len(sup.free_slots)] = sup.free_slots
        free_top = np.asarray([len(sup.free_slots)], dtype=np.int64)
        scalars = np.asarray([sup.n_assigned, sup.k_active], dtype=np.int64)
        start = kernels.set_sweep(
            y_all, sets.set_off, sets.set_lang, sets.set_tok, state.z_of_set,
            sup.counts, sup.totals, sup.usage,
            free, free_top, scalars,
            n_tags_per_lang, psi0, h.dp_concentration, False,
            uniforms, start,
        )
        sup.free_slots = [int(v) for v in free[: int(free_top[0])]]
        sup.n_assigned = int(scalars[0])
        if start < sets.n_sets:
            sup.grow()
    mh_round(state)
    state.iteration += 1
    if record_hist:
        state.update_histograms()
    return state.sup.k_active


def train_latent(
    corpus: TaggedCorpus,
    lexicon: Lexicon,
    sets_by_sentence: Mapping[int, Sequence[AlignmentSet]],
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    mono_epochs: int | None = None,
    supervised: Sequence[str] = (),
    mh_init_rounds: int = MH_INIT_ROUNDS,
    merge_map: Mapping[str, str] | None = None,
) -> TrainResult:
    """Joint training over every language in the corpus.

    Monolingual models are trained first (one derived seed each) to
    initialize the tags; supervised languages are clamped to gold and
    never resampled, but their counts still steer the shared tables.
    """
    if len(corpus.languages) < 2:
        raise ConfigError("train_latent needs at least two languages")
    for lang_id in supervised:
        corpus.language(lang_id)  # raises on unknown ids
    started = time.perf_counter()
    seed_seq = np.random.SeedSequence(seed)
    children = seed_seq.spawn(len(corpus.languages) + 1)
    mono_tags: dict[str, np.ndarray] = {}
    for li, lang in enumerate(corpus.languages):
        if lang.id in supervised:
            continue
        mono_rng = np.random.default_rng(children[li])
        result = train_mono(
            corpus.restricted_to([lang.id]), lexicon, lang.id,
            epochs=mono_epochs if mono_epochs is not None else 200,
            rng=mono_rng,
        )
        mono_tags[lang.id] = result.modal_tags[0]
    rng = np.random.default_rng(children[-1])
    state = initialize_latent(
        corpus, lexicon, sets_by_sentence, mono_tags, rng,
        supervised=supervised, merge_map=merge_map,
    )
    initial_mh(state, mh_init_rounds)
    active_per_epoch = []
    for epoch in range(epochs):
        active = latent_epoch(state, record_hist=(epoch >= epochs - MODAL_WINDOW))
        active_per_epoch.append(active)
    modal = [state.modal_tags(li) for li in range(len(state.encoded))]
    for li in range(len(state.encoded)):
        if state.clamped[li]:
            modal[li] = state.encoded[li].gold.copy()
    models = map_estimates(state, modal)
    return TrainResult(
        models={e.language.id: m for e, m in zip(state.encoded, models)},
        modal_tags=modal,
        state=state,
        runtime_seconds=time.perf_counter() - started,
        mh_acceptance=state.mh_accepts / max(state.mh_proposals, 1),
        active_values_per_epoch=active_per_epoch,
    )


def train_latent_semisupervised(
    corpus: TaggedCorpus,
    lexicon: Lexicon,
    sets_by_sentence: Mapping[int, Sequence[AlignmentSet]],
    supervised_languages: Sequence[str],
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    **kwargs,
) -> TrainResult:
    """Latent-variable training with gold tags fixed for some languages."""
    for lang_id in supervised_languages:
        if not corpus.has_gold(lang_id):
            raise DataError(f"supervised language {lang_id} lacks gold tags")
    return train_latent(
        corpus, lexicon, sets_by_sentence,
        epochs=epochs, seed=seed, supervised=supervised_languages, **kwargs,
    )


def superlingual_distribution(
    state: SamplerState, set_index: int
) -> tuple[np.ndarray, np.ndarray]:
    """Conditional over candidate values for one set: existing active
    values plus -1 for a fresh one."""
    sets = state.sets
    sup = state.sup
    h = state.hyper
    y_all = state.y_all()
    n_tags = np.asarray([e.n_tags for e in state.encoded], dtype=np.int64)
    psi0 = np.asarray(
        [h.superlingual_prior[e.language.id] for e in state.encoded], dtype=np.float64
    )
    z_old = int(state.z_of_set[set_index])
    usage = sup.usage.copy()
    counts = sup.counts.copy()
    totals = sup.totals.copy()
    usage[z_old] -= 1
    n_assigned = sup.n_assigned - 1
    for m in range(sets.set_off[set_index], sets.set_off[set_index + 1]):
        li = int(sets.set_lang[m])
        tok = int(sets.set_tok[m])
        counts[z_old, li, y_all[tok]] -= 1
        totals[z_old, li] -= 1
    denom = n_assigned + h.dp_concentration
    values, weights = kernels.set_weights(
        set_index, y_all, sets.set_off, sets.set_lang, sets.set_tok,
        counts, totals, usage, n_tags, psi0, h.dp_concentration, denom,
    )
    return values, weights / weights.sum()


def sample_superlingual(state: SamplerState, set_index: int) -> int:
    """Resample one set's value in place (single-site Gibbs step)."""
    from .kernels.pure import _pick

    values, probs = superlingual_distribution(state, set_index)
    pick = int(values[_pick(probs, float(probs.sum()), state.rng.random())])
    sets = state.sets
    sup = state.sup
    z_old = int(state.z_of_set[set_index])
    y_all = state.y_all()
    sup.usage[z_old] -= 1
    for m in range(sets.set_off[set_index], sets.set_off[set_index + 1]):
        li = int(sets.set_lang[m])
        sup.counts[z_old, li, y_all[sets.set_tok[m]]] -= 1
        sup.totals[z_old, li] -= 1
    if sup.usage[z_old] == 0:
        sup.free_slots.append(z_old)
    if pick < 0:
        if not sup.free_slots:
            sup.grow()
        pick = sup.free_slots.pop()
    state.z_of_set[set_index] = pick
    sup.usage[pick] += 1
    for m in range(sets.set_off[set_index], sets.set_off[set_index + 1]):
        li = int(sets.set_lang[m])
        sup.counts[pick, li, y_all[sets.set_tok[m]]] += 1
        sup.totals[pick, li] += 1
    return pick


def superlingual_report(state: SamplerState, top_k: int = 3) -> list[dict]:
    """Per-value smoothed tag distributions (the shape of the paper-style
    per-value summaries): for each active value and language, the most
    probable tags."""
    report = []
    h = state.hyper
    for z in state.sup.active_values():
        entry = {"value": int(z), "usage": int(state.sup.usage[z]), "languages": {}}
        for li, enc in enumerate(state.encoded):
            psi0 = h.superlingual_prior[enc.language.id]
            probs = (state.sup.counts[z, li, : enc.n_tags] + psi0) / (
                state.sup.totals[z, li] + enc.n_tags * psi0
            )
            order = np.argsort(-probs)[:top_k]
            entry["languages"][enc.language.id] = [
                (enc.language.tagset[t], float(probs[t])) for t in order
            ]
        report.append(entry)
    return report
