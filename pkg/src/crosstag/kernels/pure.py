"""Pure-Python sampling kernels.

These are the portable twins of the compiled kernels in
``_speedups.pyx``: same signatures, same arithmetic, same RNG
consumption, so a run produces the same trajectory under either
backend.  Keep the two files in sync.

Conventions shared by every kernel:

* tag ids are 0..T-1; index T is the start symbol in transition
  contexts and the end tag in transition predictions;
* counts are decremented before a slot is sampled and re-incremented
  afterwards, so tables always reflect "all other" events;
* one uniform variate is consumed per sampling decision, pre-drawn by
  the driver (indexed by token/set id for the flat sweeps, sequential
  for the merged sweep).
"""

from __future__ import annotations

import numpy as np

NEG_INF = float("-inf")


def _pick(weights, total, u):
    """Sample an index proportionally to ``weights`` given one uniform."""
    r = u * total
    acc = 0.0
    last = 0
    for k in range(len(weights)):
        acc += weights[k]
        last = k
        if r < acc:
            return k
    return last


# ---------------------------------------------------------------------------
# Tag sampling (monolingual core, shared by every model)


def _tag_weights(
    pos, lo, hi, words, y,
    allowed_off, allowed_tag,
    emit, emit_tot, trans, ctx_tot, wt_size,
    theta0, phi0,
    cover_off, cover_set, z_of_set, sup_counts, sup_tot,
    lang_idx, psi0, cover_base,
):
    """Unnormalized weights over the word's permitted tags.

    Assumes the position's events are already removed from the tables.
    The three trigram factors are conditioned sequentially: when two of
    the position's events share a context or a full cell, the later
    factor sees the earlier one as an extra count, which makes the
    conditional exact for the collapsed model.
    """
    n_tags = emit.shape[0]
    start = n_tags
    norm = n_tags + 1
    w = int(words[pos])
    c1a = int(y[pos - 2]) if pos - 2 >= lo else start
    c1b = int(y[pos - 1]) if pos - 1 >= lo else start
    has_e3 = pos + 1 < hi
    n1 = int(y[pos + 1]) if has_e3 else n_tags  # end tag
    n2 = (int(y[pos + 2]) if pos + 2 < hi else n_tags) if has_e3 else -1

    a_lo, a_hi = int(allowed_off[w]), int(allowed_off[w + 1])
    cands = allowed_tag[a_lo:a_hi]
    weights = np.empty(a_hi - a_lo, dtype=np.float64)
    cov_lo = int(cover_off[cover_base + pos])
    cov_hi = int(cover_off[cover_base + pos + 1])
    for k in range(len(cands)):
        t = int(cands[k])
        weight = (emit[t, w] + theta0) / (emit_tot[t] + wt_size[t] * theta0)
        num = trans[c1a, c1b, t] + phi0
        den = ctx_tot[c1a, c1b] + norm * phi0
        weight *= num / den
        same_ctx_12 = c1b == c1a and t == c1b
        num = trans[c1b, t, n1] + phi0 + (1.0 if same_ctx_12 and n1 == t else 0.0)
        den = ctx_tot[c1b, t] + norm * phi0 + (1.0 if same_ctx_12 else 0.0)
        weight *= num / den
        if has_e3:
            adj_n = 0.0
            adj_d = 0.0
            if t == c1a and n1 == c1b:
                adj_d += 1.0
                if n2 == t:
                    adj_n += 1.0
            if t == c1b and n1 == t:
                adj_d += 1.0
                if n2 == n1:
                    adj_n += 1.0
            num = trans[t, n1, n2] + phi0 + adj_n
            den = ctx_tot[t, n1] + norm * phi0 + adj_d
            weight *= num / den
        for m in range(cov_lo, cov_hi):
            z = int(z_of_set[cover_set[m]])
            weight *= (sup_counts[z, lang_idx, t] + psi0) / (
                sup_tot[z, lang_idx] + n_tags * psi0
            )
        weights[k] = weight
    return cands, weights


def _remove_tag_events(pos, lo, hi, t, w, emit, emit_tot, trans, ctx_tot, y, n_tags, sign):
    start = n_tags
    c1a = int(y[pos - 2]) if pos - 2 >= lo else start
    c1b = int(y[pos - 1]) if pos - 1 >= lo else start
    emit[t, w] += sign
    emit_tot[t] += sign
    trans[c1a, c1b, t] += sign
    ctx_tot[c1a, c1b] += sign
    n1 = int(y[pos + 1]) if pos + 1 < hi else n_tags
    trans[c1b, t, n1] += sign
    ctx_tot[c1b, t] += sign
    if pos + 1 < hi:
        n2 = int(y[pos + 2]) if pos + 2 < hi else n_tags
        trans[t, n1, n2] += sign
        ctx_tot[t, n1] += sign


def _remove_sup_events(pos, t, cover_off, cover_set, z_of_set, sup_counts, sup_tot, lang_idx, cover_base, sign):
    for m in range(int(cover_off[cover_base + pos]), int(cover_off[cover_base + pos + 1])):
        z = int(z_of_set[cover_set[m]])
        sup_counts[z, lang_idx, t] += sign
        sup_tot[z, lang_idx] += sign


def tag_sweep(
    words, sent_start, y,
    allowed_off, allowed_tag,
    emit, emit_tot, trans, ctx_tot, wt_size,
    theta0, phi0,
    cover_off, cover_set, z_of_set, sup_counts, sup_tot,
    lang_idx, psi0, cover_base,
    uniforms,
):
    """One Gibbs sweep over every token of one language, in corpus order."""
    n_tags = emit.shape[0]
    for s in range(len(sent_start) - 1):
        lo, hi = int(sent_start[s]), int(sent_start[s + 1])
        for pos in range(lo, hi):
            old = int(y[pos])
            w = int(words[pos])
            _remove_tag_events(pos, lo, hi, old, w, emit, emit_tot, trans, ctx_tot, y, n_tags, -1)
            _remove_sup_events(pos, old, cover_off, cover_set, z_of_set, sup_counts, sup_tot, lang_idx, cover_base, -1)
            cands, weights = _tag_weights(
                pos, lo, hi, words, y, allowed_off, allowed_tag,
                emit, emit_tot, trans, ctx_tot, wt_size, theta0, phi0,
                cover_off, cover_set, z_of_set, sup_counts, sup_tot,
                lang_idx, psi0, cover_base,
            )
            total = 0.0
            for k in range(len(weights)):
                total += weights[k]
            new = int(cands[_pick(weights, total, float(uniforms[pos]))])
            y[pos] = new
            _remove_tag_events(pos, lo, hi, new, w, emit, emit_tot, trans, ctx_tot, y, n_tags, +1)
            _remove_sup_events(pos, new, cover_off, cover_set, z_of_set, sup_counts, sup_tot, lang_idx, cover_base, +1)


def tag_conditional(
    pos, lo, hi, words, y,
    allowed_off, allowed_tag,
    emit, emit_tot, trans, ctx_tot, wt_size,
    theta0, phi0,
    cover_off, cover_set, z_of_set, sup_counts, sup_tot,
    lang_idx, psi0, cover_base,
):
    """Normalized conditional distribution at one slot; count tables
    must reflect the full current assignment."""
    old = int(y[pos])
    w = int(words[pos])
    n_tags = emit.shape[0]
    _remove_tag_events(pos, lo, hi, old, w, emit, emit_tot, trans, ctx_tot, y, n_tags, -1)
    _remove_sup_events(pos, old, cover_off, cover_set, z_of_set, sup_counts, sup_tot, lang_idx, cover_base, -1)
    cands, weights = _tag_weights(
        pos, lo, hi, words, y, allowed_off, allowed_tag,
        emit, emit_tot, trans, ctx_tot, wt_size, theta0, phi0,
        cover_off, cover_set, z_of_set, sup_counts, sup_tot,
        lang_idx, psi0, cover_base,
    )
    _remove_tag_events(pos, lo, hi, old, w, emit, emit_tot, trans, ctx_tot, y, n_tags, +1)
    _remove_sup_events(pos, old, cover_off, cover_set, z_of_set, sup_counts, sup_tot, lang_idx, cover_base, +1)
    return np.asarray(cands).copy(), weights / weights.sum()


# ---------------------------------------------------------------------------
# Merged-node sweep (bilingual joint sampling)


def _plain_ratio(trans, ctx_tot, c1, c2, t3, phi0, norm):
    return (trans[c1, c2, t3] + phi0) / (ctx_tot[c1, c2] + norm * phi0)


def _pair_weights(
    i, j, lo0, hi0, lo1, hi1,
    words0, y0, allowed_off0, allowed_tag0, emit0, emit_tot0, trans0, ctx0, wt0, theta0_0, phi0_0,
    words1, y1, allowed_off1, allowed_tag1, emit1, emit_tot1, trans1, ctx1, wt1, theta0_1, phi0_1,
    partner0, partner1, pair_counts, pair_total, omega0,
):
    """Joint weights over permitted tag pairs for one aligned pair.

    Counts must already exclude the pair's own events.  All ratios are
    the plain smoothed estimates of the approximate product-of-experts
    marginalization; successor positions that are themselves aligned
    contribute a bracket renormalized over all tag pairs.
    """
    t0_n = emit0.shape[0]
    t1_n = emit1.shape[0]
    norm0, norm1 = t0_n + 1, t1_n + 1
    start0, start1 = t0_n, t1_n

    w0 = int(words0[i])
    w1 = int(words1[j])
    cands0 = np.asarray(
        allowed_tag0[int(allowed_off0[w0]):int(allowed_off0[w0 + 1])]
    ).copy()
    cands1 = np.asarray(
        allowed_tag1[int(allowed_off1[w1]):int(allowed_off1[w1 + 1])]
    ).copy()
    k0, k1 = len(cands0), len(cands1)

    c0a = int(y0[i - 2]) if i - 2 >= lo0 else start0
    c0b = int(y0[i - 1]) if i - 1 >= lo0 else start0
    c1a = int(y1[j - 2]) if j - 2 >= lo1 else start1
    c1b = int(y1[j - 1]) if j - 1 >= lo1 else start1

    omega_hat = (pair_counts + omega0) / (pair_total[0] + t0_n * t1_n * omega0)

    # One-sided accumulators: emission times the factor predicting the
    # sampled tag itself.
    a0 = np.empty(k0)
    for k in range(k0):
        t = int(cands0[k])
        a0[k] = (emit0[t, w0] + theta0_0) / (emit_tot0[t] + wt0[t] * theta0_0)
        a0[k] *= _plain_ratio(trans0, ctx0, c0a, c0b, t, phi0_0, norm0)
    b1 = np.empty(k1)
    for k in range(k1):
        t = int(cands1[k])
        b1[k] = (emit1[t, w1] + theta0_1) / (emit_tot1[t] + wt1[t] * theta0_1)
        b1[k] *= _plain_ratio(trans1, ctx1, c1a, c1b, t, phi0_1, norm1)

    # Successor events: position i+1 is predicted in context (c0b, t),
    # position i+2 in context (t, y0[i+1]); same shape on the other
    # side.  Events predicting an unaligned token or the end tag fold
    # into the one-sided vectors; events predicting an aligned token
    # turn into product-of-experts brackets.
    def ctx0_of(p, t):
        return (c0b, t) if p == i + 1 else (t, int(y0[i + 1]))

    def ctx1_of(q, t):
        return (c1b, t) if q == j + 1 else (t, int(y1[j + 1]))

    brackets = []

    def two_sided(p, q):
        yp, yq = int(y0[p]), int(y1[q])
        rows0 = np.empty((k0, t0_n))
        num0 = np.empty(k0)
        for k in range(k0):
            ca, cb = ctx0_of(p, int(cands0[k]))
            den = ctx0[ca, cb] + norm0 * phi0_0
            rows0[k] = (trans0[ca, cb, :t0_n] + phi0_0) / den
            num0[k] = (trans0[ca, cb, yp] + phi0_0) / den
        rows1 = np.empty((k1, t1_n))
        num1 = np.empty(k1)
        for k in range(k1):
            ca, cb = ctx1_of(q, int(cands1[k]))
            den = ctx1[ca, cb] + norm1 * phi0_1
            rows1[k] = (trans1[ca, cb, :t1_n] + phi0_1) / den
            num1[k] = (trans1[ca, cb, yq] + phi0_1) / den
        z = rows0 @ omega_hat @ rows1.T
        brackets.append(np.multiply.outer(num0, num1) / z)

    # Language-0 successor events.
    handled_q = set()
    p_list = []
    if i + 1 < hi0:
        p_list.append((i + 1, True))
        p_list.append((i + 2, i + 2 < hi0))
    elif i + 1 == hi0:
        p_list.append((i + 1, False))
    for p, is_real in p_list:
        if not is_real:  # predicts the end tag
            for k in range(k0):
                ca, cb = ctx0_of(p, int(cands0[k]))
                a0[k] *= _plain_ratio(trans0, ctx0, ca, cb, t0_n, phi0_0, norm0)
            continue
        q = int(partner0[p])
        if q < 0:
            yp = int(y0[p])
            for k in range(k0):
                ca, cb = ctx0_of(p, int(cands0[k]))
                a0[k] *= _plain_ratio(trans0, ctx0, ca, cb, yp, phi0_0, norm0)
        elif q == j + 1 or q == j + 2:
            handled_q.add(q)
            two_sided(p, q)
        else:
            # Partner context is fixed; the bracket collapses to a
            # vector over this language's candidates.
            yp, yq = int(y0[p]), int(y1[q])
            ca_f = int(y1[q - 2]) if q - 2 >= lo1 else start1
            cb_f = int(y1[q - 1]) if q - 1 >= lo1 else start1
            den1 = ctx1[ca_f, cb_f] + norm1 * phi0_1
            row1 = (trans1[ca_f, cb_f, :t1_n] + phi0_1) / den1
            num1 = (trans1[ca_f, cb_f, yq] + phi0_1) / den1
            mid = omega_hat @ row1
            for k in range(k0):
                ca, cb = ctx0_of(p, int(cands0[k]))
                den = ctx0[ca, cb] + norm0 * phi0_0
                row0 = (trans0[ca, cb, :t0_n] + phi0_0) / den
                num0 = (trans0[ca, cb, yp] + phi0_0) / den
                a0[k] *= num0 * num1 / float(row0 @ mid)

    # Language-1 successor events not already covered by a bracket.
    q_list = []
    if j + 1 < hi1:
        q_list.append((j + 1, True))
        q_list.append((j + 2, j + 2 < hi1))
    elif j + 1 == hi1:
        q_list.append((j + 1, False))
    for q, is_real in q_list:
        if not is_real:
            for k in range(k1):
                ca, cb = ctx1_of(q, int(cands1[k]))
                b1[k] *= _plain_ratio(trans1, ctx1, ca, cb, t1_n, phi0_1, norm1)
            continue
        if q in handled_q:
            continue
        p = int(partner1[q])
        if p < 0:
            yq = int(y1[q])
            for k in range(k1):
                ca, cb = ctx1_of(q, int(cands1[k]))
                b1[k] *= _plain_ratio(trans1, ctx1, ca, cb, yq, phi0_1, norm1)
        else:
            # Monotonicity puts p beyond i+2 here, so this side's
            # context is fixed and the bracket is a vector in t'.
            yq, yp = int(y1[q]), int(y0[p])
            ca_f = int(y0[p - 2]) if p - 2 >= lo0 else start0
            cb_f = int(y0[p - 1]) if p - 1 >= lo0 else start0
            den0 = ctx0[ca_f, cb_f] + norm0 * phi0_0
            row0 = (trans0[ca_f, cb_f, :t0_n] + phi0_0) / den0
            num0 = (trans0[ca_f, cb_f, yp] + phi0_0) / den0
            mid = row0 @ omega_hat
            for k in range(k1):
                ca, cb = ctx1_of(q, int(cands1[k]))
                den = ctx1[ca, cb] + norm1 * phi0_1
                row1 = (trans1[ca, cb, :t1_n] + phi0_1) / den
                num1 = (trans1[ca, cb, yq] + phi0_1) / den
                b1[k] *= num0 * num1 / float(mid @ row1)

    weights = np.multiply.outer(a0, b1)
    weights *= omega_hat[cands0[:, None], cands1[None, :]]
    for bracket in brackets:
        weights *= bracket
    return cands0, cands1, weights


def _remove_pair_events(
    i, j, lo0, hi0, lo1, hi1, t0, t1, w0, w1,
    emit0, emit_tot0, trans0, ctx0, y0,
    emit1, emit_tot1, trans1, ctx1, y1,
    pair_counts, pair_total, n_tags0, n_tags1, sign,
):
    _remove_tag_events(i, lo0, hi0, t0, w0, emit0, emit_tot0, trans0, ctx0, y0, n_tags0, sign)
    _remove_tag_events(j, lo1, hi1, t1, w1, emit1, emit_tot1, trans1, ctx1, y1, n_tags1, sign)
    pair_counts[t0, t1] += sign
    pair_total[0] += sign


def merged_sweep(
    words0, sent_start0, y0, allowed_off0, allowed_tag0,
    emit0, emit_tot0, trans0, ctx0, wt0, theta0_0, phi0_0,
    words1, sent_start1, y1, allowed_off1, allowed_tag1,
    emit1, emit_tot1, trans1, ctx1, wt1, theta0_1, phi0_1,
    partner0, partner1, pair_counts, pair_total, omega0,
    cover_off0, cover_off1, empty_i32, empty_sup3, empty_sup2,
    uniforms,
):
    """One Gibbs sweep over a bilingual corpus.

    Within a sentence pair: language-0 positions left to right, joint
    pair draws fired when an aligned position is reached, then the
    remaining unaligned language-1 positions.  Unaligned draws go
    through the exact monolingual core, so with no alignments the sweep
    is the monolingual sampler for both languages.
    """
    n_tags0 = emit0.shape[0]
    n_tags1 = emit1.shape[0]
    cursor = 0
    for s in range(len(sent_start0) - 1):
        lo0, hi0 = int(sent_start0[s]), int(sent_start0[s + 1])
        lo1, hi1 = int(sent_start1[s]), int(sent_start1[s + 1])
        for i in range(lo0, hi0):
            j = int(partner0[i])
            if j < 0:
                old = int(y0[i])
                w = int(words0[i])
                _remove_tag_events(i, lo0, hi0, old, w, emit0, emit_tot0, trans0, ctx0, y0, n_tags0, -1)
                cands, weights = _tag_weights(
                    i, lo0, hi0, words0, y0, allowed_off0, allowed_tag0,
                    emit0, emit_tot0, trans0, ctx0, wt0, theta0_0, phi0_0,
                    cover_off0, empty_i32, empty_i32, empty_sup3, empty_sup2,
                    0, 1.0, 0,
                )
                total = 0.0
                for k in range(len(weights)):
                    total += weights[k]
                new = int(cands[_pick(weights, total, float(uniforms[cursor]))])
                cursor += 1
                y0[i] = new
                _remove_tag_events(i, lo0, hi0, new, w, emit0, emit_tot0, trans0, ctx0, y0, n_tags0, +1)
            else:
                t0_old, t1_old = int(y0[i]), int(y1[j])
                w0, w1 = int(words0[i]), int(words1[j])
                _remove_pair_events(
                    i, j, lo0, hi0, lo1, hi1, t0_old, t1_old, w0, w1,
                    emit0, emit_tot0, trans0, ctx0, y0,
                    emit1, emit_tot1, trans1, ctx1, y1,
                    pair_counts, pair_total, n_tags0, n_tags1, -1,
                )
                cands0, cands1, weights = _pair_weights(
                    i, j, lo0, hi0, lo1, hi1,
                    words0, y0, allowed_off0, allowed_tag0, emit0, emit_tot0, trans0, ctx0, wt0, theta0_0, phi0_0,
                    words1, y1, allowed_off1, allowed_tag1, emit1, emit_tot1, trans1, ctx1, wt1, theta0_1, phi0_1,
                    partner0, partner1, pair_counts, pair_total, omega0,
                )
                flat = weights.ravel()
                total = 0.0
                for k in range(len(flat)):
                    total += flat[k]
                pick = _pick(flat, total, float(uniforms[cursor]))
                cursor += 1
                t0_new = int(cands0[pick // len(cands1)])
                t1_new = int(cands1[pick % len(cands1)])
                y0[i] = t0_new
                y1[j] = t1_new
                _remove_pair_events(
                    i, j, lo0, hi0, lo1, hi1, t0_new, t1_new, w0, w1,
                    emit0, emit_tot0, trans0, ctx0, y0,
                    emit1, emit_tot1, trans1, ctx1, y1,
                    pair_counts, pair_total, n_tags0, n_tags1, +1,
                )
        for j in range(lo1, hi1):
            if int(partner1[j]) >= 0:
                continue
            old = int(y1[j])
            w = int(words1[j])
            _remove_tag_events(j, lo1, hi1, old, w, emit1, emit_tot1, trans1, ctx1, y1, n_tags1, -1)
            cands, weights = _tag_weights(
                j, lo1, hi1, words1, y1, allowed_off1, allowed_tag1,
                emit1, emit_tot1, trans1, ctx1, wt1, theta0_1, phi0_1,
                cover_off1, empty_i32, empty_i32, empty_sup3, empty_sup2,
                0, 1.0, 0,
            )
            total = 0.0
            for k in range(len(weights)):
                total += weights[k]
            new = int(cands[_pick(weights, total, float(uniforms[cursor]))])
            cursor += 1
            y1[j] = new
            _remove_tag_events(j, lo1, hi1, new, w, emit1, emit_tot1, trans1, ctx1, y1, n_tags1, +1)
    return cursor


def pair_conditional(
    i, j, lo0, hi0, lo1, hi1,
    words0, y0, allowed_off0, allowed_tag0, emit0, emit_tot0, trans0, ctx0, wt0, theta0_0, phi0_0,
    words1, y1, allowed_off1, allowed_tag1, emit1, emit_tot1, trans1, ctx1, wt1, theta0_1, phi0_1,
    partner0, partner1, pair_counts, pair_total, omega0,
):
    """Normalized joint distribution over permitted tag pairs at (i, j);
    count tables must reflect the full current assignment."""
    n_tags0 = emit0.shape[0]
    n_tags1 = emit1.shape[0]
    t0_old, t1_old = int(y0[i]), int(y1[j])
    w0, w1 = int(words0[i]), int(words1[j])
    _remove_pair_events(
        i, j, lo0, hi0, lo1, hi1, t0_old, t1_old, w0, w1,
        emit0, emit_tot0, trans0, ctx0, y0,
        emit1, emit_tot1, trans1, ctx1, y1,
        pair_counts, pair_total, n_tags0, n_tags1, -1,
    )
    cands0, cands1, weights = _pair_weights(
        i, j, lo0, hi0, lo1, hi1,
        words0, y0, allowed_off0, allowed_tag0, emit0, emit_tot0, trans0, ctx0, wt0, theta0_0, phi0_0,
        words1, y1, allowed_off1, allowed_tag1, emit1, emit_tot1, trans1, ctx1, wt1, theta0_1, phi0_1,
        partner0, partner1, pair_counts, pair_total, omega0,
    )
    _remove_pair_events(
        i, j, lo0, hi0, lo1, hi1, t0_old, t1_old, w0, w1,
        emit0, emit_tot0, trans0, ctx0, y0,
        emit1, emit_tot1, trans1, ctx1, y1,
        pair_counts, pair_total, n_tags0, n_tags1, +1,
    )
    return cands0, cands1, weights / weights.sum()


# ---------------------------------------------------------------------------
# Superlingual (alignment-set) value sampling


def set_weights(
    s, y_all, set_off, set_lang, set_tok,
    sup_counts, sup_tot, usage,
    n_tags_per_lang, psi0_per_lang, alpha, denom,
):
    """CRP-weighted likelihood of each candidate value for one set.

    Returns (values, weights) where the final entry of ``values`` is -1
    for "instantiate a fresh value".  Counts must already exclude this
    set's assignment.
    """
    cap = len(usage)
    values = []
    weights = []
    for z in range(cap):
        if usage[z] <= 0:
            continue
        weight = usage[z] / denom
        for m in range(int(set_off[s]), int(set_off[s + 1])):
            li = int(set_lang[m])
            t = int(y_all[set_tok[m]])
            weight *= (sup_counts[z, li, t] + psi0_per_lang[li]) / (
                sup_tot[z, li] + n_tags_per_lang[li] * psi0_per_lang[li]
            )
        values.append(z)
        weights.append(weight)
    fresh = alpha / denom
    for m in range(int(set_off[s]), int(set_off[s + 1])):
        li = int(set_lang[m])
        fresh *= 1.0 / n_tags_per_lang[li]
    values.append(-1)
    weights.append(fresh)
    return np.asarray(values, dtype=np.int64), np.asarray(weights, dtype=np.float64)


def set_sweep(
    y_all, set_off, set_lang, set_tok, z_of_set,
    sup_counts, sup_tot, usage,
    free_slots, free_top, scalars,
    n_tags_per_lang, psi0_per_lang, alpha, denom_is_assigned,
    uniforms, start,
):
    """Resample superlingual values for sets ``start..``; returns the
    index of the first unprocessed set (== n_sets when done, earlier
    when a fresh value is possible but no free slot remains, in which
    case the caller grows the tables and re-enters).

    ``scalars`` holds [n_assigned, k_active]; ``free_top`` is a 1-cell
    cursor into ``free_slots``.
    """
    n_sets = len(set_off) - 1
    for s in range(start, n_sets):
        if free_top[0] == 0:
            return s
        z_old = int(z_of_set[s])
        usage[z_old] -= 1
        scalars[0] -= 1
        for m in range(int(set_off[s]), int(set_off[s + 1])):
            li = int(set_lang[m])
            t = int(y_all[set_tok[m]])
            sup_counts[z_old, li, t] -= 1
            sup_tot[z_old, li] -= 1
        if usage[z_old] == 0:
            scalars[1] -= 1
            free_slots[free_top[0]] = z_old
            free_top[0] += 1
        denom = (scalars[0] if denom_is_assigned else scalars[1]) + alpha
        values, weights = set_weights(
            s, y_all, set_off, set_lang, set_tok,
            sup_counts, sup_tot, usage,
            n_tags_per_lang, psi0_per_lang, alpha, denom,
        )
        total = 0.0
        for k in range(len(weights)):
            total += weights[k]
        z_new = int(values[_pick(weights, total, float(uniforms[s]))])
        if z_new < 0:
            free_top[0] -= 1
            z_new = int(free_slots[free_top[0]])
            scalars[1] += 1
        z_of_set[s] = z_new
        usage[z_new] += 1
        scalars[0] += 1
        for m in range(int(set_off[s]), int(set_off[s + 1])):
            li = int(set_lang[m])
            t = int(y_all[set_tok[m]])
            sup_counts[z_new, li, t] += 1
            sup_tot[z_new, li] += 1
    return n_sets


# ---------------------------------------------------------------------------
# Viterbi decoding


def viterbi_sweep(
    words, sent_start, tok_allowed_off, tok_allowed_tag,
    log_trans, log_emit, log_unk, out,
):
    """Exact trigram Viterbi over each sentence.

    ``words`` may contain -1 for out-of-vocabulary tokens, which score
    ``log_unk`` per tag.  States are (previous, current) tag pairs with
    the padded start symbol; the end-tag transition closes each path.
    Ties resolve to the lowest-numbered state, scanned in order.
    """
    pad = log_trans.shape[0]  # n_tags + 1
    start = pad - 1
    end = pad - 1
    for s in range(len(sent_start) - 1):
        lo, hi = int(sent_start[s]), int(sent_start[s + 1])
        n = hi - lo
        dp = np.full((pad, pad), NEG_INF)
        dp[start, start] = 0.0
        bp = np.zeros((n, pad, pad), dtype=np.int32)
        for idx in range(n):
            pos = lo + idx
            w = int(words[pos])
            ndp = np.full((pad, pad), NEG_INF)
            for p2 in range(pad):
                for p1 in range(pad):
                    base = dp[p2, p1]
                    if base == NEG_INF:
                        continue
                    for a in range(int(tok_allowed_off[pos]), int(tok_allowed_off[pos + 1])):
                        t = int(tok_allowed_tag[a])
                        escore = log_emit[t, w] if w >= 0 else log_unk[t]
                        score = base + log_trans[p2, p1, t] + escore
                        if score > ndp[p1, t]:
                            ndp[p1, t] = score
                            bp[idx, p1, t] = p2
            dp = ndp
        best = NEG_INF
        b2 = b1 = start
        for p2 in range(pad):
            for p1 in range(pad):
                if dp[p2, p1] == NEG_INF:
                    continue
                score = dp[p2, p1] + log_trans[p2, p1, end]
                if score > best:
                    best = score
                    b2, b1 = p2, p1
        for idx in range(n - 1, -1, -1):
            out[lo + idx] = b1
            prev = int(bp[idx, b2, b1])
            b2, b1 = prev, b2
    return None
