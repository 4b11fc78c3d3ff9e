# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sampling kernels.

Twin of ``pure.py``: same signatures, same arithmetic, same RNG
consumption.  Any change here must be mirrored there.
"""

import numpy as np

cimport numpy as cnp

ctypedef cnp.int32_t i32
ctypedef cnp.int64_t i64
ctypedef cnp.float64_t f64

cdef double NEG_INF = float("-inf")


cdef inline Py_ssize_t _pick_c(f64[::1] weights, Py_ssize_t n, double total, double u) noexcept nogil:
    cdef double r = u * total
    cdef double acc = 0.0
    cdef Py_ssize_t k, last = 0
    for k in range(n):
        acc += weights[k]
        last = k
        if r < acc:
            return k
    return last


# ---------------------------------------------------------------------------
# Tag sampling (monolingual core, shared by every model)


cdef inline void _remove_tag_events_c(
    Py_ssize_t pos, Py_ssize_t lo, Py_ssize_t hi, int t, int w,
    i64[:, ::1] emit, i64[::1] emit_tot, i64[:, :, ::1] trans, i64[:, ::1] ctx_tot,
    i32[::1] y, int n_tags, int sign,
) noexcept nogil:
    cdef int start = n_tags
    cdef int c1a = y[pos - 2] if pos - 2 >= lo else start
    cdef int c1b = y[pos - 1] if pos - 1 >= lo else start
    cdef int n1, n2
    emit[t, w] += sign
    emit_tot[t] += sign
    trans[c1a, c1b, t] += sign
    ctx_tot[c1a, c1b] += sign
    n1 = y[pos + 1] if pos + 1 < hi else n_tags
    trans[c1b, t, n1] += sign
    ctx_tot[c1b, t] += sign
    if pos + 1 < hi:
        n2 = y[pos + 2] if pos + 2 < hi else n_tags
        trans[t, n1, n2] += sign
        ctx_tot[t, n1] += sign


cdef inline void _remove_sup_events_c(
    Py_ssize_t pos, int t,
    i32[::1] cover_off, i32[::1] cover_set, i32[::1] z_of_set,
    i64[:, :, ::1] sup_counts, i64[:, ::1] sup_tot,
    int lang_idx, Py_ssize_t cover_base, int sign,
) noexcept nogil:
    cdef Py_ssize_t m
    cdef int z
    for m in range(cover_off[cover_base + pos], cover_off[cover_base + pos + 1]):
        z = z_of_set[cover_set[m]]
        sup_counts[z, lang_idx, t] += sign
        sup_tot[z, lang_idx] += sign


cdef inline Py_ssize_t _tag_weights_c(
    Py_ssize_t pos, Py_ssize_t lo, Py_ssize_t hi,
    i32[::1] words, i32[::1] y,
    i32[::1] allowed_off, i32[::1] allowed_tag,
    i64[:, ::1] emit, i64[::1] emit_tot, i64[:, :, ::1] trans, i64[:, ::1] ctx_tot,
    i64[::1] wt_size,
    double theta0, double phi0,
    i32[::1] cover_off, i32[::1] cover_set, i32[::1] z_of_set,
    i64[:, :, ::1] sup_counts, i64[:, ::1] sup_tot,
    int lang_idx, double psi0, Py_ssize_t cover_base,
    f64[::1] out_weights,
) noexcept nogil:
    """Fill weights for every permitted tag; returns the candidate count.

    The three trigram factors are conditioned sequentially so the
    conditional stays exact when the position's events collide.
    """
    cdef int n_tags = <int>emit.shape[0]
    cdef int start = n_tags
    cdef double norm = n_tags + 1
    cdef int w = words[pos]
    cdef int c1a = y[pos - 2] if pos - 2 >= lo else start
    cdef int c1b = y[pos - 1] if pos - 1 >= lo else start
    cdef bint has_e3 = pos + 1 < hi
    cdef int n1 = y[pos + 1] if has_e3 else n_tags
    cdef int n2 = -1
    if has_e3:
        n2 = y[pos + 2] if pos + 2 < hi else n_tags
    cdef Py_ssize_t a_lo = allowed_off[w]
    cdef Py_ssize_t a_hi = allowed_off[w + 1]
    cdef Py_ssize_t cov_lo = cover_off[cover_base + pos]
    cdef Py_ssize_t cov_hi = cover_off[cover_base + pos + 1]
    cdef Py_ssize_t k, m
    cdef int t, z
    cdef double weight, num, den, adj_n, adj_d
    cdef bint same_ctx_12
    for k in range(a_hi - a_lo):
        t = allowed_tag[a_lo + k]
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
            z = z_of_set[cover_set[m]]
            weight *= (sup_counts[z, lang_idx, t] + psi0) / (
                sup_tot[z, lang_idx] + n_tags * psi0
            )
        out_weights[k] = weight
    return a_hi - a_lo


def tag_sweep(
    i32[::1] words, i32[::1] sent_start, i32[::1] y,
    i32[::1] allowed_off, i32[::1] allowed_tag,
    i64[:, ::1] emit, i64[::1] emit_tot, i64[:, :, ::1] trans, i64[:, ::1] ctx_tot,
    i64[::1] wt_size,
    double theta0, double phi0,
    i32[::1] cover_off, i32[::1] cover_set, i32[::1] z_of_set,
    i64[:, :, ::1] sup_counts, i64[:, ::1] sup_tot,
    int lang_idx, double psi0, Py_ssize_t cover_base,
    f64[::1] uniforms,
):
    cdef int n_tags = <int>emit.shape[0]
    cdef f64[::1] weights = np.empty(n_tags, dtype=np.float64)
    cdef Py_ssize_t s, pos, lo, hi, nc, k, pick
    cdef int old, w, new
    cdef double total
    with nogil:
        for s in range(sent_start.shape[0] - 1):
            lo = sent_start[s]
            hi = sent_start[s + 1]
            for pos in range(lo, hi):
                old = y[pos]
                w = words[pos]
                _remove_tag_events_c(pos, lo, hi, old, w, emit, emit_tot, trans, ctx_tot, y, n_tags, -1)
                _remove_sup_events_c(pos, old, cover_off, cover_set, z_of_set, sup_counts, sup_tot, lang_idx, cover_base, -1)
                nc = _tag_weights_c(
                    pos, lo, hi, words, y, allowed_off, allowed_tag,
                    emit, emit_tot, trans, ctx_tot, wt_size, theta0, phi0,
                    cover_off, cover_set, z_of_set, sup_counts, sup_tot,
                    lang_idx, psi0, cover_base, weights,
                )
                total = 0.0
                for k in range(nc):
                    total += weights[k]
                pick = _pick_c(weights, nc, total, uniforms[pos])
                new = allowed_tag[allowed_off[w] + pick]
                y[pos] = new
                _remove_tag_events_c(pos, lo, hi, new, w, emit, emit_tot, trans, ctx_tot, y, n_tags, +1)
                _remove_sup_events_c(pos, new, cover_off, cover_set, z_of_set, sup_counts, sup_tot, lang_idx, cover_base, +1)


def tag_conditional(
    Py_ssize_t pos, Py_ssize_t lo, Py_ssize_t hi,
    i32[::1] words, i32[::1] y,
    i32[::1] allowed_off, i32[::1] allowed_tag,
    i64[:, ::1] emit, i64[::1] emit_tot, i64[:, :, ::1] trans, i64[:, ::1] ctx_tot,
    i64[::1] wt_size,
    double theta0, double phi0,
    i32[::1] cover_off, i32[::1] cover_set, i32[::1] z_of_set,
    i64[:, :, ::1] sup_counts, i64[:, ::1] sup_tot,
    int lang_idx, double psi0, Py_ssize_t cover_base,
):
    cdef int n_tags = <int>emit.shape[0]
    cdef int old = y[pos]
    cdef int w = words[pos]
    weights_arr = np.empty(n_tags, dtype=np.float64)
    cdef f64[::1] weights = weights_arr
    _remove_tag_events_c(pos, lo, hi, old, w, emit, emit_tot, trans, ctx_tot, y, n_tags, -1)
    _remove_sup_events_c(pos, old, cover_off, cover_set, z_of_set, sup_counts, sup_tot, lang_idx, cover_base, -1)
    cdef Py_ssize_t nc = _tag_weights_c(
        pos, lo, hi, words, y, allowed_off, allowed_tag,
        emit, emit_tot, trans, ctx_tot, wt_size, theta0, phi0,
        cover_off, cover_set, z_of_set, sup_counts, sup_tot,
        lang_idx, psi0, cover_base, weights,
    )
    _remove_tag_events_c(pos, lo, hi, old, w, emit, emit_tot, trans, ctx_tot, y, n_tags, +1)
    _remove_sup_events_c(pos, old, cover_off, cover_set, z_of_set, sup_counts, sup_tot, lang_idx, cover_base, +1)
    cands = np.asarray(allowed_tag[allowed_off[w]:allowed_off[w] + nc]).copy()
    out = weights_arr[:nc]
    return cands, out / out.sum()


# ---------------------------------------------------------------------------
# Merged-node sweep


cdef inline double _plain_ratio_c(
    i64[:, :, ::1] trans, i64[:, ::1] ctx_tot, int c1, int c2, int t3,
    double phi0, double norm,
) noexcept nogil:
    return (trans[c1, c2, t3] + phi0) / (ctx_tot[c1, c2] + norm * phi0)


cdef Py_ssize_t _pair_weights_c(
    Py_ssize_t i, Py_ssize_t j,
    Py_ssize_t lo0, Py_ssize_t hi0, Py_ssize_t lo1, Py_ssize_t hi1,
    i32[::1] words0, i32[::1] y0, i32[::1] allowed_off0, i32[::1] allowed_tag0,
    i64[:, ::1] emit0, i64[::1] emit_tot0, i64[:, :, ::1] trans0, i64[:, ::1] ctx0,
    i64[::1] wt0, double theta0_0, double phi0_0,
    i32[::1] words1, i32[::1] y1, i32[::1] allowed_off1, i32[::1] allowed_tag1,
    i64[:, ::1] emit1, i64[::1] emit_tot1, i64[:, :, ::1] trans1, i64[:, ::1] ctx1,
    i64[::1] wt1, double theta0_1, double phi0_1,
    i32[::1] partner0, i32[::1] partner1,
    i64[:, ::1] pair_counts, i64[::1] pair_total, double omega0,
    f64[:, ::1] omega_hat, f64[::1] a0, f64[::1] b1, f64[:, ::1] weights,
    f64[:, ::1] rows0, f64[:, ::1] rows1, f64[::1] num0v, f64[::1] num1v,
    f64[:, ::1] mid2, f64[::1] mid1,
) noexcept nogil:
    """Fill ``weights[:k0, :k1]``; returns k0 * 2^16 + k1 packed sizes."""
    cdef int t0_n = <int>emit0.shape[0]
    cdef int t1_n = <int>emit1.shape[0]
    cdef double norm0 = t0_n + 1
    cdef double norm1 = t1_n + 1
    cdef int start0 = t0_n
    cdef int start1 = t1_n

    cdef int w0 = words0[i]
    cdef int w1 = words1[j]
    cdef Py_ssize_t base0 = allowed_off0[w0]
    cdef Py_ssize_t base1 = allowed_off1[w1]
    cdef int k0 = <int>(allowed_off0[w0 + 1] - base0)
    cdef int k1 = <int>(allowed_off1[w1 + 1] - base1)

    cdef int c0a = y0[i - 2] if i - 2 >= lo0 else start0
    cdef int c0b = y0[i - 1] if i - 1 >= lo0 else start0
    cdef int c1a = y1[j - 2] if j - 2 >= lo1 else start1
    cdef int c1b = y1[j - 1] if j - 1 >= lo1 else start1

    cdef Py_ssize_t k, kk, u, uu
    cdef int t, tt, yp, yq, ca, cb, ca_f, cb_f
    cdef double den, den1, den0, acc, num0s, num1s
    cdef double omega_den = pair_total[0] + (<double>t0_n) * t1_n * omega0

    for u in range(t0_n):
        for uu in range(t1_n):
            omega_hat[u, uu] = (pair_counts[u, uu] + omega0) / omega_den

    for k in range(k0):
        t = allowed_tag0[base0 + k]
        a0[k] = (emit0[t, w0] + theta0_0) / (emit_tot0[t] + wt0[t] * theta0_0)
        a0[k] *= _plain_ratio_c(trans0, ctx0, c0a, c0b, t, phi0_0, norm0)
    for k in range(k1):
        t = allowed_tag1[base1 + k]
        b1[k] = (emit1[t, w1] + theta0_1) / (emit_tot1[t] + wt1[t] * theta0_1)
        b1[k] *= _plain_ratio_c(trans1, ctx1, c1a, c1b, t, phi0_1, norm1)

    for k in range(k0):
        t = allowed_tag0[base0 + k]
        for kk in range(k1):
            tt = allowed_tag1[base1 + kk]
            weights[k, kk] = omega_hat[t, tt]

    # Successor events on the language-0 side: positions i+1 and i+2.
    # p_kind: 0 none, 1 real, 2 end-tag event.
    cdef Py_ssize_t p, q
    cdef int e, p_kind
    cdef bint two_sided
    for e in range(2):
        p = i + 1 + e
        if e == 0:
            p_kind = 1 if p < hi0 else (2 if p == hi0 else 0)
        else:
            p_kind = 0 if i + 1 >= hi0 else (1 if p < hi0 else 2)
        if p_kind == 0:
            continue
        if p_kind == 2:
            for k in range(k0):
                t = allowed_tag0[base0 + k]
                ca = c0b if e == 0 else t
                cb = t if e == 0 else y0[i + 1]
                a0[k] *= _plain_ratio_c(trans0, ctx0, ca, cb, t0_n, phi0_0, norm0)
            continue
        q = partner0[p]
        if q < 0:
            yp = y0[p]
            for k in range(k0):
                t = allowed_tag0[base0 + k]
                ca = c0b if e == 0 else t
                cb = t if e == 0 else y0[i + 1]
                a0[k] *= _plain_ratio_c(trans0, ctx0, ca, cb, yp, phi0_0, norm0)
        elif q == j + 1 or q == j + 2:
            # Two-sided bracket: both contexts move with the candidates.
            yp = y0[p]
            yq = y1[q]
            for k in range(k0):
                t = allowed_tag0[base0 + k]
                ca = c0b if e == 0 else t
                cb = t if e == 0 else y0[i + 1]
                den = ctx0[ca, cb] + norm0 * phi0_0
                for u in range(t0_n):
                    rows0[k, u] = (trans0[ca, cb, u] + phi0_0) / den
                num0v[k] = (trans0[ca, cb, yp] + phi0_0) / den
            for kk in range(k1):
                t = allowed_tag1[base1 + kk]
                ca = c1b if q == j + 1 else t
                cb = t if q == j + 1 else y1[j + 1]
                den = ctx1[ca, cb] + norm1 * phi0_1
                for uu in range(t1_n):
                    rows1[kk, uu] = (trans1[ca, cb, uu] + phi0_1) / den
                num1v[kk] = (trans1[ca, cb, yq] + phi0_1) / den
            for k in range(k0):
                for uu in range(t1_n):
                    acc = 0.0
                    for u in range(t0_n):
                        acc += rows0[k, u] * omega_hat[u, uu]
                    mid2[k, uu] = acc
            for k in range(k0):
                for kk in range(k1):
                    acc = 0.0
                    for uu in range(t1_n):
                        acc += mid2[k, uu] * rows1[kk, uu]
                    weights[k, kk] *= num0v[k] * num1v[kk] / acc
        else:
            # Partner context fixed: bracket collapses to a vector in t.
            yp = y0[p]
            yq = y1[q]
            ca_f = y1[q - 2] if q - 2 >= lo1 else start1
            cb_f = y1[q - 1] if q - 1 >= lo1 else start1
            den1 = ctx1[ca_f, cb_f] + norm1 * phi0_1
            num1s = (trans1[ca_f, cb_f, yq] + phi0_1) / den1
            for u in range(t0_n):
                acc = 0.0
                for uu in range(t1_n):
                    acc += omega_hat[u, uu] * ((trans1[ca_f, cb_f, uu] + phi0_1) / den1)
                mid1[u] = acc
            for k in range(k0):
                t = allowed_tag0[base0 + k]
                ca = c0b if e == 0 else t
                cb = t if e == 0 else y0[i + 1]
                den = ctx0[ca, cb] + norm0 * phi0_0
                acc = 0.0
                for u in range(t0_n):
                    acc += ((trans0[ca, cb, u] + phi0_0) / den) * mid1[u]
                num0s = (trans0[ca, cb, yp] + phi0_0) / den
                a0[k] *= num0s * num1s / acc

    # Successor events on the language-1 side not already bracketed.
    cdef int q_kind
    for e in range(2):
        q = j + 1 + e
        if e == 0:
            q_kind = 1 if q < hi1 else (2 if q == hi1 else 0)
        else:
            q_kind = 0 if j + 1 >= hi1 else (1 if q < hi1 else 2)
        if q_kind == 0:
            continue
        if q_kind == 2:
            for k in range(k1):
                t = allowed_tag1[base1 + k]
                ca = c1b if e == 0 else t
                cb = t if e == 0 else y1[j + 1]
                b1[k] *= _plain_ratio_c(trans1, ctx1, ca, cb, t1_n, phi0_1, norm1)
            continue
        p = partner1[q]
        if p >= 0 and (p == i + 1 or p == i + 2):
            continue  # already handled as a two-sided bracket
        if p < 0:
            yq = y1[q]
            for k in range(k1):
                t = allowed_tag1[base1 + k]
                ca = c1b if e == 0 else t
                cb = t if e == 0 else y1[j + 1]
                b1[k] *= _plain_ratio_c(trans1, ctx1, ca, cb, yq, phi0_1, norm1)
        else:
            yq = y1[q]
            yp = y0[p]
            ca_f = y0[p - 2] if p - 2 >= lo0 else start0
            cb_f = y0[p - 1] if p - 1 >= lo0 else start0
            den0 = ctx0[ca_f, cb_f] + norm0 * phi0_0
            num0s = (trans0[ca_f, cb_f, yp] + phi0_0) / den0
            for uu in range(t1_n):
                acc = 0.0
                for u in range(t0_n):
                    acc += ((trans0[ca_f, cb_f, u] + phi0_0) / den0) * omega_hat[u, uu]
                mid1[uu] = acc
            for k in range(k1):
                t = allowed_tag1[base1 + k]
                ca = c1b if e == 0 else t
                cb = t if e == 0 else y1[j + 1]
                den = ctx1[ca, cb] + norm1 * phi0_1
                acc = 0.0
                for uu in range(t1_n):
                    acc += mid1[uu] * ((trans1[ca, cb, uu] + phi0_1) / den)
                num1s = (trans1[ca, cb, yq] + phi0_1) / den
                b1[k] *= num0s * num1s / acc

    for k in range(k0):
        for kk in range(k1):
            weights[k, kk] *= a0[k] * b1[kk]
    return (<Py_ssize_t>k0 << 16) | <Py_ssize_t>k1


cdef inline void _remove_pair_events_c(
    Py_ssize_t i, Py_ssize_t j,
    Py_ssize_t lo0, Py_ssize_t hi0, Py_ssize_t lo1, Py_ssize_t hi1,
    int t0, int t1, int w0, int w1,
    i64[:, ::1] emit0, i64[::1] emit_tot0, i64[:, :, ::1] trans0, i64[:, ::1] ctx0, i32[::1] y0,
    i64[:, ::1] emit1, i64[::1] emit_tot1, i64[:, :, ::1] trans1, i64[:, ::1] ctx1, i32[::1] y1,
    i64[:, ::1] pair_counts, i64[::1] pair_total, int n_tags0, int n_tags1, int sign,
) noexcept nogil:
    _remove_tag_events_c(i, lo0, hi0, t0, w0, emit0, emit_tot0, trans0, ctx0, y0, n_tags0, sign)
    _remove_tag_events_c(j, lo1, hi1, t1, w1, emit1, emit_tot1, trans1, ctx1, y1, n_tags1, sign)
    pair_counts[t0, t1] += sign
    pair_total[0] += sign


def merged_sweep(
    i32[::1] words0, i32[::1] sent_start0, i32[::1] y0,
    i32[::1] allowed_off0, i32[::1] allowed_tag0,
    i64[:, ::1] emit0, i64[::1] emit_tot0, i64[:, :, ::1] trans0, i64[:, ::1] ctx0,
    i64[::1] wt0, double theta0_0, double phi0_0,
    i32[::1] words1, i32[::1] sent_start1, i32[::1] y1,
    i32[::1] allowed_off1, i32[::1] allowed_tag1,
    i64[:, ::1] emit1, i64[::1] emit_tot1, i64[:, :, ::1] trans1, i64[:, ::1] ctx1,
    i64[::1] wt1, double theta0_1, double phi0_1,
    i32[::1] partner0, i32[::1] partner1,
    i64[:, ::1] pair_counts, i64[::1] pair_total, double omega0,
    i32[::1] cover_off0, i32[::1] cover_off1,
    i32[::1] empty_i32, i64[:, :, ::1] empty_sup3, i64[:, ::1] empty_sup2,
    f64[::1] uniforms,
):
    cdef int n_tags0 = <int>emit0.shape[0]
    cdef int n_tags1 = <int>emit1.shape[0]
    omega_buf = np.empty((n_tags0, n_tags1), dtype=np.float64)
    a0_buf = np.empty(n_tags0, dtype=np.float64)
    b1_buf = np.empty(n_tags1, dtype=np.float64)
    w_buf = np.empty((n_tags0, n_tags1), dtype=np.float64)
    rows0_buf = np.empty((n_tags0, n_tags0), dtype=np.float64)
    rows1_buf = np.empty((n_tags1, n_tags1), dtype=np.float64)
    num0_buf = np.empty(n_tags0, dtype=np.float64)
    num1_buf = np.empty(n_tags1, dtype=np.float64)
    mid2_buf = np.empty((n_tags0, n_tags1), dtype=np.float64)
    mid1_buf = np.empty(n_tags0 + n_tags1, dtype=np.float64)
    flat_buf = np.empty(n_tags0 * n_tags1, dtype=np.float64)
    cdef f64[:, ::1] omega_hat = omega_buf
    cdef f64[::1] a0 = a0_buf
    cdef f64[::1] b1 = b1_buf
    cdef f64[:, ::1] weights = w_buf
    cdef f64[:, ::1] rows0 = rows0_buf
    cdef f64[:, ::1] rows1 = rows1_buf
    cdef f64[::1] num0v = num0_buf
    cdef f64[::1] num1v = num1_buf
    cdef f64[:, ::1] mid2 = mid2_buf
    cdef f64[::1] mid1 = mid1_buf
    cdef f64[::1] flat = flat_buf
    cdef f64[::1] tw = np.empty(max(n_tags0, n_tags1), dtype=np.float64)

    cdef Py_ssize_t s, i, j, lo0, hi0, lo1, hi1, cursor = 0
    cdef Py_ssize_t nc, k, kk, pick, packed
    cdef int old, w, new, t0_old, t1_old, t0_new, t1_new, w0c, w1c, k0, k1
    cdef double total
    with nogil:
        for s in range(sent_start0.shape[0] - 1):
            lo0 = sent_start0[s]
            hi0 = sent_start0[s + 1]
            lo1 = sent_start1[s]
            hi1 = sent_start1[s + 1]
            for i in range(lo0, hi0):
                j = partner0[i]
                if j < 0:
                    old = y0[i]
                    w = words0[i]
                    _remove_tag_events_c(i, lo0, hi0, old, w, emit0, emit_tot0, trans0, ctx0, y0, n_tags0, -1)
                    nc = _tag_weights_c(
                        i, lo0, hi0, words0, y0, allowed_off0, allowed_tag0,
                        emit0, emit_tot0, trans0, ctx0, wt0, theta0_0, phi0_0,
                        cover_off0, empty_i32, empty_i32, empty_sup3, empty_sup2,
                        0, 1.0, 0, tw,
                    )
                    total = 0.0
                    for k in range(nc):
                        total += tw[k]
                    pick = _pick_c(tw, nc, total, uniforms[cursor])
                    cursor += 1
                    new = allowed_tag0[allowed_off0[w] + pick]
                    y0[i] = new
                    _remove_tag_events_c(i, lo0, hi0, new, w, emit0, emit_tot0, trans0, ctx0, y0, n_tags0, +1)
                else:
                    t0_old = y0[i]
                    t1_old = y1[j]
                    w0c = words0[i]
                    w1c = words1[j]
                    _remove_pair_events_c(
                        i, j, lo0, hi0, lo1, hi1, t0_old, t1_old, w0c, w1c,
                        emit0, emit_tot0, trans0, ctx0, y0,
                        emit1, emit_tot1, trans1, ctx1, y1,
                        pair_counts, pair_total, n_tags0, n_tags1, -1,
                    )
                    packed = _pair_weights_c(
                        i, j, lo0, hi0, lo1, hi1,
                        words0, y0, allowed_off0, allowed_tag0,
                        emit0, emit_tot0, trans0, ctx0, wt0, theta0_0, phi0_0,
                        words1, y1, allowed_off1, allowed_tag1,
                        emit1, emit_tot1, trans1, ctx1, wt1, theta0_1, phi0_1,
                        partner0, partner1, pair_counts, pair_total, omega0,
                        omega_hat, a0, b1, weights,
                        rows0, rows1, num0v, num1v, mid2, mid1,
                    )
                    k0 = <int>(packed >> 16)
                    k1 = <int>(packed & 0xFFFF)
                    total = 0.0
                    for k in range(k0):
                        for kk in range(k1):
                            flat[k * k1 + kk] = weights[k, kk]
                            total += weights[k, kk]
                    pick = _pick_c(flat, k0 * k1, total, uniforms[cursor])
                    cursor += 1
                    t0_new = allowed_tag0[allowed_off0[w0c] + pick // k1]
                    t1_new = allowed_tag1[allowed_off1[w1c] + pick % k1]
                    y0[i] = t0_new
                    y1[j] = t1_new
                    _remove_pair_events_c(
                        i, j, lo0, hi0, lo1, hi1, t0_new, t1_new, w0c, w1c,
                        emit0, emit_tot0, trans0, ctx0, y0,
                        emit1, emit_tot1, trans1, ctx1, y1,
                        pair_counts, pair_total, n_tags0, n_tags1, +1,
                    )
            for j in range(lo1, hi1):
                if partner1[j] >= 0:
                    continue
                old = y1[j]
                w = words1[j]
                _remove_tag_events_c(j, lo1, hi1, old, w, emit1, emit_tot1, trans1, ctx1, y1, n_tags1, -1)
                nc = _tag_weights_c(
                    j, lo1, hi1, words1, y1, allowed_off1, allowed_tag1,
                    emit1, emit_tot1, trans1, ctx1, wt1, theta0_1, phi0_1,
                    cover_off1, empty_i32, empty_i32, empty_sup3, empty_sup2,
                    0, 1.0, 0, tw,
                )
                total = 0.0
                for k in range(nc):
                    total += tw[k]
                pick = _pick_c(tw, nc, total, uniforms[cursor])
                cursor += 1
                new = allowed_tag1[allowed_off1[w] + pick]
                y1[j] = new
                _remove_tag_events_c(j, lo1, hi1, new, w, emit1, emit_tot1, trans1, ctx1, y1, n_tags1, +1)
    return cursor


def pair_conditional(
    Py_ssize_t i, Py_ssize_t j,
    Py_ssize_t lo0, Py_ssize_t hi0, Py_ssize_t lo1, Py_ssize_t hi1,
    i32[::1] words0, i32[::1] y0, i32[::1] allowed_off0, i32[::1] allowed_tag0,
    i64[:, ::1] emit0, i64[::1] emit_tot0, i64[:, :, ::1] trans0, i64[:, ::1] ctx0,
    i64[::1] wt0, double theta0_0, double phi0_0,
    i32[::1] words1, i32[::1] y1, i32[::1] allowed_off1, i32[::1] allowed_tag1,
    i64[:, ::1] emit1, i64[::1] emit_tot1, i64[:, :, ::1] trans1, i64[:, ::1] ctx1,
    i64[::1] wt1, double theta0_1, double phi0_1,
    i32[::1] partner0, i32[::1] partner1,
    i64[:, ::1] pair_counts, i64[::1] pair_total, double omega0,
):
    cdef int n_tags0 = <int>emit0.shape[0]
    cdef int n_tags1 = <int>emit1.shape[0]
    cdef int t0_old = y0[i]
    cdef int t1_old = y1[j]
    cdef int w0c = words0[i]
    cdef int w1c = words1[j]
    omega_buf = np.empty((n_tags0, n_tags1), dtype=np.float64)
    a0_buf = np.empty(n_tags0, dtype=np.float64)
    b1_buf = np.empty(n_tags1, dtype=np.float64)
    w_buf = np.empty((n_tags0, n_tags1), dtype=np.float64)
    rows0_buf = np.empty((n_tags0, n_tags0), dtype=np.float64)
    rows1_buf = np.empty((n_tags1, n_tags1), dtype=np.float64)
    num0_buf = np.empty(n_tags0, dtype=np.float64)
    num1_buf = np.empty(n_tags1, dtype=np.float64)
    mid2_buf = np.empty((n_tags0, n_tags1), dtype=np.float64)
    mid1_buf = np.empty(n_tags0 + n_tags1, dtype=np.float64)
    cdef f64[:, ::1] omega_hat = omega_buf
    cdef f64[::1] a0 = a0_buf
    cdef f64[::1] b1 = b1_buf
    cdef f64[:, ::1] weights = w_buf
    cdef f64[:, ::1] rows0 = rows0_buf
    cdef f64[:, ::1] rows1 = rows1_buf
    cdef f64[::1] num0v = num0_buf
    cdef f64[::1] num1v = num1_buf
    cdef f64[:, ::1] mid2 = mid2_buf
    cdef f64[::1] mid1 = mid1_buf
    _remove_pair_events_c(
        i, j, lo0, hi0, lo1, hi1, t0_old, t1_old, w0c, w1c,
        emit0, emit_tot0, trans0, ctx0, y0,
        emit1, emit_tot1, trans1, ctx1, y1,
        pair_counts, pair_total, n_tags0, n_tags1, -1,
    )
    cdef Py_ssize_t packed = _pair_weights_c(
        i, j, lo0, hi0, lo1, hi1,
        words0, y0, allowed_off0, allowed_tag0,
        emit0, emit_tot0, trans0, ctx0, wt0, theta0_0, phi0_0,
        words1, y1, allowed_off1, allowed_tag1,
        emit1, emit_tot1, trans1, ctx1, wt1, theta0_1, phi0_1,
        partner0, partner1, pair_counts, pair_total, omega0,
        omega_hat, a0, b1, weights, rows0, rows1, num0v, num1v, mid2, mid1,
    )
    _remove_pair_events_c(
        i, j, lo0, hi0, lo1, hi1, t0_old, t1_old, w0c, w1c,
        emit0, emit_tot0, trans0, ctx0, y0,
        emit1, emit_tot1, trans1, ctx1, y1,
        pair_counts, pair_total, n_tags0, n_tags1, +1,
    )
    cdef int k0 = <int>(packed >> 16)
    cdef int k1 = <int>(packed & 0xFFFF)
    cands0 = np.asarray(allowed_tag0[allowed_off0[w0c]:allowed_off0[w0c] + k0]).copy()
    cands1 = np.asarray(allowed_tag1[allowed_off1[w1c]:allowed_off1[w1c] + k1]).copy()
    out = w_buf[:k0, :k1].copy()
    return cands0, cands1, out / out.sum()


# ---------------------------------------------------------------------------
# Superlingual (alignment-set) value sampling


def set_weights(
    Py_ssize_t s, i32[::1] y_all,
    i32[::1] set_off, i32[::1] set_lang, i32[::1] set_tok,
    i64[:, :, ::1] sup_counts, i64[:, ::1] sup_tot, i64[::1] usage,
    i64[::1] n_tags_per_lang, f64[::1] psi0_per_lang, double alpha, double denom,
):
    cdef Py_ssize_t cap = usage.shape[0]
    values_buf = np.empty(cap + 1, dtype=np.int64)
    weights_buf = np.empty(cap + 1, dtype=np.float64)
    cdef i64[::1] values = values_buf
    cdef f64[::1] weights = weights_buf
    cdef Py_ssize_t nv = _set_weights_c(
        s, y_all, set_off, set_lang, set_tok, sup_counts, sup_tot, usage,
        n_tags_per_lang, psi0_per_lang, alpha, denom, values, weights,
    )
    return values_buf[:nv].copy(), weights_buf[:nv].copy()


cdef Py_ssize_t _set_weights_c(
    Py_ssize_t s, i32[::1] y_all,
    i32[::1] set_off, i32[::1] set_lang, i32[::1] set_tok,
    i64[:, :, ::1] sup_counts, i64[:, ::1] sup_tot, i64[::1] usage,
    i64[::1] n_tags_per_lang, f64[::1] psi0_per_lang, double alpha, double denom,
    i64[::1] out_values, f64[::1] out_weights,
) noexcept nogil:
    cdef Py_ssize_t cap = usage.shape[0]
    cdef Py_ssize_t z, m, nv = 0
    cdef int li, t
    cdef double weight
    for z in range(cap):
        if usage[z] <= 0:
            continue
        weight = usage[z] / denom
        for m in range(set_off[s], set_off[s + 1]):
            li = set_lang[m]
            t = y_all[set_tok[m]]
            weight *= (sup_counts[z, li, t] + psi0_per_lang[li]) / (
                sup_tot[z, li] + n_tags_per_lang[li] * psi0_per_lang[li]
            )
        out_values[nv] = z
        out_weights[nv] = weight
        nv += 1
    weight = alpha / denom
    for m in range(set_off[s], set_off[s + 1]):
        li = set_lang[m]
        weight *= 1.0 / n_tags_per_lang[li]
    out_values[nv] = -1
    out_weights[nv] = weight
    return nv + 1


def set_sweep(
    i32[::1] y_all,
    i32[::1] set_off, i32[::1] set_lang, i32[::1] set_tok, i32[::1] z_of_set,
    i64[:, :, ::1] sup_counts, i64[:, ::1] sup_tot, i64[::1] usage,
    i32[::1] free_slots, i64[::1] free_top, i64[::1] scalars,
    i64[::1] n_tags_per_lang, f64[::1] psi0_per_lang, double alpha,
    bint denom_is_assigned,
    f64[::1] uniforms, Py_ssize_t start,
):
    cdef Py_ssize_t cap = usage.shape[0]
    values_buf = np.empty(cap + 1, dtype=np.int64)
    weights_buf = np.empty(cap + 1, dtype=np.float64)
    cdef i64[::1] values = values_buf
    cdef f64[::1] weights = weights_buf
    cdef Py_ssize_t n_sets = set_off.shape[0] - 1
    cdef Py_ssize_t s, m, nv, pick
    cdef int z_old, z_new, li, t
    cdef double denom, total
    cdef Py_ssize_t stopped = n_sets
    with nogil:
        for s in range(start, n_sets):
            if free_top[0] == 0:
                stopped = s
                break
            z_old = z_of_set[s]
            usage[z_old] -= 1
            scalars[0] -= 1
            for m in range(set_off[s], set_off[s + 1]):
                li = set_lang[m]
                t = y_all[set_tok[m]]
                sup_counts[z_old, li, t] -= 1
                sup_tot[z_old, li] -= 1
            if usage[z_old] == 0:
                scalars[1] -= 1
                free_slots[free_top[0]] = z_old
                free_top[0] += 1
            denom = (scalars[0] if denom_is_assigned else scalars[1]) + alpha
            nv = _set_weights_c(
                s, y_all, set_off, set_lang, set_tok, sup_counts, sup_tot, usage,
                n_tags_per_lang, psi0_per_lang, alpha, denom, values, weights,
            )
            total = 0.0
            for m in range(nv):
                total += weights[m]
            pick = _pick_c(weights, nv, total, uniforms[s])
            z_new = <int>values[pick]
            if z_new < 0:
                free_top[0] -= 1
                z_new = free_slots[free_top[0]]
                scalars[1] += 1
            z_of_set[s] = z_new
            usage[z_new] += 1
            scalars[0] += 1
            for m in range(set_off[s], set_off[s + 1]):
                li = set_lang[m]
                t = y_all[set_tok[m]]
                sup_counts[z_new, li, t] += 1
                sup_tot[z_new, li] += 1
    return stopped


# ---------------------------------------------------------------------------
# Viterbi decoding


def viterbi_sweep(
    i32[::1] words, i32[::1] sent_start,
    i32[::1] tok_allowed_off, i32[::1] tok_allowed_tag,
    f64[:, :, ::1] log_trans, f64[:, ::1] log_emit, f64[::1] log_unk,
    i32[::1] out,
):
    cdef Py_ssize_t pad = log_trans.shape[0]
    cdef int start = <int>pad - 1
    cdef int end = <int>pad - 1
    cdef Py_ssize_t max_len = 0, n, s, lo, hi
    for s in range(sent_start.shape[0] - 1):
        n = sent_start[s + 1] - sent_start[s]
        if n > max_len:
            max_len = n
    dp_buf = np.empty((pad, pad), dtype=np.float64)
    ndp_buf = np.empty((pad, pad), dtype=np.float64)
    bp_buf = np.empty((max_len, pad, pad), dtype=np.int32)
    cdef f64[:, ::1] dp = dp_buf
    cdef f64[:, ::1] ndp = ndp_buf
    cdef i32[:, :, ::1] bp = bp_buf
    cdef f64[:, ::1] tmp
    cdef Py_ssize_t idx, pos, a
    cdef int p2, p1, t, w, b2, b1, prev
    cdef double base, score, escore, best
    with nogil:
        for s in range(sent_start.shape[0] - 1):
            lo = sent_start[s]
            hi = sent_start[s + 1]
            n = hi - lo
            for p2 in range(<int>pad):
                for p1 in range(<int>pad):
                    dp[p2, p1] = NEG_INF
            dp[start, start] = 0.0
            for idx in range(n):
                pos = lo + idx
                w = words[pos]
                for p2 in range(<int>pad):
                    for p1 in range(<int>pad):
                        ndp[p2, p1] = NEG_INF
                for p2 in range(<int>pad):
                    for p1 in range(<int>pad):
                        base = dp[p2, p1]
                        if base == NEG_INF:
                            continue
                        for a in range(tok_allowed_off[pos], tok_allowed_off[pos + 1]):
                            t = tok_allowed_tag[a]
                            escore = log_emit[t, w] if w >= 0 else log_unk[t]
                            score = base + log_trans[p2, p1, t] + escore
                            if score > ndp[p1, t]:
                                ndp[p1, t] = score
                                bp[idx, p1, t] = p2
                tmp = dp
                dp = ndp
                ndp = tmp
            best = NEG_INF
            b2 = start
            b1 = start
            for p2 in range(<int>pad):
                for p1 in range(<int>pad):
                    if dp[p2, p1] == NEG_INF:
                        continue
                    score = dp[p2, p1] + log_trans[p2, p1, end]
                    if score > best:
                        best = score
                        b2 = p2
                        b1 = p1
            for idx in range(n - 1, -1, -1):
                out[lo + idx] = b1
                prev = bp[idx, b2, b1]
                b1 = b2
                b2 = prev
    return None
