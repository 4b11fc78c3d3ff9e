"""Collapsed conditional probabilities and hyperparameter resampling.

All four collapsed families share one algebraic shape: with the current
event removed from the tables, the predictive probability of outcome o
in a context with D possible outcomes and symmetric prior ``a`` is
``(n(context, o) + a) / (n(context) + D * a)``.  The functions here are
the scalar reference implementations; the sampling kernels inline the
same arithmetic.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError
from .state import CouplingCounts, LanguageCounts, SuperlingualCounts

VARIANCE_FLOOR_AT = 1e-6
VARIANCE_FLOOR = 1e-7


def _ratio(count: float, total: float, prior: float, dim: float) -> float:
    if prior <= 0:
        raise ConfigError(f"prior must be positive, got {prior}")
    return (count + prior) / (total + dim * prior)


def emission_prob(
    tag: int,
    word: int,
    counts: LanguageCounts,
    emission_prior: float,
    wt_size: np.ndarray,
) -> float:
    """Smoothed probability of a word given its tag; wt_size[t] is the
    number of word types the lexicon permits tag t."""
    return _ratio(
        counts.emit[tag, word],
        counts.emit_tot[tag],
        emission_prior,
        wt_size[tag],
    )


def transition_prob(
    context: tuple[int, int],
    tag: int,
    counts: LanguageCounts,
    transition_prior: float,
    n_tags: int,
) -> float:
    """Smoothed trigram probability; the normalizer counts the real
    tagset plus the end tag."""
    return _ratio(
        counts.trans[context[0], context[1], tag],
        counts.ctx_tot[context[0], context[1]],
        transition_prior,
        n_tags + 1,
    )


def coupling_prob(
    tag_a: int, tag_b: int, coupling: CouplingCounts, coupling_prior: float
) -> float:
    n_a, n_b = coupling.pairs.shape
    return _ratio(
        coupling.pairs[tag_a, tag_b],
        coupling.total[0],
        coupling_prior,
        n_a * n_b,
    )


def superlingual_factor(
    value: int,
    tag: int,
    lang_index: int,
    sup: SuperlingualCounts,
    superlingual_prior: float,
    n_tags: int,
) -> float:
    return _ratio(
        sup.counts[value, lang_index, tag],
        sup.totals[value, lang_index],
        superlingual_prior,
        n_tags,
    )


# ---------------------------------------------------------------------------
# Collapsed joint log-likelihoods (for hyperparameter resampling)


def dirichlet_multinomial_ll(
    cell_counts: np.ndarray, context_totals: np.ndarray, prior: float, dim_per_context: np.ndarray | float
) -> float:
    """Log marginal likelihood of grouped count data under symmetric
    Dirichlet priors, one Dirichlet per context.

    ``cell_counts`` holds the nonzero (context, outcome) cell values,
    ``context_totals`` the per-context totals for contexts with any
    observations, and ``dim_per_context`` the Dirichlet dimension of
    each such context.
    """
    cells = np.asarray(cell_counts, dtype=np.float64)
    totals = np.asarray(context_totals, dtype=np.float64)
    dims = np.broadcast_to(np.asarray(dim_per_context, dtype=np.float64), totals.shape)
    ll = float(np.sum(gammaln(cells + prior) - gammaln(prior)))
    ll += float(np.sum(gammaln(dims * prior) - gammaln(totals + dims * prior)))
    return ll


def emission_ll(counts: LanguageCounts, wt_size: np.ndarray, prior: float) -> float:
    """Collapsed log probability of all emission events at this prior."""
    tags, words = np.nonzero(counts.emit)
    used = np.nonzero(counts.emit_tot)[0]
    return dirichlet_multinomial_ll(
        counts.emit[tags, words],
        counts.emit_tot[used],
        prior,
        wt_size[used].astype(np.float64),
    )


def transition_ll(counts: LanguageCounts, n_tags: int, prior: float) -> float:
    """Collapsed log probability of all trigram transition events."""
    c1, c2, t3 = np.nonzero(counts.trans)
    u1, u2 = np.nonzero(counts.ctx_tot)
    return dirichlet_multinomial_ll(
        counts.trans[c1, c2, t3],
        counts.ctx_tot[u1, u2],
        prior,
        float(n_tags + 1),
    )


def coupling_ll(coupling: CouplingCounts, prior: float) -> float:
    a, b = np.nonzero(coupling.pairs)
    dim = coupling.pairs.shape[0] * coupling.pairs.shape[1]
    if coupling.total[0] == 0:
        return 0.0
    return dirichlet_multinomial_ll(
        coupling.pairs[a, b],
        coupling.total.astype(np.float64),
        prior,
        float(dim),
    )


# ---------------------------------------------------------------------------
# Metropolis-Hastings over a single positive hyperparameter


def proposal_scale(value: float) -> float:
    """Std-dev of the Gaussian proposal: variance is value/10, floored
    for near-zero values to keep the chain mobile."""
    variance = value / 10.0
    if value < VARIANCE_FLOOR_AT:
        variance = VARIANCE_FLOOR
    return math.sqrt(variance)


def _log_normal_pdf(x: float, mean: float, scale: float) -> float:
    return -0.5 * ((x - mean) / scale) ** 2 - math.log(scale) - 0.5 * math.log(2 * math.pi)


def mh_resample_hyperparam(
    current: float,
    log_likelihood_fn: Callable[[float], float],
    rng: np.random.Generator,
    current_ll: float | None = None,
) -> tuple[float, bool, float]:
    """One Metropolis-Hastings step under a flat prior on (0, inf).

    Proposes from Normal(current, current/10); non-positive proposals
    have zero prior mass and are rejected outright.  Because the
    proposal variance tracks the current value the kernel is
    asymmetric, so the full Hastings correction is applied.  Returns
    (new value, accepted?, log-likelihood at the returned value).
    """
    if current <= 0:
        raise ConfigError(f"hyperparameter must be positive, got {current}")
    if current_ll is None:
        current_ll = log_likelihood_fn(current)
    if not math.isfinite(current_ll):
        raise ConfigError("log-likelihood is not finite at the current value")
    scale = proposal_scale(current)
    proposed = current + scale * rng.standard_normal()
    if proposed <= 0:
        return current, False, current_ll
    proposed_ll = log_likelihood_fn(proposed)
    back_scale = proposal_scale(proposed)
    log_ratio = (
        proposed_ll
        - current_ll
        + _log_normal_pdf(current, proposed, back_scale)
        - _log_normal_pdf(proposed, current, scale)
    )
    if log_ratio >= 0 or rng.random() < math.exp(log_ratio):
        return proposed, True, proposed_ll
    return current, False, current_ll
