"""Unsupervised multilingual part-of-speech tagging.

Three Bayesian sequence models over parallel text: a monolingual
trigram HMM baseline, a bilingual merged-node model that samples
aligned tag pairs jointly, and a multilingual latent-variable model
whose Dirichlet-process superlingual tags tie densely aligned token
clusters together.  All three train by collapsed Gibbs sampling and
decode monolingual test data with trigram Viterbi.
"""

from .kernels import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
