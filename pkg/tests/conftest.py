"""Shared builders for model-level tests.

Everything here is deterministic in the seed arguments so tests can assert
exact equality across repeated builds.
"""

import numpy as np

from tdsent.corpus import Instance
from tdsent.embeddings import EmbeddingTable, Vocabulary
from tdsent.mathcore import Tensor
from tdsent.mathcore.rng import derive
from tdsent.models import init_params

TOKENS = ("i", "love", "the", "new", "phone", "but", "battery", "dies", "fast")


def small_vocabulary():
    return Vocabulary.build([TOKENS])


def small_table(dim=3, seed=0, trainable=True, scale=0.5):
    vocab = small_vocabulary()
    rng = derive(seed, "test-embeddings")
    matrix = rng.uniform(-scale, scale, (len(vocab), dim))
    return vocab, EmbeddingTable(matrix, trainable=trainable)


def build_model(variant, hidden=3, dim=3, seed=0, trainable=True,
                combine="concat", param_scale=None):
    """Model over the small vocabulary. param_scale=None keeps the training
    init; a float re-draws every named parameter at that scale so forward
    outputs are far from uniform."""
    vocab, table = small_table(dim=dim, seed=seed, trainable=trainable)
    params = init_params(variant, hidden, 3, seed, table, vocab, combine=combine)
    if param_scale is not None:
        rng = derive(seed, "test-param-redraw", variant)
        for name, tensor in params.named_parameters().items():
            params = params.with_parameter(
                name, Tensor(rng.uniform(-param_scale, param_scale, tensor.shape)))
    return params


def example_instance(label=1, start=2, end=5):
    return Instance(TOKENS, start, end, label)


def zero_all_parameters(params):
    """All named parameters and every embedding row set to exactly zero."""
    for name, tensor in params.named_parameters().items():
        params = params.with_parameter(name, Tensor.zeros(*tensor.shape))
    params.embeddings.matrix[:] = 0.0
    return params
