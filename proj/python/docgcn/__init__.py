"""Python bindings for the docgcn layout-analysis library.

Pages are exchanged as plain dicts in the canonical JSON schema.
"""

import json

from . import _docgcn
from ._docgcn import (
    DataError,
    NumericError,
    UsageError,
    density_ratio,
    normalize_adjacency,
    pool,
    sinusoidal_encode,
)

__all__ = [
    "DataError",
    "NumericError",
    "UsageError",
    "density_ratio",
    "generate_synthetic",
    "ingest_canonical",
    "nearest_two_edges",
    "normalize_adjacency",
    "pool",
    "predict",
    "score",
    "sinusoidal_encode",
    "train",
]


def ingest_canonical(path):
    return [json.loads(p) for p in _docgcn.ingest_canonical(str(path))]


def generate_synthetic(pages, seed, corruption=0.5):
    return [json.loads(p) for p in _docgcn.generate_synthetic(pages, seed, corruption)]


def nearest_two_edges(page):
    return _docgcn.nearest_two_edges(json.dumps(page))


def score(predicted, gold, labels):
    return json.loads(_docgcn.score(list(predicted), list(gold), list(labels)))


def train(pages, model_dir, seed, pretrain_epochs=10, classifier_epochs=None, hidden=256):
    kwargs = {} if classifier_epochs is None else {"classifier_epochs": classifier_epochs}
    _docgcn.train([json.dumps(p) for p in pages], str(model_dir), seed,
                  pretrain_epochs=pretrain_epochs, hidden=hidden, **kwargs)


def predict(pages, model_dir):
    return [json.loads(p) for p in _docgcn.predict([json.dumps(p) for p in pages], str(model_dir))]
