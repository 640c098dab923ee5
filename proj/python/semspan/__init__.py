"""Topic-space comparison of online communities."""

import json as _json

from ._semspan import (
    DataError,
    InvariantError,
    UsageError,
    __version__,
    calinski_harabasz,
    cosine_sim,
    fit_lda,
    fit_nmf,
    kmeans,
    select_cluster_count,
    silhouette,
    tfidf,
    tokenize,
)
from . import _semspan


def _settings(settings):
    return {str(k): str(v).lower() if isinstance(v, bool) else str(v) for k, v in (settings or {}).items()}


def similarity_graph(vectors, labels, tau):
    """Thresholded cosine graph; returns nodes, edges and classified components."""
    return _json.loads(_semspan.similarity_graph(vectors, list(labels), tau))


def summarize(input, **settings):
    return _json.loads(_semspan.summarize(str(input), _settings(settings)))


def run_exp1(input, **settings):
    """Community centroids compared at tau_exp1; returns the report dict."""
    return _json.loads(_semspan.run_exp1(str(input), _settings(settings)))


def run_exp2(input, **settings):
    """Semantic spans compared at tau_all; returns the report dict."""
    return _json.loads(_semspan.run_exp2(str(input), _settings(settings)))


def synthesize(spec, path):
    """Writes a synthetic corpus for `spec` (a dict) and returns its ground truth."""
    return _json.loads(_semspan.synthesize(_json.dumps(spec), str(path)))


__all__ = [
    "DataError",
    "InvariantError",
    "UsageError",
    "__version__",
    "calinski_harabasz",
    "cosine_sim",
    "fit_lda",
    "fit_nmf",
    "kmeans",
    "run_exp1",
    "run_exp2",
    "select_cluster_count",
    "silhouette",
    "similarity_graph",
    "summarize",
    "synthesize",
    "tfidf",
    "tokenize",
]
