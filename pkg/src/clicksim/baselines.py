"""Non-iterative query similarity baselines.

``common_ad_count`` is the crudest signal: how many ads two queries
share.  ``pearson`` correlates the expected click rates two queries put
on their shared ads, with each query's mean taken over all of its edges,
so it sees weight agreement but only on directly co-clicked ads.  Both
are cheap and both are blind to longer-range structure, which is exactly
what the iterative scores add.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .graph import ClickGraph, NodeId, NodeKind
from .simrank import SimilarityScores


def _check_query(graph: ClickGraph, node: NodeId) -> int:
    if node.kind is not NodeKind.QUERY:
        raise ValueError("baseline similarities are defined between queries")
    graph.label(node)
    return node.index


def common_ad_count(graph: ClickGraph, q: NodeId, q2: NodeId) -> int:
    """Number of ads clicked for both queries."""
    _check_query(graph, q)
    _check_query(graph, q2)
    ads = {ad.index for ad, _ in graph.neighbors(q)}
    return sum(1 for ad, _ in graph.neighbors(q2) if ad.index in ads)


@dataclass
class PearsonContext:
    """Per-query mean edge weight, reusable across many pair lookups."""

    mean_weight: np.ndarray

    @classmethod
    def from_graph(cls, graph: ClickGraph) -> "PearsonContext":
        adj = graph.query_adjacency
        degrees = np.diff(adj.indptr)
        sums = np.asarray(adj.sum(axis=1)).ravel()
        means = np.divide(
            sums, degrees, out=np.zeros_like(sums), where=degrees > 0
        )
        return cls(mean_weight=means)


def _pearson_with_flag(
    graph: ClickGraph, q: NodeId, q2: NodeId, context: PearsonContext
) -> tuple[float, bool]:
    """(correlation, degenerate): degenerate means a zero denominator."""
    i = _check_query(graph, q)
    j = _check_query(graph, q2)
    weights_i = {ad.index: st.expected_click_rate for ad, st in graph.neighbors(q)}
    shared = 0
    num = 0.0
    den_i = 0.0
    den_j = 0.0
    for ad, st in graph.neighbors(q2):
        if ad.index not in weights_i:
            continue
        shared += 1
        di = weights_i[ad.index] - context.mean_weight[i]
        dj = st.expected_click_rate - context.mean_weight[j]
        num += di * dj
        den_i += di * di
        den_j += dj * dj
    if shared == 0:
        return 0.0, False
    if den_i <= 0.0 or den_j <= 0.0:
        return 0.0, True
    r = num / np.sqrt(den_i * den_j)
    return float(np.clip(r, -1.0, 1.0)), False


def pearson(
    graph: ClickGraph,
    q: NodeId,
    q2: NodeId,
    context: PearsonContext | None = None,
) -> float:
    """Correlation of the two queries' click rates on their shared ads.

    Deviations are taken from each query's mean over all of its edges,
    while sums run over the shared ads only.  Pairs with no shared ad
    score 0; pairs whose deviations vanish on the shared ads (zero
    variance) are degenerate and also score 0.
    """
    if context is None:
        context = PearsonContext.from_graph(graph)
    value, _ = _pearson_with_flag(graph, q, q2, context)
    return value


def _co_neighbor_pairs(graph: ClickGraph) -> sparse.coo_matrix:
    binary = graph.query_adjacency.copy()
    binary.data = np.ones_like(binary.data)
    counts = (binary @ binary.T).tocoo()
    keep = counts.row < counts.col
    return sparse.coo_matrix(
        (counts.data[keep], (counts.row[keep], counts.col[keep])),
        shape=counts.shape,
    )


def pearson_scores(graph: ClickGraph) -> SimilarityScores:
    """Pearson similarity for every query pair with at least one shared ad.

    Degenerate pairs (shared ads present but zero weight variance on
    them) are recorded on the returned table so score dumps can flag
    them.
    """
    context = PearsonContext.from_graph(graph)
    pairs = _co_neighbor_pairs(graph)
    rows, cols, vals = [], [], []
    degenerate = []
    for i, j in zip(pairs.row, pairs.col):
        qi = NodeId(NodeKind.QUERY, int(i))
        qj = NodeId(NodeKind.QUERY, int(j))
        r, is_degenerate = _pearson_with_flag(graph, qi, qj, context)
        if is_degenerate:
            degenerate.append((int(i), int(j)))
        if r != 0.0:
            rows += [i, j]
            cols += [j, i]
            vals += [r, r]
    matrix = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(graph.num_queries, graph.num_queries)
    )
    return SimilarityScores(
        query_labels=graph.query_labels,
        matrix=matrix,
        iterations_run=0,
        converged=True,
        method="pearson",
        degenerate_pairs=tuple(degenerate),
    )


def common_ad_scores(graph: ClickGraph) -> SimilarityScores:
    """Shared-ad counts for every co-clicked query pair, as a score table."""
    pairs = _co_neighbor_pairs(graph)
    rows = np.concatenate([pairs.row, pairs.col])
    cols = np.concatenate([pairs.col, pairs.row])
    vals = np.concatenate([pairs.data, pairs.data]).astype(np.float64)
    matrix = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(graph.num_queries, graph.num_queries)
    )
    return SimilarityScores(
        query_labels=graph.query_labels,
        matrix=matrix,
        iterations_run=0,
        converged=True,
        method="common",
    )
