"""Iterative SimRank for bipartite click graphs.

Two mutually recursive fixpoint systems are iterated side by side: query
pairs average the previous scores of their neighboring ad pairs (decayed
by ``c1``) and ad pairs average the previous scores of their neighboring
query pairs (decayed by ``c2``).  Every node is fully similar to itself,
iteration starts from that identity, and both sides are refreshed each
round from the previous round's scores only, so the update order within
a round cannot affect the result.

The implementation is sparse end to end: a pair enters the frontier only
if it had a nonzero score in the previous round or shares at least one
neighbor, and scores that fall below ``min_score_threshold`` are dropped
between rounds.  Query-side scores are returned; ad-side scores are kept
internal.
"""

import enum
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy import sparse

from .graph import ClickGraph, NodeId, NodeKind

_BLOCK_ROWS = 1024


class Method(enum.Enum):
    """Similarity variants understood by the scoring dispatcher."""

    SIMPLE = "simple"
    EVIDENCE = "evidence"
    WEIGHTED = "weighted"


@dataclass
class SimRankParams:
    """Knobs for the iterative engine.

    ``c1`` decays query-side scores and ``c2`` ad-side scores.  Iteration
    stops after ``max_iterations`` rounds or as soon as the largest
    absolute score change on either side drops below
    ``convergence_epsilon``.  Scores below ``min_score_threshold`` are
    discarded between rounds.
    """

    c1: float = 0.8
    c2: float = 0.8
    max_iterations: int = 10
    convergence_epsilon: float = 1e-4
    min_score_threshold: float = 1e-4
    method: Method = Method.SIMPLE

    def __post_init__(self):
        if not 0.0 < self.c1 <= 1.0 or not 0.0 < self.c2 <= 1.0:
            raise ValueError("decay factors c1 and c2 must be in (0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.convergence_epsilon < 0.0:
            raise ValueError("convergence_epsilon must be non-negative")
        if self.min_score_threshold < 0.0:
            raise ValueError("min_score_threshold must be non-negative")
        if not isinstance(self.method, Method):
            self.method = Method(self.method)


@dataclass
class SimilarityScores:
    """Sparse symmetric query-query score table.

    ``matrix`` stores off-diagonal scores only; every query scores 1.0
    against itself implicitly.  ``degenerate_pairs`` is used by score
    producers that need to flag pairs whose value is defined by
    convention rather than computed (correlation with zero variance).
    """

    query_labels: tuple[str, ...]
    matrix: sparse.csr_matrix
    iterations_run: int
    converged: bool
    method: str
    min_score_threshold: float = 0.0
    degenerate_pairs: tuple[tuple[int, int], ...] = field(default=())

    def _check_query(self, node: NodeId) -> int:
        if node.kind is not NodeKind.QUERY:
            raise ValueError("similarity is defined between query nodes only")
        if not 0 <= node.index < len(self.query_labels):
            raise ValueError(f"query index out of range: {node.index}")
        return node.index

    def similarity(self, a: NodeId, b: NodeId) -> float:
        """Score of a query pair; 1.0 on the diagonal, 0.0 when unstored."""
        i, j = self._check_query(a), self._check_query(b)
        if i == j:
            return 1.0
        return float(self.matrix[i, j])

    @property
    def pair_count(self) -> int:
        return self.matrix.nnz // 2

    def pairs(self) -> Iterator[tuple[int, int, float]]:
        """Stored pairs as ``(i, j, score)`` with ``i < j``."""
        coo = sparse.triu(self.matrix, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        for e in order:
            yield int(coo.row[e]), int(coo.col[e]), float(coo.data[e])

    def row(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor indices and scores for one query, unsorted."""
        row = self.matrix.getrow(index)
        return row.indices, row.data

    # -- dump format -------------------------------------------------------

    def write(self, destination) -> None:
        """Write ``query_a<TAB>query_b<TAB>score`` lines.

        Pairs appear once with the lexicographically smaller label first
        and lines sorted, so equal score tables serialize identically.
        Methods other than plain SimRank announce themselves in a header
        comment; degenerate pairs are appended as comment lines.
        """
        if isinstance(destination, (str, Path)):
            with open(destination, "w", encoding="utf-8") as fh:
                self.write(fh)
            return
        out: io.TextIOBase = destination
        if self.method != Method.SIMPLE.value:
            out.write(f"# method={self.method}\n")
        labels = np.array(self.query_labels, dtype=object)
        coo = sparse.triu(self.matrix, k=1).tocoo()
        if coo.nnz:
            # sort by integer label ranks, not the labels themselves:
            # same order, and it stays fast at tens of millions of pairs
            rank = np.empty(len(labels), dtype=np.int64)
            rank[np.argsort(labels)] = np.arange(len(labels))
            by_rank = np.sort(labels)
            ra, rb = rank[coo.row], rank[coo.col]
            lo = np.minimum(ra, rb)
            hi = np.maximum(ra, rb)
            order = np.lexsort((hi, lo))
            lo, hi, data = lo[order], hi[order], coo.data[order]
            for start in range(0, lo.size, 65536):
                stop = min(start + 65536, lo.size)
                out.writelines(
                    f"{by_rank[l]}\t{by_rank[h]}\t{v:.6f}\n"
                    for l, h, v in zip(lo[start:stop], hi[start:stop], data[start:stop])
                )
        for i, j in self.degenerate_pairs:
            a, b = sorted((self.query_labels[i], self.query_labels[j]))
            out.write(f"# degenerate\t{a}\t{b}\n")

    @classmethod
    def read(cls, path: str | Path, graph: ClickGraph) -> "SimilarityScores":
        """Load a score dump produced by :meth:`write` against ``graph``."""
        method = Method.SIMPLE.value
        rows, cols, vals = [], [], []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if line.startswith("# method="):
                    method = line.split("=", 1)[1].strip()
                    continue
                if not line.strip() or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != 3:
                    raise ValueError(
                        f"{path}:{lineno}: expected 3 tab-separated fields"
                    )
                a, b, score = fields
                i = graph.query_id(a).index
                j = graph.query_id(b).index
                rows += [i, j]
                cols += [j, i]
                vals += [float(score)] * 2
        matrix = sparse.csr_matrix(
            (vals, (rows, cols)),
            shape=(graph.num_queries, graph.num_queries),
        )
        return cls(
            query_labels=graph.query_labels,
            matrix=matrix,
            iterations_run=0,
            converged=True,
            method=method,
        )


# -- engine core ---------------------------------------------------------


def _blocked_product(
    left: sparse.csr_matrix,
    middle: sparse.csr_matrix,
    right: sparse.csr_matrix,
    threads: int,
    scale: float,
    prune_below: float,
) -> sparse.csr_matrix:
    """``scale * left @ middle @ right`` in fixed-size row blocks.

    CSR multiplication builds each output row from the corresponding
    input row alone, so computing row blocks independently and stacking
    them reproduces the one-shot result bit for bit; block boundaries
    are fixed by row count, never by ``threads``, which therefore cannot
    change the output.

    Blocking exists for memory, not speed: the unpruned product can dwarf
    what survives the score threshold, so each block is pruned at
    ``prune_below`` before the next one is formed.  Callers pass a margin
    of at most half the real threshold; entries that straddle it are
    lost from one triangle at most, and such entries average to below the
    real threshold anyway, so the final pruned result is unaffected.
    """
    rows = left.shape[0]
    spans = [
        (lo, min(lo + _BLOCK_ROWS, rows)) for lo in range(0, rows, _BLOCK_ROWS)
    ]

    def work(span):
        lo, hi = span
        part = ((left[lo:hi] @ middle) @ right).tocsr()
        if scale != 1.0:
            part.data *= scale
        if prune_below > 0.0 and part.nnz:
            part.data[part.data < prune_below] = 0.0
            part.eliminate_zeros()
        return part

    if threads <= 1 or len(spans) == 1:
        blocks = [work(span) for span in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(work, spans))
    if len(blocks) == 1:
        return blocks[0]
    return sparse.vstack(blocks, format="csr")


def _cleanup(mat: sparse.csr_matrix, threshold: float) -> sparse.csr_matrix:
    """Symmetrize, drop the diagonal and prune scores below threshold.

    The two triangles are averaged block by block so the full doubled
    matrix never has to exist at once; halving and doubling are exact in
    binary floating point, so filtering the unscaled sums against twice
    the threshold keeps exactly the entries a global pass would keep.
    """
    shape = mat.shape
    transpose = mat.T.tocsr()
    rows_kept, cols_kept, data_kept = [], [], []
    for lo in range(0, shape[0], _BLOCK_ROWS):
        hi = min(lo + _BLOCK_ROWS, shape[0])
        part = (mat[lo:hi] + transpose[lo:hi]).tocoo()
        row = part.row + lo
        keep = (
            (row != part.col)
            & (part.data >= 2.0 * threshold)
            & (part.data > 0.0)
        )
        rows_kept.append(row[keep])
        cols_kept.append(part.col[keep])
        data_kept.append(part.data[keep] * 0.5)
    del mat, transpose
    out = sparse.csr_matrix(
        (
            np.minimum(np.concatenate(data_kept), 1.0),
            (np.concatenate(rows_kept), np.concatenate(cols_kept)),
        ),
        shape=shape,
    )
    return out


def _max_abs_diff(a: sparse.csr_matrix, b: sparse.csr_matrix) -> float:
    diff = (a - b).tocoo()
    return float(np.abs(diff.data).max()) if diff.nnz else 0.0


def _iterate(
    trans_q: sparse.csr_matrix,
    trans_a: sparse.csr_matrix,
    params: SimRankParams,
    threads: int,
) -> tuple[sparse.csr_matrix, sparse.csr_matrix, int, bool]:
    """Run the double-sided fixpoint iteration.

    ``trans_q`` maps queries to ads and ``trans_a`` ads to queries; rows
    hold the averaging weights each pair update applies to its neighbor
    pairs.  Returns query scores, ad scores, rounds run and whether the
    convergence test fired.
    """
    nq, na = trans_q.shape
    tq_t = trans_q.T.tocsr()
    ta_t = trans_a.T.tocsr()
    eye_q = sparse.identity(nq, format="csr")
    eye_a = sparse.identity(na, format="csr")

    s_q = sparse.csr_matrix((nq, nq))
    s_a = sparse.csr_matrix((na, na))
    iterations = 0
    converged = False

    margin = params.min_score_threshold * 0.5
    for iterations in range(1, params.max_iterations + 1):
        # one raw product lives at a time; both sides still read only the
        # previous round's scores
        new_q = _cleanup(
            _blocked_product(trans_q, s_a + eye_a, tq_t, threads, params.c1, margin),
            params.min_score_threshold,
        )
        new_a = _cleanup(
            _blocked_product(trans_a, s_q + eye_q, ta_t, threads, params.c2, margin),
            params.min_score_threshold,
        )
        delta = max(_max_abs_diff(new_q, s_q), _max_abs_diff(new_a, s_a))
        s_q, s_a = new_q, new_a
        if delta < params.convergence_epsilon:
            converged = True
            break

    return s_q, s_a, iterations, converged


def _row_normalized(adjacency: sparse.csr_matrix) -> sparse.csr_matrix:
    """Binary adjacency scaled so each nonempty row sums to one."""
    out = adjacency.copy()
    out.data = np.ones_like(out.data)
    degrees = np.diff(out.indptr)
    scale = np.repeat(
        np.divide(
            1.0,
            degrees,
            out=np.zeros(degrees.shape, dtype=np.float64),
            where=degrees > 0,
        ),
        degrees,
    )
    out.data = out.data * scale
    return out


def simrank(
    graph: ClickGraph, params: SimRankParams | None = None, *, threads: int = 1
) -> SimilarityScores:
    """Plain SimRank query similarities for ``graph``.

    Edge weights are ignored: each neighbor of a node contributes with
    the same averaging weight ``1 / degree``.
    """
    if params is None:
        params = SimRankParams()
    if graph.num_queries == 0 and graph.num_ads == 0:
        raise ValueError("cannot score an empty graph")
    trans_q = _row_normalized(graph.query_adjacency)
    trans_a = _row_normalized(graph.ad_adjacency)
    s_q, _, iterations, converged = _iterate(trans_q, trans_a, params, threads)
    return SimilarityScores(
        query_labels=graph.query_labels,
        matrix=s_q,
        iterations_run=iterations,
        converged=converged,
        method=Method.SIMPLE.value,
        min_score_threshold=params.min_score_threshold,
    )
