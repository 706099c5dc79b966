"""Weighted bipartite click graphs.

A click graph relates queries to the ads that were clicked after those
queries were issued.  Queries form one node partition and ads the other;
every edge carries an impression count, a click count and an expected
click rate (a position-corrected click-through estimate).  The expected
click rate is the edge weight used by every scoring routine in this
package.

Graphs are immutable once built.  Mutating operations such as
:func:`remove_edges` return a new instance, so graphs may be shared
freely between threads.
"""

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from scipy import sparse


class GraphFormatError(ValueError):
    """Raised when a graph file cannot be parsed or fails validation."""


class NodeKind(enum.Enum):
    QUERY = "query"
    AD = "ad"


@dataclass(frozen=True)
class NodeId:
    """Typed handle for a graph node: a partition tag plus a dense index."""

    kind: NodeKind
    index: int


@dataclass(frozen=True)
class EdgeStats:
    """Per-edge counters.

    ``expected_click_rate`` is an externally supplied estimate in
    ``[0, 1]``; it is deliberately not required to equal
    ``clicks / impressions``.
    """

    impressions: int
    clicks: int
    expected_click_rate: float


def query_node(index: int) -> NodeId:
    return NodeId(NodeKind.QUERY, index)


def ad_node(index: int) -> NodeId:
    return NodeId(NodeKind.AD, index)


def canonical_label(text: str) -> str:
    """Lowercase a query label and collapse runs of whitespace."""
    return " ".join(text.lower().split())


class ClickGraph:
    """Immutable weighted bipartite graph of queries and ads.

    Parameters
    ----------
    query_labels, ad_labels:
        Node labels; position in the sequence is the node's dense index.
    q_idx, a_idx:
        Edge endpoint indices (parallel arrays, one entry per edge).
    impressions, clicks, ecr:
        Edge statistics, parallel to ``q_idx`` / ``a_idx``.
    """

    def __init__(
        self,
        query_labels: Iterable[str],
        ad_labels: Iterable[str],
        q_idx: np.ndarray,
        a_idx: np.ndarray,
        impressions: np.ndarray,
        clicks: np.ndarray,
        ecr: np.ndarray,
    ):
        self._query_labels = tuple(query_labels)
        self._ad_labels = tuple(ad_labels)

        q_idx = np.asarray(q_idx, dtype=np.int64)
        a_idx = np.asarray(a_idx, dtype=np.int64)
        order = np.lexsort((a_idx, q_idx))
        self._eq = q_idx[order]
        self._ea = a_idx[order]
        self._imp = np.asarray(impressions, dtype=np.int64)[order]
        self._clk = np.asarray(clicks, dtype=np.int64)[order]
        self._ecr = np.asarray(ecr, dtype=np.float64)[order]

        nq, na = len(self._query_labels), len(self._ad_labels)
        if self._eq.size and (self._eq.min() < 0 or self._eq.max() >= nq):
            raise ValueError("edge query index out of range")
        if self._ea.size and (self._ea.min() < 0 or self._ea.max() >= na):
            raise ValueError("edge ad index out of range")

        self._q_index = {lab: i for i, lab in enumerate(self._query_labels)}
        self._a_index = {lab: i for i, lab in enumerate(self._ad_labels)}
        if len(self._q_index) != nq:
            raise ValueError("duplicate query label")
        if len(self._a_index) != na:
            raise ValueError("duplicate ad label")

    # -- construction ------------------------------------------------

    @classmethod
    def from_records(
        cls, records: Iterable[tuple[str, str, int, int, float]]
    ) -> "ClickGraph":
        """Build a graph from ``(query, ad, impressions, clicks, ecr)`` rows.

        Query labels are canonicalized (lowercased, whitespace collapsed);
        ad identifiers are kept verbatim apart from surrounding whitespace.
        Duplicate (query, ad) pairs are rejected.
        """
        q_labels: list[str] = []
        a_labels: list[str] = []
        q_index: dict[str, int] = {}
        a_index: dict[str, int] = {}
        qs, As, imps, clks, ecrs = [], [], [], [], []
        seen: set[tuple[int, int]] = set()

        for row, (query, ad, imp, clk, ecr) in enumerate(records, start=1):
            query = canonical_label(query)
            ad = ad.strip()
            if not query or not ad:
                raise GraphFormatError(f"record {row}: empty query or ad label")
            _check_edge_stats(imp, clk, ecr, f"record {row}")
            qi = q_index.setdefault(query, len(q_labels))
            if qi == len(q_labels):
                q_labels.append(query)
            ai = a_index.setdefault(ad, len(a_labels))
            if ai == len(a_labels):
                a_labels.append(ad)
            if (qi, ai) in seen:
                raise GraphFormatError(
                    f"record {row}: duplicate edge ({query!r}, {ad!r})"
                )
            seen.add((qi, ai))
            qs.append(qi)
            As.append(ai)
            imps.append(imp)
            clks.append(clk)
            ecrs.append(ecr)

        return cls(
            q_labels,
            a_labels,
            np.array(qs, dtype=np.int64),
            np.array(As, dtype=np.int64),
            np.array(imps, dtype=np.int64),
            np.array(clks, dtype=np.int64),
            np.array(ecrs, dtype=np.float64),
        )

    # -- basic shape ---------------------------------------------------

    @property
    def num_queries(self) -> int:
        return len(self._query_labels)

    @property
    def num_ads(self) -> int:
        return len(self._ad_labels)

    @property
    def num_edges(self) -> int:
        return int(self._eq.size)

    @property
    def query_labels(self) -> tuple[str, ...]:
        return self._query_labels

    @property
    def ad_labels(self) -> tuple[str, ...]:
        return self._ad_labels

    def queries(self) -> Iterator[NodeId]:
        for i in range(self.num_queries):
            yield query_node(i)

    def ads(self) -> Iterator[NodeId]:
        for i in range(self.num_ads):
            yield ad_node(i)

    # -- label lookup ----------------------------------------------------

    def query_id(self, label: str) -> NodeId:
        try:
            return query_node(self._q_index[canonical_label(label)])
        except KeyError:
            raise ValueError(f"unknown query label: {label!r}") from None

    def ad_id(self, label: str) -> NodeId:
        try:
            return ad_node(self._a_index[label.strip()])
        except KeyError:
            raise ValueError(f"unknown ad label: {label!r}") from None

    def label(self, node: NodeId) -> str:
        labels = (
            self._query_labels if node.kind is NodeKind.QUERY else self._ad_labels
        )
        if not 0 <= node.index < len(labels):
            raise ValueError(f"node index out of range: {node}")
        return labels[node.index]

    # -- sorted edge views -------------------------------------------------

    @cached_property
    def _by_query(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, edge order) with edges grouped by query index."""
        counts = np.bincount(self._eq, minlength=self.num_queries)
        indptr = np.concatenate(([0], np.cumsum(counts)))
        return indptr, np.arange(self.num_edges)  # already sorted by (q, a)

    @cached_property
    def _by_ad(self) -> tuple[np.ndarray, np.ndarray]:
        order = np.lexsort((self._eq, self._ea))
        counts = np.bincount(self._ea, minlength=self.num_ads)
        indptr = np.concatenate(([0], np.cumsum(counts)))
        return indptr, order

    def _row(self, node: NodeId) -> tuple[np.ndarray, np.ndarray]:
        """Edge ids incident to ``node`` plus the neighbor indices."""
        if node.kind is NodeKind.QUERY:
            indptr, order = self._by_query
            edges = order[indptr[node.index] : indptr[node.index + 1]]
            return edges, self._ea[edges]
        indptr, order = self._by_ad
        edges = order[indptr[node.index] : indptr[node.index + 1]]
        return edges, self._eq[edges]

    def degree(self, node: NodeId) -> int:
        self.label(node)  # bounds check
        edges, _ = self._row(node)
        return int(edges.size)

    def neighbors(self, node: NodeId) -> list[tuple[NodeId, EdgeStats]]:
        """Neighbors of ``node`` with edge statistics, ascending by index."""
        self.label(node)
        other = NodeKind.AD if node.kind is NodeKind.QUERY else NodeKind.QUERY
        edges, nbrs = self._row(node)
        return [
            (
                NodeId(other, int(j)),
                EdgeStats(int(self._imp[e]), int(self._clk[e]), float(self._ecr[e])),
            )
            for e, j in zip(edges, nbrs)
        ]

    def has_edge(self, query: NodeId, ad: NodeId) -> bool:
        self._check_pair(query, ad)
        return self._find_edge(query.index, ad.index) >= 0

    def edge_stats(self, query: NodeId, ad: NodeId) -> EdgeStats:
        self._check_pair(query, ad)
        e = self._find_edge(query.index, ad.index)
        if e < 0:
            raise ValueError(
                f"no edge between {self.label(query)!r} and {self.label(ad)!r}"
            )
        return EdgeStats(int(self._imp[e]), int(self._clk[e]), float(self._ecr[e]))

    def _find_edge(self, qi: int, ai: int) -> int:
        indptr, _ = self._by_query
        lo, hi = indptr[qi], indptr[qi + 1]
        pos = lo + np.searchsorted(self._ea[lo:hi], ai)
        if pos < hi and self._ea[pos] == ai:
            return int(pos)
        return -1

    def _check_pair(self, query: NodeId, ad: NodeId) -> None:
        if query.kind is not NodeKind.QUERY or ad.kind is not NodeKind.AD:
            raise ValueError("expected (query node, ad node) pair")
        self.label(query)
        self.label(ad)

    def edges(self) -> Iterator[tuple[NodeId, NodeId, EdgeStats]]:
        """All edges in canonical (query index, ad index) order."""
        for e in range(self.num_edges):
            yield (
                query_node(int(self._eq[e])),
                ad_node(int(self._ea[e])),
                EdgeStats(int(self._imp[e]), int(self._clk[e]), float(self._ecr[e])),
            )

    # -- matrix views (read-only, cached) ---------------------------------

    @cached_property
    def query_adjacency(self) -> sparse.csr_matrix:
        """queries x ads CSR matrix holding expected click rates."""
        indptr, _ = self._by_query
        mat = sparse.csr_matrix(
            (self._ecr.copy(), self._ea.astype(np.int32), indptr.astype(np.int64)),
            shape=(self.num_queries, self.num_ads),
        )
        return mat

    @cached_property
    def ad_adjacency(self) -> sparse.csr_matrix:
        """ads x queries CSR matrix holding expected click rates."""
        indptr, order = self._by_ad
        mat = sparse.csr_matrix(
            (
                self._ecr[order],
                self._eq[order].astype(np.int32),
                indptr.astype(np.int64),
            ),
            shape=(self.num_ads, self.num_queries),
        )
        return mat

    # -- misc -------------------------------------------------------------

    def __repr__(self) -> str:
        return (
            f"ClickGraph(queries={self.num_queries}, ads={self.num_ads}, "
            f"edges={self.num_edges})"
        )


def _check_edge_stats(imp: int, clk: int, ecr: float, where: str) -> None:
    if imp < 0 or clk < 0:
        raise GraphFormatError(f"{where}: negative impression or click count")
    if clk > imp:
        raise GraphFormatError(f"{where}: clicks ({clk}) exceed impressions ({imp})")
    if not math.isfinite(ecr) or ecr < 0.0 or ecr > 1.0:
        raise GraphFormatError(f"{where}: expected click rate {ecr!r} not in [0, 1]")


# -- file formats -----------------------------------------------------------


def load_graph(path: str | Path) -> ClickGraph:
    """Read a tab-separated click graph.

    Each data line is ``query<TAB>ad<TAB>impressions<TAB>clicks<TAB>ecr``.
    Blank lines and lines starting with ``#`` are ignored.  Malformed
    lines raise :class:`GraphFormatError` with the offending line number.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise GraphFormatError(
                    f"line {lineno}: expected 5 tab-separated fields, got {len(fields)}"
                )
            query, ad, imp_s, clk_s, ecr_s = fields
            try:
                imp = int(imp_s)
                clk = int(clk_s)
                ecr = float(ecr_s)
            except ValueError:
                raise GraphFormatError(
                    f"line {lineno}: non-numeric impressions/clicks/ecr"
                ) from None
            try:
                _check_edge_stats(imp, clk, ecr, f"line {lineno}")
                records.append((query, ad, imp, clk, ecr))
            except GraphFormatError:
                raise
    try:
        return ClickGraph.from_records(records)
    except GraphFormatError as exc:
        # from_records reports positions as record numbers; those are
        # 1-based over data lines, which is close enough to locate, but
        # duplicate detection deserves the real line number.
        raise GraphFormatError(str(exc)) from None


def save_graph(graph: ClickGraph, destination) -> None:
    """Write ``graph`` in the format accepted by :func:`load_graph`.

    Edges are emitted in canonical (query index, ad index) order with the
    expected click rate fixed to six decimal places, so saving the same
    graph twice produces byte-identical files.  ``destination`` may be a
    path or an open text handle.
    """
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8") as fh:
            save_graph(graph, fh)
        return
    for q, a, st in graph.edges():
        destination.write(
            f"{graph.label(q)}\t{graph.label(a)}\t{st.impressions}\t"
            f"{st.clicks}\t{st.expected_click_rate:.6f}\n"
        )


# -- constructors ------------------------------------------------------------


def complete_bipartite(
    num_ads: int, num_queries: int, weight: float = 1.0
) -> ClickGraph:
    """Complete bipartite graph with every ad connected to every query.

    The first argument sizes the ad partition and the second the query
    partition, so ``complete_bipartite(1, 2)`` is one ad shared by two
    queries.  Every edge carries the same expected click rate ``weight``.
    """
    if num_ads < 1 or num_queries < 1:
        raise ValueError("both partitions need at least one node")
    if not 0.0 < weight <= 1.0:
        raise ValueError("weight must be in (0, 1]")
    q_idx = np.repeat(np.arange(num_queries), num_ads)
    a_idx = np.tile(np.arange(num_ads), num_queries)
    n = num_ads * num_queries
    return ClickGraph(
        [f"q{i}" for i in range(num_queries)],
        [f"a{j}" for j in range(num_ads)],
        q_idx,
        a_idx,
        np.ones(n, dtype=np.int64),
        np.ones(n, dtype=np.int64),
        np.full(n, weight),
    )


def demo_graph() -> ClickGraph:
    """Small two-component demo graph used throughout the test suite.

    One component relates computer and electronics queries to a computer
    vendor and an electronics retailer; the other relates a flower query
    to two florists.  Edge statistics are uniform so that structural and
    weighted scores coincide on it.
    """
    rows = [
        ("pc", "hp.com"),
        ("camera", "hp.com"),
        ("camera", "bestbuy.com"),
        ("digital camera", "hp.com"),
        ("digital camera", "bestbuy.com"),
        ("tv", "bestbuy.com"),
        ("flower", "teleflora.com"),
        ("flower", "orchids.com"),
    ]
    return ClickGraph.from_records((q, a, 10, 1, 0.1) for q, a in rows)


_TOPIC_QUERIES = 256


def _powerlaw_probs(count: int, gamma: float) -> np.ndarray:
    probs = np.arange(1, count + 1, dtype=np.float64) ** -gamma
    return probs / probs.sum()


def _sample_block(
    rng: np.random.Generator,
    q_span: tuple[int, int],
    a_span: tuple[int, int],
    quota: int,
    gamma: float,
    num_ads: int,
    chosen: set[int],
) -> None:
    """Rejection-sample ``quota`` distinct edges inside one block."""
    q_lo, q_hi = q_span
    a_lo, a_hi = a_span
    pq = _powerlaw_probs(q_hi - q_lo, gamma)
    pa = _powerlaw_probs(a_hi - a_lo, gamma)
    target = len(chosen) + quota
    for _ in range(1000):
        need = target - len(chosen)
        if need <= 0:
            return
        batch = max(32, int(need * 1.6))
        qs = q_lo + rng.choice(q_hi - q_lo, size=batch, p=pq)
        As = a_lo + rng.choice(a_hi - a_lo, size=batch, p=pa)
        for key in qs.astype(np.int64) * num_ads + As:
            if len(chosen) >= target:
                break
            chosen.add(int(key))
    raise ValueError("edge sampling failed to converge; graph too dense")


def generate_synthetic(
    num_queries: int,
    num_ads: int,
    num_edges: int,
    powerlaw_exponent: float = 2.2,
    seed: int = 0,
) -> ClickGraph:
    """Random click graph whose degree sequences have power-law tails.

    Click traffic concentrates in narrow commercial topics, so large
    sparse samples are built as topic blocks: node attractiveness within
    a block follows ``rank ** (-1 / (exponent - 1))``, most blocks are
    chained together through a thin stream of cross-topic edges into one
    dominant component, and a minority of topics stay detached as
    satellite components.  Duplicate edges are rejected and resampled,
    clicks are binomial in the impressions, and the expected click rate
    is the click fraction (with a half-click floor so weights stay
    positive).  The same seed always yields the same graph.  Small or
    dense requests collapse to a single block.
    """
    if num_queries < 1 or num_ads < 1:
        raise ValueError("need at least one query and one ad")
    if num_edges < 0:
        raise ValueError("negative edge count")
    cells = num_queries * num_ads
    if num_edges > cells:
        raise ValueError(
            f"cannot place {num_edges} distinct edges in a "
            f"{num_queries} x {num_ads} graph"
        )
    if powerlaw_exponent <= 1.0:
        raise ValueError("powerlaw_exponent must exceed 1")

    rng = np.random.default_rng(seed)
    gamma = 1.0 / (powerlaw_exponent - 1.0)

    if num_edges == cells:
        q_idx = np.repeat(np.arange(num_queries, dtype=np.int64), num_ads)
        a_idx = np.tile(np.arange(num_ads, dtype=np.int64), num_queries)
        keys = q_idx * num_ads + a_idx
    elif num_edges > 0.3 * cells:
        if cells > 20_000_000:
            raise ValueError("graph too dense to sample at this size")
        keys = np.sort(rng.choice(cells, size=num_edges, replace=False))
    else:
        # block count: ~one topic per _TOPIC_QUERIES queries, but never
        # so many that per-block density breaks rejection sampling, and
        # never more blocks than ads
        density = num_edges / cells
        nblocks = max(
            1,
            min(
                round(num_queries / _TOPIC_QUERIES),
                num_ads,
                int(0.25 / density) if density > 0 else num_ads,
            ),
        )
        q_bounds = np.linspace(0, num_queries, nblocks + 1, dtype=int)
        a_bounds = np.linspace(0, num_ads, nblocks + 1, dtype=int)
        spans = [
            ((int(q_bounds[b]), int(q_bounds[b + 1])),
             (int(a_bounds[b]), int(a_bounds[b + 1])))
            for b in range(nblocks)
        ]

        main = nblocks - nblocks // 10  # trailing blocks become satellites
        links = max(main - 1, 0)
        bridge_quota = max(
            0,
            min(
                max(links, round(0.02 * num_edges)) if links else 0,
                num_edges - nblocks,  # every block keeps at least one edge
            ),
        )

        shares = np.array(
            [q_hi - q_lo for (q_lo, q_hi), _ in spans], dtype=np.float64
        )
        quotas = rng.multinomial(num_edges - bridge_quota, shares / shares.sum())
        # clip overfull blocks and hand the excess to the emptiest ones
        caps = np.array(
            [
                (q_hi - q_lo) * (a_hi - a_lo)
                for (q_lo, q_hi), (a_lo, a_hi) in spans
            ],
            dtype=np.int64,
        )
        caps = np.maximum((caps * 3) // 10, 1)
        overflow = int(np.maximum(quotas - caps, 0).sum())
        quotas = np.minimum(quotas, caps)
        while overflow > 0:
            room = caps - quotas
            b = int(np.argmax(room))
            if room[b] <= 0:
                raise ValueError(
                    "edge sampling failed to converge; graph too dense"
                )
            grant = min(overflow, int(room[b]))
            quotas[b] += grant
            overflow -= grant

        chosen: set[int] = set()
        for b, (q_span, a_span) in enumerate(spans):
            _sample_block(
                rng, q_span, a_span, int(quotas[b]), gamma, num_ads, chosen
            )

        if bridge_quota:
            per_link = np.zeros(links, dtype=np.int64)
            per_link += bridge_quota // links
            per_link[: bridge_quota % links] += 1
            for k in range(links):
                (q_lo, q_hi), _ = spans[k]
                _, (a_lo, a_hi) = spans[k + 1]
                _sample_block(
                    rng,
                    (q_lo, q_hi),
                    (a_lo, a_hi),
                    int(per_link[k]),
                    gamma,
                    num_ads,
                    chosen,
                )
        keys = np.sort(np.fromiter(chosen, dtype=np.int64, count=num_edges))

    q_idx = keys // num_ads
    a_idx = keys % num_ads

    n = num_edges
    impressions = 1 + np.minimum(
        ((rng.pareto(2.0, n) + 1.0) * 20.0).astype(np.int64), 1_000_000
    )
    rates = rng.beta(1.5, 8.0, n)
    clicks = rng.binomial(impressions, rates)
    ecr = np.where(clicks > 0, clicks / impressions, 0.5 / impressions)
    ecr = np.minimum(ecr, 1.0)

    return ClickGraph(
        [f"q{i}" for i in range(num_queries)],
        [f"a{j}" for j in range(num_ads)],
        q_idx,
        a_idx,
        impressions,
        clicks,
        ecr,
    )


# -- surgery ------------------------------------------------------------------


def remove_edges(
    graph: ClickGraph, edges: Iterable[tuple[NodeId, NodeId]]
) -> ClickGraph:
    """Return a copy of ``graph`` without the given (query, ad) edges.

    Both endpoints stay in the graph even if they end up isolated.
    Removing an edge that does not exist is an error.
    """
    drop = np.zeros(graph.num_edges, dtype=bool)
    for query, ad in edges:
        graph._check_pair(query, ad)
        e = graph._find_edge(query.index, ad.index)
        if e < 0:
            raise ValueError(
                f"cannot remove missing edge "
                f"({graph.label(query)!r}, {graph.label(ad)!r})"
            )
        drop[e] = True
    keep = ~drop
    return ClickGraph(
        graph.query_labels,
        graph.ad_labels,
        graph._eq[keep],
        graph._ea[keep],
        graph._imp[keep],
        graph._clk[keep],
        graph._ecr[keep],
    )


def extract_components(graph: ClickGraph) -> list[ClickGraph]:
    """Split ``graph`` into connected components.

    Every node lands in exactly one component (isolated nodes become
    single-node graphs with no edges).  Components are ordered by
    descending edge count; ties keep discovery order, which follows node
    indices, so the result is deterministic.
    """
    nq, na = graph.num_queries, graph.num_ads
    total = nq + na  # ads numbered after queries
    comp = np.full(total, -1, dtype=np.int64)
    if total == 0:
        return []

    adj = sparse.bmat(
        [
            [None, graph.query_adjacency],
            [graph.ad_adjacency, None],
        ],
        format="csr",
    )
    n_comp, labels = sparse.csgraph.connected_components(adj, directed=False)
    comp[:] = labels

    members: list[list[int]] = [[] for _ in range(n_comp)]
    for node, c in enumerate(comp):
        members[c].append(node)

    out = []
    for c in range(n_comp):
        nodes = members[c]
        q_nodes = [n for n in nodes if n < nq]
        a_nodes = [n - nq for n in nodes if n >= nq]
        q_map = {old: new for new, old in enumerate(q_nodes)}
        a_map = {old: new for new, old in enumerate(a_nodes)}
        mask = np.isin(graph._eq, q_nodes)
        sub = ClickGraph(
            [graph.query_labels[i] for i in q_nodes],
            [graph.ad_labels[j] for j in a_nodes],
            np.array([q_map[i] for i in graph._eq[mask]], dtype=np.int64),
            np.array([a_map[j] for j in graph._ea[mask]], dtype=np.int64),
            graph._imp[mask],
            graph._clk[mask],
            graph._ecr[mask],
        )
        out.append(sub)
    out.sort(key=lambda g: -g.num_edges)
    return out
