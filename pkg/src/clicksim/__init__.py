"""Query–query similarity over weighted bipartite click graphs.

SimRank and two refinements (common-neighbor evidence scaling and
click-rate-weighted transitions), correlation/common-ad baselines,
rewrite generation with duplicate folding and bid filtering, and an
edge-removal evaluation protocol — plus the complete-bipartite closed
forms the iterative engines are tested against.
"""

from .baselines import (
    common_ad_count,
    common_ad_scores,
    pearson,
    pearson_scores,
)
from .evaluation import (
    DesirabilityTriple,
    JudgmentSet,
    PrecisionRecallReport,
    desirability,
    desirability_experiment,
    precision_recall,
    select_triples,
)
from .evidence import (
    EvidenceKind,
    apply_evidence,
    common_neighbor_counts,
    evidence_score,
    evidence_simrank,
)
from .graph import (
    ClickGraph,
    EdgeStats,
    GraphFormatError,
    NodeId,
    NodeKind,
    ad_node,
    canonical_label,
    complete_bipartite,
    demo_graph,
    extract_components,
    generate_synthetic,
    load_graph,
    query_node,
    remove_edges,
    save_graph,
)
from .oracles import (
    closed_form_evidence_k22,
    closed_form_k12,
    closed_form_k22,
    closed_form_k22_limit,
)
from .rewrite import (
    BidTermList,
    RewriteList,
    coverage,
    depth_histogram,
    normalize_query,
    read_rewrites,
    top_rewrites,
    write_rewrites,
)
from .simrank import Method, SimilarityScores, SimRankParams, simrank
from .weighted import (
    ConsistencyReport,
    ConsistencyWitness,
    TransitionRow,
    check_consistency,
    normalized_weight,
    spread,
    transition_probabilities,
    variance,
    weighted_simrank,
)

__version__ = "0.1.0"

__all__ = [
    "BidTermList",
    "ClickGraph",
    "ConsistencyReport",
    "ConsistencyWitness",
    "DesirabilityTriple",
    "EdgeStats",
    "EvidenceKind",
    "GraphFormatError",
    "JudgmentSet",
    "Method",
    "NodeId",
    "NodeKind",
    "PrecisionRecallReport",
    "RewriteList",
    "SimRankParams",
    "SimilarityScores",
    "TransitionRow",
    "ad_node",
    "apply_evidence",
    "canonical_label",
    "check_consistency",
    "closed_form_evidence_k22",
    "closed_form_k12",
    "closed_form_k22",
    "closed_form_k22_limit",
    "common_ad_count",
    "common_ad_scores",
    "common_neighbor_counts",
    "complete_bipartite",
    "coverage",
    "demo_graph",
    "depth_histogram",
    "desirability",
    "desirability_experiment",
    "evidence_score",
    "evidence_simrank",
    "extract_components",
    "generate_synthetic",
    "load_graph",
    "normalize_query",
    "normalized_weight",
    "pearson",
    "pearson_scores",
    "precision_recall",
    "query_node",
    "read_rewrites",
    "remove_edges",
    "save_graph",
    "select_triples",
    "simrank",
    "spread",
    "top_rewrites",
    "transition_probabilities",
    "variance",
    "weighted_simrank",
    "write_rewrites",
]
