"""Shared fixtures: tiny hand-built graphs with known score behavior."""

import random
import subprocess
import sys

import pytest

from clicksim.graph import ClickGraph, demo_graph, query_node


@pytest.fixture
def demo():
    return demo_graph()


def sim_by_label(scores, a, b):
    """Look up a score by query label instead of node id."""
    i = scores.query_labels.index(a)
    j = scores.query_labels.index(b)
    return scores.similarity(query_node(i), query_node(j))


@pytest.fixture
def twin_graph():
    """Two disjoint one-ad stars: balanced weights vs heavily skewed ones.

    Plain SimRank cannot tell the components apart (both pairs score the
    same); weight-aware scoring must rank the balanced pair higher.
    """
    return ClickGraph.from_records(
        [
            ("flower", "orchids.com", 100, 50, 0.5),
            ("blossom", "orchids.com", 100, 50, 0.5),
            ("bouquet", "teleflora.com", 100, 75, 0.75),
            ("petals", "teleflora.com", 1000, 5, 0.005),
        ]
    )


def star_union_graph(seed, pairs=40):
    """Disjoint two-query/one-ad stars with continuous random weights.

    Each star couples one query pair through a single shared ad, so the
    weighted score of the pair is a strictly decreasing function of that
    ad's weight variance and weight-consistency holds by construction.
    """
    rng = random.Random(seed)
    records = []
    for p in range(pairs):
        for side in ("l", "r"):
            ecr = rng.uniform(0.01, 0.99)
            records.append((f"q{p}{side}", f"ad{p}", 1000, int(ecr * 1000), ecr))
    return ClickGraph.from_records(records)


def skew_gadget(tag, mid, hi, lo):
    """Gadget whose shared-ad weights are skewed toward one sibling.

    q1 prefers x-ads at a uniform rate; q2 hits its shared ad hard, q3
    barely at all, so q1's desirability for q2 dwarfs that for q3.  With
    every weight distinct in a block, uniform averaging ties the q2/q3
    comparison exactly after the probe edges are removed, while weighted
    averaging keeps them apart.
    """
    def r(q, a, ecr):
        return (f"{q}_{tag}", f"{a}_{tag}", 1000, max(1, int(ecr * 1000)), ecr)

    return [
        r("q1", "x2", mid), r("q1", "x3", mid), r("q1", "z", mid),
        r("q2", "x2", hi), r("q2", "y", hi),
        r("q3", "x3", lo), r("q3", "y", lo),
        r("h", "y", mid), r("h", "z", mid),
    ]


def leaf_gadget(tag, mid, extra):
    """Gadget where q3 carries a private leaf ad; both methods get it."""
    def r(q, a, ecr):
        return (f"{q}_{tag}", f"{a}_{tag}", 1000, max(1, int(ecr * 1000)), ecr)

    return [
        r("q1", "x2", mid), r("q1", "x3", mid), r("q1", "z", mid),
        r("q2", "x2", mid), r("q2", "y", mid),
        r("q3", "x3", mid), r("q3", "y", mid), r("q3", "w", extra),
        r("h", "y", mid), r("h", "z", mid),
    ]


def planted_skew_graph(seed, gadgets=6):
    """Union of skew/leaf gadgets with per-seed jittered weights."""
    rng = random.Random(seed)
    records = []
    for g in range(gadgets):
        mid = rng.uniform(0.4, 0.6)
        if g % 2 == 0:
            records += skew_gadget(f"s{seed}g{g}", mid, rng.uniform(0.85, 0.95),
                                   rng.uniform(0.05, 0.15))
        else:
            records += leaf_gadget(f"s{seed}g{g}", mid, rng.uniform(0.2, 0.8))
    return ClickGraph.from_records(records)


def make_triple(graph, q1_label, q2_label, q3_label):
    """Build an experiment triple by label, with its removal set.

    Removes every q1 edge whose ad also serves q2 or q3 — the direct
    evidence the experiment wants erased.
    """
    from clicksim.evaluation import DesirabilityTriple

    q1 = graph.query_id(q1_label)
    q2 = graph.query_id(q2_label)
    q3 = graph.query_id(q3_label)
    shared = {a.index for a, _ in graph.neighbors(q2)}
    shared |= {a.index for a, _ in graph.neighbors(q3)}
    removed = tuple(
        (q1, ad) for ad, _ in graph.neighbors(q1) if ad.index in shared
    )
    return DesirabilityTriple(q1=q1, q2=q2, q3=q3, removed_edges=removed)


def run_cli(*args, expect=0):
    """Run the installed CLI in a subprocess and return the result."""
    proc = subprocess.run(
        [sys.executable, "-m", "clicksim", *map(str, args)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == expect, (
        f"exit {proc.returncode} != {expect}\nstderr: {proc.stderr}"
    )
    return proc
