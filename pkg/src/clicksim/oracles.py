"""Closed-form similarity values for small complete bipartite graphs.

These formulas give the exact score of the pair of nodes that sits on
the two-node side of a complete bipartite graph, after ``k`` update
rounds of the iterative engine started from the identity.  They are
derived independently of the engine and exist so tests can cross-check
the iteration against them.

Naming convention: ``k22`` is the graph with two nodes on each side and
``k12`` has a single node opposite the scored pair.  ``c1`` is the decay
applied on the scored pair's own side and ``c2`` the decay applied on
the opposite side.
"""

def _validate(c1: float, c2: float, k: int) -> None:
    if not 0.0 < c1 <= 1.0 or not 0.0 < c2 <= 1.0:
        raise ValueError("decay factors must be in (0, 1]")
    if k < 1:
        raise ValueError("iteration count must be at least 1")


def closed_form_k22(c1: float, c2: float, k: int) -> float:
    """Pair score in the two-by-two complete bipartite graph.

    Equals ``(c1 / 2) * sum_{i=1..k} 2**-(i-1) * c2**(i // 2) *
    c1**((i - 1) // 2)``: each round adds one term of a geometric-style
    series, alternating which side's decay enters, so the sequence is
    strictly increasing in ``k`` and bounded by ``c1``.
    """
    _validate(c1, c2, k)
    total = 0.0
    for i in range(1, k + 1):
        total += 2.0 ** (1 - i) * c2 ** (i // 2) * c1 ** ((i - 1) // 2)
    return 0.5 * c1 * total


def closed_form_k12(c1: float, c2: float, k: int) -> float:
    """Pair score when the two scored nodes share a single neighbor.

    The pair's two nodes have identical one-element neighborhoods, so
    every round after the first reproduces the same value: ``c1`` for
    all ``k >= 1``.
    """
    _validate(c1, c2, k)
    return c1


def closed_form_evidence_k22(c1: float, c2: float, k: int) -> float:
    """Evidence-scaled variant of :func:`closed_form_k22`.

    The scored pair has two common neighbors, so the geometric evidence
    factor is ``1 - 2**-2 = 3/4`` and the value is simply three quarters
    of the plain closed form.
    """
    return 0.75 * closed_form_k22(c1, c2, k)


def closed_form_k22_limit(c1: float, c2: float) -> float:
    """Limit of :func:`closed_form_k22` as ``k`` grows without bound."""
    _validate(c1, c2, 1)
    # Sum the series pairwise: terms (2i-1, 2i) share the factor
    # (c1*c2/4)**(i-1), so the pair sums form one geometric series with
    # ratio at most 1/4.
    return 0.5 * c1 * (1.0 + 0.5 * c2) / (1.0 - 0.25 * c1 * c2)
