"""Closed-form score sequences for complete bipartite graphs.

The two-query/two-ad and two-query/one-ad closed forms anchor the whole
engine: every published score in the small-graph tables must fall out of
them exactly.  The monotonicity suites at the bottom run the claims as
stated in the source material; two of them are genuinely false and the
failing tests document the counterexamples rather than papering over
them (see notes/decisions.md outside the package).
"""

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clicksim.oracles import (
    closed_form_evidence_k22,
    closed_form_k12,
    closed_form_k22,
    closed_form_k22_limit,
)

# converged-from-zero iterates on the 2x2 complete graph at decay 0.8
K22_SEQ = [0.4, 0.56, 0.624, 0.6496, 0.65984, 0.663936, 0.6655744]
EVIDENCE_SEQ = [0.3, 0.42, 0.468, 0.4872, 0.49488, 0.497952, 0.4991808]

DECAY_GRID = [0.5, 0.6, 0.8, 1.0]


@pytest.mark.parametrize("k,expected", list(enumerate(K22_SEQ, start=1)))
def test_k22_reference_sequence(k, expected):
    assert closed_form_k22(0.8, 0.8, k) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("k", range(1, 8))
def test_k12_is_flat_at_query_decay(k):
    assert closed_form_k12(0.8, 0.8, k) == pytest.approx(0.8, abs=0)
    assert closed_form_k12(0.5, 0.9, k) == pytest.approx(0.5, abs=0)


@pytest.mark.parametrize("k,expected", list(enumerate(EVIDENCE_SEQ, start=1)))
def test_evidence_k22_reference_sequence(k, expected):
    assert closed_form_evidence_k22(0.8, 0.8, k) == pytest.approx(
        expected, abs=1e-12
    )


def test_evidence_k22_is_three_quarters_of_plain():
    for c1, c2 in itertools.product(DECAY_GRID, repeat=2):
        for k in range(1, 31):
            assert closed_form_evidence_k22(c1, c2, k) == pytest.approx(
                0.75 * closed_form_k22(c1, c2, k), abs=1e-15
            )


def test_k22_limit_value():
    assert closed_form_k22_limit(0.8, 0.8) == pytest.approx(2 / 3, abs=1e-12)


def test_k22_approaches_its_limit():
    for c1, c2 in itertools.product(DECAY_GRID, repeat=2):
        limit = closed_form_k22_limit(c1, c2)
        assert abs(closed_form_k22(c1, c2, 200) - limit) < 1e-10


@pytest.mark.parametrize("bad", [0.0, -0.2, 1.2])
def test_decays_outside_unit_interval_rejected(bad):
    with pytest.raises(ValueError):
        closed_form_k22(bad, 0.8, 3)
    with pytest.raises(ValueError):
        closed_form_k22(0.8, bad, 3)


def test_iteration_count_must_be_positive():
    with pytest.raises(ValueError):
        closed_form_k22(0.8, 0.8, 0)


@given(
    st.floats(0.05, 1.0),
    st.floats(0.05, 1.0),
    st.integers(1, 60),
)
@settings(max_examples=200, deadline=None)
def test_k22_monotone_in_k_and_bounded(c1, c2, k):
    here = closed_form_k22(c1, c2, k)
    nxt = closed_form_k22(c1, c2, k + 1)
    assert 0.0 < here <= nxt <= c1 + 1e-12


# -- theorem suites --------------------------------------------------------


def km2_query_pair_sequence(m, c1, c2, steps):
    """Exact iterates of the query-pair score on a complete m-ad graph.

    By symmetry the state is two numbers (the query pair and the common
    off-diagonal ad-pair score); iterating the pair of recurrences in
    rational arithmetic gives an oracle independent of the engine.
    """
    sq, sa = Fraction(0), Fraction(0)
    out = []
    for _ in range(steps):
        sq, sa = (
            Fraction(c1) * (1 + (m - 1) * sa) / m,
            Fraction(c2) * (1 + sq) / 2,
        )
        out.append(sq)
    return out


def test_km2_recurrence_agrees_with_k22_closed_form():
    for c1, c2 in itertools.product(DECAY_GRID, repeat=2):
        seq = km2_query_pair_sequence(2, Fraction(c1), Fraction(c2), 20)
        for k in range(1, 21):
            assert float(seq[k - 1]) == pytest.approx(
                closed_form_k22(c1, c2, k), abs=1e-12
            )


def test_single_ad_pair_dominates_two_ad_pair():
    # sharing one ad ties the pair to the decay; splitting attention over
    # two ads can only lose score
    for c1, c2 in itertools.product(DECAY_GRID, repeat=2):
        for k in range(1, 21):
            assert closed_form_k12(c1, c2, k) >= closed_form_k22(c1, c2, k)


def test_dominance_is_strict_below_unit_decay():
    for c1, c2 in itertools.product(DECAY_GRID, repeat=2):
        if c1 == 1.0 and c2 == 1.0:
            continue
        for k in range(1, 21):
            assert closed_form_k12(c1, c2, k) > closed_form_k22(c1, c2, k)
        assert c1 > closed_form_k22_limit(c1, c2)


def test_limits_meet_only_at_unit_decays():
    assert closed_form_k22_limit(1.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert closed_form_k22(1.0, 1.0, 30) == pytest.approx(1.0, abs=1e-8)


def test_fewer_ads_score_higher_without_evidence():
    # the known pathology: adding common ads dilutes the plain score
    for m, n in itertools.combinations(range(1, 6), 2):
        for c1, c2 in itertools.product(DECAY_GRID, repeat=2):
            sm = km2_query_pair_sequence(m, Fraction(c1), Fraction(c2), 20)
            sn = km2_query_pair_sequence(n, Fraction(c1), Fraction(c2), 20)
            assert all(a > b for a, b in zip(sm, sn))


def geometric_evidence(n):
    return 1 - Fraction(1, 2**n)


def test_evidence_beats_single_ad_pair_above_half_decay():
    """Stated claim: for decays above 1/2 the evidence-scaled two-ad pair
    overtakes the one-ad pair from the second round on.

    Genuinely false: at (c1, c2) = (0.6, 0.6) round 2 gives
    0.75 * 0.39 = 0.2925 < 0.3 = 0.5 * 0.6, and seven more grid points
    fail the same way (low ad-side decay delays the overtake past round
    two).  Kept as stated; the failure is the finding.
    """
    failures = []
    for c1, c2 in itertools.product([0.55, 0.6, 0.8, 1.0], repeat=2):
        for k in range(2, 21):
            e22 = closed_form_evidence_k22(c1, c2, k)
            e12 = 0.5 * closed_form_k12(c1, c2, k)
            if not e22 > e12:
                failures.append((c1, c2, k, e22, e12))
    assert not failures, f"{len(failures)} grid points violate the claim: {failures[:4]}"


def test_evidence_reverses_ad_count_ordering_at_reference_decay():
    """Stated claim: with evidence scaling at decay 0.8, more common ads
    means a strictly higher score from round 2 on (2 <= m < n <= 5).

    Genuinely false: (m, n) = (2, 3) ties exactly at round 2
    (0.42 = 0.42), several pairs reverse at small k, and (4, 5) is
    reversed at every k — even the limits order the wrong way
    (0.54276 > 0.54167).  Kept as stated; the failure is the finding.
    """
    c = Fraction(4, 5)
    failures = []
    for m, n in itertools.combinations(range(2, 6), 2):
        sm = km2_query_pair_sequence(m, c, c, 20)
        sn = km2_query_pair_sequence(n, c, c, 20)
        for k in range(2, 21):
            lhs = geometric_evidence(n) * sn[k - 1]
            rhs = geometric_evidence(m) * sm[k - 1]
            if not lhs > rhs:
                failures.append((m, n, k, float(lhs), float(rhs)))
    assert not failures, f"{len(failures)} (m,n,k) points violate the claim: {failures[:4]}"
