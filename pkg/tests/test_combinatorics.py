import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from liarspoker.combinatorics import (
    canonical_hand_count,
    count_bid_sequences,
    count_sequences_dfs,
    enumerate_canonical_hands,
    format_report,
    hand_category,
    hand_probability,
    log10_floor,
    log10_round,
    max_length_dfs,
    max_round_length,
    p_bid_holds,
    p_bid_holds_exact,
    probability_table,
    state_space_report,
    state_space_row,
)
from liarspoker.engine import Bid, GameConfig, Hand

CFG = GameConfig(3, 3, 2)


class TestBidHoldsProbability:
    def test_zero_support_high_quantity(self):
        # Needing 4 of a rank from the 3 unseen digits is impossible.
        assert p_bid_holds_exact(CFG, Bid(4, 1), own_count=0) == 0

    def test_own_count_already_covers(self):
        assert p_bid_holds_exact(CFG, Bid(3, 1), own_count=3) == 1

    def test_known_anchor_values(self):
        # Binomial(3, 1/3): P(X >= 2) = 7/27, P(X >= 1) = 19/27.
        assert p_bid_holds_exact(CFG, Bid(2, 1), own_count=0) == Fraction(7, 27)
        assert p_bid_holds_exact(CFG, Bid(1, 1), own_count=0) == Fraction(19, 27)

    def test_six_unseen_digits_anchors(self):
        cfg3 = GameConfig(3, 3, 3)
        # Binomial(6, 1/3): P(X >= 4) = 73/729, P(X >= 1) = 665/729.
        assert p_bid_holds_exact(cfg3, Bid(4, 2), own_count=0) == Fraction(73, 729)
        assert p_bid_holds_exact(cfg3, Bid(1, 2), own_count=0) == Fraction(665, 729)
        assert round(100 * float(Fraction(73, 729))) == 10
        assert round(100 * float(Fraction(665, 729))) == 91

    def test_rank_is_irrelevant(self):
        for q in range(1, 7):
            probs = {p_bid_holds_exact(CFG, Bid(q, r), 1) for r in (1, 2, 3)}
            assert len(probs) == 1

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 3))
    def test_monotone_in_quantity_and_own_count(self, q, r, own):
        p = p_bid_holds_exact(CFG, Bid(q, r), own_count=own)
        assert 0 <= p <= 1
        if q > 1:
            assert p <= p_bid_holds_exact(CFG, Bid(q - 1, r), own_count=own)
        if own > 0:
            assert p >= p_bid_holds_exact(CFG, Bid(q, r), own_count=own - 1)

    def test_out_of_range_own_count(self):
        with pytest.raises(ValueError):
            p_bid_holds_exact(CFG, Bid(1, 1), own_count=4)

    def test_probability_table_shape(self):
        table = probability_table(CFG)
        assert len(table) == CFG.hand_length + 1
        assert all(len(row) == CFG.max_quantity for row in table)
        assert table[3][2] == 1.0
        assert table[0][0] == p_bid_holds(CFG, Bid(1, 1), 0)


class TestCanonicalHands:
    @pytest.mark.parametrize(
        "h,d,l,per,exponent",
        [(3, 3, 2, 10, 2), (3, 3, 3, 10, 3), (8, 10, 4, 24310, 17)],
    )
    def test_counts_are_compositions(self, h, d, l, per, exponent):
        per_player, joint = canonical_hand_count(GameConfig(h, d, l))
        assert per_player == math.comb(h + d - 1, d - 1) == per
        assert joint == per_player**l
        assert log10_floor(joint) == exponent

    def test_enumeration_matches_count(self):
        hands = enumerate_canonical_hands(CFG)
        assert len(hands) == 10
        assert all(sum(h.counts) == 3 for h in hands)
        assert len(set(hands)) == 10

    def test_hand_probabilities_sum_to_one(self):
        total = sum(hand_probability(CFG, h) for h in enumerate_canonical_hands(CFG))
        assert total == 1

    def test_multinomial_weighting(self):
        # (3,0,0) has 1 arrangement out of 27; (1,1,1) has 6.
        assert hand_probability(CFG, Hand((3, 0, 0))) == Fraction(1, 27)
        assert hand_probability(CFG, Hand((1, 1, 1))) == Fraction(6, 27)

    def test_hand_category_is_max_count(self):
        assert hand_category(Hand((1, 1, 1))) == 1
        assert hand_category(Hand((2, 1, 0))) == 2
        assert hand_category(Hand((0, 3, 0))) == 3

    def test_category_frequencies(self):
        # 3 digits from 3 ranks: P(trips)=1/9, P(pair)=6/9, P(distinct)=2/9.
        by_cat = {1: Fraction(0), 2: Fraction(0), 3: Fraction(0)}
        for h in enumerate_canonical_hands(CFG):
            by_cat[hand_category(h)] += hand_probability(CFG, h)
        assert by_cat == {1: Fraction(2, 9), 2: Fraction(6, 9), 3: Fraction(1, 9)}


class TestStateSpace:
    @pytest.mark.parametrize(
        "h,d,l,length,seq_exponent",
        [
            (3, 3, 2, 27, 7),
            (5, 5, 2, 75, 20),
            (3, 3, 3, 53, 15),
            (8, 10, 4, 800, 217),
        ],
    )
    def test_reported_anchors(self, h, d, l, length, seq_exponent):
        config = GameConfig(h, d, l)
        assert max_round_length(config) == length
        assert log10_floor(count_bid_sequences(config)) == seq_exponent

    def test_closed_form_length(self):
        for dims in [(3, 3, 2), (5, 5, 2), (3, 3, 3), (2, 2, 4), (8, 10, 4)]:
            config = GameConfig(*dims)
            n, l = config.num_bids, config.num_players
            expected = (n // 2) * (l + 1) if n % 2 == 0 else ((n - 1) // 2) * (l + 1) + 1
            assert max_round_length(config) == expected

    @pytest.mark.parametrize("h,d,l", [(1, 2, 2), (2, 2, 2), (1, 3, 2), (1, 2, 3)])
    def test_dp_matches_exhaustive_dfs(self, h, d, l):
        config = GameConfig(h, d, l)
        assert count_bid_sequences(config) == count_sequences_dfs(config)
        assert max_round_length(config) == max_length_dfs(config)

    def test_row_fields(self):
        row = state_space_row(CFG)
        assert row.max_round_length == 27
        assert row.canonical_hands_per_player == 10
        assert row.canonical_hands_joint == 100
        assert row.bid_sequences == count_bid_sequences(CFG)
        assert row.state_space_exponent == log10_round(100 * row.bid_sequences)

    def test_report_and_formats(self):
        rows = state_space_report([CFG, GameConfig(3, 3, 3)])
        assert len(rows) == 2
        table = format_report(rows)
        csv = format_report(rows, fmt="csv")
        assert "3x3" in table
        assert csv.count("\n") == 2
        with pytest.raises(ValueError):
            format_report(rows, fmt="xml")


class TestLogHelpers:
    def test_log10_floor_exact_powers(self):
        assert log10_floor(1) == 0
        assert log10_floor(10) == 1
        assert log10_floor(10**40) == 40
        assert log10_floor(10**40 - 1) == 39

    def test_log10_floor_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            log10_floor(0)

    def test_log10_round(self):
        assert log10_round(3 * 10**6) == 6
        assert log10_round(4 * 10**6) == 7
        assert log10_round(10**30) == 30
