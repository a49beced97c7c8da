from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liarspoker.agents import (
    GRID_STEPS,
    PROBABILITY_FLOOR,
    AgentError,
    BaselineAgent,
    Observation,
    PolicyAgent,
    RandomAgent,
    filter_probabilities,
    make_agent,
)
from liarspoker.combinatorics import p_bid_holds_exact
from liarspoker.engine import (
    Bid,
    GameConfig,
    Hand,
    Phase,
    bid_of_index,
    index_of_bid,
    new_round,
    playout,
)
from liarspoker.neural import PolicyNetwork, save_checkpoint

CFG = GameConfig(3, 3, 2)
CFG3 = GameConfig(3, 3, 3)


def obs_after(config, actions, hands=None, player=None, seed=3):
    state = playout(new_round(config, hands=hands, seed=seed), actions)
    if player is None:
        player = state.to_act
    return Observation.from_state(state, player)


class TestObservation:
    def test_redacts_other_hands(self):
        obs = obs_after(CFG3, [4], player=1)
        assert obs.hand.counts == playout(new_round(CFG3, seed=3), [4]).hands[1].counts
        assert not hasattr(obs, "hands")

    def test_legal_actions_match_engine(self):
        obs = obs_after(CFG, [4])
        assert obs.legal_actions() == tuple(list(range(5, 18)) + [18])

    def test_fresh_round_has_no_standing_bid(self):
        obs = obs_after(CFG, [])
        assert obs.standing_bid is None
        assert obs.phase is Phase.BIDDING


class TestRandomAgent:
    def test_uniform_over_opening_bids(self):
        obs = obs_after(CFG, [])
        out = RandomAgent().act(obs, seed=0)
        probs = np.array(out.probabilities)
        assert probs.shape == (CFG.num_actions,)
        assert np.allclose(probs[:18], 1 / 18)
        assert probs[18] == 0

    def test_seed_determinism(self):
        obs = obs_after(CFG, [4])
        a = RandomAgent().act(obs, seed=11).action
        b = RandomAgent().act(obs, seed=11).action
        assert a == b

    def test_sampled_action_is_legal(self):
        obs = obs_after(CFG, [4])
        for seed in range(50):
            assert RandomAgent().act(obs, seed).action in obs.legal_actions()


class TestBaselineAgent:
    def test_opens_safest_bid_with_trips(self):
        hands = [Hand((3, 0, 0)), Hand((1, 1, 1))]
        obs = obs_after(CFG, [], hands=hands, player=0)
        out = BaselineAgent().act(obs, 0)
        # Wants the highest-probability raise; all quantities <= 3 of rank 1
        # are certainties, ties resolve to the lowest index.
        assert out.action == index_of_bid(CFG, Bid(1, 1))

    def test_challenges_a_hopeless_bid(self):
        hands = [Hand((1, 1, 1)), Hand((3, 0, 0))]
        # Player 0 opens six 3s (maximal quantity of a rank they hold once);
        # player 1 holds zero 3s, so the bid needs 5 of 3 unseen digits.
        opening = index_of_bid(CFG, Bid(6, 3))
        obs = obs_after(CFG, [opening - 1], hands=hands, player=1)
        out = BaselineAgent().act(obs, 0)
        assert out.action == CFG.challenge_action

    def test_determinism_ignores_seed(self):
        obs = obs_after(CFG, [4])
        assert BaselineAgent().act(obs, 1).action == BaselineAgent().act(obs, 99).action

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 5000))
    def test_choice_maximizes_myopic_ev(self, seed):
        import random

        rng = random.Random(seed)
        state = new_round(CFG3, seed=seed)
        from liarspoker.engine import apply_action, legal_actions

        for _ in range(rng.randrange(4)):
            if state.phase is Phase.RESOLVED:
                break
            state = apply_action(state, rng.choice(legal_actions(state)))
        if state.phase is Phase.RESOLVED:
            return
        obs = Observation.from_state(state, state.to_act)
        out = BaselineAgent().act(obs, 0)

        def ev(action):
            side = CFG3.num_players - 1
            if action == CFG3.challenge_action:
                bid = bid_of_index(CFG3, obs.standing_bid.index)
                p = p_bid_holds_exact(CFG3, bid, obs.hand.counts[bid.rank - 1])
                if obs.phase is Phase.BIDDER_DECISION:
                    return side * (2 * p - 1)
                return 1 - 2 * p
            bid = bid_of_index(CFG3, action)
            p = p_bid_holds_exact(CFG3, bid, obs.hand.counts[bid.rank - 1])
            return side * (2 * p - 1)

        best = max(ev(a) for a in obs.legal_actions())
        assert ev(out.action) == best


class TestFilter:
    def test_floors_and_snaps(self):
        probs = np.zeros(19)
        probs[[0, 1, 2]] = [0.02, 0.49, 0.49]
        out = filter_probabilities(probs)
        assert out[0] == 0
        assert np.isclose(out[1], 0.5) and np.isclose(out[2], 0.5)
        assert np.isclose(out.sum(), 1.0)

    def test_grid_resolution(self):
        probs = np.zeros(19)
        probs[:4] = [0.4, 0.3, 0.2, 0.1]
        out = filter_probabilities(probs)
        units = out * GRID_STEPS
        assert np.allclose(units, np.round(units))
        assert int(round(units.sum())) == GRID_STEPS

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.floats(0.0, 1.0), min_size=2, max_size=19).filter(
            lambda xs: sum(xs) > 1e-6
        )
    )
    def test_idempotent(self, raw):
        probs = np.array(raw) / sum(raw)
        once = filter_probabilities(probs)
        twice = filter_probabilities(once)
        assert np.allclose(once, twice)
        assert np.isclose(once.sum(), 1.0)
        assert (once[once > 0] >= PROBABILITY_FLOOR - 1e-12).all()

    def test_all_mass_below_floor_concentrates(self):
        probs = np.full(19, 1 / 19)
        out = filter_probabilities(probs)
        assert np.isclose(out.sum(), 1.0)


class TestPolicyAgent:
    def test_distribution_covers_only_legal_actions(self):
        net = PolicyNetwork(CFG, hidden=(8,), seed=0)
        agent = PolicyAgent(net, filtered=False)
        obs = obs_after(CFG, [4])
        probs, legal = agent.distribution(obs)
        assert np.isclose(probs.sum(), 1.0)
        illegal = set(range(CFG.num_actions)) - set(legal)
        assert all(probs[i] == 0 for i in illegal)

    def test_filtered_distribution_on_grid(self):
        net = PolicyNetwork(CFG, hidden=(8,), seed=0)
        agent = PolicyAgent(net, filtered=True)
        probs, _ = agent.distribution(obs_after(CFG, [4]))
        units = probs * GRID_STEPS
        assert np.allclose(units, np.round(units))

    def test_act_seed_determinism(self):
        net = PolicyNetwork(CFG, hidden=(8,), seed=0)
        agent = PolicyAgent(net)
        obs = obs_after(CFG, [4])
        assert agent.act(obs, 7).action == agent.act(obs, 7).action
        assert agent.act(obs, 7).action in obs.legal_actions()


class TestMakeAgent:
    def test_builtin_descriptors(self):
        assert isinstance(make_agent("random", CFG), RandomAgent)
        assert isinstance(make_agent("baseline", CFG), BaselineAgent)

    def test_policy_descriptor_roundtrip(self, tmp_path):
        net = PolicyNetwork(CFG, hidden=(8,), seed=0)
        path = tmp_path / "net.bin"
        save_checkpoint(net, path)
        agent = make_agent(f"policy:{path}", CFG)
        assert isinstance(agent, PolicyAgent)

    def test_policy_config_mismatch_rejected(self, tmp_path):
        net = PolicyNetwork(CFG3, hidden=(8,), seed=0)
        path = tmp_path / "net.bin"
        save_checkpoint(net, path)
        with pytest.raises(Exception):
            make_agent(f"policy:{path}", CFG)

    def test_unknown_and_human_rejected(self):
        with pytest.raises(AgentError):
            make_agent("oracle", CFG)
        with pytest.raises(AgentError):
            make_agent("human", CFG)
        with pytest.raises(AgentError):
            make_agent("policy:", CFG)
