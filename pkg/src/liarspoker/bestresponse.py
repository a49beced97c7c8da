"""Exploitability estimation against frozen policies.

Two estimators: a DQN exploiter (epsilon-greedy Q-learning with replay and
a target network, one seat fixed, all other seats playing the frozen
policy with play-time filtering), and an exact best-response computation
for 2-player configs that traverses the public game tree once while
carrying a reach distribution over the opponent's hands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import neural
from .agents import Agent, PolicyAgent, filter_probabilities, AgentError, Observation
from .combinatorics import enumerate_canonical_hands, hand_probability
from .engine import GameConfig, Hand, Phase, StandingBid
from .rollout import LockstepGames


class BestResponseError(ValueError):
    pass


@dataclass(frozen=True)
class BRConfig:
    """DQN exploiter settings; defaults follow the published run."""

    checkpoint: str | None = None
    position: int = 0
    steps: int = 1_000_000
    games_per_step: int = 32
    learning_rate: float = 0.1
    hidden: tuple[int, ...] = (64, 64, 64)
    eval_every: int = 5_000
    eval_rounds: int = 1_000
    rolling_window: int = 10
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_fraction: float = 0.10
    replay_capacity: int = 100_000
    target_sync: int = 1_000
    batch_size: int = 32
    discount: float = 1.0
    seed: int = 0

    def epsilon_at(self, step: int) -> float:
        horizon = max(1, int(self.steps * self.epsilon_fraction))
        frac = min(step / horizon, 1.0)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac


@dataclass
class BRScoreSeries:
    """Evaluation scores over training: (step, mean exploiter reward)."""

    position: int
    entries: list[tuple[int, float]] = field(default_factory=list)
    rolling_window: int = 10

    @property
    def rolling_mean(self) -> float:
        if not self.entries:
            raise BestResponseError("no evaluations recorded")
        tail = self.entries[-self.rolling_window:]
        return float(np.mean([score for _, score in tail]))


class QNetwork:
    """Rectifier MLP mapping features to one Q-value per action, plain SGD."""

    def __init__(self, input_size: int, num_actions: int,
                 hidden: tuple[int, ...], seed: int):
        rng = np.random.default_rng(seed)
        sizes = [input_size, *hidden, num_actions]
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, fan_out))

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
        return h @ self.weights[-1] + self.biases[-1]

    def sgd_step(self, x: np.ndarray, actions: np.ndarray,
                 targets: np.ndarray, lr: float) -> float:
        acts = [x]
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
            acts.append(h)
        q = h @ self.weights[-1] + self.biases[-1]
        n = len(x)
        idx = np.arange(n)
        diff = q[idx, actions] - targets
        loss = float(np.mean(diff**2))
        d_q = np.zeros_like(q)
        d_q[idx, actions] = 2.0 * diff / n
        d_h = d_q
        for layer in range(len(self.weights) - 1, -1, -1):
            prev = acts[layer]
            if layer < len(self.weights) - 1:
                d_h = d_h * (acts[layer + 1] > 0)
            gw = prev.T @ d_h
            gb = d_h.sum(axis=0)
            d_h = d_h @ self.weights[layer].T
            self.weights[layer] -= lr * gw
            self.biases[layer] -= lr * gb
        return loss

    def copy_from(self, other: "QNetwork") -> None:
        self.weights = [w.copy() for w in other.weights]
        self.biases = [b.copy() for b in other.biases]


def _advance_opponents(games: LockstepGames, indices, position: int,
                       opponent: Agent, rng) -> None:
    """Let the frozen policy act in the given games until the exploiter is
    to act or the round resolves."""
    fast = isinstance(opponent, PolicyAgent)
    while True:
        waiting = [
            i for i in indices
            if games.rounds[i].phase != 2 and games.rounds[i].to_act != position
        ]
        if not waiting:
            return
        if fast:
            x = games.feature_rows(waiting)
            logits, _ = opponent.network.forward(x)
            masks = games.legal_masks(waiting)
            probs = neural.masked_softmax(logits, masks)
            for row, i in enumerate(waiting):
                p = probs[row]
                if opponent.filtered:
                    try:
                        p = filter_probabilities(p)
                    except AgentError:
                        legal = np.flatnonzero(masks[row])
                        p = np.zeros_like(p)
                        p[legal[np.argmax(logits[row, legal])]] = 1.0
                games.apply(i, int(rng.choice(len(p), p=p / p.sum())))
        else:
            for i in waiting:
                obs = games.observation(i)
                out = opponent.act(obs, seed=int(rng.integers(1 << 31)))
                games.apply(i, out.action)


def _greedy_eval(q: QNetwork, games: LockstepGames, position: int,
                 opponent: Agent, rounds: int, rng, seed_base: int) -> float:
    """Mean exploiter reward over fresh rounds, greedy Q play."""
    L = games.config.num_players
    total = 0.0
    done = 0
    counter = 0
    n = games.n
    while done < rounds:
        batch = min(n, rounds - done)
        idxs = list(range(batch))
        for i in idxs:
            games.deal(i, seed_base + counter, opener=counter % L)
            counter += 1
        live = idxs
        while live:
            _advance_opponents(games, live, position, opponent, rng)
            live = [i for i in live if games.rounds[i].phase != 2]
            if not live:
                break
            x = games.feature_rows(live)
            masks = games.legal_masks(live)
            qv = np.where(masks, q.forward(x), -np.inf)
            best = np.argmax(qv, axis=1)
            for row, i in enumerate(live):
                games.apply(i, int(best[row]))
            live = [i for i in live if games.rounds[i].phase != 2]
        for i in idxs:
            total += games.rounds[i].payout(position)
        done += batch
    return total / rounds


def train_dqn_br(
    br: BRConfig,
    opponent: Agent | None = None,
    config: GameConfig | None = None,
) -> BRScoreSeries:
    """Train a DQN exploiter against a frozen policy; returns the score series.

    The frozen seat(s) come from br.checkpoint (played with filtering) unless
    an opponent agent and config are supplied directly.
    """
    if opponent is None:
        if br.checkpoint is None:
            raise BestResponseError("need a checkpoint or an explicit opponent")
        network = neural.load_checkpoint(br.checkpoint, expect_config=config)
        opponent = PolicyAgent(network, filtered=True)
        config = network.config
    if config is None:
        raise BestResponseError("config required with an explicit opponent")
    if not 0 <= br.position < config.num_players:
        raise BestResponseError(f"position {br.position} outside seats")

    rng = np.random.default_rng(br.seed)
    games = LockstepGames(config, br.games_per_step)
    eval_games = LockstepGames(config, min(br.eval_rounds, 256))
    input_size = games.input_size
    num_actions = config.num_actions
    q = QNetwork(input_size, num_actions, br.hidden, br.seed)
    target = QNetwork(input_size, num_actions, br.hidden, br.seed)
    target.copy_from(q)

    cap = br.replay_capacity
    rs = np.zeros((cap, input_size))
    ra = np.zeros(cap, dtype=np.int64)
    rr = np.zeros(cap)
    rs2 = np.zeros((cap, input_size))
    rm2 = np.zeros((cap, num_actions), dtype=bool)
    rdone = np.zeros(cap, dtype=bool)
    fill = 0
    cursor = 0

    L = config.num_players
    deal_counter = 0

    def fresh(i: int) -> None:
        nonlocal deal_counter
        games.deal(i, br.seed * 69_069 + deal_counter, opener=deal_counter % L)
        deal_counter += 1

    idxs = list(range(br.games_per_step))
    for i in idxs:
        fresh(i)
    _advance_opponents(games, idxs, br.position, opponent, rng)
    for i in idxs:
        while games.rounds[i].phase == 2:
            fresh(i)
            _advance_opponents(games, [i], br.position, opponent, rng)

    series = BRScoreSeries(position=br.position, rolling_window=br.rolling_window)
    for step in range(br.steps):
        eps = br.epsilon_at(step)
        x = games.feature_rows(idxs)
        masks = games.legal_masks(idxs)
        qv = np.where(masks, q.forward(x), -np.inf)
        greedy = np.argmax(qv, axis=1)
        for row, i in enumerate(idxs):
            legal = np.flatnonzero(masks[row])
            a = int(rng.choice(legal)) if rng.random() < eps else int(greedy[row])
            games.apply(i, a)
            _advance_opponents(games, [i], br.position, opponent, rng)
            g = games.rounds[i]
            done = g.phase == 2
            reward = g.payout(br.position) if done else 0.0
            if done:
                next_x = np.zeros(input_size)
                next_m = np.zeros(num_actions, dtype=bool)
            else:
                next_x = games.feature_rows([i])[0]
                next_m = games.legal_masks([i])[0]
            rs[cursor] = x[row]
            ra[cursor] = a
            rr[cursor] = reward
            rs2[cursor] = next_x
            rm2[cursor] = next_m
            rdone[cursor] = done
            cursor = (cursor + 1) % cap
            fill = min(fill + 1, cap)
            if done:
                while True:
                    fresh(i)
                    _advance_opponents(games, [i], br.position, opponent, rng)
                    if games.rounds[i].phase != 2:
                        break

        if fill >= br.batch_size:
            sample = rng.integers(0, fill, br.batch_size)
            q2 = target.forward(rs2[sample])
            q2 = np.where(rm2[sample], q2, -np.inf)
            best_next = np.max(q2, axis=1)
            best_next = np.where(rdone[sample], 0.0, best_next)
            targets = rr[sample] + br.discount * best_next
            q.sgd_step(rs[sample], ra[sample], targets, br.learning_rate)
        if (step + 1) % br.target_sync == 0:
            target.copy_from(q)
        if (step + 1) % br.eval_every == 0 or step + 1 == br.steps:
            score = _greedy_eval(
                q, eval_games, br.position, opponent, br.eval_rounds,
                np.random.default_rng(br.seed + step + 1),
                seed_base=br.seed * 40_009 + step * br.eval_rounds,
            )
            series.entries.append((step + 1, score))
    return series


# --- exact best response (2-player) ---------------------------------------


def _policy_distribution(policy, observation: Observation) -> np.ndarray:
    if hasattr(policy, "distribution"):
        probs, _ = policy.distribution(observation)
        return np.asarray(probs)
    return np.asarray(policy.act(observation, seed=0).probabilities)


def exact_best_response(policy, config: GameConfig, responder: int) -> float:
    """Expected per-round payoff of the exact best response at one seat.

    2-player only.  A single depth-first pass over the public tree carries
    an unnormalized reach distribution over the opponent's canonical hands
    (updated by the frozen policy's action probabilities) and a payoff
    vector over every responder hand at once: responder nodes take the
    elementwise max over actions, opponent nodes sum reach-weighted child
    values.  Hands are independent, so one traversal serves all responder
    hands simultaneously.
    """
    if config.num_players != 2:
        raise BestResponseError("exact best response supports 2-player configs")
    if responder not in (0, 1):
        raise BestResponseError("responder must be 0 or 1")
    opponent_seat = 1 - responder
    nb = config.num_bids
    D = config.digit_cardinality

    r_hands = enumerate_canonical_hands(config)
    o_hands = enumerate_canonical_hands(config)
    r_probs = np.array([float(hand_probability(config, h)) for h in r_hands])
    o_probs = np.array([float(hand_probability(config, h)) for h in o_hands])
    r_counts = np.array([h.counts for h in r_hands])       # (R, D)
    o_counts = np.array([h.counts for h in o_hands])       # (O, D)

    fast = isinstance(policy, PolicyAgent) and policy.network.spec.mode == neural.MODE_CANONICAL
    if fast and policy.network.config != config:
        raise BestResponseError("policy network config mismatch")

    pub = np.zeros(2 * 2 * nb + 2)
    ch_off = 2 * nb
    rebid_off = 4 * nb
    pos_onehot = np.zeros((len(o_hands), 2))
    pos_onehot[:, opponent_seat] = 1.0
    history: list[tuple[int, int]] = []

    def opponent_probs(w: np.ndarray, standing, cc, phase) -> np.ndarray:
        """(O, num_actions) action probabilities; rows with zero reach are 0."""
        active = np.flatnonzero(w > 0)
        out = np.zeros((len(o_hands), config.num_actions))
        if fast:
            x = np.concatenate(
                [o_counts[active], pos_onehot[active], np.tile(pub, (len(active), 1))],
                axis=1,
            )
            logits, _ = policy.network.forward(x)
            mask = np.zeros(config.num_actions, dtype=bool)
            floor = -1 if standing is None else standing.index
            mask[floor + 1 : nb] = True
            if standing is not None:
                mask[nb] = True
            probs = neural.masked_softmax(logits, np.tile(mask, (len(active), 1)))
            for row, h in enumerate(active):
                p = probs[row]
                if policy.filtered:
                    try:
                        p = filter_probabilities(p)
                    except AgentError:
                        legal = np.flatnonzero(mask)
                        p = np.zeros_like(p)
                        p[legal[np.argmax(logits[row, legal])]] = 1.0
                out[h] = p
            return out
        for h in active:
            obs = Observation(
                config=config,
                hand=o_hands[h],
                position=opponent_seat,
                standing_bid=standing,
                consecutive_challenges=cc,
                phase=phase,
                history=tuple(history),
            )
            out[h] = _policy_distribution(policy, obs)
        return out

    def terminal_value(w: np.ndarray, standing: StandingBid) -> np.ndarray:
        q, rank0 = divmod(standing.index, D)
        q += 1
        holds = (r_counts[:, rank0][:, None] + o_counts[None, :, rank0]) >= q  # (R, O)
        sign = np.where(holds, 1.0, -1.0)
        if standing.bidder != responder:
            sign = -sign
        return sign @ w

    def legal(standing) -> list[int]:
        floor = -1 if standing is None else standing.index
        acts = list(range(floor + 1, nb))
        if standing is not None:
            acts.append(nb)
        return acts

    def child(standing, cc, phase, to_act, action):
        """Engine transition on public state; returns the new public tuple."""
        if action == nb:
            if phase is Phase.BIDDER_DECISION:
                return standing, cc, Phase.RESOLVED, to_act
            cc += 1
            if cc == 1:  # L - 1 == 1 in heads-up
                if standing.is_rebid:
                    return standing, cc, Phase.RESOLVED, to_act
                return standing, cc, Phase.BIDDER_DECISION, standing.bidder
            raise AssertionError("unreachable in heads-up")
        new = StandingBid(action, to_act, phase is Phase.BIDDER_DECISION)
        if action == nb - 1:
            return new, 0, Phase.RESOLVED, 1 - to_act
        return new, 0, Phase.BIDDING, 1 - to_act

    def push(to_act, action, standing, decision):
        history.append((to_act, action))
        if action == nb:
            slot = ch_off + to_act * nb + standing.index
            pub[slot] += 1.0
            return ("ch", slot)
        slot = to_act * nb + action
        old_rebid = pub[rebid_off]
        pub[slot] = 1.0
        pub[rebid_off] = 1.0 if decision else 0.0
        return ("bid", slot, old_rebid)

    def pop(token):
        history.pop()
        if token[0] == "ch":
            pub[token[1]] -= 1.0
        else:
            pub[token[1]] = 0.0
            pub[rebid_off] = token[2]

    def visit(standing, cc, phase, to_act, w: np.ndarray) -> np.ndarray:
        if phase is Phase.RESOLVED:
            return terminal_value(w, standing)
        if to_act == responder:
            best = None
            for a in legal(standing):
                token = push(to_act, a, standing, phase is Phase.BIDDER_DECISION)
                s2, cc2, ph2, ta2 = child(standing, cc, phase, to_act, a)
                v = visit(s2, cc2, ph2, ta2, w)
                pop(token)
                best = v if best is None else np.maximum(best, v)
            return best
        P = opponent_probs(w, standing, cc, phase)
        total = np.zeros(len(r_hands))
        for a in legal(standing):
            w2 = w * P[:, a]
            if not np.any(w2 > 0):
                continue
            token = push(to_act, a, standing, phase is Phase.BIDDER_DECISION)
            s2, cc2, ph2, ta2 = child(standing, cc, phase, to_act, a)
            total += visit(s2, cc2, ph2, ta2, w2)
            pop(token)
        return total

    values = visit(None, 0, Phase.BIDDING, 0, o_probs.copy())
    return float(r_probs @ values)
