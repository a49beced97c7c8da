"""Self-play training loop with reward regularization toward a reference.

Every seat samples from one shared policy network.  Trajectories are
collected in lockstep batches, cut off after a configurable number of
moves (cutoff rounds contribute nothing to the update), and scored with
undiscounted returns whose acting-player rewards are shifted by
-eta * (log pi_current - log pi_reference).  The reference network is
replaced by a copy of the current one every `refresh_interval` learner
steps, and the learning rate decays linearly to a floor.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import neural
from .engine import GameConfig
from .rollout import LockstepGames

DEFAULT_CUTOFFS = {
    (3, 3, 2): 10,
    (5, 5, 2): 10,
    (3, 3, 3): 15,
}


class TrainerError(ValueError):
    pass


def default_cutoff(config: GameConfig) -> int:
    key = (config.hand_length, config.digit_cardinality, config.num_players)
    if key in DEFAULT_CUTOFFS:
        return DEFAULT_CUTOFFS[key]
    from .combinatorics import max_round_length

    return min(16, max_round_length(config))


@dataclass(frozen=True)
class TrainerConfig:
    game: GameConfig
    hidden: tuple[int, ...] = (256, 256)
    encoding_mode: str = neural.MODE_CANONICAL
    total_steps: int = 1000
    trajectories_per_step: int = 128
    cutoff: int | None = None
    eta: float = 0.2
    refresh_interval: int = 1000
    learning_rate: float = 2e-3
    learning_rate_floor: float = 2e-4
    reward_scale: float = 1.0
    entropy_coefficient: float = 0.0
    clip_norm: float = 10.0
    value_weight: float = 1.0
    checkpoint_interval: int = 10_000
    seed: int = 0

    def __post_init__(self):
        cutoff = self.cutoff if self.cutoff is not None else default_cutoff(self.game)
        object.__setattr__(self, "cutoff", cutoff)
        from .combinatorics import max_round_length

        if not 1 <= cutoff <= max_round_length(self.game):
            raise TrainerError(f"cutoff {cutoff} outside 1..max round length")
        for name in ("total_steps",):
            if getattr(self, name) < 0:
                raise TrainerError(f"{name} must be >= 0")
        for name in ("trajectories_per_step", "refresh_interval", "eta",
                     "learning_rate", "reward_scale", "checkpoint_interval"):
            if getattr(self, name) <= 0:
                raise TrainerError(f"{name} must be > 0")

    def lr_at(self, step: int) -> float:
        """Linear decay from learning_rate to the floor over total_steps."""
        if self.total_steps <= 1:
            return self.learning_rate
        frac = min(step / (self.total_steps - 1), 1.0) if self.total_steps > 1 else 0.0
        lr = self.learning_rate + (self.learning_rate_floor - self.learning_rate) * frac
        return max(lr, self.learning_rate_floor)


@dataclass
class Trajectory:
    """One self-play round: per-step records plus the terminal payouts."""

    players: np.ndarray          # (T,) acting player per step
    features: np.ndarray         # (T, input_size)
    legal_masks: np.ndarray      # (T, num_actions) bool
    actions: np.ndarray          # (T,)
    behavior_probs: np.ndarray   # (T,) probability of the sampled action
    payouts: tuple[int, ...] | None   # None when the round hit the cutoff

    @property
    def terminated(self) -> bool:
        return self.payouts is not None

    def __len__(self) -> int:
        return len(self.actions)


def collect_trajectories(
    network: neural.PolicyNetwork,
    config: GameConfig,
    n: int,
    cutoff: int,
    seed: int,
) -> list[Trajectory]:
    """Play n rounds in lockstep, all seats sampling the shared policy.

    Sampling uses the raw masked softmax (no play-time filtering).  Openers
    rotate with the round index.  Rounds still unresolved after `cutoff`
    moves are returned with payouts None.
    """
    if network.config != config:
        raise TrainerError("network/game config mismatch")
    if network.spec.mode != neural.MODE_CANONICAL:
        raise TrainerError("lockstep collection supports canonical-counts encoding")
    L = config.num_players
    num_actions = config.num_actions
    rng = np.random.default_rng(seed)

    games = LockstepGames(config, n)
    for i in range(n):
        games.deal(i, seed * 1_000_003 + i, opener=i % L)

    steps: list[list[tuple]] = [[] for _ in range(n)]
    active = list(range(n))
    while active:
        x = games.feature_rows(active)
        logits, _ = network.forward(x)
        masks = games.legal_masks(active)
        probs = neural.masked_softmax(logits, masks)
        u = rng.random(len(active))
        choices = (np.cumsum(probs, axis=1) < u[:, None]).sum(axis=1)
        choices = np.minimum(choices, num_actions - 1)

        still = []
        for row, i in enumerate(active):
            g = games.rounds[i]
            a = int(choices[row])
            steps[i].append((g.to_act, x[row], masks[row], a, float(probs[row, a])))
            games.apply(i, a)
            if g.phase != 2 and g.moves < cutoff:
                still.append(i)
        active = still

    out = []
    for i, g in enumerate(games.rounds):
        recs = steps[i]
        out.append(
            Trajectory(
                players=np.array([r[0] for r in recs], dtype=np.int64),
                features=np.stack([r[1] for r in recs]),
                legal_masks=np.stack([r[2] for r in recs]),
                actions=np.array([r[3] for r in recs], dtype=np.int64),
                behavior_probs=np.array([r[4] for r in recs]),
                payouts=tuple(g.payouts()) if g.phase == 2 else None,
            )
        )
    return out


def _log_probs(network: neural.PolicyNetwork, traj: Trajectory) -> np.ndarray:
    logits, values = network.forward(traj.features)
    probs = neural.masked_softmax(logits, traj.legal_masks)
    idx = np.arange(len(traj))
    return np.log(probs[idx, traj.actions]), values


def regularized_returns(
    trajectory: Trajectory,
    network: neural.PolicyNetwork,
    reference: neural.PolicyNetwork,
    eta: float,
    reward_scale: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-step (return, advantage) targets for a terminated trajectory.

    Each acting step of player i earns -eta * (log pi_cur - log pi_ref)
    immediately; the terminal payout (scaled) lands after the last step.
    Returns are undiscounted sums of player i's rewards from each of their
    steps to the end of the round.
    """
    if not trajectory.terminated:
        raise TrainerError("returns are undefined for unterminated trajectories")
    logp_cur, values = _log_probs(network, trajectory)
    if eta:
        logp_ref, _ = _log_probs(reference, trajectory)
        adjust = -eta * (logp_cur - logp_ref)
    else:
        adjust = np.zeros_like(logp_cur)
    T = len(trajectory)
    returns = np.zeros(T)
    payouts = trajectory.payouts
    # walk backwards, carrying each player's suffix reward sum
    suffix = {p: payouts[p] * reward_scale for p in range(len(payouts))}
    for t in range(T - 1, -1, -1):
        p = int(trajectory.players[t])
        suffix[p] += adjust[t]
        returns[t] = suffix[p]
    return returns, returns - values


@dataclass
class TrainResult:
    checkpoints: list[str]
    metrics_path: str
    final_network: neural.PolicyNetwork


def train(config: TrainerConfig, out_dir: str, progress=None) -> TrainResult:
    """Run the self-play loop; writes ckpt_<steps>.bin files and metrics.tsv."""
    os.makedirs(out_dir, exist_ok=True)
    game = config.game
    network = neural.PolicyNetwork(
        game, hidden=config.hidden, spec=neural.EncodingSpec(config.encoding_mode),
        seed=config.seed,
    )
    reference = network.clone()
    metrics_path = os.path.join(out_dir, "metrics.tsv")
    checkpoints: list[str] = []

    def save(step: int) -> None:
        path = os.path.join(out_dir, f"ckpt_{step}.bin")
        neural.save_checkpoint(network, path)
        checkpoints.append(path)

    save(0)
    columns = [
        "step", "lr", "loss", "policy_loss", "value_loss", "entropy",
        "grad_norm", "unterminated_frac", "mean_round_len",
    ] + [f"equity_seat{p}" for p in range(game.num_players)]
    with open(metrics_path, "w") as log:
        log.write("\t".join(columns) + "\n")
        for step in range(config.total_steps):
            if step > 0 and step % config.refresh_interval == 0:
                reference = network.clone()
            batch = collect_trajectories(
                network, game, config.trajectories_per_step, config.cutoff,
                seed=config.seed * 7_919 + step,
            )
            done = [t for t in batch if t.terminated]
            unterminated_frac = 1.0 - len(done) / len(batch)
            mean_len = float(np.mean([len(t) for t in batch]))
            equity = np.zeros(game.num_players)
            if done:
                for t in done:
                    equity += t.payouts
                equity /= len(done)
                feats, masks, acts, advs, rets = [], [], [], [], []
                for t in done:
                    r, a = regularized_returns(
                        t, network, reference, config.eta, config.reward_scale
                    )
                    feats.append(t.features)
                    masks.append(t.legal_masks)
                    acts.append(t.actions)
                    advs.append(a)
                    rets.append(r)
                hyper = neural.GradientConfig(
                    learning_rate=config.lr_at(step),
                    entropy_coefficient=config.entropy_coefficient,
                    clip_norm=config.clip_norm,
                    value_weight=config.value_weight,
                )
                try:
                    m = network.gradient_step(
                        np.concatenate(feats),
                        np.concatenate(masks),
                        np.concatenate(acts),
                        np.concatenate(advs),
                        np.concatenate(rets),
                        hyper,
                    )
                except neural.NeuralError:
                    dump = os.path.join(out_dir, f"abort_step_{step}.bin")
                    neural.save_checkpoint(network, dump)
                    raise
            else:
                m = {"loss": float("nan"), "policy_loss": float("nan"),
                     "value_loss": float("nan"), "entropy": float("nan"),
                     "grad_norm": float("nan")}
            row = [
                step, config.lr_at(step), m["loss"], m["policy_loss"],
                m["value_loss"], m["entropy"], m["grad_norm"],
                unterminated_frac, mean_len, *equity,
            ]
            log.write("\t".join(f"{v:.6g}" if isinstance(v, float) else str(v)
                                for v in row) + "\n")
            next_step = step + 1
            if next_step % config.checkpoint_interval == 0 or next_step == config.total_steps:
                save(next_step)
            if progress is not None:
                progress(step, m, unterminated_frac)
    if config.total_steps == 0:
        pass  # only the initial checkpoint exists
    return TrainResult(checkpoints, metrics_path, network)
