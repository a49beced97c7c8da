"""Feed-forward policy/value network with hand-rolled gradients.

A small fully-connected trunk with rectifier activations feeds two affine
heads: policy logits over the action space (every bid plus the challenge)
and a scalar value estimate.  Encoding, forward pass, backward pass, the
Adam optimizer, and checkpoint serialization are all implemented directly
on numpy arrays so the package carries no ML-framework dependency.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .engine import GameConfig, Phase

MODE_CANONICAL = "canonical-counts"
MODE_EXPLICIT = "explicit-digits"

_MODE_CODES = {MODE_CANONICAL: 0, MODE_EXPLICIT: 1}
_CODE_MODES = {v: k for k, v in _MODE_CODES.items()}

CHECKPOINT_MAGIC = b"LPNET1\x00"
CHECKPOINT_VERSION = 1


class NeuralError(ValueError):
    """Shape mismatch, bad checkpoint, or rejected gradient step."""


class CheckpointError(NeuralError):
    """Unreadable, corrupt, or incompatible checkpoint file."""


@dataclass(frozen=True)
class EncodingSpec:
    """How an information state is laid out as a feature vector."""

    mode: str = MODE_CANONICAL

    def __post_init__(self):
        if self.mode not in _MODE_CODES:
            raise NeuralError(f"unknown encoding mode {self.mode!r}")

    def input_size(self, config: GameConfig) -> int:
        hand_block = (
            config.digit_cardinality
            if self.mode == MODE_CANONICAL
            else config.hand_length * config.digit_cardinality
        )
        return hand_block + config.num_players + 2 * config.num_players * config.num_bids + 2


def encode_observation(observation, spec: EncodingSpec) -> np.ndarray:
    """Encode an information state as a float vector.

    Layout: own hand block, seat one-hot, per-player bids-made indicators,
    per-player bids-challenged indicators (a bid is marked for a player if
    that player challenged while it stood), a standing-rebid bit, and a
    terminal bit.  The hand block is raw rank counts in canonical-counts
    mode and per-slot digit one-hots in explicit-digits mode.
    """
    config = observation.config
    D = config.digit_cardinality
    L = config.num_players
    nb = config.num_bids

    out = np.zeros(spec.input_size(config), dtype=np.float64)
    counts = observation.hand.counts
    if spec.mode == MODE_CANONICAL:
        out[:D] = counts
        off = D
    else:
        slot = 0
        for rank0, c in enumerate(counts):
            for _ in range(c):
                out[slot * D + rank0] = 1.0
                slot += 1
        off = config.hand_length * D
    out[off + observation.position] = 1.0
    off += L

    bids_made = off
    challenged = off + L * nb
    standing = -1
    for player, action in observation.history:
        if action < nb:
            out[bids_made + player * nb + action] = 1.0
            standing = action
        else:
            out[challenged + player * nb + standing] = 1.0
    off = challenged + L * nb

    sb = observation.standing_bid
    out[off] = 1.0 if (sb is not None and sb.is_rebid) else 0.0
    out[off + 1] = 1.0 if observation.phase is Phase.RESOLVED else 0.0
    return out


def masked_softmax(logits: np.ndarray, legal_mask: np.ndarray) -> np.ndarray:
    """Softmax restricted to legal entries; illegal entries come out 0.

    Works on a single vector or a batch (mask broadcast per row).
    """
    legal = np.asarray(legal_mask, dtype=bool)
    z = np.where(legal, logits, -np.inf)
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


@dataclass
class GradientConfig:
    learning_rate: float = 1e-3
    entropy_coefficient: float = 0.0
    clip_norm: float = 10.0
    value_weight: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8


class PolicyNetwork:
    """Rectifier MLP trunk with a policy head and a value head.

    Parameters live in ``self.weights``/``self.biases`` ordered trunk
    layers first, then the policy head, then the value head.  Weight
    matrices are (fan_in, fan_out); forward is ``x @ W + b``.
    """

    def __init__(
        self,
        config: GameConfig,
        hidden: tuple[int, ...] = (256, 256),
        spec: EncodingSpec | None = None,
        seed: int = 0,
    ):
        if not hidden or any(w <= 0 for w in hidden):
            raise NeuralError("hidden widths must be positive")
        self.config = config
        self.spec = spec if spec is not None else EncodingSpec()
        self.hidden = tuple(int(w) for w in hidden)
        self.input_size = self.spec.input_size(config)
        self.num_actions = config.num_actions

        rng = np.random.default_rng(seed)
        sizes = [self.input_size, *self.hidden]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            self._add_layer(rng, fan_in, fan_out)
        self._add_layer(rng, self.hidden[-1], self.num_actions)
        self._add_layer(rng, self.hidden[-1], 1)
        self._reset_optimizer()

    def _add_layer(self, rng, fan_in: int, fan_out: int) -> None:
        bound = 1.0 / np.sqrt(fan_in)
        self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    def _reset_optimizer(self) -> None:
        self._adam_m = [np.zeros_like(w) for w in self.weights] + [
            np.zeros_like(b) for b in self.biases
        ]
        self._adam_v = [np.zeros_like(m) for m in self._adam_m]
        self._adam_t = 0

    # --- forward ------------------------------------------------------

    def _trunk(self, x: np.ndarray) -> list[np.ndarray]:
        """Activations after each trunk layer (post-rectifier)."""
        acts = []
        h = x
        for i in range(len(self.hidden)):
            h = np.maximum(h @ self.weights[i] + self.biases[i], 0.0)
            acts.append(h)
        return acts

    def forward(self, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (logits, value); batched if features is 2-D."""
        x = np.asarray(features, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.input_size:
            raise NeuralError(
                f"feature size {x.shape[1]} does not match input size {self.input_size}"
            )
        h = self._trunk(x)[-1]
        pi, pb = self.weights[-2], self.biases[-2]
        vi, vb = self.weights[-1], self.biases[-1]
        logits = h @ pi + pb
        value = (h @ vi + vb)[:, 0]
        if squeeze:
            return logits[0], float(value[0])
        return logits, value

    # --- backward -----------------------------------------------------

    def _gradients(
        self,
        features: np.ndarray,
        legal_masks: np.ndarray,
        actions: np.ndarray,
        advantages: np.ndarray,
        value_targets: np.ndarray,
        hyper: GradientConfig,
    ) -> tuple[list[np.ndarray], list[np.ndarray], dict]:
        x = np.asarray(features, dtype=np.float64)
        n = x.shape[0]
        acts = self._trunk(x)
        h = acts[-1]
        logits = h @ self.weights[-2] + self.biases[-2]
        values = (h @ self.weights[-1] + self.biases[-1])[:, 0]

        legal = np.asarray(legal_masks, dtype=bool)
        probs = masked_softmax(logits, legal)
        logp = np.full_like(probs, -np.inf)
        np.log(probs, out=logp, where=probs > 0)
        chosen_logp = logp[np.arange(n), actions]
        safe_logp = np.where(probs > 0, logp, 0.0)
        entropy = -np.sum(probs * safe_logp, axis=1)

        policy_loss = float(np.mean(-advantages * chosen_logp))
        value_loss = float(np.mean((values - value_targets) ** 2))
        entropy_mean = float(np.mean(entropy))
        loss = (
            policy_loss
            + hyper.value_weight * value_loss
            - hyper.entropy_coefficient * entropy_mean
        )

        one_hot = np.zeros_like(probs)
        one_hot[np.arange(n), actions] = 1.0
        d_logits = advantages[:, None] * (probs - one_hot)
        if hyper.entropy_coefficient:
            d_logits += hyper.entropy_coefficient * probs * (safe_logp + entropy[:, None])
        d_logits = np.where(legal, d_logits, 0.0) / n
        d_values = (2.0 * hyper.value_weight * (values - value_targets) / n)[:, None]

        grads_w = [np.zeros_like(w) for w in self.weights]
        grads_b = [np.zeros_like(b) for b in self.biases]
        grads_w[-2] = h.T @ d_logits
        grads_b[-2] = d_logits.sum(axis=0)
        grads_w[-1] = h.T @ d_values
        grads_b[-1] = d_values.sum(axis=0)

        d_h = d_logits @ self.weights[-2].T + d_values @ self.weights[-1].T
        for i in range(len(self.hidden) - 1, -1, -1):
            d_pre = d_h * (acts[i] > 0)
            prev = x if i == 0 else acts[i - 1]
            grads_w[i] = prev.T @ d_pre
            grads_b[i] = d_pre.sum(axis=0)
            if i > 0:
                d_h = d_pre @ self.weights[i].T
        metrics = {
            "loss": loss,
            "policy_loss": policy_loss,
            "value_loss": value_loss,
            "entropy": entropy_mean,
        }
        return grads_w, grads_b, metrics

    def gradient_step(
        self,
        features: np.ndarray,
        legal_masks: np.ndarray,
        actions: np.ndarray,
        advantages: np.ndarray,
        value_targets: np.ndarray,
        hyper: GradientConfig,
    ) -> dict:
        """One clipped Adam step on the combined loss; returns loss metrics.

        A non-finite loss or gradient rejects the step and raises, leaving
        the weights untouched.
        """
        features = np.asarray(features, dtype=np.float64)
        actions = np.asarray(actions, dtype=np.int64)
        advantages = np.asarray(advantages, dtype=np.float64)
        value_targets = np.asarray(value_targets, dtype=np.float64)
        if not (
            features.ndim == 2
            and len(actions) == len(features) == len(advantages) == len(value_targets)
        ):
            raise NeuralError("batch arrays must share their leading dimension")
        grads_w, grads_b, metrics = self._gradients(
            features, legal_masks, actions, advantages, value_targets, hyper
        )
        flat = grads_w + grads_b
        sq = sum(float(np.sum(g * g)) for g in flat)
        if not (np.isfinite(metrics["loss"]) and np.isfinite(sq)):
            raise NeuralError(f"non-finite loss or gradient (loss={metrics['loss']})")
        norm = np.sqrt(sq)
        if hyper.clip_norm and norm > hyper.clip_norm:
            scale = hyper.clip_norm / norm
            flat = [g * scale for g in flat]
        metrics["grad_norm"] = norm

        self._adam_t += 1
        t = self._adam_t
        b1, b2, eps = hyper.beta1, hyper.beta2, hyper.adam_epsilon
        params = self.weights + self.biases
        for i, g in enumerate(flat):
            m = self._adam_m[i] = b1 * self._adam_m[i] + (1 - b1) * g
            v = self._adam_v[i] = b2 * self._adam_v[i] + (1 - b2) * g * g
            m_hat = m / (1 - b1**t)
            v_hat = v / (1 - b2**t)
            params[i] -= hyper.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        return metrics

    # --- copies ---------------------------------------------------------

    def clone(self) -> "PolicyNetwork":
        """Deep copy of weights and config; optimizer state starts fresh."""
        twin = PolicyNetwork.__new__(PolicyNetwork)
        twin.config = self.config
        twin.spec = self.spec
        twin.hidden = self.hidden
        twin.input_size = self.input_size
        twin.num_actions = self.num_actions
        twin.weights = [w.copy() for w in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        twin._reset_optimizer()
        return twin

    def parameter_bytes(self) -> bytes:
        """Little-endian float32 dump of all parameters, layer order."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.astype("<f4").tobytes())
            parts.append(b.astype("<f4").tobytes())
        return b"".join(parts)


# --- checkpoints ---------------------------------------------------------


def save_checkpoint(network: PolicyNetwork, path) -> None:
    """Write the versioned binary checkpoint format.

    Header: magic, version, (H, D, L), encoding-mode code, trunk width
    count and widths; body: float32 little-endian parameters, each layer's
    weight matrix (row-major) then its bias vector, trunk layers first,
    then the policy head, then the value head.
    """
    cfg = network.config
    header = struct.pack(
        f"<{len(CHECKPOINT_MAGIC)}sHHHHBH",
        CHECKPOINT_MAGIC,
        CHECKPOINT_VERSION,
        cfg.hand_length,
        cfg.digit_cardinality,
        cfg.num_players,
        _MODE_CODES[network.spec.mode],
        len(network.hidden),
    )
    widths = struct.pack(f"<{len(network.hidden)}I", *network.hidden)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(widths)
        fh.write(network.parameter_bytes())


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise CheckpointError("truncated checkpoint file")
    return buf


def load_checkpoint(path, expect_config: GameConfig | None = None) -> PolicyNetwork:
    """Load a checkpoint; raises CheckpointError on any corruption.

    When expect_config is given (load-for-play), a checkpoint trained for a
    different game is rejected instead of silently mis-shaping.
    """
    head_fmt = f"<{len(CHECKPOINT_MAGIC)}sHHHHBH"
    with open(path, "rb") as fh:
        magic, version, H, D, L, mode_code, n_hidden = struct.unpack(
            head_fmt, _read_exact(fh, struct.calcsize(head_fmt))
        )
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError("not a policy checkpoint (bad magic)")
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        if mode_code not in _CODE_MODES:
            raise CheckpointError(f"unknown encoding-mode code {mode_code}")
        hidden = struct.unpack(f"<{n_hidden}I", _read_exact(fh, 4 * n_hidden))
        config = GameConfig(H, D, L)
        if expect_config is not None and config != expect_config:
            raise CheckpointError(
                f"checkpoint is for {config.label()}, not {expect_config.label()}"
            )
        net = PolicyNetwork(config, hidden=hidden, spec=EncodingSpec(_CODE_MODES[mode_code]))
        for i in range(len(net.weights)):
            w = net.weights[i]
            raw = _read_exact(fh, 4 * w.size)
            net.weights[i] = (
                np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(w.shape)
            )
            b = net.biases[i]
            raw = _read_exact(fh, 4 * b.size)
            net.biases[i] = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        if fh.read(1):
            raise CheckpointError("trailing bytes after checkpoint payload")
    return net
