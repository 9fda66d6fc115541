"""PPO losses (clipped, log-policy-regularized, focal-augmented), GAE,
experience replay, and the training loop for the three model variants.

Variant 1 is traditional clipped PPO with an entropy bonus. Variant 2 swaps
the entropy bonus for a focal loss on the true label. Variant 3 additionally
adds a log-policy term to the clipped surrogate, weighting the new policy's
own likelihood of the taken action.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from .dataio import DatasetTable
from .environment import (EpisodeBatch, RewardScheme, Transition,
                          make_episode, run_episode)
from .metrics import MetricsReport, confusion, report
from .neuralnet import AdamState, Gradients, Mlp, log_softmax

PROB_FLOOR = 1e-12


class TrainingError(RuntimeError):
    """Raised when training produces a non-finite loss term."""


@dataclass(frozen=True)
class PpoConfig:
    """All training scalars plus the model-variant selector."""

    clip_eps: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    learning_rate: float = 0.001
    batch_size: int = 256
    steps_per_rollout: int = 256
    epochs: int = 100
    beta_ncpi: float = 0.01
    alpha_focal: float = 0.25
    gamma_focus: float = 2.0
    c1: float = 0.5
    c2: float = 0.2
    updates_per_epoch: int = 8
    variant: int = 1
    seed: int = 0
    memory_capacity: int = 2560
    hidden_width: int = 32
    hidden_layers: int = 4
    normalize_advantages: bool = True
    focal_on_true_label: bool = True
    paper_literal_sign: bool = False
    r_correct: float = 1.0
    r_incorrect: float = -1.0

    def __post_init__(self):
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip_eps must be in (0, 1)")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must be in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("c1, c2 must be >= 0")
        if self.gamma_focus < 0:
            raise ValueError("gamma_focus must be >= 0")
        if self.variant not in (1, 2, 3):
            raise ValueError("variant must be 1, 2 or 3")
        if self.batch_size < 1 or self.epochs < 0 or self.updates_per_epoch < 1:
            raise ValueError("bad batch_size/epochs/updates_per_epoch")
        if self.memory_capacity < self.batch_size:
            raise ValueError("memory_capacity must be >= batch_size")


class ReplayBuffer:
    """Bounded FIFO store of transitions; oldest evicted first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        self._items.append(transition)

    def extend(self, transitions) -> None:
        self._items.extend(transitions)

    def __getitem__(self, i: int) -> Transition:
        return self._items[i]

    def sample(self, n: int, rng: np.random.Generator | int) -> list[Transition]:
        """Uniform draw of n transitions without replacement."""
        idx = self.sample_indices(n, rng)
        return [self._items[i] for i in idx]

    def sample_indices(self, n: int, rng: np.random.Generator | int) -> np.ndarray:
        if n > len(self._items):
            raise ValueError(f"cannot sample {n} from buffer of {len(self._items)}")
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        return rng.choice(len(self._items), size=n, replace=False)


def compute_gae(rewards, values, dones, discount: float, lam: float):
    """Generalized advantage estimation over (possibly concatenated) episodes.

    ``values`` must hold one entry per step plus a bootstrap value for the
    state after the last step (0 when terminal). Returns (advantages,
    value_targets) with targets = advantages + values[:-1].
    """
    r = np.asarray(rewards, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    d = np.asarray(dones, dtype=bool)
    if v.shape[0] != r.shape[0] + 1 or d.shape[0] != r.shape[0]:
        raise ValueError("values must have len(rewards)+1 entries, dones len(rewards)")
    adv = np.zeros_like(r)
    carry = 0.0
    for t in range(r.shape[0] - 1, -1, -1):
        nonterminal = 0.0 if d[t] else 1.0
        delta = r[t] + discount * v[t + 1] * nonterminal - v[t]
        carry = delta + discount * lam * nonterminal * carry
        adv[t] = carry
    return adv, adv + v[:-1]


def prob_ratio(logprob_new, logprob_old):
    """Importance ratio pi_new / pi_old, computed in log space."""
    return np.exp(np.asarray(logprob_new) - np.asarray(logprob_old))


def clip_objective(ratio, advantage, clip_eps: float):
    """min(r * A, clip(r, 1-eps, 1+eps) * A), elementwise."""
    r = np.asarray(ratio, dtype=np.float64)
    a = np.asarray(advantage, dtype=np.float64)
    return np.minimum(r * a, np.clip(r, 1.0 - clip_eps, 1.0 + clip_eps) * a)


def ncpi_objective(ratio, advantage, logprob_new, beta: float):
    """Unclipped surrogate plus a log-likelihood term on the new policy."""
    return np.asarray(ratio) * np.asarray(advantage) + beta * np.asarray(logprob_new)


def nclip_objective(ratio, advantage, logprob_new, clip_eps: float, beta: float):
    """Clipped surrogate plus the log-policy term (added outside the clip)."""
    return clip_objective(ratio, advantage, clip_eps) + beta * np.asarray(logprob_new)


def focal_loss(p, alpha: float, gamma: float):
    """-alpha * (1-p)^gamma * log(p); p is floored at 1e-12 before the log."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p > 1.0):
        raise ValueError("probability above 1")
    p = np.clip(p, PROB_FLOOR, 1.0)
    return -alpha * (1.0 - p) ** gamma * np.log(p)


def value_loss(v_pred, v_target):
    return (np.asarray(v_pred) - np.asarray(v_target)) ** 2


def entropy_bonus(probs):
    """Shannon entropy of a distribution (last axis); 0*log(0) := 0."""
    p = np.asarray(probs, dtype=np.float64)
    total = p.sum(axis=-1)
    if np.any(np.abs(total - 1.0) > 1e-9):
        raise ValueError("probabilities must sum to 1")
    terms = np.where(p > 0, p * np.log(np.clip(p, PROB_FLOOR, None)), 0.0)
    return -terms.sum(axis=-1)


@dataclass
class SurrogateBatch:
    """Per-transition loss ingredients for one minibatch."""

    ratio: np.ndarray
    chosen_prob: np.ndarray
    clip_term: np.ndarray
    nclip_term: np.ndarray
    value_term: np.ndarray
    focal_term: np.ndarray
    entropy_term: np.ndarray


def total_loss(variant: int, batch: SurrogateBatch, c1: float, c2: float,
               paper_literal_sign: bool = False) -> float:
    """Scalar loss to minimize, combining surrogate, value, and aux terms.

    Variant 1 pairs the clipped surrogate with an entropy bonus; variants 2
    and 3 use the focal term (variant 3 on the log-policy-regularized
    surrogate). ``paper_literal_sign`` flips the focal term's sign for
    ablation.
    """
    if batch.ratio.size == 0:
        raise ValueError("empty minibatch")
    if variant == 1:
        return float(-batch.clip_term.mean() + c1 * batch.value_term.mean()
                     - c2 * batch.entropy_term.mean())
    surrogate = batch.clip_term if variant == 2 else batch.nclip_term
    focal_sign = -1.0 if paper_literal_sign else 1.0
    return float(-surrogate.mean() + c1 * batch.value_term.mean()
                 + focal_sign * c2 * batch.focal_term.mean())


@dataclass
class EpochRecord:
    epoch: int
    total_loss: float
    actor_loss: float
    critic_loss: float
    aux_term: float
    train_accuracy: float


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)

    CSV_COLUMNS = ("epoch", "total_loss", "actor_loss", "critic_loss",
                   "aux_term", "train_accuracy")

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_COLUMNS)
            for rec in self.records:
                writer.writerow([rec.epoch,
                                 f"{rec.total_loss:.17g}", f"{rec.actor_loss:.17g}",
                                 f"{rec.critic_loss:.17g}", f"{rec.aux_term:.17g}",
                                 f"{rec.train_accuracy:.17g}"])


def policy_loss_and_grad(actor: Mlp, states: np.ndarray, actions: np.ndarray,
                         labels: np.ndarray, logprob_old: np.ndarray,
                         advantages: np.ndarray, value_term: np.ndarray,
                         cfg: PpoConfig):
    """Actor-side loss of the chosen variant plus its exact parameter gradients.

    Returns (total_loss_value, actor_loss_value, aux_mean, Gradients). The
    value term enters the reported total but contributes no actor gradient.
    """
    n = states.shape[0]
    logits, cache = actor.forward_cache(states)
    logp = log_softmax(logits)
    probs = np.exp(logp)
    rows = np.arange(n)
    lp_taken = logp[rows, actions]
    ratio = prob_ratio(lp_taken, logprob_old)

    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * advantages
    clip_term = np.minimum(unclipped, clipped)
    nclip_term = clip_term + cfg.beta_ncpi * lp_taken

    # d(surrogate)/d(logprob_taken): active only where the min picks the
    # unclipped branch; the clipped branch is constant in theta.
    ds_dlp = np.where(unclipped <= clipped, unclipped, 0.0)
    if cfg.variant == 3:
        ds_dlp = ds_dlp + cfg.beta_ncpi
    onehot_a = np.zeros_like(probs)
    onehot_a[rows, actions] = 1.0
    dlogits = -ds_dlp[:, None] * (onehot_a - probs)

    focal_target = labels if cfg.focal_on_true_label else actions
    p_t = probs[rows, focal_target]
    focal_term = focal_loss(p_t, cfg.alpha_focal, cfg.gamma_focus)
    ent = entropy_bonus(probs)

    if cfg.variant == 1:
        # entropy bonus is maximized: dH/dz_j = -p_j (log p_j + H)
        dH = -probs * (np.where(probs > 0, np.log(np.clip(probs, PROB_FLOOR, None)), 0.0)
                       + ent[:, None])
        dlogits += -cfg.c2 * dH
        aux_mean = float(ent.mean())
        actor_loss = float(-clip_term.mean() - cfg.c2 * aux_mean)
        surrogate = clip_term
    else:
        pc = np.clip(p_t, PROB_FLOOR, 1.0 - PROB_FLOOR)
        log_pc = np.log(pc)
        if cfg.gamma_focus > 0:
            modulator = cfg.gamma_focus * (1.0 - pc) ** (cfg.gamma_focus - 1.0) * log_pc
        else:
            modulator = 0.0
        dfl_dp = cfg.alpha_focal * (modulator - (1.0 - pc) ** cfg.gamma_focus / pc)
        onehot_l = np.zeros_like(probs)
        onehot_l[rows, focal_target] = 1.0
        dp_dz = p_t[:, None] * (onehot_l - probs)
        focal_sign = -1.0 if cfg.paper_literal_sign else 1.0
        dlogits += focal_sign * cfg.c2 * dfl_dp[:, None] * dp_dz
        aux_mean = float(focal_term.mean())
        surrogate = clip_term if cfg.variant == 2 else nclip_term
        actor_loss = float(-surrogate.mean() + focal_sign * cfg.c2 * aux_mean)

    batch = SurrogateBatch(ratio=ratio, chosen_prob=np.exp(lp_taken),
                           clip_term=clip_term, nclip_term=nclip_term,
                           value_term=value_term, focal_term=focal_term,
                           entropy_term=ent)
    total = total_loss(cfg.variant, batch, cfg.c1, cfg.c2, cfg.paper_literal_sign)
    grads = actor.backward(cache, dlogits / n)
    return total, actor_loss, aux_mean, grads


def _check_finite(name: str, value: float) -> None:
    if not np.isfinite(value):
        raise TrainingError(f"non-finite loss term: {name} = {value}")


def build_networks(cfg: PpoConfig, n_features: int, n_classes: int) -> tuple[Mlp, Mlp]:
    """Seeded actor/critic pair with the configured hidden stack."""
    hidden = [cfg.hidden_width] * cfg.hidden_layers
    actor_seed, critic_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    actor = Mlp([n_features] + hidden + [n_classes], "logits", seed=actor_seed)
    critic = Mlp([n_features] + hidden + [1], "value", seed=critic_seed)
    return actor, critic


def _memory_arrays(buffer: ReplayBuffer):
    states = np.stack([tr.state for tr in buffer._items])
    rewards = np.array([tr.reward for tr in buffer._items])
    dones = np.array([tr.done for tr in buffer._items], dtype=bool)
    actions = np.array([tr.action for tr in buffer._items], dtype=np.int64)
    labels = np.array([tr.label for tr in buffer._items], dtype=np.int64)
    lp_old = np.array([tr.logprob_old for tr in buffer._items])
    return states, rewards, dones, actions, labels, lp_old


def train(cfg: PpoConfig, train_table: DatasetTable,
          validation_table: DatasetTable | None = None):
    """Run the full training procedure; returns (actor, critic, history).

    Each epoch: roll one fresh episode into the replay memory with the
    current actor (its log-probs and values are the old-policy snapshot),
    recompute GAE over the whole memory with the current critic, sample a
    minibatch, then take one Adam step on the critic followed by one on the
    actor.
    """
    rewards_scheme = RewardScheme(cfg.r_correct, cfg.r_incorrect)
    actor, critic = build_networks(cfg, train_table.n_features, train_table.n_classes)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(3)[2])
    adam_actor = AdamState(actor, cfg.learning_rate)
    adam_critic = AdamState(critic, cfg.learning_rate)
    buffer = ReplayBuffer(cfg.memory_capacity)
    history = TrainingHistory()

    for epoch in range(cfg.epochs):
        episode = make_episode(train_table, cfg.steps_per_rollout, rng)
        transitions = run_episode(actor, critic, episode, mode="sample",
                                  rng=rng, rewards=rewards_scheme)
        buffer.extend(transitions)

        states, rewards, dones, actions, labels, lp_old = _memory_arrays(buffer)
        values = critic.forward(states)[:, 0]
        advantages, v_targets = compute_gae(
            rewards, np.append(values, 0.0), dones, cfg.discount, cfg.gae_lambda)

        for _ in range(cfg.updates_per_epoch):
            mb = buffer.sample_indices(cfg.batch_size, rng)
            mb_states = states[mb]
            mb_adv = advantages[mb]
            if cfg.normalize_advantages:
                mb_adv = (mb_adv - mb_adv.mean()) / (mb_adv.std() + 1e-8)

            # critic step first, on pre-update predictions
            v_out, v_cache = critic.forward_cache(mb_states)
            v_pred = v_out[:, 0]
            value_term = value_loss(v_pred, v_targets[mb])
            critic_loss = float(value_term.mean())
            _check_finite("critic_loss", critic_loss)
            dv = (2.0 * (v_pred - v_targets[mb]) / len(mb))[:, None]
            adam_critic.step(critic, critic.backward(v_cache, dv))

            total, actor_loss, aux_mean, grads = policy_loss_and_grad(
                actor, mb_states, actions[mb], labels[mb], lp_old[mb], mb_adv,
                value_term, cfg)
            _check_finite("actor_loss", actor_loss)
            _check_finite("aux_term", aux_mean)
            _check_finite("total_loss", total)
            adam_actor.step(actor, grads)

        greedy = np.argmax(actor.forward(episode.states), axis=1)
        train_acc = float((greedy == episode.labels).mean())
        history.records.append(EpochRecord(epoch, total, actor_loss,
                                           critic_loss, aux_mean, train_acc))
    return actor, critic, history


def evaluate(actor: Mlp, test_table: DatasetTable, batch_size: int) -> MetricsReport:
    """Greedy evaluation over the whole test set in fixed batches."""
    if actor.layer_sizes[-1] != test_table.n_classes:
        raise ValueError(f"actor emits {actor.layer_sizes[-1]} classes, "
                         f"table has {test_table.n_classes}")
    preds = []
    for start in range(0, test_table.n_rows, batch_size):
        block = test_table.features[start:start + batch_size]
        preds.append(np.argmax(actor.forward(block), axis=1))
    predictions = np.concatenate(preds)
    matrix = confusion(test_table.labels, predictions, test_table.n_classes)
    return report(matrix)
