"""Classification MDP: each step shows one sample, the action is a class guess.

An episode walks an ordered batch of B labeled samples. Guessing the label
earns the positive reward, anything else the negative one; the episode
terminates after the B-th guess. The state is the sample's feature vector
alone (samples are exchangeable, so no history is kept).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import DatasetTable
from .neuralnet import Mlp, log_softmax


@dataclass(frozen=True)
class RewardScheme:
    r_correct: float = 1.0
    r_incorrect: float = -1.0

    def __post_init__(self):
        if not self.r_correct > 0 > self.r_incorrect:
            raise ValueError("need r_correct > 0 > r_incorrect")


@dataclass(frozen=True)
class EpisodeBatch:
    """Ordered samples and labels for one episode of length B."""

    states: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.states.shape[0] != self.labels.shape[0] or self.states.shape[0] < 1:
            raise ValueError("states/labels must be non-empty and congruent")

    @property
    def size(self) -> int:
        return self.states.shape[0]


@dataclass
class Transition:
    """One CMDP step as stored in the replay buffer.

    ``label`` is the true class of the sample behind ``state``; the focal
    term of the training loss targets it.
    """

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray | None
    done: bool
    logprob_old: float
    value_old: float
    label: int


def make_episode(table: DatasetTable, batch_size: int,
                 rng: np.random.Generator | int) -> EpisodeBatch:
    """Draw B rows uniformly without replacement; deterministic per seed."""
    if batch_size > table.n_rows:
        raise ValueError(f"batch size {batch_size} exceeds {table.n_rows} rows")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    idx = rng.choice(table.n_rows, size=batch_size, replace=False)
    return EpisodeBatch(table.features[idx], table.labels[idx])


class ClassificationEnv:
    """Mutable walker over one EpisodeBatch (single-threaded)."""

    def __init__(self, episode: EpisodeBatch, rewards: RewardScheme | None = None,
                 n_classes: int | None = None):
        self.episode = episode
        self.rewards = rewards or RewardScheme()
        self.n_classes = n_classes if n_classes is not None else int(episode.labels.max()) + 1
        self._t = 0

    def reset(self) -> np.ndarray:
        self._t = 0
        return self.episode.states[0]

    @property
    def done(self) -> bool:
        return self._t >= self.episode.size

    def step(self, action: int) -> tuple[float, np.ndarray | None, bool]:
        if self.done:
            raise RuntimeError("step after terminal state")
        if not 0 <= action < self.n_classes:
            raise ValueError(f"action {action} out of range [0, {self.n_classes})")
        correct = action == self.episode.labels[self._t]
        reward = self.rewards.r_correct if correct else self.rewards.r_incorrect
        self._t += 1
        done = self._t >= self.episode.size
        next_state = None if done else self.episode.states[self._t]
        return reward, next_state, done


def run_episode(actor: Mlp, critic: Mlp, episode: EpisodeBatch,
                mode: str = "sample", rng: np.random.Generator | int | None = None,
                rewards: RewardScheme | None = None) -> list[Transition]:
    """Roll the actor through one episode, recording old log-probs and values.

    ``mode="greedy"`` takes the argmax action; ``mode="sample"`` draws from the
    policy distribution using ``rng``.
    """
    if mode not in ("sample", "greedy"):
        raise ValueError(f"unknown mode: {mode}")
    if mode == "sample":
        if rng is None:
            raise ValueError("sampling mode needs an rng")
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)

    logprobs = log_softmax(actor.forward(episode.states))
    values = critic.forward(episode.states)[:, 0]
    n_classes = logprobs.shape[1]

    env = ClassificationEnv(episode, rewards, n_classes=n_classes)
    state = env.reset()
    transitions: list[Transition] = []
    for t in range(episode.size):
        if mode == "greedy":
            action = int(np.argmax(logprobs[t]))
        else:
            cdf = np.cumsum(np.exp(logprobs[t]))
            action = int(np.searchsorted(cdf, rng.random() * cdf[-1]))
            action = min(action, n_classes - 1)
        reward, next_state, done = env.step(action)
        transitions.append(Transition(
            state=state, action=action, reward=reward, next_state=next_state,
            done=done, logprob_old=float(logprobs[t, action]),
            value_old=float(values[t]), label=int(episode.labels[t])))
        state = next_state
    return transitions
