"""Imbalanced classification as a Markov decision process, trained with
clipped PPO, focal-loss PPO, and log-policy-regularized focal PPO."""

from .dataio import (DataError, DatasetTable, NormalizationStats, SplitSpec,
                     SyntheticSpec, apply_minmax, clean_rows, fit_minmax,
                     generate_synthetic, load_table, save_table,
                     stratified_split)
from .environment import (ClassificationEnv, EpisodeBatch, RewardScheme,
                          Transition, make_episode, run_episode)
from .metrics import MetricsReport, confusion, report
from .neuralnet import AdamState, Gradients, Mlp, load_mlp, log_softmax, save_mlp
from .ppo import (PpoConfig, ReplayBuffer, SurrogateBatch, TrainingHistory,
                  clip_objective, compute_gae, entropy_bonus, evaluate,
                  focal_loss, nclip_objective, ncpi_objective, prob_ratio,
                  total_loss, train, value_loss)

__version__ = "0.1.0"
