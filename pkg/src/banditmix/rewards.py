"""Look-ahead rewards and smoothed per-arm estimates.

Each reward round probes every arm once: measure loss on a probe batch, take
one virtual optimizer step on that batch, measure again, restore the learner,
and score the arm by its relative loss drop.  Scores fold into the running
estimates through an exponential moving average.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np

from .mixture import BanditConfig, Batch, QState
from .registry import ArmRegistry

__all__ = [
    "Learner",
    "RewardReport",
    "delta_loss_reward",
    "delta_entropy_reward",
    "ema_update",
    "lookahead_round",
]

RewardKind = Literal["delta_loss", "delta_entropy"]


class Learner(ABC):
    """Contract for anything trainable by the scheduling loop.

    ``snapshot`` and ``restore`` must round-trip exactly: after a snapshot,
    any sequence of ``virtual_step`` / ``train_step`` calls followed by
    ``restore`` leaves per-example losses identical to their pre-snapshot
    values.  ``loss`` must be a pure observation with no side effects.
    """

    @abstractmethod
    def snapshot(self) -> Any:
        """Capture full trainable state as an opaque token."""

    @abstractmethod
    def restore(self, token: Any) -> None:
        """Return to the state captured by ``token``."""

    @abstractmethod
    def loss(self, batch: Batch) -> np.ndarray:
        """Per-example losses for ``batch``, nonnegative, no side effects."""

    @abstractmethod
    def virtual_step(self, batch: Batch, learning_rate: float) -> None:
        """Apply one optimizer step for probing; caller restores afterwards."""

    @abstractmethod
    def train_step(self, batch: Batch, learning_rate: float) -> None:
        """Apply one real optimizer step."""

    def entropy(self, batch: Batch) -> np.ndarray:
        """Per-example predictive entropies; optional capability."""
        raise NotImplementedError(f"{type(self).__name__} does not expose entropies")


@dataclass(frozen=True)
class RewardReport:
    """Outcome of probing one arm in a reward round.

    For entropy-based rounds the two measurement vectors hold entropies.
    """

    arm: int
    pre_losses: np.ndarray
    post_losses: np.ndarray
    reward: float
    q_after: float
    step: int


def _relative_drop(pre: np.ndarray, post: np.ndarray, epsilon: float, what: str) -> float:
    pre = np.asarray(pre, dtype=np.float64)
    post = np.asarray(post, dtype=np.float64)
    if pre.shape != post.shape or pre.ndim != 1 or pre.size < 1:
        raise ValueError(f"pre/post {what} must be equal-length nonempty 1-d arrays")
    if not (np.all(np.isfinite(pre)) and np.all(np.isfinite(post))):
        raise ValueError(f"{what} values must be finite")
    if np.any(pre < 0):
        raise ValueError(f"pre {what} must be nonnegative")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    # Each term is (pre - post) / (pre + eps): below 1 whenever post >= 0,
    # negative when the probe step hurt.
    return float(np.mean((pre - post) / (pre + epsilon)))


def delta_loss_reward(pre: np.ndarray, post: np.ndarray, epsilon: float = 1e-8) -> float:
    """Mean relative loss drop over a probe batch."""
    return _relative_drop(pre, post, epsilon, "losses")


def delta_entropy_reward(pre: np.ndarray, post: np.ndarray, epsilon: float = 1e-8) -> float:
    """Mean relative entropy drop over a probe batch.

    Same functional form as ``delta_loss_reward``; callers feed it entropies
    instead of losses.
    """
    return _relative_drop(pre, post, epsilon, "entropies")


def ema_update(q: float, reward: float, alpha: float) -> float:
    """Blend a new reward into an estimate: ``alpha * q + (1 - alpha) * reward``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not np.isfinite(reward):
        raise ValueError(f"reward must be finite, got {reward}")
    return alpha * q + (1.0 - alpha) * reward


def _probe_batch(
    arm: int, registry: ArmRegistry, batch_size: int, rng: np.random.Generator
) -> Batch:
    arms = np.full(batch_size, arm, dtype=np.int64)
    examples = rng.integers(0, registry.counts[arm], size=batch_size)
    return Batch(arms=arms, examples=examples)


def lookahead_round(
    learner: Learner,
    registry: ArmRegistry,
    state: QState,
    cfg: BanditConfig,
    learning_rate: float,
    rng: np.random.Generator,
    reward_kind: RewardKind = "delta_loss",
) -> list[RewardReport]:
    """Probe every arm once and update the estimates in ``state`` in place.

    Per arm: draw a probe batch, measure, snapshot, take one virtual step,
    measure again, restore, and score.  The learner is restored even when a
    measurement raises.  Estimate updates are buffered and applied only after
    every arm has been probed, so a failed round leaves ``state`` untouched.
    """
    if reward_kind not in ("delta_loss", "delta_entropy"):
        raise ValueError(f"unknown reward kind {reward_kind!r}")
    if state.num_arms != registry.num_arms or state.num_arms != cfg.num_arms:
        raise ValueError("state, registry, and config disagree on the number of arms")
    measure = learner.loss if reward_kind == "delta_loss" else learner.entropy
    score = delta_loss_reward if reward_kind == "delta_loss" else delta_entropy_reward

    reports: list[RewardReport] = []
    new_q = state.q.copy()
    for arm in range(registry.num_arms):
        batch = _probe_batch(arm, registry, cfg.batch_size, rng)
        pre = np.asarray(measure(batch), dtype=np.float64)
        token = learner.snapshot()
        try:
            learner.virtual_step(batch, learning_rate)
            post = np.asarray(measure(batch), dtype=np.float64)
        finally:
            learner.restore(token)
        reward = score(pre, post, cfg.epsilon)
        new_q[arm] = ema_update(float(new_q[arm]), reward, cfg.alpha)
        reports.append(
            RewardReport(
                arm=arm,
                pre_losses=pre,
                post_losses=post,
                reward=reward,
                q_after=float(new_q[arm]),
                step=state.step,
            )
        )
    state.q[:] = new_q
    return reports
