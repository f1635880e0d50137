"""Probability law and categorical sampling for mixture scheduling.

The sampling distribution over arms is a Boltzmann (softmax) distribution
over reward estimates, rescaled by a prior over arms and blended with a
uniform floor so no arm's probability can fall below ``gamma / K``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

import numpy as np

from .registry import ArmRegistry

__all__ = [
    "BanditConfig",
    "QState",
    "MixtureDistribution",
    "Batch",
    "boltzmann_probs",
    "prior_scaled_probs",
    "mixture_probs",
    "sample_arm",
    "sample_batch",
]


@dataclass(frozen=True)
class BanditConfig:
    """Scalar hyperparameters of the scheduling loop.

    beta sharpens exploitation of the reward estimates, gamma blends in the
    uniform floor, alpha smooths rewards with an exponential moving average,
    and epsilon stabilizes the reward denominator.
    """

    num_arms: int
    total_steps: int
    beta: float = 4.0
    gamma: float = 0.3
    alpha: float = 0.95
    epsilon: float = 1e-8
    update_interval: int = 50
    batch_size: int = 128

    def __post_init__(self) -> None:
        if self.num_arms < 1:
            raise ValueError(f"num_arms must be >= 1, got {self.num_arms}")
        if self.total_steps < 0:
            raise ValueError(f"total_steps must be >= 0, got {self.total_steps}")
        if self.beta < 0 or not np.isfinite(self.beta):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.update_interval < 1:
            raise ValueError(f"update_interval must be >= 1, got {self.update_interval}")
        # A zero-length run has no steps at all, so no interval bound applies.
        if self.total_steps > 0 and self.update_interval > self.total_steps:
            raise ValueError(
                f"update_interval ({self.update_interval}) must not exceed "
                f"total_steps ({self.total_steps})"
            )
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class QState:
    """Per-arm smoothed reward estimates plus the current training step."""

    q: np.ndarray
    step: int = 0

    @classmethod
    def initial(cls, num_arms: int) -> "QState":
        """Fresh state: all estimates start at zero."""
        return cls(q=np.zeros(num_arms, dtype=np.float64), step=0)

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=np.float64)
        if self.q.ndim != 1 or self.q.size < 1:
            raise ValueError("q must be a nonempty 1-d vector")
        if not np.all(np.isfinite(self.q)):
            raise ValueError("q entries must be finite")
        if self.step < 0:
            raise ValueError(f"step must be >= 0, got {self.step}")

    @property
    def num_arms(self) -> int:
        return int(self.q.size)


@dataclass(frozen=True)
class MixtureDistribution:
    """A sampling distribution over arms (nonnegative, sums to one)."""

    p: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=np.float64)
        object.__setattr__(self, "p", p)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("p must be a nonempty 1-d vector")
        if not np.all(np.isfinite(p)):
            raise ValueError("p entries must be finite")
        if np.any(p < -1e-12):
            raise ValueError("p entries must be nonnegative")
        total = float(np.sum(p))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"p must sum to 1, got {total!r}")

    @property
    def num_arms(self) -> int:
        return int(self.p.size)

    @cached_property
    def cumulative(self) -> np.ndarray:
        """Cumulative sums in fixed arm order, used by inverse-CDF sampling."""
        return np.cumsum(self.p)


@dataclass(frozen=True)
class Batch:
    """A sampled batch: parallel arrays of arm indices and example indices.

    Behaves as a sequence of ``(arm, example)`` pairs.
    """

    arms: np.ndarray
    examples: np.ndarray

    def __post_init__(self) -> None:
        arms = np.asarray(self.arms, dtype=np.int64)
        examples = np.asarray(self.examples, dtype=np.int64)
        if arms.shape != examples.shape or arms.ndim != 1:
            raise ValueError("arms and examples must be 1-d arrays of equal length")
        object.__setattr__(self, "arms", arms)
        object.__setattr__(self, "examples", examples)

    def __len__(self) -> int:
        return int(self.arms.size)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return zip(self.arms.tolist(), self.examples.tolist())

    def __getitem__(self, i: int) -> tuple[int, int]:
        return (int(self.arms[i]), int(self.examples[i]))


def _check_finite_vector(name: str, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"{name} must be a nonempty 1-d vector")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} entries must be finite")
    return v


def boltzmann_probs(q: np.ndarray, beta: float) -> np.ndarray:
    """Softmax of ``beta * q``, stabilized by subtracting the max logit."""
    q = _check_finite_vector("q", q)
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be finite and >= 0, got {beta}")
    z = beta * q
    w = np.exp(z - np.max(z))
    return w / np.sum(w)


def prior_scaled_probs(q: np.ndarray, prior: np.ndarray, beta: float) -> np.ndarray:
    """Boltzmann weights rescaled by a prior over arms and renormalized.

    Arms with zero prior mass get probability exactly zero.  The max logit is
    taken over positive-prior arms only, so the normalizer cannot underflow
    to zero.
    """
    q = _check_finite_vector("q", q)
    prior = _check_finite_vector("prior", prior)
    if prior.shape != q.shape:
        raise ValueError(f"q and prior must have equal length, got {q.size} and {prior.size}")
    if np.any(prior < 0):
        raise ValueError("prior entries must be nonnegative")
    positive = prior > 0
    if not np.any(positive):
        raise ValueError("prior must have at least one positive entry")
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be finite and >= 0, got {beta}")
    z = beta * q
    # Exponentiate positive-prior entries only: a huge estimate on a
    # zero-prior arm would otherwise overflow into inf * 0.
    w = np.zeros_like(z)
    w[positive] = np.exp(z[positive] - np.max(z[positive])) * prior[positive]
    return w / np.sum(w)


def mixture_probs(q: np.ndarray, prior: np.ndarray, cfg: BanditConfig) -> MixtureDistribution:
    """Final sampling distribution: prior-scaled Boltzmann plus uniform floor.

    Returns ``(1 - gamma) * prior_scaled_probs(q, prior, beta) + gamma / K``,
    which keeps every arm's probability at or above ``gamma / K``.
    """
    q = _check_finite_vector("q", q)
    if q.size != cfg.num_arms:
        raise ValueError(f"q has {q.size} entries but config expects {cfg.num_arms} arms")
    w = prior_scaled_probs(q, prior, cfg.beta)
    p = (1.0 - cfg.gamma) * w + cfg.gamma / cfg.num_arms
    return MixtureDistribution(p=p)


def sample_arm(dist: MixtureDistribution, rng: np.random.Generator) -> int:
    """Draw one arm index by inverse-CDF over the fixed arm order.

    The draw ``u`` in ``[0, 1)`` selects the first arm whose cumulative
    probability exceeds ``u``, so ties break toward lower indices and
    zero-probability arms are skipped.
    """
    u = rng.random()
    idx = int(np.searchsorted(dist.cumulative, u, side="right"))
    return min(idx, dist.num_arms - 1)


def sample_batch(
    dist: MixtureDistribution,
    registry: ArmRegistry,
    batch_size: int,
    rng: np.random.Generator,
) -> Batch:
    """Draw a batch of ``(arm, example)`` pairs.

    Arms follow ``dist`` (the distribution is fixed for the whole batch);
    example indices are uniform over each chosen arm's instances, with
    replacement.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if dist.num_arms != registry.num_arms:
        raise ValueError(
            f"distribution covers {dist.num_arms} arms but registry has {registry.num_arms}"
        )
    us = rng.random(batch_size)
    arms = np.searchsorted(dist.cumulative, us, side="right")
    np.clip(arms, 0, dist.num_arms - 1, out=arms)
    examples = rng.integers(0, registry.counts[arms])
    return Batch(arms=arms, examples=examples)
