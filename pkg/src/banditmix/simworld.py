"""Synthetic non-stationary training world.

Stands in for a real fine-tuning run at desk scale.  Each arm carries a
scalar loss that decays toward an irreducible floor as examples from it (and,
through transfer, from other arms) are trained on.  Early arms saturate,
diminishing returns set in, and the best arm to train on changes over time,
which is exactly the regime the adaptive scheduler is built for.

Training on one batch element from arm ``j`` at learning rate ``eta`` moves
every arm ``k``:

    loss_k <- max(floor_k, loss_k - eta * T_kj * (loss_k - floor_k) / B)

with ``B`` the batch length and ``T`` the transfer matrix (self-learning on
the diagonal, cross-arm spillover off it).  A whole batch applies the exact
order-independent product form of that per-element rule, then one zero-mean
noise draw of scale ``noise_scale * eta`` per arm, re-clamped to the floor.
A full batch from arm ``j`` shrinks arm ``k``'s gap by roughly
``exp(-eta * T_kj)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .mixture import Batch
from .rewards import Learner

__all__ = ["LrSchedule", "WorldParams", "SimWorld", "build_world"]

# Predictive entropy is modeled as a fixed fraction of loss, so entropy-based
# rewards track loss-based ones up to scale.
ENTROPY_LOSS_RATIO = 0.5

# Off-diagonal transfer entries default to uniform draws from
# [0, 0.3 * own-learnability]: spillover exists but never rivals training on
# the arm itself.
TRANSFER_DRAW_CAP = 0.3

_MIX64_A = np.uint64(0x9E3779B97F4A7C15)
_MIX64_B = np.uint64(0xBF58476D1CE4E5B9)
_MIX64_C = np.uint64(0x94D049BB133111EB)


def _jitter_uniform(key: int, arms: np.ndarray, examples: np.ndarray) -> np.ndarray:
    """Deterministic per-example noise in [-0.5, 0.5), splitmix64-style.

    A pure hash of (world seed, arm, example): repeated observations of the
    same example agree, and no generator state is consumed.
    """
    with np.errstate(over="ignore"):
        x = np.uint64(key) ^ (arms.astype(np.uint64) * _MIX64_B)
        x = x + (examples.astype(np.uint64) + np.uint64(1)) * _MIX64_A
        x = (x ^ (x >> np.uint64(30))) * _MIX64_B
        x = (x ^ (x >> np.uint64(27))) * _MIX64_C
        x = x ^ (x >> np.uint64(31))
    return (x >> np.uint64(11)).astype(np.float64) * 2.0**-53 - 0.5


@dataclass(frozen=True)
class LrSchedule:
    """Linear warmup to ``base_rate``, then linear decay to zero."""

    base_rate: float
    total_steps: int
    warmup_fraction: float = 0.03

    def __post_init__(self) -> None:
        if self.base_rate < 0 or not np.isfinite(self.base_rate):
            raise ValueError(f"base_rate must be finite and >= 0, got {self.base_rate}")
        if self.total_steps < 0:
            raise ValueError(f"total_steps must be >= 0, got {self.total_steps}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError(f"warmup_fraction must lie in [0, 1), got {self.warmup_fraction}")

    @property
    def warmup_steps(self) -> int:
        if self.total_steps == 0:
            return 0
        return min(int(round(self.warmup_fraction * self.total_steps)), self.total_steps - 1)

    def rate(self, step: int) -> float:
        """Learning rate for step ``step`` (0-based)."""
        if not 0 <= step < max(self.total_steps, 1):
            raise ValueError(f"step {step} outside [0, {self.total_steps})")
        w = self.warmup_steps
        if step < w:
            return self.base_rate * (step + 1) / w
        return self.base_rate * (self.total_steps - step) / (self.total_steps - w)


@dataclass(frozen=True)
class WorldParams:
    """Shape of the synthetic world; scalars broadcast to every arm.

    ``transfer`` fixes a constant off-diagonal spillover; leaving it unset
    draws the off-diagonal entries once per world from the seeded init
    stream.  ``noise_scale`` drives both the per-step process noise and the
    amplitude of per-example observation jitter.
    """

    base_loss: tuple[float, ...] | float = 3.0
    floor: tuple[float, ...] | float = 0.5
    learnability: tuple[float, ...] | float = 1.0
    transfer: float | None = None
    noise_scale: float = 0.0
    init_spread: float = 0.0

    def __post_init__(self) -> None:
        if self.transfer is not None and not 0.0 <= self.transfer <= 1.0:
            raise ValueError(f"transfer must lie in [0, 1], got {self.transfer}")
        if self.noise_scale < 0:
            raise ValueError(f"noise_scale must be >= 0, got {self.noise_scale}")
        if not 0.0 <= self.init_spread < 1.0:
            raise ValueError(f"init_spread must lie in [0, 1), got {self.init_spread}")


def _broadcast(name: str, value: tuple[float, ...] | float, k: int) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(k, float(arr))
    if arr.shape != (k,):
        raise ValueError(f"{name} must be a scalar or have {k} entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} entries must be finite")
    return arr


@dataclass(frozen=True)
class _WorldSnapshot:
    key: int
    loss: np.ndarray
    rng_state: dict


class SimWorld(Learner):
    """A trainable synthetic world; see the module docstring for dynamics."""

    def __init__(
        self,
        loss: np.ndarray,
        floor: np.ndarray,
        transfer: np.ndarray,
        noise_scale: float,
        rng: np.random.Generator,
        key: int,
    ) -> None:
        k = int(np.asarray(loss).size)
        self._loss = np.asarray(loss, dtype=np.float64).copy()
        self._floor = np.asarray(floor, dtype=np.float64).copy()
        if np.any(self._floor < 0):
            raise ValueError("floor entries must be >= 0")
        if np.any(self._loss < self._floor):
            raise ValueError("initial loss must be at or above the floor")
        transfer = np.asarray(transfer, dtype=np.float64).copy()
        if transfer.shape != (k, k):
            raise ValueError(f"transfer must be a {k}x{k} matrix, got shape {transfer.shape}")
        if np.any(transfer < 0) or np.any(transfer > 1):
            raise ValueError("transfer entries must lie in [0, 1]")
        diag = np.diag(transfer)
        if np.any(transfer > diag[np.newaxis, :] + 1e-12):
            raise ValueError("transfer diagonal must dominate its column (self-learning first)")
        if noise_scale < 0:
            raise ValueError(f"noise_scale must be >= 0, got {noise_scale}")
        self._transfer = transfer
        self._noise_scale = float(noise_scale)
        self._rng = rng
        self._key = int(key)
        self._floor.setflags(write=False)
        self._transfer.setflags(write=False)

    @property
    def num_arms(self) -> int:
        return int(self._loss.size)

    @property
    def loss_vector(self) -> np.ndarray:
        """Current noiseless per-arm losses (copy)."""
        return self._loss.copy()

    @property
    def transfer_matrix(self) -> np.ndarray:
        return self._transfer

    def _check_batch(self, batch: Batch) -> None:
        if len(batch) == 0:
            raise ValueError("batch must be nonempty")
        if np.any(batch.arms < 0) or np.any(batch.arms >= self.num_arms):
            raise ValueError("batch refers to arms outside this world")

    def loss(self, batch: Batch) -> np.ndarray:
        self._check_batch(batch)
        per = self._loss[batch.arms]
        if self._noise_scale > 0:
            per = per + self._noise_scale * _jitter_uniform(self._key, batch.arms, batch.examples)
        return np.clip(per, 0.0, None)

    def entropy(self, batch: Batch) -> np.ndarray:
        return ENTROPY_LOSS_RATIO * self.loss(batch)

    def _apply_update(self, batch: Batch, learning_rate: float) -> None:
        self._check_batch(batch)
        if learning_rate < 0 or not np.isfinite(learning_rate):
            raise ValueError(f"learning_rate must be finite and >= 0, got {learning_rate}")
        if learning_rate == 0.0:
            # A zero-rate step must leave the world bit-identical, generator
            # included.
            return
        n = np.bincount(batch.arms, minlength=self.num_arms).astype(np.float64)
        factors = np.clip(1.0 - learning_rate * self._transfer / len(batch), 0.0, None)
        gap = (self._loss - self._floor) * np.prod(factors**n, axis=1)
        if self._noise_scale > 0:
            gap = gap + self._noise_scale * learning_rate * self._rng.standard_normal(self.num_arms)
        self._loss = self._floor + np.clip(gap, 0.0, None)

    def virtual_step(self, batch: Batch, learning_rate: float) -> None:
        self._apply_update(batch, learning_rate)

    def train_step(self, batch: Batch, learning_rate: float) -> None:
        self._apply_update(batch, learning_rate)

    def snapshot(self) -> Any:
        return _WorldSnapshot(
            key=self._key,
            loss=self._loss.copy(),
            rng_state=self._rng.bit_generator.state,
        )

    def restore(self, token: Any) -> None:
        if not isinstance(token, _WorldSnapshot) or token.key != self._key:
            raise ValueError("snapshot token does not belong to this world")
        self._loss = token.loss.copy()
        self._rng.bit_generator.state = token.rng_state

    def state_dict(self) -> dict:
        """Full state as JSON-friendly plain types."""
        return {
            "key": self._key,
            "loss": self._loss.tolist(),
            "floor": self._floor.tolist(),
            "transfer": self._transfer.tolist(),
            "noise_scale": self._noise_scale,
            "rng_state": self._rng.bit_generator.state,
        }

    @classmethod
    def from_state_dict(cls, state: dict) -> "SimWorld":
        rng = np.random.Generator(np.random.PCG64())
        rng.bit_generator.state = state["rng_state"]
        return cls(
            loss=np.asarray(state["loss"], dtype=np.float64),
            floor=np.asarray(state["floor"], dtype=np.float64),
            transfer=np.asarray(state["transfer"], dtype=np.float64),
            noise_scale=state["noise_scale"],
            rng=rng,
            key=state["key"],
        )


def build_world(
    params: WorldParams,
    num_arms: int,
    init_rng: np.random.Generator,
    sim_rng: np.random.Generator,
) -> SimWorld:
    """Instantiate a world from parameters.

    ``init_rng`` fixes the starting point (identity key, transfer draws,
    optional spread on the initial gaps) in that order; ``sim_rng`` drives
    process noise during training.  Two worlds built from identical init
    streams share a starting point but can diverge under noise.
    """
    if num_arms < 1:
        raise ValueError(f"num_arms must be >= 1, got {num_arms}")
    base = _broadcast("base_loss", params.base_loss, num_arms)
    floor = _broadcast("floor", params.floor, num_arms)
    learn = _broadcast("learnability", params.learnability, num_arms)
    if np.any(learn < 0) or np.any(learn > 1):
        raise ValueError("learnability entries must lie in [0, 1]")
    if np.any(base < floor):
        raise ValueError("base_loss must be at or above floor for every arm")
    key = int(init_rng.integers(0, np.iinfo(np.int64).max))
    if params.transfer is None:
        # Column k scales with arm k's own learnability so the diagonal
        # always dominates.
        transfer = TRANSFER_DRAW_CAP * init_rng.random((num_arms, num_arms)) * learn[np.newaxis, :]
    else:
        if num_arms > 1 and params.transfer > np.min(learn):
            raise ValueError(
                f"constant transfer {params.transfer} exceeds the smallest "
                f"learnability {np.min(learn)}"
            )
        transfer = np.full((num_arms, num_arms), float(params.transfer))
    np.fill_diagonal(transfer, learn)
    gap = base - floor
    if params.init_spread > 0:
        gap = gap * (1.0 + params.init_spread * (init_rng.random(num_arms) - 0.5))
    return SimWorld(
        loss=floor + gap,
        floor=floor,
        transfer=transfer,
        noise_scale=params.noise_scale,
        rng=sim_rng,
        key=key,
    )
