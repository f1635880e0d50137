"""Arm registry: named data sources with instance counts and a prior.

An arm is one source dataset.  The registry fixes the arm order (which every
probability vector, trace column, and sampler index refers to), the instance
count per arm, and the prior used to rescale the Boltzmann weights.  By
default the prior is proportional to instance counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Arm", "ArmRegistry", "make_tulu_registry", "builtin_registry", "BUILTIN_REGISTRIES"]


@dataclass(frozen=True)
class Arm:
    """A single data source: a unique name and its instance count."""

    name: str
    count: int

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("arm name must be nonempty")
        if self.count < 1:
            raise ValueError(f"arm {self.name!r}: count must be >= 1, got {self.count}")


@dataclass(frozen=True)
class ArmRegistry:
    """An ordered, immutable collection of arms with a prior over them."""

    arms: tuple[Arm, ...]
    prior: np.ndarray

    def __post_init__(self) -> None:
        if not self.arms:
            raise ValueError("registry must contain at least one arm")
        names = [a.name for a in self.arms]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate arm names: {dupes}")
        prior = np.asarray(self.prior, dtype=np.float64)
        if prior.shape != (len(self.arms),):
            raise ValueError(
                f"prior has shape {prior.shape}, expected ({len(self.arms)},)"
            )
        if not np.all(np.isfinite(prior)) or np.any(prior < 0):
            raise ValueError("prior entries must be finite and nonnegative")
        total = float(np.sum(prior))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"prior must sum to 1, got {total!r}")
        prior = prior.copy()
        prior.setflags(write=False)
        object.__setattr__(self, "prior", prior)
        counts = np.array([a.count for a in self.arms], dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "_counts", counts)

    @classmethod
    def from_counts(
        cls,
        named_counts: dict[str, int] | list[tuple[str, int]],
        prior: np.ndarray | list[float] | None = None,
    ) -> "ArmRegistry":
        """Build a registry from ``name -> count`` pairs in the given order.

        Without an explicit prior, the prior is counts normalized by their
        total, so larger sources start with proportionally more mass.
        """
        items = list(named_counts.items()) if isinstance(named_counts, dict) else list(named_counts)
        arms = tuple(Arm(name=n, count=int(c)) for n, c in items)
        if prior is None:
            counts = np.array([a.count for a in arms], dtype=np.float64)
            prior = counts / counts.sum()
        return cls(arms=arms, prior=np.asarray(prior, dtype=np.float64))

    @property
    def num_arms(self) -> int:
        return len(self.arms)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.arms)

    @property
    def counts(self) -> np.ndarray:
        """Per-arm instance counts as a read-only int64 array."""
        return self._counts  # type: ignore[attr-defined]

    @property
    def total_count(self) -> int:
        return int(self._counts.sum())  # type: ignore[attr-defined]

    def index_of(self, name: str) -> int:
        for i, a in enumerate(self.arms):
            if a.name == name:
                return i
        raise KeyError(name)


# Instruction-tuning mixture used as the default workload.  The science bundle
# ships as one 7000-instance collection built from six sub-tasks; the split
# below divides it evenly with the remainder on the first sub-task, so the
# six counts still total 7000.
_TULU_MAIN: list[tuple[str, int]] = [
    ("flan_v2", 50_000),
    ("cot", 50_000),
    ("oasst1", 7_000),
    ("sharegpt", 114_000),
    ("gpt4_alpaca", 20_000),
    ("code_alpaca", 20_000),
    ("lima", 1_000),
    ("wizardlm", 30_000),
    ("open_orca", 30_000),
    ("hardcoded", 140),
]

_SCIENCE_TASKS = [
    "science_evidence_inference",
    "science_qasper",
    "science_scierc_ner",
    "science_scierc_re",
    "science_scifact",
    "science_scitldr",
]
_SCIENCE_TOTAL = 7_000


def _science_split() -> list[tuple[str, int]]:
    # Even split, remainder assigned to the first sub-task.
    base, extra = divmod(_SCIENCE_TOTAL, len(_SCIENCE_TASKS))
    return [(name, base + (extra if i == 0 else 0)) for i, name in enumerate(_SCIENCE_TASKS)]


def make_tulu_registry(split_science: bool = True) -> ArmRegistry:
    """The default 16-arm instruction-tuning registry.

    With ``split_science=False`` the six science sub-tasks collapse into a
    single ``science`` arm, giving 11 arms with the same total count.
    """
    entries = list(_TULU_MAIN)
    if split_science:
        entries.extend(_science_split())
    else:
        entries.append(("science", _SCIENCE_TOTAL))
    return ArmRegistry.from_counts(entries)


BUILTIN_REGISTRIES = {
    "tulu_v2": lambda: make_tulu_registry(split_science=True),
    "tulu_v2_science_merged": lambda: make_tulu_registry(split_science=False),
}


def builtin_registry(name: str) -> ArmRegistry:
    """Look up a built-in registry by name."""
    try:
        factory = BUILTIN_REGISTRIES[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_REGISTRIES))
        raise KeyError(f"unknown registry {name!r}; built-ins: {known}") from None
    return factory()
