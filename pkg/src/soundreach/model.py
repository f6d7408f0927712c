"""Sparse Markov chain / Markov decision process models.

A model is stored in compressed row form: states own contiguous *row groups*
of choices, choices own contiguous runs of transition entries.  A Markov
chain is simply a model in which every row group has exactly one choice.
All probabilities are float64 and every row is renormalized to sum to one
exactly once, at validation time.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DanglingTarget,
    EmptyRowGroup,
    InvalidChoiceIndex,
    NegativeProbability,
    RowSumError,
)

__all__ = [
    "Direction",
    "SparseModel",
    "Partition",
    "Scheduler",
    "validate_model",
    "make_absorbing",
    "induce_mc",
    "ROW_SUM_TOLERANCE",
]

#: Absolute tolerance for accepting a probability row before renormalization.
ROW_SUM_TOLERANCE = 1e-6


class Direction(enum.Enum):
    """Optimization direction for MDP queries (ignored for Markov chains)."""

    MAXIMIZE = "max"
    MINIMIZE = "min"

    @classmethod
    def parse(cls, text: str) -> "Direction":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown direction {text!r} (expected 'max' or 'min')")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(eq=False)
class SparseModel:
    """Compressed-row Markov model (chain or decision process).

    ``row_group_start[s] : row_group_start[s+1]`` are the choice indices of
    state ``s``; ``choice_start[c] : choice_start[c+1]`` are the entry indices
    of choice ``c``.  ``entry_target``/``entry_prob`` hold the transitions,
    sorted by target within each choice, with duplicate targets merged.
    ``choice_reward[c]`` is the reward earned when choice ``c`` is taken.
    """

    num_states: int
    initial_state: int
    row_group_start: np.ndarray
    choice_start: np.ndarray
    entry_target: np.ndarray
    entry_prob: np.ndarray
    choice_reward: np.ndarray
    labels: dict[str, np.ndarray] = field(default_factory=dict)
    choice_labels: tuple | None = None

    # -- structural views ---------------------------------------------------

    @property
    def num_choices(self) -> int:
        return len(self.choice_start) - 1

    @property
    def num_transitions(self) -> int:
        return len(self.entry_target)

    @property
    def is_mc(self) -> bool:
        """True when every state has exactly one choice."""
        return self.num_choices == self.num_states

    def choices_of(self, state: int) -> range:
        return range(int(self.row_group_start[state]), int(self.row_group_start[state + 1]))

    def entries_of(self, choice: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = int(self.choice_start[choice]), int(self.choice_start[choice + 1])
        return self.entry_target[lo:hi], self.entry_prob[lo:hi]

    def group_sizes(self) -> np.ndarray:
        return np.diff(self.row_group_start)

    def choice_state(self) -> np.ndarray:
        """Map each choice index to its owning state."""
        return np.repeat(np.arange(self.num_states), self.group_sizes())

    def label_mask(self, name: str) -> np.ndarray:
        try:
            return self.labels[name]
        except KeyError:
            raise KeyError(f"model has no label {name!r}") from None

    # -- equality (used by round-trip tests) --------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseModel):
            return NotImplemented
        if (
            self.num_states != other.num_states
            or self.initial_state != other.initial_state
            or self.choice_labels != other.choice_labels
        ):
            return False
        for a, b in (
            (self.row_group_start, other.row_group_start),
            (self.choice_start, other.choice_start),
            (self.entry_target, other.entry_target),
        ):
            if not np.array_equal(a, b):
                return False
        if not np.array_equal(self.entry_prob, other.entry_prob):
            return False
        if not np.array_equal(self.choice_reward, other.choice_reward):
            return False
        if set(self.labels) != set(other.labels):
            return False
        return all(np.array_equal(self.labels[k], other.labels[k]) for k in self.labels)

    def __repr__(self) -> str:  # keep reprs short; arrays get noisy
        kind = "mc" if self.is_mc else "mdp"
        return (
            f"SparseModel({kind}, states={self.num_states}, "
            f"choices={self.num_choices}, transitions={self.num_transitions})"
        )


@dataclass(frozen=True)
class Partition:
    """Disjoint split of the state space into sure-zero, goal, and undecided.

    ``s0``/``goal``/``maybe`` are boolean masks over the states.  They must be
    pairwise disjoint and together cover every state.
    """

    s0: np.ndarray
    goal: np.ndarray
    maybe: np.ndarray

    def __post_init__(self):
        n = len(self.s0)
        if len(self.goal) != n or len(self.maybe) != n:
            raise ValueError("partition masks must have equal length")
        total = self.s0.astype(int) + self.goal.astype(int) + self.maybe.astype(int)
        if not np.all(total == 1):
            raise ValueError("partition masks must be disjoint and cover all states")
        for name in ("s0", "goal", "maybe"):
            arr = getattr(self, name)
            if arr.dtype != bool:
                raise ValueError(f"partition mask {name} must be boolean")
            _freeze(arr)

    @property
    def maybe_states(self) -> np.ndarray:
        return np.flatnonzero(self.maybe)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return (
            np.array_equal(self.s0, other.s0)
            and np.array_equal(self.goal, other.goal)
            and np.array_equal(self.maybe, other.maybe)
        )


@dataclass(frozen=True)
class Scheduler:
    """Positional (memoryless deterministic) choice resolution.

    ``choice_of[s]`` is the local choice index taken in state ``s``.
    """

    choice_of: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.choice_of, dtype=np.int64)
        object.__setattr__(self, "choice_of", _freeze(arr))

    def __len__(self) -> int:
        return len(self.choice_of)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def _iter_entries(choice) -> Iterable[tuple[int, float]]:
    if isinstance(choice, Mapping):
        return choice.items()
    return choice


def validate_model(
    choices: Sequence,
    *,
    initial_state: int = 0,
    rewards: Sequence | None = None,
    labels: Mapping[str, Iterable[int]] | Mapping[str, np.ndarray] | None = None,
    choice_labels: Sequence | None = None,
) -> SparseModel:
    """Validate raw nested transition data and build a :class:`SparseModel`.

    ``choices[s]`` is the sequence of choices of state ``s``; each choice is
    either a mapping ``{target: probability}`` or an iterable of
    ``(target, probability)`` pairs.  ``rewards[s][c]`` optionally assigns a
    reward to choice ``c`` of state ``s`` (missing rewards default to 0).

    Checks performed, in order: every state has at least one choice
    (:class:`EmptyRowGroup`), targets lie in range (:class:`DanglingTarget`),
    probabilities are in ``(0, 1]`` (:class:`NegativeProbability`), and each
    row sums to 1 within ``ROW_SUM_TOLERANCE`` (:class:`RowSumError`).
    Duplicate targets within one choice are merged; afterwards each row is
    renormalized by its actual sum so downstream arithmetic sees rows that
    sum to one exactly.
    """
    num_states = len(choices)
    if num_states == 0:
        raise EmptyRowGroup("a model needs at least one state")
    if not (0 <= initial_state < num_states):
        raise DanglingTarget(f"initial state {initial_state} out of range 0..{num_states - 1}")

    row_group_start = np.zeros(num_states + 1, dtype=np.int64)
    choice_start: list[int] = [0]
    targets: list[int] = []
    probs: list[float] = []
    choice_rewards: list[float] = []

    for s, group in enumerate(choices):
        group = list(group)
        if not group:
            raise EmptyRowGroup(f"state {s} has no choice")
        row_group_start[s + 1] = row_group_start[s] + len(group)
        for c, raw_choice in enumerate(group):
            merged: dict[int, float] = {}
            for target, prob in _iter_entries(raw_choice):
                target = int(target)
                prob = float(prob)
                if not (0 <= target < num_states):
                    raise DanglingTarget(
                        f"state {s} choice {c}: target {target} out of range"
                    )
                if not (0.0 < prob <= 1.0 + ROW_SUM_TOLERANCE):
                    raise NegativeProbability(
                        f"state {s} choice {c}: probability {prob!r} outside (0, 1]"
                    )
                merged[target] = merged.get(target, 0.0) + prob
            if not merged:
                raise EmptyRowGroup(f"state {s} choice {c} has no transition")
            row_sum = sum(merged.values())
            if abs(row_sum - 1.0) > ROW_SUM_TOLERANCE:
                raise RowSumError(
                    f"state {s} choice {c}: probabilities sum to {row_sum!r}"
                )
            for target in sorted(merged):
                targets.append(target)
                probs.append(merged[target] / row_sum)
            choice_start.append(len(targets))
            if rewards is not None:
                try:
                    choice_rewards.append(float(rewards[s][c]))
                except (IndexError, TypeError):
                    choice_rewards.append(0.0)
            else:
                choice_rewards.append(0.0)

    label_masks: dict[str, np.ndarray] = {}
    if labels:
        for name, states in labels.items():
            mask = np.zeros(num_states, dtype=bool)
            arr = np.asarray(list(states) if not isinstance(states, np.ndarray) else states)
            if arr.dtype == bool:
                if len(arr) != num_states:
                    raise DanglingTarget(f"label {name!r}: mask length mismatch")
                mask |= arr
            elif arr.size:
                if arr.min() < 0 or arr.max() >= num_states:
                    raise DanglingTarget(f"label {name!r}: state index out of range")
                mask[arr.astype(np.int64)] = True
            label_masks[name] = _freeze(mask)

    if choice_labels is not None:
        choice_labels = tuple(choice_labels)
        if len(choice_labels) != len(choice_start) - 1:
            raise DanglingTarget("choice label count does not match choice count")
        if all(label is None for label in choice_labels):
            choice_labels = None  # unnamed everywhere is the same as unnamed

    return SparseModel(
        num_states=num_states,
        initial_state=int(initial_state),
        row_group_start=_freeze(row_group_start),
        choice_start=_freeze(np.asarray(choice_start, dtype=np.int64)),
        entry_target=_freeze(np.asarray(targets, dtype=np.int64)),
        entry_prob=_freeze(np.asarray(probs, dtype=np.float64)),
        choice_reward=_freeze(np.asarray(choice_rewards, dtype=np.float64)),
        labels=label_masks,
        choice_labels=choice_labels,
    )


def make_absorbing(model: SparseModel, states: np.ndarray) -> SparseModel:
    """Return a copy in which every state in ``states`` only loops on itself.

    The marked states get a single choice with probability 1 back to
    themselves and reward 0; all other rows are kept unchanged.  Applying the
    function twice is a no-op.
    """
    mask = np.asarray(states, dtype=bool)
    if len(mask) != model.num_states:
        raise DanglingTarget("absorbing mask length does not match state count")

    choices: list[list] = []
    rewards: list[list[float]] = []
    new_choice_labels: list = []
    has_choice_labels = model.choice_labels is not None
    for s in range(model.num_states):
        if mask[s]:
            choices.append([[(s, 1.0)]])
            rewards.append([0.0])
            if has_choice_labels:
                new_choice_labels.append(None)
        else:
            group = []
            group_rewards = []
            for c in model.choices_of(s):
                t, p = model.entries_of(c)
                group.append(list(zip(t.tolist(), p.tolist())))
                group_rewards.append(float(model.choice_reward[c]))
                if has_choice_labels:
                    new_choice_labels.append(model.choice_labels[c])
            choices.append(group)
            rewards.append(group_rewards)

    return validate_model(
        choices,
        initial_state=model.initial_state,
        rewards=rewards,
        labels={name: arr.copy() for name, arr in model.labels.items()},
        choice_labels=new_choice_labels if has_choice_labels else None,
    )


def induce_mc(model: SparseModel, scheduler: Scheduler) -> SparseModel:
    """Restrict an MDP to the single choice per state picked by ``scheduler``."""
    if len(scheduler) != model.num_states:
        raise InvalidChoiceIndex("scheduler length does not match state count")

    choices: list[list] = []
    rewards: list[list[float]] = []
    sizes = model.group_sizes()
    for s in range(model.num_states):
        local = int(scheduler.choice_of[s])
        if not (0 <= local < sizes[s]):
            raise InvalidChoiceIndex(
                f"state {s}: choice {local} not in 0..{int(sizes[s]) - 1}"
            )
        c = int(model.row_group_start[s]) + local
        t, p = model.entries_of(c)
        choices.append([list(zip(t.tolist(), p.tolist()))])
        rewards.append([float(model.choice_reward[c])])

    return validate_model(
        choices,
        initial_state=model.initial_state,
        rewards=rewards,
        labels={name: arr.copy() for name, arr in model.labels.items()},
    )
