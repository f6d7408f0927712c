"""Numeric solvers for reachability probabilities and expected rewards.

Three iteration schemes are provided.  ``vi_solve`` is classic value
iteration with a difference-based stopping test; it is fast but its results
carry no guarantee.  ``ii_solve`` is interval iteration: twin value
iterations from below and above whose gap certifies the result.
``svi_solve`` iterates two coupled quantities per state — the k-step value
``x`` and the probability ``y`` of still being undecided after k steps —
and derives certified global bounds from the ratios ``x / (1 - y)``.  On
MDPs it additionally tracks a *decision value* that keeps the upper-bound
update honest when the preferred choice of a state could flip.

``oracle_solve`` is the exact reference: dense linear algebra for chains,
exhaustive positional-scheduler enumeration for (small) MDPs.  ``solve``
wires graph preprocessing and an engine together for one query.
"""

from __future__ import annotations

import enum
import itertools
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .analysis import (
    check_contracting,
    collapse_end_components,
    reach_partition,
    reward_partition,
)
from .errors import (
    ConfigError,
    IterationLimit,
    MissingRewardBounds,
    NotContracting,
    RewardOnMec,
    TooLargeForOracle,
)
from .model import Direction, Partition, SparseModel, make_absorbing

__all__ = [
    "Objective",
    "Method",
    "SolverConfig",
    "SolveResult",
    "TraceRow",
    "IterationState",
    "bellman_step_f",
    "bellman_step_g",
    "bellman_step_h",
    "find_action",
    "decision_value",
    "update_global_bounds",
    "neutral_decision",
    "svi_solve",
    "vi_solve",
    "ii_solve",
    "oracle_solve",
    "solve",
]


class Objective(enum.Enum):
    PROBABILITY = "prob"
    REWARD = "reward"

    @classmethod
    def parse(cls, text: str) -> "Objective":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown objective {text!r} (expected 'prob' or 'reward')")


class Method(enum.Enum):
    VI = "vi"
    II = "ii"
    SVI = "svi"

    @classmethod
    def parse(cls, text: str) -> "Method":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown method {text!r} (expected 'vi', 'ii' or 'svi')")


@dataclass(frozen=True)
class SolverConfig:
    """Everything a solve run needs besides the model and the partition.

    ``lower``/``upper`` are optional scalar initial bounds valid for every
    undecided state; ``lower_vector``/``upper_vector`` are their per-state
    counterparts (used by interval iteration on rewards).  ``epsilon`` is the
    absolute precision: certified methods stop once the certified interval
    at the initial state is narrower than ``2 * epsilon`` and report its
    midpoint, so the result is within ``epsilon`` of the true value.
    """

    method: Method = Method.SVI
    direction: Direction = Direction.MAXIMIZE
    objective: Objective = Objective.PROBABILITY
    epsilon: float = 1e-6
    gauss_seidel: bool = False
    topological: bool = False
    lower: float | None = None
    upper: float | None = None
    lower_vector: np.ndarray | None = None
    upper_vector: np.ndarray | None = None
    max_iterations: int = 50_000_000
    record_trace: bool = False

    def validated(self) -> "SolverConfig":
        if not (self.epsilon > 0.0):
            raise ConfigError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be at least 1")
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ConfigError(
                f"initial lower bound {self.lower!r} exceeds upper bound {self.upper!r}"
            )
        if self.topological and self.method is not Method.SVI:
            raise ConfigError("the topological variant is only available for method svi")
        return self


@dataclass(frozen=True)
class TraceRow:
    """Per-iteration bound snapshot: ``y_init`` is y at the initial state."""

    k: int
    lower: float
    upper: float
    decision: float
    y_init: float


@dataclass
class IterationState:
    """Snapshot of one iteration, handed to ``on_iteration`` hooks."""

    k: int
    x: np.ndarray
    y: np.ndarray
    lower: float
    upper: float
    decision: float
    scheduler: np.ndarray | None  # fresh local choice per state (MDP only)


@dataclass
class SolveResult:
    """Outcome of one solve: value, certified interval, and bookkeeping.

    For certified methods ``lower <= value <= upper`` with
    ``upper - lower < 2 * epsilon`` and ``value`` the interval midpoint.
    Plain value iteration reports ``lower == value == upper`` but sets
    ``sound`` to False: nothing certifies those numbers.
    """

    value: float
    lower: float
    upper: float
    iterations: int
    time_ms: float
    method: Method
    sound: bool
    trace: list | None = None


def neutral_decision(direction: Direction) -> float:
    """Decision value that constrains nothing (no alternative recorded yet)."""
    return -math.inf if direction is Direction.MAXIMIZE else math.inf


# ---------------------------------------------------------------------------
# vectorized iteration kernels
# ---------------------------------------------------------------------------


class _Kernels:
    """Precomputed array views for fast synchronous iteration steps."""

    def __init__(
        self,
        model: SparseModel,
        partition: Partition,
        objective: Objective,
        direction: Direction,
    ):
        self.model = model
        self.partition = partition
        self.objective = objective
        self.direction = direction
        self.targets = model.entry_target
        self.probs = model.entry_prob
        self.choice_cuts = model.choice_start[:-1]
        self.group_cuts = model.row_group_start[:-1]
        self.group_sizes = model.group_sizes()
        self.choice_state = model.choice_state()
        self.num_choices = model.num_choices
        self.choice_arange = np.arange(self.num_choices, dtype=np.int64)
        self.rewards = model.choice_reward if objective is Objective.REWARD else None
        self.maybe_idx = partition.maybe_states
        self.is_mc = model.is_mc
        self.single_choice = model.row_group_start[:-1]  # MC: the one choice per state

        goal_value = 1.0 if objective is Objective.PROBABILITY else 0.0
        x0 = np.zeros(model.num_states)
        x0[partition.goal] = goal_value
        self.x_boundary = x0
        y0 = np.zeros(model.num_states)
        y0[partition.maybe] = 1.0
        self.y_init = y0
        self.maximize = direction is Direction.MAXIMIZE

    # -- per-choice expectations --------------------------------------------

    def choice_x(self, x: np.ndarray) -> np.ndarray:
        gathered = x[self.targets] * self.probs
        vals = np.add.reduceat(gathered, self.choice_cuts)
        if self.rewards is not None:
            vals = vals + self.rewards
        return vals

    def choice_y(self, y: np.ndarray) -> np.ndarray:
        gathered = y[self.targets] * self.probs
        return np.add.reduceat(gathered, self.choice_cuts)

    # -- per-state reductions -------------------------------------------------

    def state_opt(self, choice_vals: np.ndarray) -> np.ndarray:
        reduce = np.maximum if self.maximize else np.minimum
        return reduce.reduceat(choice_vals, self.group_cuts)

    def _first_index_where(self, eligible: np.ndarray) -> np.ndarray:
        candidates = np.where(eligible, self.choice_arange, self.num_choices)
        return np.minimum.reduceat(candidates, self.group_cuts)

    def argopt(self, choice_vals: np.ndarray) -> np.ndarray:
        """Per state: global index of the best choice, ties to the lowest."""
        reduce = np.maximum if self.maximize else np.minimum
        best = reduce.reduceat(choice_vals, self.group_cuts)
        eligible = choice_vals == np.repeat(best, self.group_sizes)
        return self._first_index_where(eligible)

    def argopt_unbounded(self, choice_x: np.ndarray, choice_y: np.ndarray) -> np.ndarray:
        """Selection in the limit of an infinite bound.

        The y-expectation dominates, so it is maximized first (for both
        directions); among equals the x-expectation decides (optimized in
        the query direction), remaining ties go to the lowest choice index.
        """
        y_best = np.maximum.reduceat(choice_y, self.group_cuts)
        y_tied = choice_y == np.repeat(y_best, self.group_sizes)
        if self.maximize:
            masked = np.where(y_tied, choice_x, -np.inf)
            x_best = np.maximum.reduceat(masked, self.group_cuts)
        else:
            masked = np.where(y_tied, choice_x, np.inf)
            x_best = np.minimum.reduceat(masked, self.group_cuts)
        eligible = y_tied & (masked == np.repeat(x_best, self.group_sizes))
        return self._first_index_where(eligible)

    # -- full iteration steps -------------------------------------------------

    def bellman(self, x: np.ndarray) -> np.ndarray:
        """One synchronous optimal step (the plain VI / II operator)."""
        vals = self.state_opt(self.choice_x(x))
        out = self.x_boundary.copy()
        out[self.maybe_idx] = vals[self.maybe_idx]
        return out

    def coupled_step(
        self, x: np.ndarray, y: np.ndarray, bound: float, decision: float
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        """One iteration of the coupled (x, y) scheme.

        Returns ``(x', y', chosen, decision')`` where ``chosen`` maps every
        state to the global index of the choice that produced its new values
        and ``decision'`` folds in this iteration's decision values.
        """
        cx = self.choice_x(x)
        cy = self.choice_y(y)
        if self.is_mc:
            chosen = self.single_choice
        else:
            if math.isinf(bound):
                chosen = self.argopt_unbounded(cx, cy)
            else:
                chosen = self.argopt(cx + bound * cy)
            decision = self._fold_decision(cx, cy, chosen, decision)

        x_new = self.x_boundary.copy()
        y_new = np.zeros(len(x))
        picked = chosen[self.maybe_idx]
        x_new[self.maybe_idx] = cx[picked]
        y_new[self.maybe_idx] = cy[picked]
        return x_new, y_new, chosen, decision

    def _fold_decision(
        self, cx: np.ndarray, cy: np.ndarray, chosen: np.ndarray, decision: float
    ) -> float:
        chosen_rep = chosen[self.choice_state]
        y_delta = cy[chosen_rep] - cy
        eligible = (
            (self.choice_arange != chosen_rep)
            & (y_delta > 0.0)
            & self.partition.maybe[self.choice_state]
        )
        if not np.any(eligible):
            return decision
        ratios = (cx[eligible] - cx[chosen_rep[eligible]]) / y_delta[eligible]
        if self.maximize:
            return max(decision, float(ratios.max()))
        return min(decision, float(ratios.min()))


# ---------------------------------------------------------------------------
# elementary operations (also used by the Gauss-Seidel variants and tests)
# ---------------------------------------------------------------------------


def bellman_step_f(
    model: SparseModel,
    partition: Partition,
    x: np.ndarray,
    direction: Direction = Direction.MAXIMIZE,
) -> np.ndarray:
    """One synchronous probability step: goal stays 1, sure-zero stays 0."""
    kern = _Kernels(model, partition, Objective.PROBABILITY, direction)
    return kern.bellman(np.asarray(x, dtype=np.float64))


def bellman_step_g(
    model: SparseModel,
    partition: Partition,
    x: np.ndarray,
    direction: Direction = Direction.MAXIMIZE,
) -> np.ndarray:
    """One synchronous reward step: choice reward plus expected successor value."""
    kern = _Kernels(model, partition, Objective.REWARD, direction)
    return kern.bellman(np.asarray(x, dtype=np.float64))


def bellman_step_h(
    model: SparseModel,
    partition: Partition,
    y: np.ndarray,
    scheduler: np.ndarray | None = None,
) -> np.ndarray:
    """One step of the stay-undecided probability.

    For chains the single choice per state is used; for MDPs ``scheduler``
    must give the local choice per state (the one picked for the x-update,
    so both quantities follow the same resolution).
    """
    y = np.asarray(y, dtype=np.float64)
    kern = _Kernels(model, partition, Objective.PROBABILITY, Direction.MAXIMIZE)
    cy = kern.choice_y(y)
    if model.is_mc:
        chosen = kern.single_choice
    else:
        if scheduler is None:
            raise ConfigError("an MDP y-step needs the scheduler chosen for the x-step")
        chosen = model.row_group_start[:-1] + np.asarray(scheduler, dtype=np.int64)
    out = np.zeros(len(y))
    out[kern.maybe_idx] = cy[chosen[kern.maybe_idx]]
    return out


def _choice_expectations(
    model: SparseModel, x: np.ndarray, y: np.ndarray, choice: int, objective: Objective
) -> tuple[float, float]:
    targets, probs = model.entries_of(choice)
    ex = float(np.add.reduce(probs * x[targets]))
    if objective is Objective.REWARD:
        ex += float(model.choice_reward[choice])
    ey = float(np.add.reduce(probs * y[targets]))
    return ex, ey


def find_action(
    model: SparseModel,
    x: np.ndarray,
    y: np.ndarray,
    state: int,
    bound: float,
    direction: Direction = Direction.MAXIMIZE,
    objective: Objective = Objective.PROBABILITY,
) -> int:
    """Pick the local choice optimizing ``E[x] + bound * E[y]`` at ``state``.

    With an infinite ``bound`` the y-expectation dominates: it is maximized,
    with the x-expectation as tie-breaker (optimized in the query
    direction).  Remaining ties resolve to the lowest choice index.
    """
    maximize = direction is Direction.MAXIMIZE
    best_local = 0
    best_key: tuple | None = None
    for local, choice in enumerate(model.choices_of(state)):
        ex, ey = _choice_expectations(model, x, y, choice, objective)
        if math.isinf(bound):
            key = (ey, ex if maximize else -ex)
            better = best_key is None or key > best_key
        else:
            score = ex + bound * ey
            key = (score,)
            if best_key is None:
                better = True
            elif maximize:
                better = key > best_key
            else:
                better = key < best_key
        if better:
            best_key = key
            best_local = local
    return best_local


def decision_value(
    model: SparseModel,
    x: np.ndarray,
    y: np.ndarray,
    state: int,
    chosen: int,
    direction: Direction = Direction.MAXIMIZE,
    objective: Objective = Objective.PROBABILITY,
) -> float:
    """Bound on how far the global bound may move before ``chosen`` flips.

    For every alternative choice whose y-expectation lies strictly below the
    chosen one's, the crossing point of the two score lines is
    ``(E_alt[x] - E_chosen[x]) / (E_chosen[y] - E_alt[y])``.  Maximizing
    queries keep the largest crossing point (the upper bound must never drop
    below it); minimizing queries keep the smallest (the lower bound must
    never climb above it).  States without alternatives yield the neutral
    value.
    """
    choices = list(model.choices_of(state))
    chosen_global = int(model.row_group_start[state]) + chosen
    ex_chosen, ey_chosen = _choice_expectations(model, x, y, chosen_global, objective)
    out = neutral_decision(direction)
    for choice in choices:
        if choice == chosen_global:
            continue
        ex_alt, ey_alt = _choice_expectations(model, x, y, choice, objective)
        y_delta = ey_chosen - ey_alt
        if y_delta > 0.0:
            ratio = (ex_alt - ex_chosen) / y_delta
            if direction is Direction.MAXIMIZE:
                out = max(out, ratio)
            else:
                out = min(out, ratio)
    return out


def update_global_bounds(
    x: np.ndarray,
    y: np.ndarray,
    partition: Partition,
    lower: float,
    upper: float,
    decision: float,
    direction: Direction = Direction.MAXIMIZE,
) -> tuple[float, float]:
    """Tighten the global bounds from the ratios ``x / (1 - y)``.

    The update only fires when every undecided state has ``y < 1`` (otherwise
    some ratio is undefined and the previous bounds are kept).  The decision
    value clamps the bound on the optimizing side so the recorded choices
    remain optimal for the new bound.
    """
    maybe_idx = partition.maybe_states
    if maybe_idx.size == 0:
        return lower, upper
    ym = y[maybe_idx]
    if np.any(ym >= 1.0):
        return lower, upper
    denominators = 1.0 - ym
    if np.any(denominators <= 0.0):
        return lower, upper
    ratios = x[maybe_idx] / denominators
    low_candidate = float(ratios.min())
    high_candidate = float(ratios.max())
    if direction is Direction.MAXIMIZE:
        return max(lower, low_candidate), min(upper, max(decision, high_candidate))
    return max(lower, min(decision, low_candidate)), min(upper, high_candidate)


# ---------------------------------------------------------------------------
# engines
# ---------------------------------------------------------------------------


def _shortcut(
    model: SparseModel, partition: Partition, config: SolverConfig
) -> SolveResult | None:
    s = model.initial_state
    if partition.goal[s]:
        value = 1.0 if config.objective is Objective.PROBABILITY else 0.0
    elif partition.s0[s]:
        value = 0.0
    else:
        return None
    return SolveResult(
        value=value,
        lower=value,
        upper=value,
        iterations=0,
        time_ms=0.0,
        method=config.method,
        sound=config.method is not Method.VI,
        trace=[] if config.record_trace else None,
    )


def _partial_result(
    x: np.ndarray,
    y: np.ndarray,
    initial: int,
    lower: float,
    upper: float,
    iterations: int,
    elapsed_ms: float,
    config: SolverConfig,
    trace,
) -> SolveResult:
    y0 = float(y[initial])
    x0 = float(x[initial])
    if math.isfinite(lower) and math.isfinite(upper):
        value = x0 + y0 * (lower + upper) / 2.0
        lo, hi = x0 + y0 * lower, x0 + y0 * upper
    else:
        value, lo, hi = x0, -math.inf, math.inf
    return SolveResult(
        value=value,
        lower=lo,
        upper=hi,
        iterations=iterations,
        time_ms=elapsed_ms,
        method=config.method,
        sound=False,
        trace=trace,
    )


def svi_solve(
    model: SparseModel,
    partition: Partition,
    config: SolverConfig,
    on_iteration=None,
) -> SolveResult:
    """Certified solve via coupled value/stay-probability iteration.

    Stops once ``y[init] * (upper - lower) < 2 * epsilon`` — or exactly when
    ``y[init]`` hits zero, in which case ``x[init]`` is the exact answer —
    and returns the midpoint of the certified interval at the initial state.
    """
    config = replace(config, method=Method.SVI).validated()
    if config.topological:
        from .variants import topological_solve

        return topological_solve(model, partition, config, on_iteration)
    if config.gauss_seidel:
        from .variants import gauss_seidel_svi_solve

        return gauss_seidel_svi_solve(model, partition, config, on_iteration)

    short = _shortcut(model, partition, config)
    if short is not None:
        return short

    started = time.perf_counter()
    kern = _Kernels(model, partition, config.objective, config.direction)
    maximize = config.direction is Direction.MAXIMIZE
    initial = model.initial_state
    lower = config.lower if config.lower is not None else -math.inf
    upper = config.upper if config.upper is not None else math.inf
    decision = neutral_decision(config.direction)
    x = kern.x_boundary.copy()
    y = kern.y_init.copy()
    trace: list[TraceRow] | None = [] if config.record_trace else None
    previous = (
        IterationState(0, x.copy(), y.copy(), lower, upper, decision, None)
        if on_iteration
        else None
    )
    threshold = 2.0 * config.epsilon
    k = 0

    while True:
        k += 1
        if k > config.max_iterations:
            elapsed = (time.perf_counter() - started) * 1000.0
            raise IterationLimit(
                f"no convergence within {config.max_iterations} iterations",
                partial=_partial_result(
                    x, y, initial, lower, upper, k - 1, elapsed, config, trace
                ),
            )
        bound = upper if maximize else lower
        x, y, chosen, decision = kern.coupled_step(x, y, bound, decision)
        lower, upper = update_global_bounds(
            x, y, partition, lower, upper, decision, config.direction
        )
        y0 = float(y[initial])
        if trace is not None:
            trace.append(TraceRow(k, lower, upper, decision, y0))
        if on_iteration is not None:
            local = None if kern.is_mc else chosen - model.row_group_start[:-1]
            state = IterationState(
                k, x.copy(), y.copy(), lower, upper, decision,
                None if local is None else local.copy(),
            )
            on_iteration(state, previous)
            previous = state
        if y0 == 0.0:
            value = float(x[initial])
            lo = hi = value
            break
        if (
            math.isfinite(lower)
            and math.isfinite(upper)
            and y0 * (upper - lower) < threshold
        ):
            x0 = float(x[initial])
            value = x0 + y0 * (lower + upper) / 2.0
            lo = x0 + y0 * lower
            hi = x0 + y0 * upper
            break

    elapsed = (time.perf_counter() - started) * 1000.0
    return SolveResult(
        value=value,
        lower=lo,
        upper=hi,
        iterations=k,
        time_ms=elapsed,
        method=Method.SVI,
        sound=True,
        trace=trace,
    )


def vi_solve(
    model: SparseModel, partition: Partition, config: SolverConfig
) -> SolveResult:
    """Plain value iteration, stopping when successive vectors differ < epsilon.

    The reported interval is collapsed onto the value and ``sound`` is False:
    the stopping test says nothing about the distance to the true answer.
    """
    config = replace(config, method=Method.VI).validated()
    short = _shortcut(model, partition, config)
    if short is not None:
        return short

    started = time.perf_counter()
    if config.gauss_seidel:
        from .variants import gauss_seidel_sweep_values

        stepper = lambda vec: gauss_seidel_sweep_values(  # noqa: E731
            model, partition, vec, config.direction, config.objective
        )
    else:
        kern = _Kernels(model, partition, config.objective, config.direction)
        stepper = kern.bellman

    x = np.zeros(model.num_states)
    if config.objective is Objective.PROBABILITY:
        x[partition.goal] = 1.0
    trace: list[TraceRow] | None = [] if config.record_trace else None
    k = 0
    while True:
        k += 1
        if k > config.max_iterations:
            elapsed = (time.perf_counter() - started) * 1000.0
            value = float(x[model.initial_state])
            raise IterationLimit(
                f"no convergence within {config.max_iterations} iterations",
                partial=SolveResult(
                    value, value, value, k - 1, elapsed, Method.VI, False, trace
                ),
            )
        x_new = stepper(x)
        difference = float(np.max(np.abs(x_new - x)))
        x = x_new
        if trace is not None:
            current = float(x[model.initial_state])
            trace.append(
                TraceRow(k, current, current, neutral_decision(config.direction), math.nan)
            )
        if difference < config.epsilon:
            break

    elapsed = (time.perf_counter() - started) * 1000.0
    value = float(x[model.initial_state])
    return SolveResult(
        value=value,
        lower=value,
        upper=value,
        iterations=k,
        time_ms=elapsed,
        method=Method.VI,
        sound=False,
        trace=trace,
    )


def _ii_start_vectors(
    model: SparseModel, partition: Partition, config: SolverConfig
) -> tuple[np.ndarray, np.ndarray]:
    n = model.num_states
    goal_value = 1.0 if config.objective is Objective.PROBABILITY else 0.0
    low = np.zeros(n)
    high = np.zeros(n)
    low[partition.goal] = goal_value
    high[partition.goal] = goal_value

    if config.lower_vector is not None:
        low[partition.maybe] = np.asarray(config.lower_vector, dtype=np.float64)[
            partition.maybe
        ]
    elif config.lower is not None:
        low[partition.maybe] = config.lower
    elif config.objective is Objective.PROBABILITY:
        low[partition.maybe] = 0.0
    else:
        raise MissingRewardBounds(
            "interval iteration on rewards needs initial lower bounds"
        )

    if config.upper_vector is not None:
        high[partition.maybe] = np.asarray(config.upper_vector, dtype=np.float64)[
            partition.maybe
        ]
    elif config.upper is not None:
        high[partition.maybe] = config.upper
    elif config.objective is Objective.PROBABILITY:
        high[partition.maybe] = 1.0
    else:
        raise MissingRewardBounds(
            "interval iteration on rewards needs initial upper bounds"
        )
    return low, high


def ii_solve(
    model: SparseModel, partition: Partition, config: SolverConfig
) -> SolveResult:
    """Interval iteration: twin Bellman iterations from below and above.

    Probability queries default to the trivial bounds 0 and 1; reward
    queries require initial bounds (scalar or per-state) in the
    configuration.  Stops when the widest per-state gap drops below
    ``2 * epsilon``.
    """
    config = replace(config, method=Method.II).validated()
    short = _shortcut(model, partition, config)
    if short is not None:
        return short

    started = time.perf_counter()
    low, high = _ii_start_vectors(model, partition, config)
    if config.gauss_seidel:
        from .variants import gauss_seidel_sweep_values

        stepper = lambda vec: gauss_seidel_sweep_values(  # noqa: E731
            model, partition, vec, config.direction, config.objective
        )
    else:
        kern = _Kernels(model, partition, config.objective, config.direction)
        stepper = kern.bellman

    initial = model.initial_state
    trace: list[TraceRow] | None = [] if config.record_trace else None
    threshold = 2.0 * config.epsilon
    neutral = neutral_decision(config.direction)
    k = 0
    while True:
        k += 1
        if k > config.max_iterations:
            elapsed = (time.perf_counter() - started) * 1000.0
            mid = (float(low[initial]) + float(high[initial])) / 2.0
            raise IterationLimit(
                f"no convergence within {config.max_iterations} iterations",
                partial=SolveResult(
                    mid,
                    float(low[initial]),
                    float(high[initial]),
                    k - 1,
                    elapsed,
                    Method.II,
                    False,
                    trace,
                ),
            )
        low = stepper(low)
        high = stepper(high)
        if trace is not None:
            trace.append(
                TraceRow(k, float(low[initial]), float(high[initial]), neutral, math.nan)
            )
        if float(np.max(np.abs(high - low))) < threshold:
            break

    elapsed = (time.perf_counter() - started) * 1000.0
    lo = float(low[initial])
    hi = float(high[initial])
    return SolveResult(
        value=(lo + hi) / 2.0,
        lower=lo,
        upper=hi,
        iterations=k,
        time_ms=elapsed,
        method=Method.II,
        sound=True,
        trace=trace,
    )


# ---------------------------------------------------------------------------
# exact reference solver
# ---------------------------------------------------------------------------

_ORACLE_MAX_STATES = 12
_ORACLE_MAX_SCHEDULERS = 4096


def _chain_rows(model: SparseModel, picks: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    rows = []
    for s in range(model.num_states):
        choice = int(model.row_group_start[s]) + int(picks[s])
        rows.append(model.entries_of(choice))
    return rows


def _chain_values(
    model: SparseModel,
    rows,
    picks: np.ndarray,
    goal: np.ndarray,
    objective: Objective,
) -> np.ndarray:
    """Exact per-state values of the chain picked by ``picks``."""
    n = model.num_states
    values = np.zeros(n)
    if objective is Objective.PROBABILITY:
        reachable = goal.copy()
        changed = True
        while changed:
            changed = False
            for s in range(n):
                if not reachable[s]:
                    targets, _ = rows[s]
                    if np.any(reachable[targets]):
                        reachable[s] = True
                        changed = True
        unknown = reachable & ~goal
        values[goal] = 1.0
    else:
        unknown = ~goal

    idx = np.flatnonzero(unknown)
    if idx.size == 0:
        return values
    pos = -np.ones(n, dtype=np.int64)
    pos[idx] = np.arange(idx.size)
    matrix = np.eye(idx.size)
    rhs = np.zeros(idx.size)
    for row_pos, s in enumerate(idx):
        targets, probs = rows[s]
        if objective is Objective.REWARD:
            choice = int(model.row_group_start[s]) + int(picks[s])
            rhs[row_pos] += float(model.choice_reward[choice])
        for t, p in zip(targets.tolist(), probs.tolist()):
            if unknown[t]:
                matrix[row_pos, pos[t]] -= p
            elif goal[t] and objective is Objective.PROBABILITY:
                rhs[row_pos] += p
    try:
        solved = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError:
        raise NotContracting(
            "the induced chain keeps probability mass away from the goal"
        ) from None
    values[idx] = solved
    return values


def oracle_solve(
    model: SparseModel,
    partition: Partition,
    objective: Objective = Objective.PROBABILITY,
    direction: Direction = Direction.MAXIMIZE,
) -> np.ndarray:
    """Exact per-state values by elimination and exhaustive enumeration.

    Chains are solved by one dense linear solve.  MDPs enumerate every
    positional scheduler (each induces a chain) and take the per-state
    optimum; a positional optimum always exists, so this equals the true
    value function.  Only tiny instances are admitted.
    """
    if model.num_states > _ORACLE_MAX_STATES:
        raise TooLargeForOracle(
            f"{model.num_states} states exceed the oracle limit of {_ORACLE_MAX_STATES}"
        )
    goal = partition.goal
    sizes = model.group_sizes()
    scheduler_count = int(np.prod(sizes.astype(np.float64)))
    if scheduler_count > _ORACLE_MAX_SCHEDULERS:
        raise TooLargeForOracle(
            f"{scheduler_count} positional schedulers exceed the oracle limit "
            f"of {_ORACLE_MAX_SCHEDULERS}"
        )

    best: np.ndarray | None = None
    for combo in itertools.product(*(range(int(k)) for k in sizes)):
        picks = np.asarray(combo, dtype=np.int64)
        rows = _chain_rows(model, picks)
        values = _chain_values(model, rows, picks, goal, objective)
        if best is None:
            best = values
        elif direction is Direction.MAXIMIZE:
            best = np.maximum(best, values)
        else:
            best = np.minimum(best, values)
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# query orchestration
# ---------------------------------------------------------------------------


def _engine(config: SolverConfig):
    if config.method is Method.VI:
        return vi_solve
    if config.method is Method.II:
        return ii_solve
    return svi_solve


def solve(
    model: SparseModel,
    goal,
    config: SolverConfig,
    on_iteration=None,
) -> SolveResult:
    """Answer one reachability/reward query end to end.

    ``goal`` is a label name or a boolean mask.  Goal states are made
    absorbing, the qualitative partition is computed, and — for maximizing
    probability queries — end components are collapsed so the certified
    methods face a unique fixpoint.  Reward queries insist that the goal is
    reached almost surely under every resolution of choices and reject
    models with end components outside the goal.  The reported time covers
    this preprocessing plus the iteration itself.
    """
    config = config.validated()
    started = time.perf_counter()
    goal_mask = model.label_mask(goal) if isinstance(goal, str) else np.asarray(goal, dtype=bool)
    prepared = make_absorbing(model, goal_mask)

    if config.objective is Objective.REWARD:
        if not check_contracting(prepared, goal_mask):
            raise RewardOnMec(
                "reward query on a model with an end component outside the goal"
            )
        partition = reward_partition(prepared, goal_mask)
    else:
        partition = reach_partition(prepared, goal_mask, config.direction)
        decided = partition.goal | partition.s0
        if config.direction is Direction.MAXIMIZE:
            quotient = collapse_end_components(prepared, partition)
            prepared, partition = quotient.model, quotient.partition
        elif not check_contracting(prepared, decided):
            raise NotContracting(
                "minimizing query on a model that can avoid goal and sure-zero states forever"
            )

    if config.method is Method.SVI:
        result = svi_solve(prepared, partition, config, on_iteration)
    else:
        result = _engine(config)(prepared, partition, config)
    result.time_ms = (time.perf_counter() - started) * 1000.0
    return result
