"""Solver variants: Gauss-Seidel sweeps and the SCC-by-SCC topological solve.

The Gauss-Seidel variants update states in place, one at a time, so each
state immediately sees fresh values of the states processed before it in the
sweep.  The default sweep order lists strongly connected components
successors-first, which propagates information from the goal backwards in as
few sweeps as possible.

The topological solver processes one SCC at a time (again successors-first).
Trivial components — a single state that cannot revisit itself — are settled
by a single Bellman evaluation over the already-certified bounds of their
successors.  Nontrivial components run a coupled iteration with *two* value
accumulators sharing one stay-probability and one choice resolution: the
accumulators differ only in what leaving the component is worth (the lower
versus the upper certified bound of the states outside), so their certified
intervals bracket the component's true values.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .analysis import scc_order
from .errors import IterationLimit
from .model import Direction, Partition, SparseModel, validate_model
from .solvers import (
    IterationState,
    Method,
    Objective,
    SolveResult,
    SolverConfig,
    TraceRow,
    _choice_expectations,
    _Kernels,
    _partial_result,
    _shortcut,
    decision_value,
    find_action,
    neutral_decision,
    update_global_bounds,
)

__all__ = [
    "StateOrdering",
    "gs_sweep",
    "gauss_seidel_sweep_values",
    "gauss_seidel_svi_solve",
    "topological_solve",
]


@dataclass(frozen=True)
class StateOrdering:
    """A sweep order over the states (a permutation of ``0..n-1``)."""

    order: np.ndarray

    @classmethod
    def identity(cls, num_states: int) -> "StateOrdering":
        return cls(order=np.arange(num_states, dtype=np.int64))

    @classmethod
    def for_model(cls, model: SparseModel) -> "StateOrdering":
        """Successors-first order: SCCs in reverse topological order,
        states inside one component by ascending index."""
        components = scc_order(model).components
        return cls(order=np.concatenate(components) if components else np.empty(0, np.int64))


def _sweep_states(partition: Partition, ordering: StateOrdering) -> np.ndarray:
    order = ordering.order
    return order[partition.maybe[order]]


def gauss_seidel_sweep_values(
    model: SparseModel,
    partition: Partition,
    values: np.ndarray,
    direction: Direction = Direction.MAXIMIZE,
    objective: Objective = Objective.PROBABILITY,
    ordering: StateOrdering | None = None,
) -> np.ndarray:
    """One in-place optimal Bellman sweep (the Gauss-Seidel VI/II step)."""
    if ordering is None:
        ordering = StateOrdering.for_model(model)
    x = np.array(values, dtype=np.float64)
    maximize = direction is Direction.MAXIMIZE
    for s in _sweep_states(partition, ordering):
        best = None
        for choice in model.choices_of(int(s)):
            targets, probs = model.entries_of(choice)
            val = float(np.add.reduce(probs * x[targets]))
            if objective is Objective.REWARD:
                val += float(model.choice_reward[choice])
            if best is None or (val > best if maximize else val < best):
                best = val
        x[s] = best
    return x


def gs_sweep(
    model: SparseModel,
    partition: Partition,
    x: np.ndarray,
    y: np.ndarray,
    bound: float,
    decision: float,
    direction: Direction = Direction.MAXIMIZE,
    objective: Objective = Objective.PROBABILITY,
    ordering: StateOrdering | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """One in-place coupled sweep; returns ``(x', y', scheduler, decision')``.

    States are visited in sweep order; each sees the values already refreshed
    this sweep.  ``scheduler`` records the local choice taken per state (the
    state's single choice for chains).
    """
    if ordering is None:
        ordering = StateOrdering.for_model(model)
    x = np.array(x, dtype=np.float64)
    y = np.array(y, dtype=np.float64)
    scheduler = np.zeros(model.num_states, dtype=np.int64)
    for s in _sweep_states(partition, ordering):
        s = int(s)
        if model.is_mc:
            local = 0
        else:
            local = find_action(model, x, y, s, bound, direction, objective)
            decision_here = decision_value(model, x, y, s, local, direction, objective)
            if direction is Direction.MAXIMIZE:
                decision = max(decision, decision_here)
            else:
                decision = min(decision, decision_here)
        choice = int(model.row_group_start[s]) + local
        ex, ey = _choice_expectations(model, x, y, choice, objective)
        x[s] = ex
        y[s] = ey
        scheduler[s] = local
    return x, y, scheduler, decision


def gauss_seidel_svi_solve(
    model: SparseModel,
    partition: Partition,
    config: SolverConfig,
    on_iteration=None,
) -> SolveResult:
    """Certified coupled iteration with in-place sweeps instead of
    synchronous steps.  Bound updates and the stopping test are identical to
    the synchronous engine; only the step operator differs."""
    config = replace(config, method=Method.SVI, gauss_seidel=True).validated()
    short = _shortcut(model, partition, config)
    if short is not None:
        return short

    started = time.perf_counter()
    ordering = StateOrdering.for_model(model)
    maximize = config.direction is Direction.MAXIMIZE
    initial = model.initial_state
    lower = config.lower if config.lower is not None else -math.inf
    upper = config.upper if config.upper is not None else math.inf
    decision = neutral_decision(config.direction)

    x = np.zeros(model.num_states)
    if config.objective is Objective.PROBABILITY:
        x[partition.goal] = 1.0
    y = np.zeros(model.num_states)
    y[partition.maybe] = 1.0

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
        x, y, scheduler, decision = gs_sweep(
            model, partition, x, y, bound, decision,
            config.direction, config.objective, ordering,
        )
        lower, upper = update_global_bounds(
            x, y, partition, lower, upper, decision, config.direction
        )
        y0 = float(y[initial])
        if trace is not None:
            trace.append(TraceRow(k, lower, upper, decision, y0))
        if on_iteration is not None:
            state = IterationState(
                k, x.copy(), y.copy(), lower, upper, decision,
                None if model.is_mc else scheduler.copy(),
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


# ---------------------------------------------------------------------------
# topological (SCC-by-SCC) solving
# ---------------------------------------------------------------------------


def _trivial_component_bounds(
    model: SparseModel,
    state: int,
    low: np.ndarray,
    high: np.ndarray,
    direction: Direction,
    objective: Objective,
) -> tuple[float, float]:
    """Settle a no-self-loop singleton by one evaluation over known bounds."""
    maximize = direction is Direction.MAXIMIZE
    best_low = best_high = None
    for choice in model.choices_of(state):
        targets, probs = model.entries_of(choice)
        reward = float(model.choice_reward[choice]) if objective is Objective.REWARD else 0.0
        val_low = reward + float(np.add.reduce(probs * low[targets]))
        val_high = reward + float(np.add.reduce(probs * high[targets]))
        if best_low is None or (val_low > best_low if maximize else val_low < best_low):
            best_low = val_low
        if best_high is None or (val_high > best_high if maximize else val_high < best_high):
            best_high = val_high
    return best_low, best_high


class _ComponentSystem:
    """One nontrivial component turned into a self-contained reward query.

    Inner states are renumbered ``0..m-1``; everything outside becomes an
    absorbing sink at index ``m``.  Exiting through a transition earns the
    certified bound of the landed-on state, folded into per-choice exit
    rewards (a low and a high version — the only difference between the two
    value accumulators).
    """

    def __init__(
        self,
        model: SparseModel,
        members: np.ndarray,
        low: np.ndarray,
        high: np.ndarray,
        objective: Objective,
    ):
        inner_of = {int(s): i for i, s in enumerate(members)}
        m = len(members)
        choices: list[list[dict[int, float]]] = []
        reward_low: list[float] = []
        reward_high: list[float] = []
        for s in members:
            group = []
            for c in model.choices_of(int(s)):
                targets, probs = model.entries_of(c)
                row: dict[int, float] = {}
                base = float(model.choice_reward[c]) if objective is Objective.REWARD else 0.0
                r_low = r_high = base
                for t, p in zip(targets.tolist(), probs.tolist()):
                    inner = inner_of.get(t)
                    if inner is None:
                        row[m] = row.get(m, 0.0) + p
                        r_low += p * float(low[t])
                        r_high += p * float(high[t])
                    else:
                        row[inner] = row.get(inner, 0.0) + p
                group.append(row)
                reward_low.append(r_low)
                reward_high.append(r_high)
            choices.append(group)
        choices.append([{m: 1.0}])  # the sink
        reward_low.append(0.0)
        reward_high.append(0.0)

        self.model = validate_model(choices)
        goal = np.zeros(m + 1, dtype=bool)
        goal[m] = True
        self.partition = Partition(
            s0=np.zeros(m + 1, dtype=bool), goal=goal, maybe=~goal
        )
        self.reward_low = np.asarray(reward_low)
        self.reward_high = np.asarray(reward_high)
        self.members = members
        self.inner = np.arange(m, dtype=np.int64)


def _solve_component(
    system: _ComponentSystem,
    config: SolverConfig,
    iteration_budget: int,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Run the coupled two-accumulator iteration on one component.

    Returns certified per-member ``(low, high)`` bounds and the number of
    iterations spent.  The driving accumulator — the one whose optimum the
    query direction actually cares about — steers choice selection and the
    decision value; the other accumulator follows the same choices.
    """
    model = system.model
    inner = system.inner
    maximize = config.direction is Direction.MAXIMIZE
    kern = _Kernels(model, system.partition, Objective.REWARD, config.direction)
    ordering = StateOrdering.for_model(model) if config.gauss_seidel else None

    x_low = np.zeros(model.num_states)
    x_high = np.zeros(model.num_states)
    y = kern.y_init.copy()
    lower = -math.inf
    upper = math.inf
    decision = neutral_decision(config.direction)
    threshold = 2.0 * config.epsilon
    k = 0

    while True:
        k += 1
        if k > iteration_budget:
            raise IterationLimit(
                f"a component did not converge within the remaining "
                f"{iteration_budget} iterations"
            )
        bound = upper if maximize else lower
        if config.gauss_seidel:
            x_low, x_high, y, decision = _component_sweep(
                system, x_low, x_high, y, bound, decision, config, ordering
            )
        else:
            base_low = np.add.reduceat(x_low[kern.targets] * kern.probs, kern.choice_cuts)
            base_high = np.add.reduceat(x_high[kern.targets] * kern.probs, kern.choice_cuts)
            cx_low = base_low + system.reward_low
            cx_high = base_high + system.reward_high
            cy = kern.choice_y(y)
            driving = cx_high if maximize else cx_low
            if model.is_mc:
                chosen = kern.single_choice
            else:
                if math.isinf(bound):
                    chosen = kern.argopt_unbounded(driving, cy)
                else:
                    chosen = kern.argopt(driving + bound * cy)
                decision = kern._fold_decision(driving, cy, chosen, decision)
            picked = chosen[inner]
            new_x_low = np.zeros(model.num_states)
            new_x_high = np.zeros(model.num_states)
            new_y = np.zeros(model.num_states)
            new_x_low[inner] = cx_low[picked]
            new_x_high[inner] = cx_high[picked]
            new_y[inner] = cy[picked]
            x_low, x_high, y = new_x_low, new_x_high, new_y

        ym = y[inner]
        if np.all(ym < 1.0):
            denominators = 1.0 - ym
            ratio_low = x_low[inner] / denominators
            ratio_high = x_high[inner] / denominators
            if maximize:
                lower = max(lower, float(ratio_low.min()))
                upper = min(upper, max(decision, float(ratio_high.max())))
            else:
                lower = max(lower, min(decision, float(ratio_low.min())))
                upper = min(upper, float(ratio_high.max()))

        if float(ym.max()) == 0.0:
            return x_low[inner].copy(), x_high[inner].copy(), k
        if math.isfinite(lower) and math.isfinite(upper):
            member_low = x_low[inner] + ym * lower
            member_high = x_high[inner] + ym * upper
            if float(np.max(member_high - member_low)) < threshold:
                return member_low, member_high, k


def _component_sweep(
    system: _ComponentSystem,
    x_low: np.ndarray,
    x_high: np.ndarray,
    y: np.ndarray,
    bound: float,
    decision: float,
    config: SolverConfig,
    ordering: StateOrdering,
):
    """Gauss-Seidel flavor of the component step: in-place, state by state."""
    model = system.model
    maximize = config.direction is Direction.MAXIMIZE
    x_low = x_low.copy()
    x_high = x_high.copy()
    y = y.copy()
    for s in _sweep_states(system.partition, ordering):
        s = int(s)
        best_key = None
        best = None
        for local, choice in enumerate(model.choices_of(s)):
            targets, probs = model.entries_of(choice)
            ex_low = float(system.reward_low[choice]) + float(
                np.add.reduce(probs * x_low[targets])
            )
            ex_high = float(system.reward_high[choice]) + float(
                np.add.reduce(probs * x_high[targets])
            )
            ey = float(np.add.reduce(probs * y[targets]))
            driving = ex_high if maximize else ex_low
            if model.is_mc:
                best = (ex_low, ex_high, ey)
                break
            if math.isinf(bound):
                key = (ey, driving if maximize else -driving)
                better = best_key is None or key > best_key
            else:
                score = driving + bound * ey
                better = (
                    best_key is None
                    or (score > best_key if maximize else score < best_key)
                )
                key = score
            if better:
                best_key = key
                best = (ex_low, ex_high, ey)
                chosen_local = local
        if not model.is_mc:
            # decision value against the not-chosen alternatives, driving side
            chosen_choice = int(model.row_group_start[s]) + chosen_local
            targets, probs = model.entries_of(chosen_choice)
            chosen_x = (
                float(system.reward_high[chosen_choice])
                + float(np.add.reduce(probs * x_high[targets]))
                if maximize
                else float(system.reward_low[chosen_choice])
                + float(np.add.reduce(probs * x_low[targets]))
            )
            chosen_y = float(np.add.reduce(probs * y[targets]))
            for choice in model.choices_of(s):
                if choice == chosen_choice:
                    continue
                targets, probs = model.entries_of(choice)
                alt_x = (
                    float(system.reward_high[choice])
                    + float(np.add.reduce(probs * x_high[targets]))
                    if maximize
                    else float(system.reward_low[choice])
                    + float(np.add.reduce(probs * x_low[targets]))
                )
                alt_y = float(np.add.reduce(probs * y[targets]))
                y_delta = chosen_y - alt_y
                if y_delta > 0.0:
                    ratio = (alt_x - chosen_x) / y_delta
                    decision = (
                        max(decision, ratio) if maximize else min(decision, ratio)
                    )
        x_low[s], x_high[s], y[s] = best
    return x_low, x_high, y, decision


def topological_solve(
    model: SparseModel,
    partition: Partition,
    config: SolverConfig,
    on_iteration=None,
) -> SolveResult:
    """Certified solve, one strongly connected component at a time.

    Components are processed successors-first, so when a component's turn
    comes every state reachable from it already carries certified bounds.
    A singleton component that cannot revisit itself costs exactly one
    Bellman evaluation; other components run the coupled two-accumulator
    iteration until their widest certified per-state gap is below
    ``2 * epsilon``.  Iteration counts add up across components.  Optional
    initial bounds tighten the final interval but are not fed into the
    per-component runs.
    """
    config = replace(config, method=Method.SVI, topological=True).validated()
    short = _shortcut(model, partition, config)
    if short is not None:
        return short

    started = time.perf_counter()
    n = model.num_states
    low = np.zeros(n)
    high = np.zeros(n)
    if config.objective is Objective.PROBABILITY:
        low[partition.goal] = 1.0
        high[partition.goal] = 1.0
    # s0 states keep exactly 0 in both vectors.

    trace: list[TraceRow] | None = [] if config.record_trace else None
    total_iterations = 0
    for members in scc_order(model).components:
        inner = members[partition.maybe[members]]
        if inner.size == 0:
            continue
        if inner.size == 1 and len(members) == 1:
            s = int(inner[0])
            self_loop = any(
                bool(np.any(model.entries_of(c)[0] == s)) for c in model.choices_of(s)
            )
            if not self_loop:
                low[s], high[s] = _trivial_component_bounds(
                    model, s, low, high, config.direction, config.objective
                )
                total_iterations += 1
                if trace is not None:
                    trace.append(
                        TraceRow(
                            total_iterations, float(low[s]), float(high[s]),
                            neutral_decision(config.direction), math.nan,
                        )
                    )
                continue
        system = _ComponentSystem(model, inner, low, high, config.objective)
        budget = config.max_iterations - total_iterations
        member_low, member_high, spent = _solve_component(system, config, budget)
        low[inner] = member_low
        high[inner] = member_high
        total_iterations += spent
        if trace is not None:
            trace.append(
                TraceRow(
                    total_iterations,
                    float(member_low.min()),
                    float(member_high.max()),
                    neutral_decision(config.direction),
                    math.nan,
                )
            )

    initial = model.initial_state
    lo = float(low[initial])
    hi = float(high[initial])
    if config.lower is not None:
        lo = max(lo, config.lower)
    if config.upper is not None:
        hi = min(hi, config.upper)
    elapsed = (time.perf_counter() - started) * 1000.0
    return SolveResult(
        value=(lo + hi) / 2.0,
        lower=lo,
        upper=hi,
        iterations=total_iterations,
        time_ms=elapsed,
        method=Method.SVI,
        sound=True,
        trace=trace,
    )
