"""Reading and writing models in explicit-state text formats.

Transition files (``.tra``) start with a header line of counts: two numbers
(``<states> <transitions>``) announce a Markov chain, three numbers
(``<states> <choices> <transitions>``) an MDP.  Chain bodies hold
``<from> <to> <prob>`` lines, MDP bodies ``<from> <choice> <to> <prob>``
optionally followed by an action name.  Label files (``.lab``) declare
``<id>="<name>"`` pairs on their first line and then list
``<state>: <id> ...`` assignments.  Reward files attach rewards per state
(``.srew``: ``<state> <reward>``) or per choice (``.trew``:
``<from> <choice> <reward>``).  Everywhere, ``#`` starts a comment and blank
lines are skipped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DanglingTarget,
    HeaderMismatch,
    MissingInit,
    MultipleInitStates,
    NonContiguousChoices,
    ParseError,
    UnknownLabelId,
)
from .model import SparseModel, validate_model

__all__ = [
    "ModelBundle",
    "parse_mc_tra",
    "parse_mdp_tra",
    "parse_labels",
    "parse_rewards",
    "load_model",
    "write_model",
]


@dataclass(frozen=True)
class ModelBundle:
    """A validated model together with where it came from."""

    model: SparseModel
    kind: str  # "mc" or "mdp"
    tra_path: Path | None = None
    lab_path: Path | None = None
    srew_path: Path | None = None
    trew_path: Path | None = None


def _content_lines(text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return lines


def _ints(tokens: list[str], line: str) -> list[int]:
    try:
        return [int(tok) for tok in tokens]
    except ValueError:
        raise ParseError(f"expected integers in line {line!r}") from None


def parse_mc_tra(text: str) -> list[dict[int, float]]:
    """Parse Markov chain transitions into one ``{target: prob}`` row per state."""
    lines = _content_lines(text)
    if not lines:
        raise ParseError("transition file is empty")
    header = lines[0].split()
    if len(header) != 2:
        raise HeaderMismatch(
            f"chain header needs 2 counts, got {len(header)}: {lines[0]!r}"
        )
    num_states, num_transitions = _ints(header, lines[0])
    rows: list[dict[int, float]] = [dict() for _ in range(num_states)]
    seen = 0
    for line in lines[1:]:
        tokens = line.split()
        if len(tokens) != 3:
            raise ParseError(f"chain transition line needs 3 fields: {line!r}")
        src, dst = _ints(tokens[:2], line)
        try:
            prob = float(tokens[2])
        except ValueError:
            raise ParseError(f"bad probability in line {line!r}") from None
        if not (0 <= src < num_states):
            raise DanglingTarget(f"source state {src} out of range in {line!r}")
        if not (0 <= dst < num_states):
            raise DanglingTarget(f"target state {dst} out of range in {line!r}")
        rows[src][dst] = rows[src].get(dst, 0.0) + prob
        seen += 1
    if seen != num_transitions:
        raise HeaderMismatch(
            f"header declares {num_transitions} transitions, file has {seen}"
        )
    return rows


def parse_mdp_tra(
    text: str,
) -> tuple[list[list[dict[int, float]]], list[str | None]]:
    """Parse MDP transitions into per-state choice lists plus action names.

    Returns ``(groups, choice_labels)`` where ``groups[s][c]`` maps targets to
    probabilities and ``choice_labels`` is flat in row-group order.
    """
    lines = _content_lines(text)
    if not lines:
        raise ParseError("transition file is empty")
    header = lines[0].split()
    if len(header) != 3:
        raise HeaderMismatch(
            f"MDP header needs 3 counts, got {len(header)}: {lines[0]!r}"
        )
    num_states, num_choices, num_transitions = _ints(header, lines[0])
    groups: list[dict[int, dict[int, float]]] = [dict() for _ in range(num_states)]
    actions: list[dict[int, str]] = [dict() for _ in range(num_states)]
    seen = 0
    for line in lines[1:]:
        tokens = line.split()
        if len(tokens) not in (4, 5):
            raise ParseError(f"MDP transition line needs 4 or 5 fields: {line!r}")
        src, choice, dst = _ints(tokens[:3], line)
        try:
            prob = float(tokens[3])
        except ValueError:
            raise ParseError(f"bad probability in line {line!r}") from None
        if not (0 <= src < num_states):
            raise DanglingTarget(f"source state {src} out of range in {line!r}")
        if not (0 <= dst < num_states):
            raise DanglingTarget(f"target state {dst} out of range in {line!r}")
        if choice < 0:
            raise NonContiguousChoices(f"negative choice index in {line!r}")
        row = groups[src].setdefault(choice, {})
        row[dst] = row.get(dst, 0.0) + prob
        if len(tokens) == 5:
            previous = actions[src].get(choice)
            if previous is not None and previous != tokens[4]:
                raise ParseError(
                    f"choice {choice} of state {src} carries two action names"
                )
            actions[src][choice] = tokens[4]
        seen += 1
    if seen != num_transitions:
        raise HeaderMismatch(
            f"header declares {num_transitions} transitions, file has {seen}"
        )

    result: list[list[dict[int, float]]] = []
    choice_labels: list[str | None] = []
    total_choices = 0
    for s, per_state in enumerate(groups):
        if per_state and sorted(per_state) != list(range(len(per_state))):
            raise NonContiguousChoices(
                f"state {s} uses choice indices {sorted(per_state)}"
            )
        ordered = [per_state[c] for c in range(len(per_state))]
        result.append(ordered)
        choice_labels.extend(actions[s].get(c) for c in range(len(per_state)))
        total_choices += len(ordered)
    if total_choices != num_choices:
        raise HeaderMismatch(
            f"header declares {num_choices} choices, file has {total_choices}"
        )
    return result, choice_labels


_LABEL_DECL = re.compile(r'(\d+)="([^"]*)"')


def parse_labels(text: str, num_states: int) -> dict[str, np.ndarray]:
    """Parse a label file into boolean masks keyed by label name."""
    lines = _content_lines(text)
    if not lines:
        raise ParseError("label file is empty")
    declared: dict[int, str] = {}
    for match in _LABEL_DECL.finditer(lines[0]):
        declared[int(match.group(1))] = match.group(2)
    if not declared:
        raise ParseError(f"no label declarations in first line: {lines[0]!r}")

    masks = {name: np.zeros(num_states, dtype=bool) for name in declared.values()}
    for line in lines[1:]:
        if ":" not in line:
            raise ParseError(f"label assignment line needs a colon: {line!r}")
        state_part, ids_part = line.split(":", 1)
        state = _ints([state_part.strip()], line)[0]
        if not (0 <= state < num_states):
            raise DanglingTarget(f"state {state} out of range in label line {line!r}")
        for tok in ids_part.split():
            label_id = _ints([tok], line)[0]
            if label_id not in declared:
                raise UnknownLabelId(f"label id {label_id} not declared ({line!r})")
            masks[declared[label_id]][state] = True
    return masks


def parse_rewards(text: str, *, kind: str) -> dict:
    """Parse a reward file.

    ``kind="state"`` accepts ``<state> <reward>`` lines and returns
    ``{state: reward}``; ``kind="choice"`` accepts ``<from> <choice> <reward>``
    lines and returns ``{(state, choice): reward}``.  Repeated assignments to
    the same key accumulate.
    """
    if kind not in ("state", "choice"):
        raise ValueError(f"kind must be 'state' or 'choice', got {kind!r}")
    expected = 2 if kind == "state" else 3
    out: dict = {}
    for line in _content_lines(text):
        tokens = line.split()
        if len(tokens) != expected:
            raise ParseError(
                f"{kind} reward line needs {expected} fields: {line!r}"
            )
        try:
            value = float(tokens[-1])
        except ValueError:
            raise ParseError(f"bad reward in line {line!r}") from None
        key_ints = _ints(tokens[:-1], line)
        key = key_ints[0] if kind == "state" else (key_ints[0], key_ints[1])
        out[key] = out.get(key, 0.0) + value
    return out


def load_model(
    tra_path, lab_path, srew_path=None, trew_path=None
) -> ModelBundle:
    """Load and validate a model from explicit-state files.

    The transition header decides the kind: two counts mean a Markov chain,
    three an MDP.  The ``init`` label must mark exactly one state, which
    becomes the initial state.  State rewards and choice rewards are summed
    into a single per-choice reward.
    """
    tra_path = Path(tra_path)
    lab_path = Path(lab_path)
    text = tra_path.read_text()
    lines = _content_lines(text)
    if not lines:
        raise ParseError(f"{tra_path}: transition file is empty")
    arity = len(lines[0].split())

    choice_labels: list[str | None] | None = None
    if arity == 2:
        kind = "mc"
        rows = parse_mc_tra(text)
        groups = [[row] for row in rows]
    elif arity == 3:
        kind = "mdp"
        groups, choice_labels = parse_mdp_tra(text)
    else:
        raise HeaderMismatch(
            f"{tra_path}: header has {arity} fields, expected 2 (chain) or 3 (MDP)"
        )
    num_states = len(groups)

    labels = parse_labels(lab_path.read_text(), num_states)
    if "init" not in labels or not labels["init"].any():
        raise MissingInit(f"{lab_path}: no state carries the 'init' label")
    init_states = np.flatnonzero(labels["init"])
    if len(init_states) != 1:
        raise MultipleInitStates(
            f"{lab_path}: 'init' marks states {init_states.tolist()}"
        )

    state_rewards: dict = {}
    choice_rewards: dict = {}
    if srew_path is not None:
        state_rewards = parse_rewards(Path(srew_path).read_text(), kind="state")
    if trew_path is not None:
        choice_rewards = parse_rewards(Path(trew_path).read_text(), kind="choice")
    for state in state_rewards:
        if not (0 <= state < num_states):
            raise DanglingTarget(f"state reward for unknown state {state}")
    for state, choice in choice_rewards:
        if not (0 <= state < num_states):
            raise DanglingTarget(f"choice reward for unknown state {state}")
        if not (0 <= choice < len(groups[state])):
            raise DanglingTarget(
                f"choice reward for state {state} choice {choice}, "
                f"which has {len(groups[state])} choices"
            )

    rewards = [
        [
            state_rewards.get(s, 0.0) + choice_rewards.get((s, c), 0.0)
            for c in range(len(group))
        ]
        for s, group in enumerate(groups)
    ]

    model = validate_model(
        groups,
        initial_state=int(init_states[0]),
        rewards=rewards,
        labels=labels,
        choice_labels=choice_labels if kind == "mdp" else None,
    )
    return ModelBundle(
        model=model,
        kind=kind,
        tra_path=tra_path,
        lab_path=lab_path,
        srew_path=Path(srew_path) if srew_path else None,
        trew_path=Path(trew_path) if trew_path else None,
    )


def write_model(
    model: SparseModel,
    tra_path,
    lab_path,
    trew_path=None,
    *,
    kind: str | None = None,
) -> None:
    """Write a model back out in the explicit-state grammar.

    ``kind`` forces the transition format; by default chains (one choice per
    state) are written in chain format, everything else as an MDP.  All
    choice rewards (state rewards were folded in at load time) go to
    ``trew_path`` when given.  Probabilities are printed with ``repr`` so a
    write/load round trip reproduces the exact float64 values.
    """
    if kind is None:
        kind = "mc" if model.is_mc else "mdp"
    if kind not in ("mc", "mdp"):
        raise ValueError(f"kind must be 'mc' or 'mdp', got {kind!r}")
    if kind == "mc" and not model.is_mc:
        raise ValueError("cannot write a multi-choice model in chain format")

    lines: list[str] = []
    if kind == "mc":
        lines.append(f"{model.num_states} {model.num_transitions}")
        for s in range(model.num_states):
            c = int(model.row_group_start[s])
            targets, probs = model.entries_of(c)
            for t, p in zip(targets.tolist(), probs.tolist()):
                lines.append(f"{s} {t} {p!r}")
    else:
        lines.append(
            f"{model.num_states} {model.num_choices} {model.num_transitions}"
        )
        for s in range(model.num_states):
            for local, c in enumerate(model.choices_of(s)):
                targets, probs = model.entries_of(c)
                action = None
                if model.choice_labels is not None:
                    action = model.choice_labels[c]
                suffix = f" {action}" if action else ""
                for t, p in zip(targets.tolist(), probs.tolist()):
                    lines.append(f"{s} {local} {t} {p!r}{suffix}")
    Path(tra_path).write_text("\n".join(lines) + "\n")

    names = sorted(model.labels, key=lambda name: (name != "init", name))
    decl = " ".join(f'{i}="{name}"' for i, name in enumerate(names))
    label_lines = [decl]
    for s in range(model.num_states):
        ids = [str(i) for i, name in enumerate(names) if model.labels[name][s]]
        if ids:
            label_lines.append(f"{s}: {' '.join(ids)}")
    Path(lab_path).write_text("\n".join(label_lines) + "\n")

    if trew_path is not None:
        reward_lines = []
        for s in range(model.num_states):
            for local, c in enumerate(model.choices_of(s)):
                r = float(model.choice_reward[c])
                if r != 0.0:
                    reward_lines.append(f"{s} {local} {r!r}")
        Path(trew_path).write_text("\n".join(reward_lines) + "\n")
