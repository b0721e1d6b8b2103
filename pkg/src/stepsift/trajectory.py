"""Trajectory data model and the line-delimited JSON dataset formats.

A trajectory is one demonstration: a natural-language goal plus an ordered
sequence of steps, each carrying the page state (a linearized accessibility
tree), the interaction history so far, the expert action, an optional
reasoning trace, and the model answer (reasoning followed by the serialized
action).

On-disk formats (one JSON object per line):

Trajectory record::

    {"id": str, "source": str?, "goal": str,
     "steps": [{"index": int, "state": str, "history": str,
                "action": {"kind": "node"|"non_node", "name": str,
                           "bid": str?, "args": [str]},
                "reasoning": str, "answer": str}]}

Curated record::

    {"trajectory_id": str, "index": int, "goal": str, "history": str,
     "state_pruned": str, "action": {...}, "reasoning": str,
     "reasoning_origin": "original"|"synthesized"}

Loading is strict: any record violating an invariant is rejected with a
``DatasetError`` carrying the line number and offending field. Nothing is
silently repaired.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

KIND_NODE = "node"
KIND_NON_NODE = "non_node"

# BrowserGym-style action space. Node-grounded actions reference a page
# element by its bid; non-node actions do not.
NODE_ACTIONS = frozenset({
    "fill", "select_option", "click", "dblclick", "hover",
    "press", "focus", "clear", "drag_and_drop", "upload_file",
})
NON_NODE_ACTIONS = frozenset({
    "noop", "send_msg_to_user", "scroll", "go_back", "go_forward", "goto",
})

ORIGIN_ORIGINAL = "original"
ORIGIN_SYNTHESIZED = "synthesized"

_NUMERIC_ARG_RE = re.compile(r"-?\d+(\.\d+)?")


class DatasetError(ValueError):
    """A record failed validation. Carries line number and field context."""

    def __init__(self, message: str, *, line_no: int | None = None,
                 field: str | None = None):
        self.line_no = line_no
        self.field = field
        prefix = ""
        if line_no is not None:
            prefix += f"line {line_no}: "
        if field:
            prefix += f"field {field!r}: "
        super().__init__(prefix + message)


class UnknownActionError(DatasetError):
    """Action name outside the supported vocabulary."""

    def __init__(self, name: str, **kw):
        self.action_name = name
        super().__init__(f"unknown action name {name!r}", **kw)


@dataclass(frozen=True, slots=True)
class Action:
    """One expert action, either grounded to a page node or not."""

    kind: str
    name: str
    bid: str | None = None
    args: tuple[str, ...] = ()

    def serialize(self) -> str:
        """Render the canonical call form, e.g. ``click('a12')``.

        The bid (when present) comes first and is always quoted; other
        arguments are quoted unless they are plain numbers, so
        ``scroll(0, 200)`` and ``fill('a1', 'hello')`` both round-trip.
        """
        parts = []
        if self.bid is not None:
            parts.append(_quote(self.bid))
        parts.extend(_render_arg(a) for a in self.args)
        return f"{self.name}({', '.join(parts)})"


def _quote(value: str) -> str:
    return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _render_arg(value: str) -> str:
    if _NUMERIC_ARG_RE.fullmatch(value):
        return value
    return _quote(value)


@dataclass(frozen=True, slots=True)
class Step:
    """One (state, history, action, reasoning) tuple within a trajectory."""

    index: int
    state_raw: str
    history: str
    action: Action
    reasoning: str
    answer: str

    def expected_answer(self) -> str:
        serialized = self.action.serialize()
        if self.reasoning:
            return self.reasoning + "\n" + serialized
        return serialized


@dataclass(frozen=True, slots=True)
class Trajectory:
    id: str
    goal: str
    steps: tuple[Step, ...]
    source: str | None = None

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True, slots=True)
class CuratedStep:
    """A selected, pruned step ready for training-set emission."""

    trajectory_id: str
    index: int
    goal: str
    history: str
    state_pruned: str
    action: Action
    reasoning: str
    reasoning_origin: str = ORIGIN_ORIGINAL

    def answer(self) -> str:
        serialized = self.action.serialize()
        if self.reasoning:
            return self.reasoning + "\n" + serialized
        return serialized


def make_answer(reasoning: str, action: Action) -> str:
    """The model answer: reasoning, a newline, then the serialized action."""
    serialized = action.serialize()
    if reasoning:
        return reasoning + "\n" + serialized
    return serialized


# ---------------------------------------------------------------------------
# record parsing


def parse_action(obj: object, *, field: str = "action",
                 line_no: int | None = None) -> Action:
    if not isinstance(obj, dict):
        raise DatasetError("action must be an object", field=field, line_no=line_no)
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        raise DatasetError("missing action name", field=f"{field}.name", line_no=line_no)
    if name not in NODE_ACTIONS and name not in NON_NODE_ACTIONS:
        raise UnknownActionError(name, field=f"{field}.name", line_no=line_no)
    kind = obj.get("kind")
    if kind not in (KIND_NODE, KIND_NON_NODE):
        raise DatasetError(f"kind must be {KIND_NODE!r} or {KIND_NON_NODE!r}",
                           field=f"{field}.kind", line_no=line_no)
    expected_kind = KIND_NODE if name in NODE_ACTIONS else KIND_NON_NODE
    if kind != expected_kind:
        raise DatasetError(f"action {name!r} must have kind {expected_kind!r}",
                           field=f"{field}.kind", line_no=line_no)
    bid = obj.get("bid")
    if kind == KIND_NODE:
        if not isinstance(bid, str) or not bid:
            raise DatasetError("node-grounded action requires a bid",
                               field=f"{field}.bid", line_no=line_no)
    elif bid is not None:
        raise DatasetError("non-node action must not carry a bid",
                           field=f"{field}.bid", line_no=line_no)
    args = obj.get("args", [])
    if not isinstance(args, list) or any(not isinstance(a, str) for a in args):
        raise DatasetError("args must be a list of strings",
                           field=f"{field}.args", line_no=line_no)
    return Action(kind=kind, name=name, bid=bid, args=tuple(args))


def action_to_obj(action: Action) -> dict:
    obj: dict = {"kind": action.kind, "name": action.name}
    if action.bid is not None:
        obj["bid"] = action.bid
    obj["args"] = list(action.args)
    return obj


def _parse_step(obj: object, position: int, *, line_no: int | None) -> Step:
    field = f"steps[{position}]"
    if not isinstance(obj, dict):
        raise DatasetError("step must be an object", field=field, line_no=line_no)
    index = obj.get("index")
    if not isinstance(index, int) or index != position:
        raise DatasetError(f"step index must equal its position {position}",
                           field=f"{field}.index", line_no=line_no)
    state = obj.get("state")
    if not isinstance(state, str) or not state:
        raise DatasetError("state must be a non-empty string",
                           field=f"{field}.state", line_no=line_no)
    history = obj.get("history", "")
    if not isinstance(history, str):
        raise DatasetError("history must be a string",
                           field=f"{field}.history", line_no=line_no)
    action = parse_action(obj.get("action"), field=f"{field}.action", line_no=line_no)
    reasoning = obj.get("reasoning", "")
    if not isinstance(reasoning, str):
        raise DatasetError("reasoning must be a string",
                           field=f"{field}.reasoning", line_no=line_no)
    answer = obj.get("answer")
    if not isinstance(answer, str):
        raise DatasetError("answer must be a string",
                           field=f"{field}.answer", line_no=line_no)
    step = Step(index=index, state_raw=state, history=history,
                action=action, reasoning=reasoning, answer=answer)
    if answer != step.expected_answer():
        raise DatasetError(
            "answer must equal reasoning + '\\n' + serialized action"
            " (or the serialized action alone when reasoning is empty)",
            field=f"{field}.answer", line_no=line_no)
    return step


def parse_trajectory(obj: object, *, line_no: int | None = None) -> Trajectory:
    if not isinstance(obj, dict):
        raise DatasetError("trajectory record must be an object", line_no=line_no)
    traj_id = obj.get("id")
    if not isinstance(traj_id, str) or not traj_id:
        raise DatasetError("missing trajectory id", field="id", line_no=line_no)
    goal = obj.get("goal")
    if not isinstance(goal, str) or not goal.strip():
        raise DatasetError("goal must be non-empty after trimming",
                           field="goal", line_no=line_no)
    source = obj.get("source")
    if source is not None and not isinstance(source, str):
        raise DatasetError("source must be a string", field="source", line_no=line_no)
    raw_steps = obj.get("steps")
    if not isinstance(raw_steps, list) or not raw_steps:
        raise DatasetError("steps must be a non-empty list",
                           field="steps", line_no=line_no)
    steps = tuple(_parse_step(s, i, line_no=line_no) for i, s in enumerate(raw_steps))
    return Trajectory(id=traj_id, goal=goal, steps=steps, source=source)


def trajectory_to_obj(traj: Trajectory) -> dict:
    obj: dict = {"id": traj.id}
    if traj.source is not None:
        obj["source"] = traj.source
    obj["goal"] = traj.goal
    obj["steps"] = [
        {
            "index": s.index,
            "state": s.state_raw,
            "history": s.history,
            "action": action_to_obj(s.action),
            "reasoning": s.reasoning,
            "answer": s.answer,
        }
        for s in traj.steps
    ]
    return obj


# ---------------------------------------------------------------------------
# file I/O


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, object]]:
    """Yield (1-based line number, decoded object) per non-blank line."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON: {exc.msg}", line_no=line_no) from exc


def load_trajectories(path: str | Path, limit: int | None = None) -> list[Trajectory]:
    """Load and validate trajectories in file order; ``limit`` truncates."""
    out: list[Trajectory] = []
    for line_no, obj in iter_jsonl(path):
        if limit is not None and len(out) >= limit:
            break
        out.append(parse_trajectory(obj, line_no=line_no))
    return out


def write_trajectories(trajs: Iterable[Trajectory], path: str | Path) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for traj in trajs:
            fh.write(json.dumps(trajectory_to_obj(traj), ensure_ascii=False) + "\n")
            count += 1
    return count


def curated_to_obj(step: CuratedStep) -> dict:
    return {
        "trajectory_id": step.trajectory_id,
        "index": step.index,
        "goal": step.goal,
        "history": step.history,
        "state_pruned": step.state_pruned,
        "action": action_to_obj(step.action),
        "reasoning": step.reasoning,
        "reasoning_origin": step.reasoning_origin,
    }


def parse_curated(obj: object, *, line_no: int | None = None) -> CuratedStep:
    if not isinstance(obj, dict):
        raise DatasetError("curated record must be an object", line_no=line_no)
    for key, typ in (("trajectory_id", str), ("index", int), ("goal", str),
                     ("history", str), ("state_pruned", str), ("reasoning", str)):
        if not isinstance(obj.get(key), typ):
            raise DatasetError(f"missing or mistyped {key}", field=key, line_no=line_no)
    origin = obj.get("reasoning_origin")
    if origin not in (ORIGIN_ORIGINAL, ORIGIN_SYNTHESIZED):
        raise DatasetError("reasoning_origin must be 'original' or 'synthesized'",
                           field="reasoning_origin", line_no=line_no)
    action = parse_action(obj.get("action"), line_no=line_no)
    return CuratedStep(
        trajectory_id=obj["trajectory_id"],
        index=obj["index"],
        goal=obj["goal"],
        history=obj["history"],
        state_pruned=obj["state_pruned"],
        action=action,
        reasoning=obj["reasoning"],
        reasoning_origin=origin,
    )


def load_curated(path: str | Path) -> list[CuratedStep]:
    return [parse_curated(obj, line_no=n) for n, obj in iter_jsonl(path)]


def write_curated(steps: Iterable[CuratedStep], path: str | Path) -> int:
    """Write curated steps as JSONL; returns the number of records written."""
    path = Path(path)
    count = 0
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for step in steps:
                fh.write(json.dumps(curated_to_obj(step), ensure_ascii=False) + "\n")
                count += 1
    except OSError as exc:
        raise OSError(f"failed writing curated file {path}: {exc}") from exc
    return count
