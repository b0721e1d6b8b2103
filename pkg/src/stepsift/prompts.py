"""Prompt rendering for self-reasoning synthesis and step judging, plus
ingestion of externally generated reasoning responses.

The pipeline never calls a language model itself; it renders prompts to
files, and a separate (out-of-process) generation step produces responses
that :func:`ingest_synthesized` validates and merges back into the curated
dataset. A response must contain exactly one ``<think>``, one ``<memory>``
and one ``<action>`` block; the action block must reproduce the gold action
verbatim and the memory block must be non-empty, otherwise the step keeps
its original reasoning and the response is rejected with a reason.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .trajectory import (CuratedStep, DatasetError, ORIGIN_SYNTHESIZED,
                         iter_jsonl, load_curated, write_curated)

REASONING_TEMPLATE_NAME = "reasoning_synthesis.txt"
JUDGE_TEMPLATE_NAME = "step_judge.txt"

_BLOCK_RES = {
    tag: re.compile(rf"<{tag}>(.*?)</{tag}>", re.DOTALL)
    for tag in ("think", "memory", "action")
}


class PromptSlotError(ValueError):
    """A required template slot has no usable value."""

    def __init__(self, slot: str, detail: str = "is empty"):
        self.slot = slot
        super().__init__(f"slot {slot} {detail}")


def load_template(name: str) -> str:
    return (resources.files("stepsift") / "templates" / name).read_text("utf-8")


def _fill(template: str, slots: dict[str, str]) -> str:
    out = template
    for slot, value in slots.items():
        out = out.replace("{" + slot + "}", value)
    return out


def render_reasoning_prompt(step: CuratedStep, template: str | None = None) -> str:
    """Render the reasoning-synthesis prompt for one curated step.

    GOAL, STATE_BLOCK and the action must be non-empty; HISTORY may be empty
    (its section still renders).
    """
    if template is None:
        template = load_template(REASONING_TEMPLATE_NAME)
    if not step.goal.strip():
        raise PromptSlotError("GOAL")
    if not step.state_pruned.strip():
        raise PromptSlotError("STATE_BLOCK")
    action_text = step.action.serialize()
    if not action_text:
        raise PromptSlotError("action_block")
    return _fill(template, {
        "GOAL": step.goal,
        "STATE_BLOCK": step.state_pruned,
        "HISTORY": step.history,
        "action_block": action_text,
    })


def judge_state_block(step: CuratedStep) -> str:
    """AXTree, history and assistant output, stacked for the judge prompt."""
    return (f"AXTree:\n{step.state_pruned}\n\n"
            f"History:\n{step.history}\n\n"
            f"Assistant output:\n{step.answer()}")


def render_judge_prompt(step: CuratedStep, goal: str | None = None) -> str:
    """Render the step-usefulness judging prompt (scoring happens externally)."""
    goal = step.goal if goal is None else goal
    if not goal.strip():
        raise PromptSlotError("GOAL")
    template = load_template(JUDGE_TEMPLATE_NAME)
    return _fill(template, {"GOAL": goal, "STATE_BLOCK": judge_state_block(step)})


def prompt_filename(step: CuratedStep) -> str:
    return f"{step.trajectory_id}__{step.index:04d}.txt"


def render_prompts_to_dir(steps: list[CuratedStep], directory: str | Path) -> int:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for step in steps:
        (directory / prompt_filename(step)).write_text(
            render_reasoning_prompt(step), encoding="utf-8")
    return len(steps)


# ---------------------------------------------------------------------------
# response ingestion


@dataclass(slots=True)
class IngestReport:
    updated: int = 0
    unchanged: int = 0
    rejected: list[tuple[str, int, str]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "updated": self.updated,
            "unchanged": self.unchanged,
            "rejected": [
                {"trajectory_id": t, "index": i, "reason": r}
                for t, i, r in self.rejected
            ],
        }


def parse_response_blocks(raw: str) -> dict[str, str]:
    """Extract the think/memory/action blocks; each must appear exactly once."""
    blocks: dict[str, str] = {}
    for tag, pattern in _BLOCK_RES.items():
        found = pattern.findall(raw)
        if len(found) != 1:
            raise ValueError(
                f"expected exactly one <{tag}> block, found {len(found)}")
        blocks[tag] = found[0].strip()
    return blocks


def apply_response(step: CuratedStep, raw: str) -> CuratedStep:
    """Validate one raw response against a step and return the updated step.

    Raises ``ValueError`` with the rejection reason on any violation.
    """
    blocks = parse_response_blocks(raw)
    gold = step.action.serialize()
    if blocks["action"] != gold:
        raise ValueError(
            f"action block {blocks['action']!r} differs from gold {gold!r}")
    if not blocks["memory"]:
        raise ValueError("memory block is empty")
    reasoning = (f"<think>\n{blocks['think']}\n</think>\n\n"
                 f"<memory>\n{blocks['memory']}\n</memory>")
    return replace(step, reasoning=reasoning, reasoning_origin=ORIGIN_SYNTHESIZED)


def ingest_synthesized(curated_path: str | Path, responses_path: str | Path,
                       output_path: str | Path) -> IngestReport:
    """Merge generated reasoning responses into a curated dataset file.

    ``responses_path`` holds one JSON object per line:
    ``{"trajectory_id": str, "index": int, "response": str}``. Steps without
    a valid response are written through unchanged.
    """
    steps = load_curated(curated_path)
    by_key = {(s.trajectory_id, s.index): i for i, s in enumerate(steps)}
    report = IngestReport()
    applied: set[tuple[str, int]] = set()

    for line_no, obj in iter_jsonl(responses_path):
        if not isinstance(obj, dict):
            raise DatasetError("response record must be an object", line_no=line_no)
        traj_id = obj.get("trajectory_id")
        index = obj.get("index")
        raw = obj.get("response")
        if not isinstance(traj_id, str) or not isinstance(index, int) \
                or not isinstance(raw, str):
            raise DatasetError("response record needs trajectory_id, index, response",
                               line_no=line_no)
        key = (traj_id, index)
        if key not in by_key:
            report.rejected.append((traj_id, index, "no such curated step"))
            continue
        if key in applied:
            report.rejected.append((traj_id, index, "duplicate response"))
            continue
        try:
            steps[by_key[key]] = apply_response(steps[by_key[key]], raw)
        except ValueError as exc:
            report.rejected.append((traj_id, index, str(exc)))
            continue
        applied.add(key)
        report.updated += 1

    report.unchanged = len(steps) - report.updated
    write_curated(steps, output_path)
    return report
