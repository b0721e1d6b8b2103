#!/usr/bin/env python3
"""Render the reasoning-synthesis and judge prompts for the two designated
sample-corpus steps and freeze them as golden files under tests/golden/.

Run once after (re)generating the sample corpus; the test suite compares
against these bytes exactly.
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from stepsift.prompts import render_judge_prompt, render_reasoning_prompt  # noqa: E402

from conftest import GOLDEN_DIR, golden_step_pair  # noqa: E402


def main() -> None:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    step_a, step_b = golden_step_pair()
    files = {
        "reasoning_prompt_sample_a.txt": render_reasoning_prompt(step_a),
        "reasoning_prompt_sample_b.txt": render_reasoning_prompt(step_b),
        "judge_prompt_sample_a.txt": render_judge_prompt(step_a),
        "judge_prompt_sample_b.txt": render_judge_prompt(step_b),
    }
    for name, text in files.items():
        (GOLDEN_DIR / name).write_text(text, encoding="utf-8")
        print(f"froze {name} ({len(text)} chars)")


if __name__ == "__main__":
    main()
