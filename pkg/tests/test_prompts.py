import json
from dataclasses import replace

import pytest

from stepsift.prompts import (PromptSlotError, apply_response,
                              ingest_synthesized, parse_response_blocks,
                              render_judge_prompt, render_reasoning_prompt)
from stepsift.trajectory import (Action, CuratedStep, load_curated,
                                 write_curated)

from conftest import GOLDEN_DIR


@pytest.fixture
def step():
    return CuratedStep(
        trajectory_id="t1", index=1, goal="Add a red backpack to the cart",
        history="click('a3')",
        state_pruned="[a1] link 'Backpacks'\n[a2] button 'Add to Cart'",
        action=Action("node", "click", bid="a2"),
        reasoning="The add-to-cart button is the right control.",
    )


def good_response(step, think="The button adds the item, so I click it.",
                  memory="Added the backpack to the cart."):
    return (f"<think>\n{think}\n</think>\n\n"
            f"<memory>\n{memory}\n</memory>\n\n"
            f"<action>\n{step.action.serialize()}\n</action>")


class TestRenderReasoningPrompt:
    def test_slots_filled(self, step):
        prompt = render_reasoning_prompt(step)
        assert prompt.count("Add a red backpack to the cart") == 1
        assert "[a2] button 'Add to Cart'" in prompt
        assert prompt.count("click('a2')") == 2  # instruction + action block
        assert "{GOAL}" not in prompt and "{action_block}" not in prompt

    def test_action_embedded_verbatim_in_action_tag(self, step):
        prompt = render_reasoning_prompt(step)
        assert "<action>\nclick('a2')\n</action>" in prompt

    def test_empty_history_section_renders_empty(self, step):
        bare = replace(step, history="")
        prompt = render_reasoning_prompt(bare)
        marker = "# History of interaction with the task: \n"
        assert marker in prompt
        after = prompt.split(marker, 1)[1]
        assert after.startswith("\n\n# Action space:")  # empty HISTORY slot

    def test_empty_goal_names_slot(self, step):
        bad = CuratedStep(trajectory_id="t", index=0, goal="  ",
                          history="", state_pruned=step.state_pruned,
                          action=step.action, reasoning="")
        with pytest.raises(PromptSlotError, match="GOAL"):
            render_reasoning_prompt(bad)

    def test_empty_state_names_slot(self, step):
        bad = CuratedStep(trajectory_id="t", index=0, goal="g",
                          history="", state_pruned=" ",
                          action=step.action, reasoning="")
        with pytest.raises(PromptSlotError, match="STATE_BLOCK"):
            render_reasoning_prompt(bad)


class TestRenderJudgePrompt:
    def test_contains_score_slot_line(self, step):
        prompt = render_judge_prompt(step)
        assert prompt.rstrip().endswith("Score: <number between 1 and 5>")

    def test_state_block_composition(self, step):
        prompt = render_judge_prompt(step)
        assert "[a2] button 'Add to Cart'" in prompt
        assert "click('a2')" in prompt  # assistant output includes the action
        assert step.reasoning in prompt

    def test_empty_goal_rejected(self, step):
        with pytest.raises(PromptSlotError, match="GOAL"):
            render_judge_prompt(step, goal="   ")


class TestGoldenFiles:
    """Rendered prompts for two bundled corpus steps, frozen byte-for-byte."""

    @pytest.mark.parametrize("name", [
        "reasoning_prompt_sample_a", "reasoning_prompt_sample_b",
        "judge_prompt_sample_a", "judge_prompt_sample_b",
    ])
    def test_matches_golden(self, name, golden_steps):
        step_a, step_b = golden_steps
        step = step_a if name.endswith("_a") else step_b
        render = (render_reasoning_prompt if name.startswith("reasoning")
                  else render_judge_prompt)
        golden = (GOLDEN_DIR / f"{name}.txt").read_text(encoding="utf-8")
        assert render(step) == golden


class TestResponseParsing:
    def test_blocks_extracted(self, step):
        blocks = parse_response_blocks(good_response(step))
        assert blocks["action"] == "click('a2')"
        assert blocks["memory"] == "Added the backpack to the cart."

    def test_missing_block_rejected(self):
        with pytest.raises(ValueError, match="memory"):
            parse_response_blocks("<think>x</think><action>y</action>")

    def test_duplicate_block_rejected(self):
        raw = ("<think>a</think><think>b</think>"
               "<memory>m</memory><action>x</action>")
        with pytest.raises(ValueError, match="think"):
            parse_response_blocks(raw)


class TestApplyResponse:
    def test_conforming_response_flips_origin(self, step):
        updated = apply_response(step, good_response(step))
        assert updated.reasoning_origin == "synthesized"
        assert "<think>" in updated.reasoning
        assert "<memory>" in updated.reasoning
        assert updated.action == step.action

    def test_mutated_action_rejected(self, step):
        raw = good_response(step).replace("click('a2')", "click('a9')")
        with pytest.raises(ValueError, match="differs from gold"):
            apply_response(step, raw)

    def test_empty_memory_rejected(self, step):
        raw = good_response(step, memory="  ")
        with pytest.raises(ValueError, match="memory"):
            apply_response(step, raw)


class TestIngest:
    def make_curated_file(self, tmp_path, step):
        other = CuratedStep(trajectory_id="t1", index=3, goal=step.goal,
                            history="", state_pruned=step.state_pruned,
                            action=Action("non_node", "noop"), reasoning="waiting")
        path = tmp_path / "curated.jsonl"
        write_curated([step, other], path)
        return path, [step, other]

    def write_responses(self, tmp_path, records):
        path = tmp_path / "responses.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
        return path

    def test_accepts_conforming_and_rejects_bad(self, tmp_path, step):
        curated, steps = self.make_curated_file(tmp_path, step)
        responses = self.write_responses(tmp_path, [
            {"trajectory_id": "t1", "index": 1, "response": good_response(step)},
            {"trajectory_id": "t1", "index": 3,
             "response": good_response(steps[1]).replace("noop()", "go_back()")},
            {"trajectory_id": "t9", "index": 0, "response": good_response(step)},
        ])
        out = tmp_path / "updated.jsonl"
        report = ingest_synthesized(curated, responses, out)
        assert report.updated == 1
        assert report.unchanged == 1
        reasons = {(t, i): reason for t, i, reason in report.rejected}
        assert "differs from gold" in reasons[("t1", 3)]
        assert reasons[("t9", 0)] == "no such curated step"

        updated = load_curated(out)
        assert updated[0].reasoning_origin == "synthesized"
        assert updated[1].reasoning_origin == "original"
        assert updated[1].reasoning == "waiting"

    def test_empty_memory_keeps_original(self, tmp_path, step):
        curated, _ = self.make_curated_file(tmp_path, step)
        responses = self.write_responses(tmp_path, [
            {"trajectory_id": "t1", "index": 1,
             "response": good_response(step, memory="")},
        ])
        out = tmp_path / "updated.jsonl"
        report = ingest_synthesized(curated, responses, out)
        assert report.updated == 0
        assert any("memory" in reason for _, _, reason in report.rejected)
        assert load_curated(out)[0].reasoning == step.reasoning

    def test_unparseable_response_rejected_with_reason(self, tmp_path, step):
        curated, _ = self.make_curated_file(tmp_path, step)
        responses = self.write_responses(tmp_path, [
            {"trajectory_id": "t1", "index": 1, "response": "no tags at all"},
        ])
        out = tmp_path / "updated.jsonl"
        report = ingest_synthesized(curated, responses, out)
        assert report.updated == 0
        assert any("think" in reason for _, _, reason in report.rejected)
