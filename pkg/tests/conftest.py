from __future__ import annotations

import random
from pathlib import Path

import pytest

from stepsift.axtree import parse_state
from stepsift.similarity import OverlapSimilarity
from stepsift.trajectory import load_trajectories

CORPUS_PATH = (Path(__file__).resolve().parents[1]
               / "src" / "stepsift" / "data" / "sample_trajectories.jsonl")
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"

# Fixed 10-node state used by the pruning and parsing unit tests. Positions:
# a1..a10 are indexed 1..10; the RootWebArea header and the StaticText echo
# are non-indexed lines anchored to a1.
DEMO_STATE = "\n".join([
    "RootWebArea 'Demo Page'",
    "\t[a1] link 'Home'",
    "\t\tStaticText 'Home'",
    "\t[a2] link 'Products'",
    "\t[a3] button 'Search'",
    "\t[a4] textbox 'Query'",
    "\t[a5] listitem 'Result 1'",
    "\t\t[a6] link 'Blue Backpack'",
    "\t[a7] button 'Add to Cart'",
    "\t[a8] link 'Cart'",
    "\t[a9] link 'Privacy'",
    "\t[a10] button 'Subscribe'",
])


@pytest.fixture(scope="session")
def corpus_path() -> Path:
    return CORPUS_PATH


@pytest.fixture(scope="session")
def corpus():
    return load_trajectories(CORPUS_PATH)


@pytest.fixture(scope="session")
def overlap():
    return OverlapSimilarity()


@pytest.fixture
def demo_state():
    return parse_state(DEMO_STATE)


def golden_step_pair():
    """Two bundled steps rendered into the frozen prompt golden files: the
    first node-grounded step and the first non-node step of the corpus,
    pruned with default settings."""
    from stepsift.axtree import find_target
    from stepsift.pruning import PruneConfig, prune_step
    from stepsift.trajectory import CuratedStep

    trajs = load_trajectories(CORPUS_PATH)
    picked = {}
    for traj in trajs:
        for step in traj.steps:
            kind = step.action.kind
            if kind not in picked:
                state = parse_state(step.state_raw)
                k_star = find_target(state, step.action) if kind == "node" else None
                text, _ = prune_step(state, PruneConfig(), k_star=k_star)
                picked[kind] = CuratedStep(
                    trajectory_id=traj.id, index=step.index, goal=traj.goal,
                    history=step.history, state_pruned=text,
                    action=step.action, reasoning=step.reasoning)
        if len(picked) == 2:
            break
    return picked["node"], picked["non_node"]


@pytest.fixture(scope="session")
def golden_steps():
    return golden_step_pair()


def build_flat_state(n: int, prefix: str = "n") -> str:
    """A flat state of n indexed link nodes."""
    return "\n".join(f"[{prefix}{i}] link 'Item {i}'" for i in range(1, n + 1))


def build_random_state(rng: random.Random, n_indexed: int) -> str:
    """Random nested state with statics sprinkled in, for property tests."""
    lines = ["RootWebArea 'Random Page'"]
    depth = 1
    for i in range(1, n_indexed + 1):
        role = rng.choice(["link", "button", "textbox", "listitem", "heading"])
        lines.append("\t" * depth + f"[r{i}] {role} 'Node {i}'")
        if rng.random() < 0.25:
            lines.append("\t" * (depth + 1) + f"StaticText 'Echo {i}'")
        roll = rng.random()
        if roll < 0.25 and depth < 4:
            depth += 1
        elif roll < 0.4 and depth > 1:
            depth -= 1
    return "\n".join(lines)
