#!/usr/bin/env python3
"""Generate the bundled sample corpus of 20 synthetic demonstration
trajectories in the trajectory JSONL schema.

The output is checked in at src/stepsift/data/sample_trajectories.jsonl and
frozen; rerunning this script reproduces it byte-for-byte. States are
tab-indented BrowserGym-style AXTree linearizations with unique bids, sized
so that the default pruning window actually bites on a majority of steps.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from stepsift.trajectory import (Action, KIND_NODE, KIND_NON_NODE,  # noqa: E402
                                 make_answer)

SEED = 8127
N_TRAJECTORIES = 20

SITES = [
    ("onestopmarket.com", "One Stop Market"),
    ("forgehub.dev", "ForgeHub Code Hosting"),
    ("cityforum.net", "City Events Forum"),
    ("adminlite.io", "AdminLite Store Manager"),
    ("triprover.com", "TripRover Bookings"),
]

SECTIONS = ["Electronics", "Grocery", "Outdoors", "Office", "Beauty",
            "Toys", "Garden", "Automotive", "Books", "Clothing"]

PRODUCTS = ["backpack", "water bottle", "desk lamp", "notebook", "keyboard",
            "sneakers", "coffee maker", "tent", "headphones", "monitor",
            "charger", "blender", "jacket", "umbrella", "router"]

ADJECTIVES = ["blue", "red", "compact", "wireless", "ergonomic", "foldable",
              "stainless", "portable", "heavy-duty", "classic"]

FOOTER_LINKS = ["Privacy Policy", "Terms of Use", "Contact Us", "Careers",
                "Help Center"]

MENU_LINKS = ["Home", "My Account", "Wish List", "Sign Out", "Compare",
              "Cart", "Orders", "Settings", "Notifications", "Search"]

GOAL_TEMPLATES = [
    "Order a {adj} {product} from the {section} section on {site}",
    "Find the cheapest {product} in {section} and add it to the cart on {site}",
    "Update the shipping address for the latest {product} order on {site}",
    "Leave a review for the {adj} {product} purchased last month on {site}",
    "Check how many {product} units are left in stock in {section} on {site}",
    "Subscribe to restock alerts for the {adj} {product} on {site}",
    "Compare two {product} listings and message the seller of the cheaper one on {site}",
    "Cancel the pending order that contains the {adj} {product} on {site}",
]

REASONING_TEMPLATES = [
    "The {name} element is visible in the current view. Interacting with it moves the task forward.",
    "To progress toward the goal I need to use the {name} control next.",
    "The page lists several options; {name} matches what the goal asks for, so I act on it.",
    "Nothing else on this page is relevant; {name} is the right next target.",
    "",
]

NON_NODE_REASONING = [
    "The current page does not contain what I need, so I navigate elsewhere.",
    "More of the page needs to be visible before acting, so I scroll.",
    "The task outcome must be reported back to the user.",
    "",
]


def build_state(rng: random.Random, site: tuple[str, str], section: str,
                n_indexed: int, bid_prefix: str) -> tuple[str, list[tuple[str, str, str]]]:
    """Return (state text, [(bid, role, name), ...] in document order)."""
    domain, title = site
    lines: list[str] = [f"RootWebArea '{section} | {title}'"]
    indexed: list[tuple[str, str, str]] = []
    counter = 0

    def bid() -> str:
        nonlocal counter
        counter += 1
        return f"{bid_prefix}{counter}"

    def add(depth: int, role: str, name: str, static_echo: float = 0.0) -> None:
        b = bid()
        indexed.append((b, role, name))
        lines.append("\t" * depth + f"[{b}] {role} '{name}'")
        if rng.random() < static_echo:
            lines.append("\t" * (depth + 1) + f"StaticText '{name}'")

    add(1, "navigation", "Main menu")
    for name in rng.sample(MENU_LINKS, k=6):
        add(2, "link", name, static_echo=0.3)

    add(1, "main", f"{section} department")
    add(2, "heading", f"Results in {section}")
    lines.append("\t\t" + f"StaticText 'Showing items for {domain}'")
    add(2, "searchbox", "Search products")
    add(2, "button", "Search")
    add(2, "combobox", "Sort by")

    remaining = n_indexed - len(indexed) - 8
    item = 0
    while remaining > 0:
        adj = rng.choice(ADJECTIVES)
        product = rng.choice(PRODUCTS)
        price = rng.randrange(5, 320)
        item += 1
        add(2, "listitem", f"Result {item}")
        add(3, "link", f"{adj} {product}", static_echo=0.25)
        add(3, "button", "Add to Cart")
        if rng.random() < 0.4:
            add(3, "checkbox", f"Compare {product}")
            remaining -= 1
        lines.append("\t\t\t" + f"StaticText '${price}.00'")
        remaining -= 3

    add(1, "contentinfo", "Footer")
    for name in rng.sample(FOOTER_LINKS, k=3):
        add(2, "link", name)
    add(2, "textbox", "Newsletter email")
    add(2, "button", "Subscribe")

    return "\n".join(lines), indexed


def pick_target(rng: random.Random, indexed: list[tuple[str, str, str]],
                roles: tuple[str, ...]) -> tuple[str, str, str]:
    candidates = [n for n in indexed if n[1] in roles]
    return rng.choice(candidates)


def make_step(rng: random.Random, index: int, is_last: bool, site, section,
              history: list[str]) -> tuple[dict, str]:
    n_indexed = rng.randrange(90, 330)
    bid_prefix = rng.choice("abcde")
    state, indexed = build_state(rng, site, section, n_indexed, bid_prefix)

    roll = rng.random()
    if is_last and roll < 0.5:
        action = Action(KIND_NON_NODE, "send_msg_to_user",
                        args=(f"Done. I finished the requested task on {site[0]}.",))
        reasoning = NON_NODE_REASONING[2]
    elif roll < 0.12:
        action = Action(KIND_NON_NODE, "goto",
                        args=(f"https://{site[0]}/{section.lower()}",))
        reasoning = rng.choice(NON_NODE_REASONING[:2] + [""])
    elif roll < 0.2:
        action = Action(KIND_NON_NODE, "scroll", args=("0", str(rng.randrange(2, 9) * 100)))
        reasoning = NON_NODE_REASONING[1]
    elif roll < 0.24:
        action = Action(KIND_NON_NODE, rng.choice(("noop", "go_back")))
        reasoning = ""
    else:
        kind_roll = rng.random()
        if kind_roll < 0.55:
            bid, _, name = pick_target(rng, indexed, ("link", "button", "listitem"))
            action = Action(KIND_NODE, "click", bid=bid)
        elif kind_roll < 0.75:
            bid, _, name = pick_target(rng, indexed, ("searchbox", "textbox"))
            adj = rng.choice(ADJECTIVES)
            product = rng.choice(PRODUCTS)
            action = Action(KIND_NODE, "fill", bid=bid, args=(f"{adj} {product}",))
        elif kind_roll < 0.85:
            bid, _, name = pick_target(rng, indexed, ("combobox",))
            action = Action(KIND_NODE, "select_option", bid=bid,
                            args=(rng.choice(("Price", "Relevance", "Newest")),))
        elif kind_roll < 0.93:
            bid, _, name = pick_target(rng, indexed, ("checkbox", "link"))
            action = Action(KIND_NODE, rng.choice(("hover", "focus", "click")), bid=bid)
        else:
            bid, _, name = pick_target(rng, indexed, ("searchbox", "textbox"))
            action = Action(KIND_NODE, "press", bid=bid, args=("Enter",))
        reasoning = rng.choice(REASONING_TEMPLATES).format(name=name)

    answer = make_answer(reasoning, action)
    step = {
        "index": index,
        "state": state,
        "history": "\n".join(history),
        "action": {
            "kind": action.kind,
            "name": action.name,
            **({"bid": action.bid} if action.bid is not None else {}),
            "args": list(action.args),
        },
        "reasoning": reasoning,
        "answer": answer,
    }
    return step, action.serialize()


def main() -> None:
    rng = random.Random(SEED)
    lengths = [2, 3, 3, 4, 4, 5, 5, 6, 6, 6, 7, 7, 8, 8, 9, 10, 10, 11, 12, 12]
    out_path = Path(__file__).resolve().parents[1] / "src" / "stepsift" / "data" \
        / "sample_trajectories.jsonl"
    out_path.parent.mkdir(parents=True, exist_ok=True)

    with open(out_path, "w", encoding="utf-8") as fh:
        for n in range(N_TRAJECTORIES):
            site = rng.choice(SITES)
            section = rng.choice(SECTIONS)
            goal = rng.choice(GOAL_TEMPLATES).format(
                adj=rng.choice(ADJECTIVES), product=rng.choice(PRODUCTS),
                section=section, site=site[0])
            steps = []
            history: list[str] = []
            t_len = lengths[n]
            for t in range(t_len):
                step, serialized = make_step(
                    rng, t, t == t_len - 1, site, section, history)
                steps.append(step)
                history.append(serialized)
            record = {
                "id": f"sample-{n:03d}",
                "source": "stepsift-sample",
                "goal": goal,
                "steps": steps,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    print(f"wrote {N_TRAJECTORIES} trajectories to {out_path}")


if __name__ == "__main__":
    main()
