"""Parsing of linearized accessibility-tree text into a node sequence.

The expected line grammar is the BrowserGym-style rendering::

    [bid] role 'name'  (optional trailing attributes)

matched per line by the anchored regex::

    ^(?P<indent>[ \t]*)\[(?P<bid>[^\]\s]+)\]\s+(?P<role>\S+)
        (?:\s+'(?P<name>(?:[^'\\]|\\.)*)')?.*$

Lines that carry a ``[bid]`` prefix become
*indexed* nodes and are numbered 1..K in document order; K is the count the
pruning windows are measured over. Any other non-empty line (page headers,
``StaticText`` echoes, free text) is kept as a non-indexed node with role
``"Static"`` so that the original text can always be reconstructed, but it
does not consume a window position.

Indentation encodes tree depth: one tab per level, or a fixed number of
spaces per level (the per-state space unit is inferred as the smallest
non-zero space indent seen).

Every non-indexed line is anchored to its nearest indexed neighbor (by line
distance, ties to the preceding one; a leading run anchors to the first
indexed node). Pruners keep a non-indexed line exactly when its anchor
position is kept.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .trajectory import Action, KIND_NODE

NODE_LINE_RE = re.compile(
    r"^(?P<indent>[ \t]*)\[(?P<bid>[^\]\s]+)\]\s+(?P<role>\S+)"
    r"(?:\s+'(?P<name>(?:[^'\\]|\\.)*)')?.*$"
)

STATIC_ROLE = "Static"

_ESCAPE_RE = re.compile(r"\\(.)")


class DuplicateBidError(ValueError):
    def __init__(self, bid: str):
        self.bid = bid
        super().__init__(f"duplicate bid {bid!r} in state")


class MissingTargetError(LookupError):
    """A node-grounded action references a bid absent from the state."""

    def __init__(self, bid: str):
        self.bid = bid
        super().__init__(f"target bid {bid!r} not present in state")


@dataclass(frozen=True, slots=True)
class AXTreeNode:
    position: int | None  # 1-based among indexed nodes; None for Static lines
    bid: str | None
    role: str
    name: str
    depth: int
    raw_line: str
    line_index: int
    anchor: int | None  # position whose fate this line follows when pruning


@dataclass(frozen=True, slots=True)
class LinearizedState:
    nodes: tuple[AXTreeNode, ...]
    indexed_count: int
    source_text: str

    def reconstruct(self) -> str:
        return "\n".join(n.raw_line for n in self.nodes)

    def node_at(self, position: int) -> AXTreeNode:
        node = self._by_position().get(position)
        if node is None:
            raise IndexError(f"no indexed node at position {position}")
        return node

    def position_of_bid(self, bid: str) -> int | None:
        for n in self.nodes:
            if n.bid == bid:
                return n.position
        return None

    def _by_position(self) -> dict[int, AXTreeNode]:
        return {n.position: n for n in self.nodes if n.position is not None}

    def indexed_nodes(self) -> list[AXTreeNode]:
        return [n for n in self.nodes if n.position is not None]


def _space_unit(lines: list[str]) -> int:
    counts = []
    for line in lines:
        stripped = line.lstrip(" ")
        if stripped and not line.startswith("\t"):
            n = len(line) - len(stripped)
            if n > 0:
                counts.append(n)
    return min(counts) if counts else 1


def _depth(indent: str, space_unit: int) -> int:
    tabs = indent.count("\t")
    spaces = len(indent) - tabs
    return tabs + spaces // space_unit


def parse_state(state_raw: str) -> LinearizedState:
    """Parse linearized AXTree text. Raises ``DuplicateBidError`` on repeats."""
    lines = [ln for ln in state_raw.splitlines() if ln.strip()]
    space_unit = _space_unit(lines)

    position = 0
    seen_bids: set[str] = set()
    # (position, bid, role, name, depth, raw, line_index); anchors attached after
    partial: list[tuple[int | None, str | None, str, str, int, str, int]] = []
    for line_index, raw in enumerate(lines):
        match = NODE_LINE_RE.match(raw)
        if match:
            bid = match.group("bid")
            if bid in seen_bids:
                raise DuplicateBidError(bid)
            seen_bids.add(bid)
            position += 1
            name = match.group("name") or ""
            name = _ESCAPE_RE.sub(r"\1", name)
            depth = _depth(match.group("indent"), space_unit)
            partial.append((position, bid, match.group("role"), name,
                            depth, raw, line_index))
        else:
            indent = raw[: len(raw) - len(raw.lstrip(" \t"))]
            depth = _depth(indent, space_unit)
            partial.append((None, None, STATIC_ROLE, raw.strip(),
                            depth, raw, line_index))

    anchors = _compute_anchors(partial)
    nodes = tuple(
        AXTreeNode(position=pos, bid=bid, role=role, name=name, depth=depth,
                   raw_line=raw, line_index=idx, anchor=anchor)
        for (pos, bid, role, name, depth, raw, idx), anchor in zip(partial, anchors)
    )
    return LinearizedState(nodes=nodes, indexed_count=position,
                           source_text=state_raw)


def _compute_anchors(partial: list[tuple]) -> list[int | None]:
    n = len(partial)
    prev_pos: list[int | None] = [None] * n
    prev_dist = [0] * n
    last: int | None = None
    last_at = -1
    for i, entry in enumerate(partial):
        if entry[0] is not None:
            last, last_at = entry[0], i
        prev_pos[i] = last
        prev_dist[i] = i - last_at
    next_pos: list[int | None] = [None] * n
    next_dist = [0] * n
    nxt: int | None = None
    nxt_at = 2 * n
    for i in range(n - 1, -1, -1):
        if partial[i][0] is not None:
            nxt, nxt_at = partial[i][0], i
        next_pos[i] = nxt
        next_dist[i] = nxt_at - i

    anchors: list[int | None] = []
    for i, entry in enumerate(partial):
        if entry[0] is not None:
            anchors.append(entry[0])
        elif prev_pos[i] is not None and (next_pos[i] is None
                                          or prev_dist[i] <= next_dist[i]):
            anchors.append(prev_pos[i])
        else:
            anchors.append(next_pos[i])
    return anchors


def find_target(state: LinearizedState, action: Action) -> int | None:
    """Position of the action's gold target node; None for non-node actions."""
    if action.kind != KIND_NODE:
        return None
    assert action.bid is not None
    position = state.position_of_bid(action.bid)
    if position is None:
        raise MissingTargetError(action.bid)
    return position


def count_tokens(text: str) -> int:
    """Whitespace-delimited token count (proxy for a model tokenizer)."""
    return len(text.split())
