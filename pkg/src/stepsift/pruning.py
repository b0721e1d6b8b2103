"""State pruning: target-centered windows, the shifted-window ablation, and
the baseline pruners (prefix-by-bid, semantic top-k, union).

All pruners operate on positions of *indexed* nodes (1..K, see
:mod:`stepsift.axtree`); non-indexed Static lines follow their anchor node.
Window arithmetic, with k* the gold target position:

* target-centered: keep ``[k* - w, k* + w]`` clipped to ``{1..K}``
* shifted window (offset o): keep the union of ``[k* - o - w, k* - o]``,
  ``{k*}`` and ``[k* + o, k* + o + w]``, clipped to ``{1..K}``; this
  degenerates to the plain window at o = 0
* prefix-by-bid: keep ``{1..k*}``
* fixed prefix (non-node actions): keep ``{1..min(budget, K)}``
* semantic: rank leaf nodes by similarity of the query to the leaf's text
  prefixed with its ancestor chain; keep the top k in document order

A state with no indexed nodes prunes to the empty string under prefix
budgets; real corpora do not produce such states, synthetic ones might.
"""

from __future__ import annotations

from dataclasses import dataclass

from .axtree import LinearizedState, AXTreeNode, count_tokens
from .similarity import SimilarityProvider

STRATEGY_TARGET = "target"
STRATEGY_OFFSET = "offset"
STRATEGY_BID = "bid"
STRATEGY_SEMANTIC = "semantic"
STRATEGY_UNION = "union"
STRATEGY_NONE = "none"
STRATEGY_PREFIX = "prefix"  # report-only: non-node and fallback steps

STRATEGIES = (STRATEGY_TARGET, STRATEGY_OFFSET, STRATEGY_BID,
              STRATEGY_SEMANTIC, STRATEGY_UNION, STRATEGY_NONE)


class PruneRangeError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class PruneConfig:
    strategy: str = STRATEGY_TARGET
    window: int = 60
    offset: int = 0
    non_node_window: int = 120
    semantic_k: int = 80

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown prune strategy {self.strategy!r}")
        for field in ("window", "offset", "non_node_window", "semantic_k"):
            if getattr(self, field) < 0:
                raise ValueError(f"{field} must be >= 0")
        if self.offset > 0 and self.strategy != STRATEGY_OFFSET:
            raise ValueError("offset is only meaningful with the offset strategy")

    def non_node_budget(self) -> int:
        return 2 * self.non_node_window + 1

    def node_budget(self) -> int:
        return 2 * self.window + 1


@dataclass(frozen=True, slots=True)
class PruneReport:
    kept_positions: tuple[int, ...]
    tokens_before: int
    tokens_after: int
    strategy: str
    missing_target_fallback: bool = False


def _check_target(state: LinearizedState, k_star: int) -> None:
    if not 1 <= k_star <= state.indexed_count:
        raise PruneRangeError(
            f"target position {k_star} outside 1..{state.indexed_count}")


def _emit(state: LinearizedState, kept: set[int]) -> str:
    lines = [n.raw_line for n in state.nodes
             if n.anchor is not None and n.anchor in kept]
    return "\n".join(lines)


def _finish(state: LinearizedState, kept: set[int], strategy: str,
            fallback: bool = False) -> tuple[str, PruneReport]:
    text = _emit(state, kept)
    report = PruneReport(
        kept_positions=tuple(sorted(kept)),
        tokens_before=count_tokens(state.source_text),
        tokens_after=count_tokens(text),
        strategy=strategy,
        missing_target_fallback=fallback,
    )
    return text, report


def prune_target_centered(state: LinearizedState, k_star: int,
                          w: int) -> tuple[str, PruneReport]:
    """Keep the contiguous (2w+1)-window centered at the target position."""
    _check_target(state, k_star)
    kept = set(range(max(1, k_star - w), min(state.indexed_count, k_star + w) + 1))
    return _finish(state, kept, STRATEGY_TARGET)


def prune_offset(state: LinearizedState, k_star: int, w: int,
                 o: int) -> tuple[str, PruneReport]:
    """Shift the retained context a distance ``o`` away from the target.

    The target itself is always kept; the two (w+1)-wide arms are clipped to
    the valid position range, so arms pushed past an edge shrink or vanish.
    """
    _check_target(state, k_star)
    if o < 0:
        raise PruneRangeError("offset must be >= 0")
    k = state.indexed_count
    candidates = set(range(k_star - o - w, k_star - o + 1))
    candidates.add(k_star)
    candidates.update(range(k_star + o, k_star + o + w + 1))
    kept = {p for p in candidates if 1 <= p <= k}
    return _finish(state, kept, STRATEGY_OFFSET)


def prune_by_bid(state: LinearizedState, k_star: int) -> tuple[str, PruneReport]:
    """Keep the prefix up to and including the gold target position."""
    _check_target(state, k_star)
    kept = set(range(1, k_star + 1))
    return _finish(state, kept, STRATEGY_BID)


def prune_non_node(state: LinearizedState, budget: int) -> tuple[str, PruneReport]:
    """Keep a fixed-length prefix of indexed positions."""
    if budget < 0:
        raise PruneRangeError("budget must be >= 0")
    kept = set(range(1, min(budget, state.indexed_count) + 1))
    return _finish(state, kept, STRATEGY_PREFIX)


def leaf_positions(state: LinearizedState) -> list[int]:
    """Indexed nodes with no immediately-following deeper indexed node."""
    indexed = state.indexed_nodes()
    leaves = []
    for i, node in enumerate(indexed):
        if i + 1 == len(indexed) or indexed[i + 1].depth <= node.depth:
            leaves.append(node.position)
    return leaves


def _node_text(node: AXTreeNode) -> str:
    return f"{node.role} {node.name}".strip()


def _ancestor_chain(indexed: list[AXTreeNode], i: int) -> list[AXTreeNode]:
    chain: list[AXTreeNode] = []
    bar = indexed[i].depth
    for j in range(i - 1, -1, -1):
        if indexed[j].depth < bar:
            chain.append(indexed[j])
            bar = indexed[j].depth
            if bar == 0:
                break
    chain.reverse()
    return chain


def leaf_representation(state: LinearizedState, position: int) -> str:
    """Leaf text prefixed with its ancestor chain, for semantic ranking."""
    indexed = state.indexed_nodes()
    idx = next(i for i, n in enumerate(indexed) if n.position == position)
    parts = [_node_text(n) for n in _ancestor_chain(indexed, idx)]
    parts.append(_node_text(indexed[idx]))
    return " ".join(p for p in parts if p)


def prune_semantic(state: LinearizedState, query: str, k: int,
                   sim: SimilarityProvider) -> tuple[str, PruneReport]:
    """Keep the k leaf nodes most similar to the query, in document order."""
    if k < 1:
        raise PruneRangeError("semantic budget k must be >= 1")
    leaves = leaf_positions(state)
    reps = [leaf_representation(state, p) for p in leaves]
    scores = sim.sim_many([(query, rep) for rep in reps])
    ranked = sorted(zip(leaves, scores), key=lambda t: (-t[1], t[0]))
    kept = {p for p, _ in ranked[:k]}
    return _finish(state, kept, STRATEGY_SEMANTIC)


def prune_union(state: LinearizedState, k_star: int, w: int, query: str,
                k: int, sim: SimilarityProvider) -> tuple[str, PruneReport]:
    """Union of the target-centered window and the semantic top-k selection."""
    _, target_report = prune_target_centered(state, k_star, w)
    _, semantic_report = prune_semantic(state, query, k, sim)
    kept = set(target_report.kept_positions) | set(semantic_report.kept_positions)
    return _finish(state, kept, STRATEGY_UNION)


def prune_all(state: LinearizedState) -> tuple[str, PruneReport]:
    kept = set(range(1, state.indexed_count + 1))
    text = state.source_text
    report = PruneReport(
        kept_positions=tuple(sorted(kept)),
        tokens_before=count_tokens(text),
        tokens_after=count_tokens(text),
        strategy=STRATEGY_NONE,
    )
    return text, report


def prune_step(state: LinearizedState, config: PruneConfig, *,
               k_star: int | None, missing_target: bool = False,
               query: str | None = None,
               sim: SimilarityProvider | None = None) -> tuple[str, PruneReport]:
    """Prune one step's state per the configured strategy.

    ``k_star`` is None for non-node actions, which receive the fixed-prefix
    rule under the larger non-node budget. Node-grounded steps whose gold bid
    is absent (``missing_target=True``) fall back to the same prefix rule
    under the node budget and are flagged in the report.
    """
    if config.strategy == STRATEGY_NONE:
        return prune_all(state)
    if missing_target:
        text, report = prune_non_node(state, config.node_budget())
        return text, PruneReport(
            kept_positions=report.kept_positions,
            tokens_before=report.tokens_before,
            tokens_after=report.tokens_after,
            strategy=STRATEGY_PREFIX,
            missing_target_fallback=True,
        )
    if k_star is None:
        return prune_non_node(state, config.non_node_budget())
    if config.strategy == STRATEGY_TARGET:
        return prune_target_centered(state, k_star, config.window)
    if config.strategy == STRATEGY_OFFSET:
        return prune_offset(state, k_star, config.window, config.offset)
    if config.strategy == STRATEGY_BID:
        return prune_by_bid(state, k_star)
    if config.strategy == STRATEGY_SEMANTIC:
        if sim is None or query is None:
            raise ValueError("semantic pruning requires a query and a provider")
        return prune_semantic(state, query, config.semantic_k, sim)
    if config.strategy == STRATEGY_UNION:
        if sim is None or query is None:
            raise ValueError("union pruning requires a query and a provider")
        return prune_union(state, k_star, config.window, query,
                           config.semantic_k, sim)
    raise ValueError(f"unknown prune strategy {config.strategy!r}")
