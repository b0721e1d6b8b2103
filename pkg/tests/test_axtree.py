import random

import pytest
from hypothesis import given, strategies as st

from stepsift.axtree import (DuplicateBidError, MissingTargetError,
                             count_tokens, find_target, parse_state)
from stepsift.trajectory import Action

from conftest import DEMO_STATE, build_random_state


class TestParseState:
    def test_single_node_line(self):
        state = parse_state("[a12] link 'Home'")
        node = state.nodes[0]
        assert (node.bid, node.role, node.name) == ("a12", "link", "Home")
        assert node.position == 1
        assert state.indexed_count == 1

    def test_empty_string(self):
        state = parse_state("")
        assert state.nodes == ()
        assert state.indexed_count == 0

    def test_duplicate_bid_raises(self):
        text = "[a12] link 'Home'\n[a12] link 'Away'"
        with pytest.raises(DuplicateBidError, match="a12"):
            parse_state(text)

    def test_unparseable_line_demoted_to_static(self):
        state = parse_state("some stray text\n[a1] link 'Home'")
        assert state.nodes[0].role == "Static"
        assert state.nodes[0].position is None
        assert state.nodes[0].name == "some stray text"
        assert state.indexed_count == 1

    def test_static_excluded_from_indexed_count(self):
        state = parse_state(DEMO_STATE)
        assert state.indexed_count == 10
        assert len(state.nodes) == 12

    def test_depth_from_tabs(self):
        state = parse_state(DEMO_STATE)
        assert state.node_at(1).depth == 1
        assert state.node_at(6).depth == 2

    def test_depth_from_spaces(self):
        text = "[a1] list 'Menu'\n  [a2] listitem 'One'\n    [a3] link 'Two'"
        state = parse_state(text)
        assert [n.depth for n in state.nodes] == [0, 1, 2]

    def test_name_with_escaped_quote(self):
        state = parse_state(r"[a1] link 'it\'s here'")
        assert state.nodes[0].name == "it's here"

    def test_trailing_attributes_tolerated(self):
        state = parse_state("[a1] button 'Search', disabled")
        assert state.nodes[0].role == "button"
        assert state.nodes[0].name == "Search"

    def test_reconstruct_is_lossless(self):
        state = parse_state(DEMO_STATE)
        assert state.reconstruct() == DEMO_STATE

    @given(st.integers(min_value=0, max_value=2**32 - 1),
           st.integers(min_value=1, max_value=40))
    def test_parse_lossless_on_random_states(self, seed, n):
        text = build_random_state(random.Random(seed), n)
        state = parse_state(text)
        assert state.reconstruct() == text
        assert state.indexed_count == n
        positions = [node.position for node in state.nodes
                     if node.position is not None]
        assert positions == list(range(1, n + 1))


class TestFindTarget:
    def test_lookup_by_bid(self, demo_state):
        action = Action("node", "click", bid="a2")
        assert find_target(demo_state, action) == 2

    def test_non_node_returns_none(self, demo_state):
        action = Action("non_node", "goto", args=("https://x.test",))
        assert find_target(demo_state, action) is None

    def test_missing_bid_raises(self, demo_state):
        action = Action("node", "click", bid="z9")
        with pytest.raises(MissingTargetError, match="z9"):
            find_target(demo_state, action)

    def test_pure_function(self, demo_state):
        action = Action("node", "click", bid="a7")
        assert find_target(demo_state, action) == find_target(demo_state, action)

    def test_every_corpus_node_step_resolves(self, corpus):
        for traj in corpus:
            for step in traj.steps:
                if step.action.kind == "node":
                    state = parse_state(step.state_raw)
                    assert find_target(state, step.action) is not None


class TestCountTokens:
    def test_empty(self):
        assert count_tokens("") == 0

    def test_three_words(self):
        assert count_tokens("click the button") == 3

    def test_two_line_sample_sums_per_line_counts(self):
        # hand count: "[a1] link 'Home'" -> 3; "[a2] button 'Add to cart'" -> 5
        text = "[a1] link 'Home'\n[a2] button 'Add to cart'"
        assert count_tokens(text) == 8
        assert count_tokens(text) == sum(count_tokens(ln) for ln in text.splitlines())
