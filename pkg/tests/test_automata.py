from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covertsyn.automata import (
    Alphabet,
    AlphabetConflict,
    Automaton,
    AutomatonError,
    Event,
    NondeterminismError,
    Witness,
    bounded_equal,
    bounded_language,
    command_event,
    completion,
    find_path,
    marked_reachable,
    minimize,
    observer,
    reachable_trim,
    sync_product,
    unobservable_reach,
)
from gen import automata
from oracles import all_strings, product_language, projected_member


def build(events, trans, initial="s0", marked=(), states=(), **tags):
    return Automaton.from_transitions(Alphabet.of(events, **tags), trans, initial, marked, states)


class TestEvents:
    def test_kinds_from_names(self):
        assert Event.from_name("$").kind == "dollar"
        assert Event.from_name("L#").base == "L"
        cmd = Event.from_name("cmd[close,open]")
        assert cmd.kind == "command" and cmd.enabled == {"open", "close"}
        assert Event.from_name("cmd[]").enabled == frozenset()

    @pytest.mark.parametrize("bad", ["cmd[open,close]", "cmd[a,a]", "1x", "a b", "a##", ""])
    def test_rejects_malformed(self, bad):
        with pytest.raises(AutomatonError):
            Event.from_name(bad)

    def test_command_naming_sorted(self):
        assert command_event(["open", "close"]).name == "cmd[close,open]"


class TestAlphabet:
    def test_derived_sets(self):
        a = Alphabet.of(["a", "b", "c"], observable=["a", "b"], controllable=["b"])
        assert a.unobservable == {"c"}
        assert a.uncontrollable == {"a", "c"}

    def test_merge_conflict_on_tags(self):
        x = Alphabet.of(["a"], controllable=["a"])
        y = Alphabet.of(["a"])
        with pytest.raises(AlphabetConflict):
            x.merge(y)

    def test_duplicate_names(self):
        with pytest.raises(AutomatonError):
            Alphabet.of(["a", "a"])


class TestAutomaton:
    def test_nondeterminism_rejected(self):
        with pytest.raises(NondeterminismError):
            build(["a"], [("s0", "a", "s1"), ("s0", "a", "s2")])

    def test_unknown_event_rejected(self):
        with pytest.raises(AutomatonError):
            build(["a"], [("s0", "b", "s1")])

    def test_delta_is_read_only(self):
        g = build(["a"], [("s0", "a", "s1")])
        with pytest.raises(TypeError):
            g.delta[0]["a"] = 0

    def test_isolated_state_kept(self):
        g = build(["a"], [], states=["s0", "lonely"])
        assert len(g) == 2 and g.has_state("lonely")


class TestProductExamples:
    def test_disjoint_shuffle(self):
        a = build(["x"], [("s0", "x", "s0")], marked=["s0"])
        b = build(["y"], [("s0", "y", "s0")], marked=["s0"])
        p = sync_product(a, b)
        assert len(p) == 1
        assert dict(p.delta[0]) == {"x": 0, "y": 0}
        assert p.marked == {0}

    def test_shared_event_synchronizes(self):
        a = build(["x"], [("s0", "x", "s1")])
        b = build(["x"], [("t0", "x", "t1"), ("t1", "x", "t2")], initial="t0")
        p = sync_product(a, b)
        assert p.labels == (("s0", "t0"), ("s1", "t1"))
        assert sum(len(r) for r in p.delta) == 1

    @settings(max_examples=40, deadline=None)
    @given(automata())
    def test_idempotent_on_languages(self, a):
        p = sync_product(a, a)
        for k in range(9):
            assert bounded_language(p, k) == bounded_language(a, k)

    def test_n_ary_parts(self):
        a = build(["x"], [("s0", "x", "s1")])
        p = sync_product(a, a, a)
        assert p.parts == ((0, 0, 0), (1, 1, 1))


class TestUnobservableReach:
    def test_empty_hidden(self):
        g = build(["u"], [("q0", "u", "q1")], initial="q0")
        assert unobservable_reach(g, [0], []) == {0}

    def test_chain(self):
        g = build(["u", "a"], [("q0", "u", "q1"), ("q1", "u", "q2")], initial="q0")
        assert unobservable_reach(g, [0], ["u"]) == {0, 1, 2}

    def test_no_hidden_move(self):
        g = build(["a", "u"], [("q0", "a", "q1")], initial="q0")
        assert unobservable_reach(g, [0], ["u"]) == {0}


class TestObserver:
    def test_hand_example(self):
        g = build(["u", "b"], [("q0", "u", "q1"), ("q1", "b", "q2")], initial="q0")
        o = observer(g, ["b"])
        assert o.labels == (frozenset({"q0", "q1"}), frozenset({"q2"}))
        assert dict(o.delta[0]) == {"b": 1, "u": 0}
        assert dict(o.delta[1]) == {"u": 1}

    def test_full_observation_is_isomorphic(self):
        g = build(["a", "b"], [("s0", "a", "s1"), ("s1", "b", "s0"), ("s1", "a", "s2")])
        o = observer(g, ["a", "b"])
        assert len(o) == len(g)
        assert all(len(c) == 1 for c in o.labels)
        assert bounded_equal(o, g, 8, marked_only=False)[0]

    def test_materialized_empty_cell(self):
        g = build(["a", "b"], [("s0", "a", "s1")])
        o = observer(g, ["a", "b"], materialize_empty=True)
        empty = o.state(frozenset())
        assert o.delta[0]["b"] == empty
        assert not o.delta[empty]

    def test_marking(self):
        g = build(["u", "a"], [("s0", "u", "s1"), ("s1", "a", "s2")], marked=["s1"])
        o = observer(g, ["a"])
        assert o.marked == {0}


class TestCompletion:
    def test_single_state(self):
        g = build(["a"], [])
        c = completion(g)
        assert len(c) == 2
        assert c.delta[0]["a"] == 1 and c.delta[1]["a"] == 1
        assert c.state_name(1) == "dump"

    def test_complete_input_only_gains_dump(self):
        g = build(["a"], [("s0", "a", "s0")], marked=["s0"])
        c = completion(g)
        targets = {t for r in c.delta for t in r.values()}
        assert targets == {0, 1} and c.delta[0]["a"] == 0
        for k in range(9):
            assert bounded_language(c, k, True) == bounded_language(g, k, True)

    def test_fresh_dump_label(self):
        g = build(["a"], [], states=["s0", "dump"])
        assert completion(g).state_name(2) == "dump'"


class TestBoundedLanguage:
    def test_k_zero(self):
        assert bounded_language(build(["a"], []), 0) == {()}

    def test_marked(self):
        g = build(["a"], [("s0", "a", "s1")], marked=["s1"])
        assert bounded_language(g, 2, True) == {("a",)}

    def test_negative_k(self):
        with pytest.raises(ValueError):
            bounded_language(build(["a"], []), -1)


class TestWitnesses:
    def test_initial_marked(self):
        g = build(["a"], [], marked=["s0"])
        assert marked_reachable(g) == Witness(())
        assert str(marked_reachable(g)) == "ε"

    def test_none_marked(self):
        assert marked_reachable(build(["a"], [("s0", "a", "s1")])) is None

    def test_tie_break_lowest_event_index(self):
        # both a and b reach a marked state in one step; a comes first in the alphabet
        g = build(["b", "a"], [("s0", "a", "s1"), ("s0", "b", "s2")], marked=["s1", "s2"])
        assert marked_reachable(g).events == ("b",)

    def test_shortest(self):
        g = build(["a", "b"], [("s0", "a", "s1"), ("s1", "a", "s2"), ("s0", "b", "s2")], marked=["s2"])
        w = find_path(g, g.marked.__contains__)
        assert w.events == ("b",)
        assert w.replay(g) == g.state("s2")

    def test_replay_failure(self):
        g = build(["a"], [])
        with pytest.raises(AutomatonError):
            Witness(("a",)).replay(g)


class TestMinimize:
    def test_trim_identity(self):
        g = build(["a"], [("s0", "a", "s1")], marked=["s1"], states=["s0", "s1", "orphan"])
        t = reachable_trim(g)
        assert len(t) == 2

    def test_parallel_branches_merge(self):
        g = build(
            ["a", "b", "c"],
            [("s0", "a", "p"), ("s0", "b", "q"), ("p", "c", "end"), ("q", "c", "end")],
            marked=["end"],
        )
        assert len(g) == 4
        m = minimize(g)
        assert len(m) == 3
        assert bounded_equal(m, g, 8)[0] and bounded_equal(m, g, 8, marked_only=False)[0]


class TestBoundedEqual:
    def test_counterexample_is_shortest(self):
        a = build(["a"], [("s0", "a", "s0")], marked=["s0"])
        b = build(["a"], [("s0", "a", "s1"), ("s1", "a", "s1")], marked=["s0"])
        ok, w = bounded_equal(a, b, 5)
        assert not ok and w.events == ("a",)

    def test_equal(self):
        a = build(["a"], [("s0", "a", "s0")], marked=["s0"])
        assert bounded_equal(a, a, 6) == (True, None)


# -- randomized kernel properties -------------------------------------------

KERNEL_SETTINGS = settings(max_examples=120, deadline=None, derandomize=True)


@KERNEL_SETTINGS
@given(automata(name="A"), automata(name="B"), st.booleans())
def test_product_matches_projection_definition(a, b, marked):
    p = sync_product(a, b)
    assert bounded_language(p, 8, marked) == product_language(a, b, 8, marked)


@KERNEL_SETTINGS
@given(automata(), st.data())
def test_observer_matches_projection_definition(g, data):
    names = list(g.alphabet.names)
    visible = data.draw(st.sets(st.sampled_from(names)))
    o = observer(g, visible)
    hidden = set(names) - visible
    for s in o.states:
        for ev in hidden:
            assert o.delta[s].get(ev) == s
    for w in all_strings(names, 5):
        member, marked = projected_member(g, visible, tuple(e for e in w if e in visible))
        assert o.accepts(w) == member
        assert o.accepts(w, True) == marked


@KERNEL_SETTINGS
@given(automata())
def test_completion_total_and_marking_preserved(g):
    c = completion(g)
    assert c.is_complete()
    assert bounded_language(c, 8, True) == bounded_language(g, 8, True)
    assert bounded_language(c, 4) == all_strings(g.alphabet.names, 4)


@KERNEL_SETTINGS
@given(automata())
def test_minimize_preserves_languages(g):
    m = minimize(g)
    assert len(m) <= len(reachable_trim(g))
    assert bounded_language(m, 8) == bounded_language(g, 8)
    assert bounded_language(m, 8, True) == bounded_language(g, 8, True)


@KERNEL_SETTINGS
@given(automata(name="A"), automata(name="B"))
def test_bounded_equal_agrees_with_enumeration(a, b):
    for marked in (True, False):
        ok, w = bounded_equal(a, b, 6, marked)
        assert ok == (bounded_language(a, 6, marked) == bounded_language(b, 6, marked))
        if w is not None:
            assert a.accepts(w.events, marked) != b.accepts(w.events, marked)


@settings(max_examples=60, deadline=None)
@given(automata(name="A"), automata(name="B"))
def test_operations_do_not_mutate(a, b):
    before = (a.delta, a.labels, a.marked, b.delta)
    snap = [dict(r) for r in a.delta]
    sync_product(a, b)
    observer(a, list(a.alphabet.names)[:1])
    completion(a)
    minimize(a)
    assert (a.delta, a.labels, a.marked, b.delta) == before
    assert [dict(r) for r in a.delta] == snap

