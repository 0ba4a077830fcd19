from __future__ import annotations

import random

import pytest

from covertsyn.automata import Alphabet, Automaton, bounded_equal, marked_reachable, sync_product
from covertsyn.constructions import (
    AttackConstraint,
    ConstructionError,
    ControlConstraint,
    EMBEDDED_MODE,
    PLAIN_MODE,
    Scenario,
    surrogate_plant,
)
from covertsyn.synthesis import EMPTY, attacker_problem, synthesize_safe, universal_agent
from covertsyn.verify import (
    EMBEDDED,
    SUCCESS,
    TWO_STEP,
    UNVERIFIED,
    attacker_control,
    compare_products,
    covertness_check,
    damage_product,
    monitor_product,
    pipeline,
    verify_covertness_against,
    verify_damage_reachability,
    verify_equality_products,
)
from gen import random_attack_scenario, random_scenario
from oracles import included


def synth(scn, mode=PLAIN_MODE):
    prod, bad = surrogate_plant(scn, mode)
    ctrl, obs = attacker_control(scn)
    return synthesize_safe(attacker_problem(prod, bad, ctrl, obs))


def surrogate_alphabet(scn):
    return surrogate_plant(scn, PLAIN_MODE)[0].alphabet


def scenario(events, ctrl, obs, plant, bad, log, sensors, supervisor=None, actuators=()):
    control = ControlConstraint(tuple(events), frozenset(ctrl), frozenset(obs))
    alpha = Alphabet.of(events)
    g = Automaton.from_transitions(alpha, plant, "q0", [], ())
    m_o = Automaton.from_transitions(alpha, log, "u0", [], ("u0",))
    m_o = m_o.with_alphabet(control.alphabet([e for e in events if e in obs]))
    s = None
    if supervisor is not None:
        s = Automaton.from_transitions(alpha, supervisor, "x0", [], ())
    t = AttackConstraint.total(frozenset(obs), frozenset(actuators), tuple(sensors))
    scn = Scenario(g, bad, control, m_o, t, s, "toy")
    scn.validate()
    return scn


def lie_needed_toy():
    # damage needs c, and the log only ever shows b before c
    return scenario(
        ["a", "b", "c"], ["c"], ["a", "b", "c"],
        [("q0", "a", "q1"), ("q0", "b", "q2"), ("q1", "c", "bad"), ("q2", "c", "q0")], "bad",
        [("u0", "b", "u1"), ("u1", "c", "u2")], ["a", "b"],
    )


def everything_disabled(alphabet: Alphabet, ctrl) -> Automaton:
    row = {e: 0 for e in alphabet.names if e not in ctrl}
    return Automaton(alphabet, ("y",), (row,), 0, frozenset({0}), "Off")


class TestDamageReachability:
    def test_water_tank_two_step(self, water_tank):
        r = synth(water_tank)
        ok, w = verify_damage_reachability(water_tank, r.attacker)
        assert ok
        prod = damage_product(water_tank, r.attacker)
        end = w.replay(prod)
        assert end in prod.marked
        assert prod.parts[end][0] == water_tank.gt.state(water_tank.bad_state)

    def test_lie_toy_is_attackable(self):
        scn = lie_needed_toy()
        r = synth(scn)
        assert r.nonempty and verify_damage_reachability(scn, r.attacker)[0]

    def test_everything_disabled_attacker(self):
        scn = lie_needed_toy()
        ctrl, _ = attacker_control(scn)
        off = everything_disabled(surrogate_alphabet(scn), ctrl)
        assert verify_damage_reachability(scn, off) == (False, None)

    def test_empty_log(self):
        scn = scenario(
            ["a", "b", "c"], ["c"], ["a", "b", "c"],
            [("q0", "a", "q0"), ("q0", "c", "bad")], "bad", [], ["a", "b"],
        )
        universal = universal_agent(surrogate_alphabet(scn))
        assert verify_damage_reachability(scn, universal)[0] is False


class TestCovertness:
    def test_water_tank_attacker(self, water_tank):
        r = synth(water_tank)
        assert verify_covertness_against(water_tank, r.attacker) == (True, None)
        c = covertness_check(water_tank, r.attacker)
        assert c.damage_reachable and not c.detection_reachable

    def test_universal_attacker_exposed(self, water_tank):
        u = universal_agent(surrogate_alphabet(water_tank))
        covert, w = verify_covertness_against(water_tank, u)
        assert not covert
        c = covertness_check(water_tank, u)
        loop = sync_product(water_tank.gt, water_tank.bt_concrete, water_tank.ma_concrete,
                            water_tank.gsa, water_tank.gce, u)
        end = w.replay(loop)
        ma = water_tank.ma_concrete
        assert loop.parts[end][2] == ma.state(frozenset())
        assert loop.parts[end][0] != water_tank.gt.state(water_tank.bad_state)
        assert w.events[-1].endswith("#")
        # sensors are uncontrollable, so the supervisor never rejects a copy itself
        assert not c.detection_reachable

    def test_indistinguishable_lies(self):
        # a and b both self-loop in the only monitor cell, so any swap looks normal
        scn = scenario(
            ["a", "b", "c"], ["c"], ["a", "b", "c"],
            [("q0", "a", "q0"), ("q0", "b", "q0"), ("q0", "c", "bad")], "bad",
            [("u0", "a", "u1")], ["a", "b"],
            supervisor=[("x0", "a", "x0"), ("x0", "b", "x0")],
        )
        u = universal_agent(surrogate_alphabet(scn))
        c = covertness_check(scn, u)
        assert c.covert and not c.damage_reachable

    def test_requires_supervisor(self):
        scn = lie_needed_toy()
        with pytest.raises(ConstructionError):
            verify_covertness_against(scn, universal_agent(surrogate_alphabet(scn)))

    def test_explicit_supervisor_argument(self, water_tank):
        r = synth(water_tank)
        assert covertness_check(water_tank, r.attacker, water_tank.supervisor).covert


class TestProductIdentity:
    def test_water_tank_k10(self, water_tank):
        for mode in (PLAIN_MODE, EMBEDDED_MODE):
            r = synth(water_tank, mode)
            assert verify_equality_products(water_tank, r.attacker, 10)

    def test_k0(self, water_tank):
        assert verify_equality_products(water_tank, synth(water_tank).attacker, 0)

    def test_honest_damage_counterexample(self, toy_uncontrollable):
        # damage without any lie: the monitor side marks it, the forcing side never does
        r = synth(toy_uncontrollable)
        ok, w = compare_products(toy_uncontrollable, r.attacker, 4)
        assert not ok
        assert monitor_product(toy_uncontrollable, r.attacker).accepts(w.events, True)
        assert not damage_product(toy_uncontrollable, r.attacker).accepts(w.events, True)

    @pytest.mark.parametrize("seed", range(24))
    def test_inclusion_and_restricted_equality(self, seed):
        scn = random_scenario(random.Random(seed))
        r = synth(scn)
        lhs = damage_product(scn, r.attacker)
        rhs = monitor_product(scn, r.attacker)
        assert included(lhs, rhs, marked=True)
        restricted = sync_product(rhs, scn.gaf, scn.mot)
        assert included(restricted, lhs, marked=True)
        assert bounded_equal(restricted, lhs, 6)[0]


def _attack_scenarios(count, seed):
    rng = random.Random(seed)
    return [random_attack_scenario(rng) for _ in range(count)]


class TestRandomized:
    def test_completeness_when_controllables_observed(self):
        checked = 0
        for scn in _attack_scenarios(150, seed=31):
            assert scn.control.controllable <= scn.control.observable
            plain = synth(scn)
            two_step = plain.nonempty and verify_damage_reachability(scn, plain.attacker)[0]
            if two_step:
                continue
            emb = synth(scn, EMBEDDED_MODE)
            assert not (emb.nonempty and marked_reachable(emb.closed_loop) is not None)
            checked += 1
        assert checked >= 100

    def test_embedded_success_is_sound(self):
        successes = 0
        for scn in _attack_scenarios(400, seed=17):
            emb = synth(scn, EMBEDDED_MODE)
            if not (emb.nonempty and marked_reachable(emb.closed_loop) is not None):
                continue
            successes += 1
            c = covertness_check(scn, emb.attacker)
            assert c.covert and c.damage_reachable
            assert verify_damage_reachability(scn, emb.attacker)[0]
        assert successes >= 3

    def test_witnesses_replay(self):
        for scn in _attack_scenarios(60, seed=8):
            r = synth(scn)
            if not r.nonempty:
                continue
            ok, w = verify_damage_reachability(scn, r.attacker)
            if ok:
                prod = damage_product(scn, r.attacker)
                assert w.replay(prod) in prod.marked
            c = covertness_check(scn, r.attacker)
            loop = sync_product(scn.gt, scn.bt_concrete, scn.ma_concrete, scn.gsa, scn.gce, r.attacker)
            if c.witness is not None:
                assert loop.parts[c.witness.replay(loop)][2] in {scn.ma_concrete.state(frozenset()),
                                                               len(scn.ma_concrete) - 1}
            if c.damage_witness is not None:
                end = c.damage_witness.replay(loop)
                assert loop.parts[end][0] == scn.gt.state(scn.bad_state)


class TestPipeline:
    def test_water_tank_modes_agree(self, water_tank):
        two = pipeline(water_tank, TWO_STEP)
        emb = pipeline(water_tank, EMBEDDED)
        assert two.status == emb.status == SUCCESS
        assert two.covert and two.damage_reachable and emb.covert and emb.damage_reachable

    def test_toy(self, toy_uncontrollable):
        assert pipeline(toy_uncontrollable, EMBEDDED).status == EMPTY
        rep = pipeline(toy_uncontrollable, TWO_STEP)
        assert rep.status == UNVERIFIED and rep.attacker is not None

    def test_empty_report_has_no_attacker(self, toy_uncontrollable):
        rep = pipeline(toy_uncontrollable, EMBEDDED)
        assert rep.attacker is None and rep.closed_loop is None
        kv = rep.as_kv()
        assert kv["covert"] == kv["damage_reachable"] == "false"
        assert kv["attacker_states"] == "0"

    def test_report_keys(self, water_tank):
        kv = pipeline(water_tank).as_kv()
        for key in ("status", "covert", "damage_reachable", "attacker_states", "surrogate_states", "witness"):
            assert key in kv
        assert "exposing" not in pipeline(water_tank).render_text()

    def test_unknown_mode(self, water_tank):
        with pytest.raises(ValueError):
            pipeline(water_tank, "sideways")
