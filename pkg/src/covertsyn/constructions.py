"""Builders for the attack-synthesis automata.

Covers the command set, the transformed plant, the sensor-attack and
attack-forcing automata, the transformed observation automaton, the
under-approximating supervisor built from the observation log, the attacked
supervisor, monitor and command-execution automata, and the surrogate plants
that tie them together.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Hashable, Iterable, Mapping

from .automata import (
    DOLLAR_NAME,
    Alphabet,
    Automaton,
    AutomatonError,
    Event,
    bounded_language,
    command_event,
    completion,
    fresh_label,
    observer,
    sync_product,
)

MAX_CONTROLLABLE = 16


class ConstructionError(AutomatonError):
    """Invalid scenario input for one of the builders."""


class SupervisorError(ConstructionError):
    """An automaton violates the supervisor controllability/observability rules."""


@dataclass(frozen=True)
class ControlConstraint:
    """Plant alphabet plus the supervisor's controllable/observable subsets."""

    events: tuple[str, ...]
    controllable: frozenset[str]
    observable: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "controllable", frozenset(self.controllable))
        object.__setattr__(self, "observable", frozenset(self.observable))
        known = set(self.events)
        if not self.controllable <= known or not self.observable <= known:
            raise ConstructionError("control constraint mentions events outside the plant alphabet")

    @property
    def uncontrollable(self) -> frozenset[str]:
        return frozenset(self.events) - self.controllable

    @property
    def unobservable(self) -> frozenset[str]:
        return frozenset(self.events) - self.observable

    def alphabet(self, events: Iterable[str | Event]) -> Alphabet:
        """Alphabet tagged consistently for every builder.

        Plain events take the supervisor's tags; #-copies count as observable;
        commands and ``$`` are neither observable nor controllable.
        """
        evs = [e if isinstance(e, Event) else Event.from_name(e) for e in events]
        obs = [e.name for e in evs if (e.kind == "plain" and e.name in self.observable) or e.kind == "hash"]
        ctrl = [e.name for e in evs if e.kind == "plain" and e.name in self.controllable]
        return Alphabet.of(evs, observable=obs, controllable=ctrl)

    def tag(self, a: Automaton) -> Automaton:
        """Reattach this constraint's role tags to an automaton (e.g. one parsed from a file)."""
        return a.with_alphabet(self.alphabet(a.alphabet.events))


@dataclass(frozen=True)
class AttackConstraint:
    """Attacker observation set, compromised actuators and sensors, and R."""

    sigma_o: frozenset[str]
    sigma_aA: frozenset[str]
    sigma_sA: tuple[str, ...]
    R: Mapping[str, frozenset[str]] = field(hash=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma_o", frozenset(self.sigma_o))
        object.__setattr__(self, "sigma_aA", frozenset(self.sigma_aA))
        object.__setattr__(self, "sigma_sA", tuple(self.sigma_sA))
        object.__setattr__(self, "R", {k: frozenset(v) for k, v in self.R.items()})
        sens = set(self.sigma_sA)
        if len(sens) != len(self.sigma_sA):
            raise ConstructionError("duplicate compromised sensor events")
        if set(self.R) != sens:
            raise ConstructionError("R must have exactly one row per compromised sensor")
        for s, row in self.R.items():
            if not row <= sens:
                raise ConstructionError(f"R[{s}] mentions events outside the compromised sensors")
            if s not in row:
                raise ConstructionError(f"R[{s}] must contain {s}")
            if not row - {s}:
                raise ConstructionError(f"R[{s}] must offer at least one replacement")

    @classmethod
    def total(cls, sigma_o, sigma_aA, sigma_sA) -> AttackConstraint:
        """Constraint whose relation is the full square over the sensors."""
        sens = tuple(sigma_sA)
        return cls(frozenset(sigma_o), frozenset(sigma_aA), sens, {s: frozenset(sens) for s in sens})

    def validate(self, control: ControlConstraint) -> None:
        if not self.sigma_aA <= control.controllable:
            raise ConstructionError("compromised actuators must be controllable")
        if not set(self.sigma_sA) <= control.observable:
            raise ConstructionError("compromised sensors must be observable")
        if self.sigma_o != control.observable:
            raise ConstructionError("attacker and supervisor must observe the same events")

    @property
    def hashed(self) -> tuple[str, ...]:
        return tuple(s + "#" for s in self.sigma_sA)

    def attacker_controllable(self) -> frozenset[str]:
        return self.sigma_aA | frozenset(self.hashed)

    def attacker_observable(self) -> frozenset[str]:
        return self.sigma_o | frozenset(self.hashed)


@dataclass(frozen=True)
class CommandSet:
    """Control commands; each command enables all uncontrollables plus its own part."""

    commands: tuple[Event, ...]
    uncontrollable: frozenset[str]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.commands)

    def enabled(self, cmd: Event | str) -> frozenset[str]:
        if isinstance(cmd, str):
            cmd = Event.from_name(cmd)
        return self.uncontrollable | cmd.enabled

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def __len__(self) -> int:
        return len(self.commands)

    def __iter__(self):
        return iter(self.commands)


def build_gamma(control: ControlConstraint, restrict_to: Iterable[Iterable[str]] | None = None) -> CommandSet:
    """All commands Σ_uc ∪ C for C ⊆ Σ_c, or only the given controllable subsets."""
    ctrl = sorted(control.controllable)
    if restrict_to is None:
        if len(ctrl) > MAX_CONTROLLABLE:
            raise ConstructionError(f"refusing to build 2^{len(ctrl)} commands")
        subsets = [c for r in range(len(ctrl) + 1) for c in combinations(ctrl, r)]
    else:
        subsets = []
        for sub in restrict_to:
            sub = frozenset(sub)
            if not sub <= control.controllable:
                raise ConstructionError(f"command subset {sorted(sub)} has non-controllable events")
            subsets.append(tuple(sorted(sub)))
        subsets = sorted(set(subsets), key=lambda c: (len(c), c))
    return CommandSet(tuple(command_event(c) for c in subsets), control.uncontrollable)


def as_control(source: ControlConstraint | Alphabet | Automaton) -> ControlConstraint:
    """Control constraint carried by the role tags of an alphabet's plain events."""
    if isinstance(source, ControlConstraint):
        return source
    alphabet = source.alphabet if isinstance(source, Automaton) else source
    plain = tuple(e.name for e in alphabet if e.kind == "plain")
    return ControlConstraint(plain, alphabet.controllable & set(plain), alphabet.observable & set(plain))


def check_supervisor(s: Automaton, control: ControlConstraint) -> None:
    """Raise SupervisorError unless ``s`` is a supervisor over ``control``."""
    if set(s.alphabet.names) != set(control.events):
        raise SupervisorError("supervisor alphabet must equal the plant alphabet")
    for x in s.states:
        row = s.delta[x]
        for ev in control.uncontrollable:
            if ev not in row:
                raise SupervisorError(f"state {s.state_name(x)} disables uncontrollable {ev}")
        for ev in control.unobservable:
            if ev in row and row[ev] != x:
                raise SupervisorError(f"state {s.state_name(x)} moves on unobservable {ev}")


def command_of(s: Automaton, x: int, control: ControlConstraint) -> Event:
    return command_event(ev for ev in s.delta[x] if ev in control.controllable)


def _label(a: Automaton, label: Hashable) -> int:
    try:
        return a.state(label)
    except KeyError:
        raise ConstructionError(f"{a.name or 'automaton'} has no state {label!r}") from None


def transform_plant(g: Automaton, q_bad: Hashable, t: AttackConstraint, gamma: CommandSet,
                    control: ControlConstraint | None = None) -> Automaton:
    """Plant with the ``$`` escape, #-copies and commands self-looped before damage."""
    control = as_control(control or g)
    bad = _label(g, q_bad)
    if g.delta[bad]:
        raise ConstructionError(f"bad state {q_bad!r} is not deadlocked")
    if bad == g.initial:
        raise ConstructionError("bad state must differ from the initial state")
    q_dollar = fresh_label(g.labels, "q$")
    loops = list(t.hashed) + list(gamma.names)
    alphabet = control.alphabet(list(g.alphabet.names) + list(t.hashed) + [DOLLAR_NAME] + list(gamma.names))
    new = len(g)
    rows = []
    for q in g.states:
        row = dict(g.delta[q])
        if q != bad:
            row[DOLLAR_NAME] = new
            for ev in loops:
                row[ev] = q
        rows.append(row)
    rows.append({})
    return Automaton(alphabet, g.labels + (q_dollar,), tuple(rows), g.initial,
                     frozenset({bad}), "GT")


def build_sensor_attack(t: AttackConstraint, sigma: Alphabet | ControlConstraint) -> Automaton:
    """Unconstrained sensor-replacement automaton (|Σ_sA| + 1 states, all marked)."""
    control = as_control(sigma)
    alphabet = control.alphabet(list(control.events) + list(t.hashed))
    trans = []
    for s in t.sigma_sA:
        trans.append(("q_init", s, f"q^{s}"))
        for s2 in sorted(t.R[s], key=t.sigma_sA.index):
            trans.append((f"q^{s}", s2 + "#", "q_init"))
    for ev in control.events:
        if ev not in t.sigma_sA:
            trans.append(("q_init", ev, "q_init"))
    states = ["q_init"] + [f"q^{s}" for s in t.sigma_sA]
    return Automaton.from_transitions(alphabet, trans, "q_init", marked=states, states=states, name="GSA")


def transform_observation(m_o: Automaton, t: AttackConstraint,
                          control: ControlConstraint | None = None) -> Automaton:
    """Observation automaton extended with the outside-the-log state u! and u$."""
    if control is None:
        events = tuple(m_o.alphabet.names) + tuple(sorted(t.sigma_o - set(m_o.alphabet.names)))
        control = ControlConstraint(events, m_o.alphabet.controllable, t.sigma_o)
    sens = set(t.sigma_sA)
    plain = [e for e in control.events if e in t.sigma_o and e not in sens]
    events = plain + list(t.hashed) + [DOLLAR_NAME]
    alphabet = control.alphabet(events)
    u_bang = fresh_label(m_o.labels, "u!")
    u_dollar = fresh_label(list(m_o.labels) + [u_bang], "u$")
    n = len(m_o)
    bang, dollar = n, n + 1
    rows = []
    for u in m_o.states:
        row = {}
        for ev in plain:
            row[ev] = m_o.delta[u].get(ev, bang)
        for s in t.sigma_sA:
            row[s + "#"] = m_o.delta[u].get(s, bang)
        rows.append(row)
    bang_row = {ev: bang for ev in plain}
    bang_row.update({s + "#": bang for s in t.sigma_sA})
    bang_row[DOLLAR_NAME] = dollar
    rows += [bang_row, {}]
    marked = frozenset(range(n)) | {bang}
    return Automaton(alphabet, m_o.labels + (u_bang, u_dollar), tuple(rows), m_o.initial, marked, "MOT")


def build_attack_forcing(t: AttackConstraint, control: ControlConstraint | None = None) -> Automaton:
    """Automaton marking runs in which some sensor reading was actually replaced.

    Without ``control`` the sensors are tagged observable and controllable
    only when they are compromised actuators.
    """
    if control is None:
        control = ControlConstraint(t.sigma_sA, t.sigma_aA & set(t.sigma_sA), frozenset(t.sigma_sA))
    alphabet = control.alphabet(list(t.sigma_sA) + list(t.hashed) + [DOLLAR_NAME])
    trans = []
    for s in t.sigma_sA:
        trans.append(("qAF0", s, f"qAF^{s}"))
        trans.append((f"qAF^{s}", s + "#", "qAF0"))
        for s2 in t.sigma_sA:
            if s2 != s:
                trans.append((f"qAF^{s}", s2 + "#", "qAF!"))
    trans.append(("qAF!", DOLLAR_NAME, "qAF$"))
    states = ["qAF0"] + [f"qAF^{s}" for s in t.sigma_sA] + ["qAF!", "qAF$"]
    return Automaton.from_transitions(alphabet, trans, "qAF0", marked=["qAF!"], states=states, name="GAF")


def deadlocked_sink(m_o: Automaton) -> int:
    """The unique deadlocked state of an observation automaton."""
    dead = [u for u in m_o.deadlocks() if u in m_o.reachable()]
    if len(dead) != 1:
        raise ConstructionError(f"observation automaton needs exactly one deadlocked state, found {len(dead)}")
    return dead[0]


def validate_observations(m_o: Automaton, control: ControlConstraint) -> None:
    """Structural checks: over Σ_o, acyclic (finite log), unique deadlocked sink."""
    if not set(m_o.alphabet.names) <= control.observable:
        raise ConstructionError("observation automaton uses unobservable events")
    deadlocked_sink(m_o)
    color: dict[int, int] = {}

    def visit(u):
        color[u] = 1
        for v in m_o.delta[u].values():
            if color.get(v) == 1:
                raise ConstructionError("observation automaton has a cycle (log must be finite)")
            if v not in color:
                visit(v)
        color[u] = 2

    visit(m_o.initial)


def build_under_supervisor(m_o: Automaton, control: ControlConstraint) -> Automaton:
    """Least-permissive supervisor consistent with the observation log."""
    sink = deadlocked_sink(m_o)
    obs = [e for e in control.events if e in control.observable]
    uc_uo = [e for e in control.events if e in control.uncontrollable and e in control.unobservable]
    uc_o = [e for e in control.events if e in control.uncontrollable and e in control.observable]
    rows = []
    for u in m_o.states:
        row = {ev: m_o.delta[u][ev] for ev in obs if ev in m_o.delta[u]}
        for ev in uc_uo:
            row[ev] = u
        for ev in uc_o:
            row.setdefault(ev, sink)
        rows.append(row)
    s = Automaton(control.alphabet(control.events), m_o.labels, tuple(rows), m_o.initial,
                  frozenset(m_o.states), "Sdown")
    check_supervisor(s, control)
    return s


def bt_attacked_supervisor(s: Automaton, t: AttackConstraint, gamma: CommandSet,
                           control: ControlConstraint | None = None) -> Automaton:
    """Attacked supervisor with an explicit command-sending phase.

    Control states ``<x>_com`` issue the command of ``x``; reaction states
    consume plant events (compromised ones as #-copies). Unexpected #-copies
    lead to the detection state ``x!``.
    """
    control = as_control(control or s)
    check_supervisor(s, control)
    sens = set(t.sigma_sA)
    n = len(s)
    # ids: reaction x -> x, control x -> n + x, detection -> 2n
    detect = 2 * n
    names = [s.state_name(x) for x in s.states]
    labels = tuple(names) + tuple(nm + "_com" for nm in names) + (fresh_label(names, "x!"),)
    rows: list[dict[str, int]] = [dict() for _ in range(2 * n + 1)]
    for x in s.states:
        cmd = command_of(s, x, control)
        if cmd.name not in gamma:
            raise ConstructionError(f"command {cmd.name} of state {names[x]} is not in Γ")
        rows[n + x][cmd.name] = x
        zeta = s.delta[x]
        for ev in control.events:
            if ev in control.unobservable:
                if ev in zeta:
                    rows[x][ev] = zeta[ev]
            elif ev not in sens:
                if ev in zeta:
                    rows[x][ev] = n + zeta[ev]
            else:
                rows[x][ev + "#"] = n + zeta[ev] if ev in zeta else detect
        for ev in t.sigma_sA:
            rows[x][ev] = x
            rows[n + x][ev] = n + x
    alphabet = control.alphabet(list(control.events) + list(t.hashed) + list(gamma.names))
    return Automaton(alphabet, labels, tuple(rows), n + s.initial, frozenset(range(2 * n + 1)), "BTA")


def attacked_monitor(s: Automaton, g: Automaton, t: AttackConstraint, gamma: CommandSet,
                     control: ControlConstraint | None = None) -> Automaton:
    """Observer of S||G fed #-copies, with the detection cell ∅ and its ``$`` exit."""
    control = as_control(control or g)
    base = observer(sync_product(s, g), control.observable, materialize_empty=True)
    empty_label = frozenset()
    labels = list(base.labels)
    rows = [dict() for _ in labels]
    if empty_label in base.labels:
        empty = base.state(empty_label)
    else:
        empty = len(labels)
        labels.append(empty_label)
        rows.append({})
    d_dollar = len(labels)
    labels.append(fresh_label(labels, "D$"))
    rows.append({})
    sens = set(t.sigma_sA)
    for d in base.states:
        if d == empty:
            continue
        for ev, nxt in base.delta[d].items():
            rows[d][ev + "#" if ev in sens else ev] = nxt
        for ev in list(t.sigma_sA) + list(gamma.names):
            rows[d][ev] = d
    rows[empty] = {DOLLAR_NAME: d_dollar}
    events = list(control.events) + list(t.hashed) + [DOLLAR_NAME] + list(gamma.names)
    marked = frozenset(range(len(labels))) - {d_dollar}
    return Automaton(control.alphabet(events), tuple(labels), tuple(rows), base.initial, marked, "MA")


def command_execution(gamma: CommandSet, sigma: Alphabet | ControlConstraint) -> Automaton:
    """Transducer from issued commands to executed plant events."""
    control = as_control(sigma)
    trans = []
    for cmd in gamma:
        q = f"q^{cmd.name}"
        trans.append(("q_wait", cmd.name, q))
        en = gamma.enabled(cmd)
        for ev in control.events:
            if ev in en:
                trans.append((q, ev, q if ev in control.unobservable else "q_wait"))
    states = ["q_wait"] + [f"q^{c.name}" for c in gamma]
    alphabet = control.alphabet(list(control.events) + list(gamma.names))
    return Automaton.from_transitions(alphabet, trans, "q_wait", marked=states, states=states, name="GCE")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Plant, bad state, control constraint, observation log and attack constraint.

    ``supervisor`` is an optional concrete supervisor used only to check
    synthesized attackers.
    """

    plant: Automaton
    bad_state: Hashable
    control: ControlConstraint
    observations: Automaton
    attack: AttackConstraint
    supervisor: Automaton | None = None
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "plant", self.control.tag(self.plant))
        object.__setattr__(self, "observations", self.control.tag(self.observations))
        if self.supervisor is not None:
            object.__setattr__(self, "supervisor", self.control.tag(self.supervisor))

    def validate(self) -> None:
        if set(self.plant.alphabet.names) != set(self.control.events):
            raise ConstructionError("plant alphabet differs from the control constraint's events")
        self.attack.validate(self.control)
        bad = _label(self.plant, self.bad_state)
        if self.plant.delta[bad]:
            raise ConstructionError("bad state is not deadlocked")
        if bad == self.plant.initial:
            raise ConstructionError("bad state must differ from the initial state")
        validate_observations(self.observations, self.control)
        if self.supervisor is not None:
            check_supervisor(self.supervisor, self.control)
            bad_obs = inconsistent_observation(self.supervisor, self.plant, self.observations, self.control)
            if bad_obs is not None:
                raise ConstructionError(
                    f"supervisor cannot produce observation {' '.join(bad_obs) or 'ε'}"
                )

    # cached builders; every one is a pure function of the fields

    @cached_property
    def gamma(self) -> CommandSet:
        return build_gamma(self.control)

    @cached_property
    def q_dollar(self) -> str:
        return self.gt.state_name(len(self.plant))

    @cached_property
    def gt(self) -> Automaton:
        return transform_plant(self.plant, self.bad_state, self.attack, self.gamma, self.control)

    @cached_property
    def gsa(self) -> Automaton:
        return build_sensor_attack(self.attack, self.control)

    @cached_property
    def mot(self) -> Automaton:
        return transform_observation(self.observations, self.attack, self.control)

    @cached_property
    def gaf(self) -> Automaton:
        return build_attack_forcing(self.attack, self.control)

    @cached_property
    def sdown(self) -> Automaton:
        return build_under_supervisor(self.observations, self.control)

    @cached_property
    def bt_sdown(self) -> Automaton:
        return bt_attacked_supervisor(self.sdown, self.attack, self.gamma, self.control)

    @cached_property
    def ma_sdown(self) -> Automaton:
        return attacked_monitor(self.sdown, self.plant, self.attack, self.gamma, self.control)

    @cached_property
    def gce(self) -> Automaton:
        return command_execution(self.gamma, self.control)

    def require_supervisor(self) -> Automaton:
        if self.supervisor is None:
            raise ConstructionError("scenario has no concrete supervisor")
        return self.supervisor

    @cached_property
    def bt_concrete(self) -> Automaton:
        return bt_attacked_supervisor(self.require_supervisor(), self.attack, self.gamma, self.control)

    @cached_property
    def ma_concrete(self) -> Automaton:
        return attacked_monitor(self.require_supervisor(), self.plant, self.attack, self.gamma, self.control)

    @cached_property
    def monitor(self) -> Automaton:
        """Unattacked monitor P_{Σ_o}(S||G) of the concrete supervisor, ∅ implicit."""
        return observer(sync_product(self.require_supervisor(), self.plant), self.control.observable)


def inconsistent_observation(s: Automaton, g: Automaton, m_o: Automaton,
                             control: ControlConstraint) -> tuple[str, ...] | None:
    """First logged observation the closed loop S||G cannot produce, if any."""
    mon = observer(sync_product(s, g), control.observable)
    longest = _longest(m_o)
    for w in sorted(bounded_language(m_o, longest + 2), key=lambda w: (len(w), w)):
        if mon.run(w) is None:
            return w
    return None


def _longest(m_o: Automaton) -> int:
    memo: dict[int, int] = {}

    def depth(u, stack=()):
        if u in memo:
            return memo[u]
        if u in stack:
            raise ConstructionError("observation automaton has a cycle")
        d = max((1 + depth(v, stack + (u,)) for v in m_o.delta[u].values()), default=0)
        memo[u] = d
        return d

    return depth(m_o.initial)


PLAIN_MODE = "plain"
EMBEDDED_MODE = "embedded"


def surrogate_components(scn: Scenario, mode: str = PLAIN_MODE) -> list[Automaton]:
    parts = [scn.gt, scn.mot, scn.gsa, scn.gaf]
    if mode == EMBEDDED_MODE:
        parts += [completion(scn.bt_sdown), completion(scn.gce)]
    elif mode != PLAIN_MODE:
        raise ValueError(f"unknown surrogate mode {mode!r}")
    return parts


def surrogate_plant(scn: Scenario, mode: str = PLAIN_MODE) -> tuple[Automaton, frozenset[int]]:
    """Surrogate plant and its bad states (those whose G^T part is q$)."""
    comps = surrogate_components(scn, mode)
    prod = sync_product(*comps, name=f"surrogate[{mode}]")
    gt, mot, gaf = scn.gt, scn.mot, scn.gaf
    q_d = gt.state(scn.q_dollar)
    u_d = len(mot) - 1
    af_d = gaf.state("qAF$")
    bad = set()
    for i, st in enumerate(prod.parts):
        flags = (st[0] == q_d, st[1] == u_d, st[3] == af_d)
        if any(flags) and not all(flags):
            raise AssertionError(f"bad-state components disagree at {prod.state_name(i)}")
        if flags[0]:
            bad.add(i)
    return prod, frozenset(bad)
