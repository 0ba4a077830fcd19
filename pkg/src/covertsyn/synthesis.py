"""Safe-controller synthesis under partial observation.

The agent (here: the attacker acting as a supervisor of a surrogate plant)
may disable only events that are both controllable and observable to it;
events it controls but cannot see are never disabled. Under that
restriction the agent's state estimate after an observation is exactly the
plant observer's cell, so the supremal safe policy is a fixpoint over
observer cells.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as cartesian
from typing import Iterable, Iterator, Mapping

from .automata import Alphabet, Automaton, AutomatonError, observer, sync_product

NONEMPTY = "nonempty"
EMPTY = "empty"


class SynthesisError(AutomatonError):
    """Malformed synthesis problem or oracle limits exceeded."""


@dataclass(frozen=True, eq=False)
class SynthesisProblem:
    plant: Automaton
    bad: frozenset[int]
    ctrl: frozenset[str]
    obs: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "bad", frozenset(self.bad))
        object.__setattr__(self, "ctrl", frozenset(self.ctrl))
        object.__setattr__(self, "obs", frozenset(self.obs))
        names = set(self.plant.alphabet.names)
        if not self.bad <= set(self.plant.states):
            raise SynthesisError("bad states outside the plant")
        if not self.ctrl <= names or not self.obs <= names:
            raise SynthesisError("agent events outside the plant alphabet")

    @property
    def disableable(self) -> frozenset[str]:
        """Events the agent may actually disable."""
        return self.ctrl & self.obs


@dataclass(eq=False)
class SynthesisResult:
    status: str
    attacker: Automaton | None = None
    closed_loop: Automaton | None = None
    cells: tuple[frozenset[int], ...] = ()
    stats: dict[str, int] = field(default_factory=dict)

    @property
    def nonempty(self) -> bool:
        return self.status == NONEMPTY


def closed_loop(plant: Automaton, agent: Automaton) -> Automaton:
    """Plant restricted by the agent; the agent marks every state."""
    return sync_product(plant, agent, name=f"{plant.name}||{agent.name}")


def _cell_sets(obs: Automaton, plant: Automaton) -> list[frozenset[int]]:
    return [frozenset(plant.state(lab) for lab in cell) for cell in obs.labels]


def _policy_automaton(p: SynthesisProblem, obs: Automaton, enabled: Mapping[int, frozenset[str]],
                      name: str) -> tuple[Automaton, tuple[int, ...]]:
    """Observer-cell machine applying ``enabled`` (a cell -> allowed disableable events map)."""
    names = p.plant.alphabet.names
    hidden = [e for e in names if e not in p.obs]
    seen = {obs.initial: 0}
    order = [obs.initial]
    rows: list[dict[str, int]] = []
    i = 0
    while i < len(order):
        c = order[i]
        i += 1
        row: dict[str, int] = {}
        for ev in names:
            if ev not in p.obs:
                continue
            nxt = obs.delta[c].get(ev)
            if ev in p.disableable and ev not in enabled[c]:
                continue
            if nxt is None:
                if ev not in p.ctrl:
                    row[ev] = seen[c]
                continue
            if nxt not in seen:
                seen[nxt] = len(order)
                order.append(nxt)
            row[ev] = seen[nxt]
        for ev in hidden:
            row[ev] = seen[c]
        rows.append(row)
    labels = tuple(f"y{j}" for j in range(len(order)))
    a = Automaton(p.plant.alphabet, labels, tuple(rows), 0, frozenset(range(len(order))), name)
    return a, tuple(order)


def synthesize_safe(p: SynthesisProblem) -> SynthesisResult:
    """Supremal safe agent among those that disable only observed, controllable events."""
    obs = observer(p.plant, p.obs)
    cells = _cell_sets(obs, p.plant)
    n = len(obs)
    forbidden = {c for c in range(n) if cells[c] & p.bad}
    forced = [e for e in p.plant.alphabet.names if e in p.obs and e not in p.disableable]
    iterations = 0
    changed = True
    while changed:
        changed = False
        iterations += 1
        for c in range(n):
            if c in forbidden:
                continue
            if any(obs.delta[c].get(ev) in forbidden for ev in forced):
                forbidden.add(c)
                changed = True
    if iterations > len(p.plant) * n + 1:
        raise AssertionError("fixpoint did not converge within the state-count bound")
    stats = {
        "plant_states": len(p.plant),
        "observer_cells": n,
        "forbidden_cells": len(forbidden),
        "iterations": iterations,
    }
    if obs.initial in forbidden:
        return SynthesisResult(EMPTY, stats=stats)
    enabled = {
        c: frozenset(ev for ev in p.disableable if obs.delta[c].get(ev) not in forbidden)
        for c in range(n)
    }
    attacker, order = _policy_automaton(p, obs, enabled, "A")
    loop = closed_loop(p.plant, attacker)
    stats["attacker_states"] = len(attacker)
    stats["closed_loop_states"] = len(loop)
    return SynthesisResult(NONEMPTY, attacker, loop, tuple(cells[c] for c in order), stats)


# ---------------------------------------------------------------------------
# brute-force oracle (tests only)
# ---------------------------------------------------------------------------

def _count_strings(a: Automaton, k: int) -> int:
    """Number of strings of length <= k in L(a); ``a`` is deterministic."""
    ways = {a.initial: 1}
    total = 1
    for _ in range(k):
        nxt: dict[int, int] = {}
        for s, w in ways.items():
            for t in a.delta[s].values():
                nxt[t] = nxt.get(t, 0) + w
        ways = nxt
        total += sum(ways.values())
    return total


def _policy_is_safe(p: SynthesisProblem, obs: Automaton, policy: Mapping[int, frozenset[str]]) -> bool:
    # explicit (plant state, cell) search, independent of the fixpoint above
    start = (p.plant.initial, obs.initial)
    seen = {start}
    stack = [start]
    while stack:
        q, c = stack.pop()
        if q in p.bad:
            return False
        for ev, q2 in p.plant.delta[q].items():
            if ev in p.disableable and ev not in policy[c]:
                continue
            c2 = obs.delta[c].get(ev, c) if ev in p.obs else c
            if (q2, c2) not in seen:
                seen.add((q2, c2))
                stack.append((q2, c2))
    return True


def enumerate_policies(p: SynthesisProblem, cell_limit: int = 8) -> Iterator[dict[int, frozenset[str]]]:
    """Every map from observer cell to a subset of the disableable events."""
    obs = observer(p.plant, p.obs)
    if len(obs) > cell_limit:
        raise SynthesisError(f"observer has {len(obs)} cells, limit is {cell_limit}")
    ev = sorted(p.disableable)
    if len(ev) > 4:
        raise SynthesisError("oracle supports at most 4 disableable events")
    subsets = [frozenset(e for i, e in enumerate(ev) if mask >> i & 1) for mask in range(1 << len(ev))]
    for choice in cartesian(subsets, repeat=len(obs)):
        yield dict(enumerate(choice))


def safe_policy_attackers(p: SynthesisProblem, cell_limit: int = 8) -> Iterator[Automaton]:
    """Agent automata of every safe cell policy, in enumeration order."""
    obs = observer(p.plant, p.obs)
    for policy in enumerate_policies(p, cell_limit):
        if _policy_is_safe(p, obs, policy):
            yield _policy_automaton(p, obs, policy, "A_oracle")[0]


def oracle_policy_search(p: SynthesisProblem, cell_limit: int = 8, k: int = 6) -> SynthesisResult:
    """Exhaustive search for the safe cell policy with the largest bounded closed loop."""
    obs = observer(p.plant, p.obs)
    best: tuple[int, Automaton, Automaton] | None = None
    checked = safe_count = 0
    for policy in enumerate_policies(p, cell_limit):
        checked += 1
        if not _policy_is_safe(p, obs, policy):
            continue
        safe_count += 1
        agent = _policy_automaton(p, obs, policy, "A_oracle")[0]
        loop = closed_loop(p.plant, agent)
        size = _count_strings(loop, k)
        if best is None or size > best[0]:
            best = (size, agent, loop)
    stats = {"policies": checked, "safe_policies": safe_count, "observer_cells": len(obs)}
    if best is None:
        return SynthesisResult(EMPTY, stats=stats)
    stats["bounded_size"] = best[0]
    return SynthesisResult(NONEMPTY, best[1], best[2], stats=stats)


def attacker_problem(plant: Automaton, bad: Iterable[int], ctrl: Iterable[str],
                     obs: Iterable[str]) -> SynthesisProblem:
    """Problem over the plant alphabet; agent events absent from it are dropped."""
    names = set(plant.alphabet.names)
    return SynthesisProblem(plant, frozenset(bad), frozenset(ctrl) & names, frozenset(obs) & names)


def universal_agent(alphabet: Alphabet, name: str = "U") -> Automaton:
    """One state enabling every event."""
    return Automaton(alphabet, ("u",), ({e: 0 for e in alphabet.names},), 0, frozenset({0}), name)
