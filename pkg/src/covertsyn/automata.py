"""Deterministic finite-automaton kernel.

Automata here are partial DFAs with integer state ids and opaque display
labels. Every operation returns a new automaton; inputs are never touched.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, reduce
from types import MappingProxyType
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Sequence

PLAIN = "plain"
HASH = "hash"
COMMAND = "command"
DOLLAR = "dollar"

DOLLAR_NAME = "$"

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_PLAIN_RE = re.compile(rf"^{_IDENT}$")
_HASH_RE = re.compile(rf"^({_IDENT})#$")
_CMD_RE = re.compile(rf"^cmd\[((?:{_IDENT}(?:,{_IDENT})*)?)\]$")


class AutomatonError(Exception):
    """Base class for kernel errors."""


class AlphabetConflict(AutomatonError):
    """Two alphabets disagree on the kind or role tags of a shared event."""


class NondeterminismError(AutomatonError):
    """A (state, event) pair was given two different successors."""


@dataclass(frozen=True, order=True)
class Event:
    """A named event.

    ``kind`` is one of ``plain``, ``hash`` (relabelled copy of ``base``),
    ``command`` (a control command; ``enabled`` holds its controllable
    part) or ``dollar``.
    """

    name: str
    kind: str = PLAIN
    base: str | None = None
    enabled: frozenset[str] = frozenset()

    @classmethod
    def from_name(cls, name: str) -> Event:
        if name == DOLLAR_NAME:
            return DOLLAR_EVENT
        m = _HASH_RE.match(name)
        if m:
            return cls(name, HASH, base=m.group(1))
        m = _CMD_RE.match(name)
        if m:
            parts = m.group(1).split(",") if m.group(1) else []
            if parts != sorted(set(parts)):
                raise AutomatonError(f"command name {name!r} is not sorted/unique")
            return cls(name, COMMAND, enabled=frozenset(parts))
        if _PLAIN_RE.match(name):
            return cls(name)
        raise AutomatonError(f"invalid event name {name!r}")

    def __str__(self) -> str:
        return self.name


DOLLAR_EVENT = Event(DOLLAR_NAME, DOLLAR)


def hash_copy(base: str) -> Event:
    return Event(base + "#", HASH, base=base)


def command_event(controllables: Iterable[str]) -> Event:
    enabled = frozenset(controllables)
    return Event("cmd[" + ",".join(sorted(enabled)) + "]", COMMAND, enabled=enabled)


def _default_observable(ev: Event) -> bool:
    return ev.kind in (PLAIN, HASH)


@dataclass(frozen=True)
class Alphabet:
    """Ordered event set with observable/controllable role tags (by name)."""

    events: tuple[Event, ...]
    observable: frozenset[str]
    controllable: frozenset[str]

    def __post_init__(self):
        names = [e.name for e in self.events]
        if len(set(names)) != len(names):
            raise AutomatonError(f"duplicate event names in alphabet: {names}")
        known = set(names)
        if not self.observable <= known or not self.controllable <= known:
            raise AutomatonError("role tags reference events outside the alphabet")

    @classmethod
    def of(
        cls,
        names: Iterable[str | Event],
        observable: Iterable[str] | None = None,
        controllable: Iterable[str] = (),
    ) -> Alphabet:
        events = tuple(e if isinstance(e, Event) else Event.from_name(e) for e in names)
        if observable is None:
            obs = frozenset(e.name for e in events if _default_observable(e))
        else:
            obs = frozenset(observable) & {e.name for e in events}
        ctrl = frozenset(controllable) & {e.name for e in events}
        return cls(events, obs, ctrl)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.events)

    @cached_property
    def index(self) -> Mapping[str, int]:
        return MappingProxyType({e.name: i for i, e in enumerate(self.events)})

    @cached_property
    def _by_name(self) -> Mapping[str, Event]:
        return MappingProxyType({e.name: e for e in self.events})

    def __contains__(self, name: object) -> bool:
        if isinstance(name, Event):
            name = name.name
        return name in self._by_name

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, name: str) -> Event:
        return self._by_name[name]

    @property
    def unobservable(self) -> frozenset[str]:
        return frozenset(self.names) - self.observable

    @property
    def uncontrollable(self) -> frozenset[str]:
        return frozenset(self.names) - self.controllable

    def merge(self, other: Alphabet) -> Alphabet:
        """Union; shared events must agree on kind and both role tags."""
        for ev in other.events:
            if ev.name not in self:
                continue
            mine = self[ev.name]
            if mine != ev:
                raise AlphabetConflict(f"event {ev.name!r}: kind {mine.kind} vs {ev.kind}")
            if (ev.name in self.observable) != (ev.name in other.observable):
                raise AlphabetConflict(f"event {ev.name!r}: observability tags disagree")
            if (ev.name in self.controllable) != (ev.name in other.controllable):
                raise AlphabetConflict(f"event {ev.name!r}: controllability tags disagree")
        extra = tuple(e for e in other.events if e.name not in self)
        return Alphabet(
            self.events + extra,
            self.observable | other.observable,
            self.controllable | other.controllable,
        )

    def retag(self, observable: Iterable[str], controllable: Iterable[str]) -> Alphabet:
        """Same events, role tags replaced (restricted to this alphabet)."""
        known = frozenset(self.names)
        return Alphabet(self.events, frozenset(observable) & known, frozenset(controllable) & known)


def render_label(label: Hashable) -> str:
    """Whitespace-free display form of a state label."""
    if isinstance(label, str):
        return label
    if isinstance(label, tuple):
        return "(" + ",".join(render_label(x) for x in label) + ")"
    if isinstance(label, (frozenset, set)):
        return "{" + ",".join(sorted(render_label(x) for x in label)) + "}"
    return re.sub(r"\s+", "", str(label))


def fresh_label(taken: Iterable[Hashable], base: str) -> str:
    taken = {render_label(t) for t in taken}
    label = base
    while label in taken:
        label += "'"
    return label


@dataclass(frozen=True, eq=False)
class Automaton:
    """Partial deterministic finite automaton.

    ``delta[s]`` maps event names to successor ids. ``parts`` is set by
    products and holds the component state ids of every product state.
    """

    alphabet: Alphabet
    labels: tuple[Hashable, ...]
    delta: tuple[Mapping[str, int], ...]
    initial: int = 0
    marked: frozenset[int] = frozenset()
    name: str = ""
    parts: tuple[tuple[int, ...], ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.labels)
        if len(self.delta) != n:
            raise AutomatonError("labels and delta have different lengths")
        if not 0 <= self.initial < n:
            raise AutomatonError("initial state out of range")
        if any(not 0 <= m < n for m in self.marked):
            raise AutomatonError("marked state out of range")
        if len(set(self.labels)) != n:
            raise AutomatonError("state labels are not unique")
        frozen = []
        for row in self.delta:
            for ev, dst in row.items():
                if ev not in self.alphabet:
                    raise AutomatonError(f"transition on {ev!r} outside the alphabet")
                if not 0 <= dst < n:
                    raise AutomatonError("transition target out of range")
            frozen.append(row if isinstance(row, MappingProxyType) else MappingProxyType(dict(row)))
        object.__setattr__(self, "delta", tuple(frozen))
        object.__setattr__(self, "marked", frozenset(self.marked))

    # -- construction -------------------------------------------------------

    @classmethod
    def from_transitions(
        cls,
        alphabet: Alphabet,
        transitions: Iterable[tuple[Hashable, str, Hashable]],
        initial: Hashable,
        marked: Iterable[Hashable] = (),
        states: Iterable[Hashable] = (),
        name: str = "",
    ) -> Automaton:
        """Build from labelled triples. State ids follow first appearance."""
        ids: dict[Hashable, int] = {}
        labels: list[Hashable] = []

        def sid(label):
            if label not in ids:
                ids[label] = len(labels)
                labels.append(label)
            return ids[label]

        sid(initial)
        for s in states:
            sid(s)
        marked = list(marked)
        for m in marked:
            sid(m)
        triples = [(sid(src), ev, sid(dst)) for src, ev, dst in transitions]
        rows: list[dict[str, int]] = [{} for _ in labels]
        for src, ev, dst in triples:
            old = rows[src].get(ev)
            if old is not None and old != dst:
                raise NondeterminismError(
                    f"state {render_label(labels[src])!r} has two {ev!r}-successors"
                )
            rows[src][ev] = dst
        return cls(alphabet, tuple(labels), tuple(rows), 0, frozenset(ids[m] for m in marked), name)

    # -- queries ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def states(self) -> range:
        return range(len(self.labels))

    @cached_property
    def _label_index(self) -> Mapping[Hashable, int]:
        return MappingProxyType({lab: i for i, lab in enumerate(self.labels)})

    def state(self, label: Hashable) -> int:
        """Id of the state with the given label."""
        try:
            return self._label_index[label]
        except KeyError:
            raise KeyError(f"no state labelled {label!r}") from None

    def has_state(self, label: Hashable) -> bool:
        return label in self._label_index

    def state_name(self, s: int) -> str:
        return render_label(self.labels[s])

    def step(self, s: int, event: str) -> int | None:
        return self.delta[s].get(event)

    def run(self, word: Iterable[str], start: int | None = None) -> int | None:
        s = self.initial if start is None else start
        for ev in word:
            s = self.delta[s].get(ev)
            if s is None:
                return None
        return s

    def accepts(self, word: Iterable[str], marked_only: bool = False) -> bool:
        s = self.run(word)
        return s is not None and (not marked_only or s in self.marked)

    def transitions(self) -> Iterator[tuple[int, str, int]]:
        order = self.alphabet.index
        for s, row in enumerate(self.delta):
            for ev in sorted(row, key=order.__getitem__):
                yield s, ev, row[ev]

    def deadlocks(self) -> list[int]:
        return [s for s in self.states if not self.delta[s]]

    def is_complete(self) -> bool:
        n = len(self.alphabet)
        return all(len(row) == n for row in self.delta)

    def reachable(self) -> set[int]:
        seen = {self.initial}
        stack = [self.initial]
        while stack:
            s = stack.pop()
            for t in self.delta[s].values():
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen

    def with_alphabet(self, alphabet: Alphabet) -> Automaton:
        """Same transition structure over a (retagged or enlarged) alphabet."""
        missing = set(self.alphabet.names) - set(alphabet.names)
        if missing:
            raise AutomatonError(f"new alphabet lacks events {sorted(missing)}")
        return Automaton(alphabet, self.labels, self.delta, self.initial, self.marked, self.name, self.parts)

    def renamed(self, name: str) -> Automaton:
        return Automaton(self.alphabet, self.labels, self.delta, self.initial, self.marked, name, self.parts)

    def __repr__(self) -> str:
        return (
            f"Automaton({self.name or '?'}: {len(self)} states, "
            f"{sum(len(r) for r in self.delta)} transitions, |Σ|={len(self.alphabet)})"
        )


@dataclass(frozen=True)
class Witness:
    """A finite event sequence replayable from an automaton's initial state."""

    events: tuple[str, ...]

    def replay(self, a: Automaton) -> int:
        s = a.run(self.events)
        if s is None:
            raise AutomatonError(f"witness {self} does not replay on {a!r}")
        return s

    def __len__(self) -> int:
        return len(self.events)

    def __str__(self) -> str:
        return " ".join(self.events) if self.events else "ε"


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def sync_product(*automata: Automaton, name: str = "") -> Automaton:
    """Synchronous product of one or more automata, reachable part only.

    Shared events move every owning component; private events move only
    their owner. Labels are tuples of component labels.
    """
    if not automata:
        raise AutomatonError("sync_product needs at least one automaton")
    alphabet = reduce(Alphabet.merge, (a.alphabet for a in automata))
    owners = {
        ev: tuple(i for i, a in enumerate(automata) if ev in a.alphabet) for ev in alphabet.names
    }
    start = tuple(a.initial for a in automata)
    ids = {start: 0}
    order = [start]
    rows: list[dict[str, int]] = []
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        row: dict[str, int] = {}
        for ev in alphabet.names:
            nxt = list(cur)
            for i in owners[ev]:
                t = automata[i].delta[cur[i]].get(ev)
                if t is None:
                    break
                nxt[i] = t
            else:
                key = tuple(nxt)
                if key not in ids:
                    ids[key] = len(order)
                    order.append(key)
                    queue.append(key)
                row[ev] = ids[key]
        rows.append(row)
    labels = tuple(tuple(a.labels[c] for a, c in zip(automata, st)) for st in order)
    marked = frozenset(
        i for i, st in enumerate(order) if all(c in a.marked for a, c in zip(automata, st))
    )
    return Automaton(
        alphabet, labels, tuple(rows), 0, marked,
        name or "||".join(a.name or "?" for a in automata), tuple(order),
    )


def unobservable_reach(g: Automaton, start: Iterable[int], hidden: Iterable[str]) -> frozenset[int]:
    """Least superset of ``start`` closed under ``hidden``-labelled moves."""
    hidden = frozenset(hidden)
    seen = set(start)
    stack = list(seen)
    while stack:
        s = stack.pop()
        for ev, t in g.delta[s].items():
            if ev in hidden and t not in seen:
                seen.add(t)
                stack.append(t)
    return frozenset(seen)


def observer(g: Automaton, visible: Iterable[str], materialize_empty: bool = False) -> Automaton:
    """Subset construction over the full alphabet of ``g``.

    Visible events move between unobservable-reach cells; every other event
    self-loops at every nonempty cell. The empty cell is represented by
    absence of the transition unless ``materialize_empty`` is set, in which
    case an explicit ``{}`` state (no outgoing transitions) is added and becomes
    the target of every visible event with an empty image. A cell is marked
    when it holds a marked state of ``g``.
    """
    visible = frozenset(visible)
    if not visible <= set(g.alphabet.names):
        raise AutomatonError("visible events outside the alphabet")
    hidden = frozenset(g.alphabet.names) - visible
    vis_order = [e for e in g.alphabet.names if e in visible]
    hid_order = [e for e in g.alphabet.names if e in hidden]
    empty: frozenset[int] = frozenset()
    start = unobservable_reach(g, [g.initial], hidden)
    ids = {start: 0}
    order = [start]
    rows: list[dict[str, int]] = []
    queue = deque([start])

    def sid(cell):
        if cell not in ids:
            ids[cell] = len(order)
            order.append(cell)
            if cell:
                queue.append(cell)
        return ids[cell]

    while queue:
        cell = queue.popleft()
        while len(rows) <= ids[cell]:
            rows.append({})
        row = rows[ids[cell]]
        for ev in vis_order:
            image = {g.delta[s][ev] for s in cell if ev in g.delta[s]}
            if image:
                row[ev] = sid(unobservable_reach(g, image, hidden))
            elif materialize_empty:
                row[ev] = sid(empty)
        for ev in hid_order:
            row[ev] = ids[cell]
    while len(rows) < len(order):
        rows.append({})
    labels = tuple(frozenset(g.labels[s] for s in cell) for cell in order)
    return Automaton(
        g.alphabet, labels, tuple(rows), 0,
        frozenset(i for i, c in enumerate(order) if c & g.marked),
        f"P({g.name})",
    )


def observer_cells(obs: Automaton, g: Automaton) -> list[frozenset[int]]:
    """Underlying state-id sets of an observer built from ``g``."""
    return [frozenset(g.state(lab) for lab in cell) for cell in obs.labels]


def completion(p: Automaton, dump_label: str = "dump") -> Automaton:
    """Add a dump state absorbing every undefined (state, event) pair."""
    dump = len(p)
    label = fresh_label(p.labels, dump_label)
    names = p.alphabet.names
    rows = [{ev: row.get(ev, dump) for ev in names} for row in p.delta]
    rows.append({ev: dump for ev in names})
    return Automaton(
        p.alphabet, p.labels + (label,), tuple(rows), p.initial, p.marked,
        f"C({p.name})" if p.name else "",
    )


def is_dump_label(label: Hashable) -> bool:
    return isinstance(label, str) and label.startswith("dump")


def bounded_language(a: Automaton, k: int, marked_only: bool = False) -> set[tuple[str, ...]]:
    """All strings of length <= k in L(a), or in L_m(a) when ``marked_only``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    out: set[tuple[str, ...]] = set()
    stack: list[tuple[int, tuple[str, ...]]] = [(a.initial, ())]
    while stack:
        s, w = stack.pop()
        if not marked_only or s in a.marked:
            out.add(w)
        if len(w) < k:
            for ev, t in a.delta[s].items():
                stack.append((t, w + (ev,)))
    return out


def find_path(a: Automaton, goal: Callable[[int], bool]) -> Witness | None:
    """Shortest path to a goal state; ties broken by lowest event index."""
    parent: dict[int, tuple[int, str] | None] = {a.initial: None}
    queue = deque([a.initial])
    order = a.alphabet.index
    while queue:
        s = queue.popleft()
        if goal(s):
            word = []
            while parent[s] is not None:
                s, ev = parent[s]
                word.append(ev)
            return Witness(tuple(reversed(word)))
        for ev in sorted(a.delta[s], key=order.__getitem__):
            t = a.delta[s][ev]
            if t not in parent:
                parent[t] = (s, ev)
                queue.append(t)
    return None


def marked_reachable(a: Automaton) -> Witness | None:
    """Shortest string reaching a marked state, or None when L_m(a) is empty."""
    return find_path(a, a.marked.__contains__)


def reachable_trim(a: Automaton) -> Automaton:
    keep = sorted(a.reachable())
    return _restrict(a, keep)


def _restrict(a: Automaton, keep: Sequence[int]) -> Automaton:
    new = {old: i for i, old in enumerate(keep)}
    rows = tuple({ev: new[t] for ev, t in a.delta[s].items() if t in new} for s in keep)
    parts = tuple(a.parts[s] for s in keep) if a.parts is not None else None
    return Automaton(
        a.alphabet, tuple(a.labels[s] for s in keep), rows, new[a.initial],
        frozenset(new[m] for m in a.marked if m in new), a.name, parts,
    )


def minimize(a: Automaton) -> Automaton:
    """Merge states with equal closed and marked futures (Moore refinement).

    Undefined moves are treated as moves to an implicit dump class, so the
    partial structure is preserved. Each block keeps its lowest-id member's
    label.
    """
    t = reachable_trim(a)
    names = t.alphabet.names
    dump = -1
    block = {s: (1 if s in t.marked else 0) for s in t.states}
    block[dump] = 2
    while True:
        sig = {
            s: (block[s],) + tuple(block[t.delta[s].get(ev, dump)] for ev in names)
            for s in t.states
        }
        sig[dump] = (2,) + (2,) * len(names)
        ranks: dict[tuple, int] = {}
        for s in sorted(sig, key=lambda x: (x == dump, x)):
            ranks.setdefault(sig[s], len(ranks))
        new_block = {s: ranks[sig[s]] for s in sig}
        if len(set(new_block.values())) == len(set(block.values())):
            block = new_block
            break
        block = new_block
    reps: dict[int, int] = {}
    for s in t.states:
        reps.setdefault(block[s], s)
    keep = sorted(reps.values())
    new = {reps[block[s]]: i for i, s in enumerate(keep)}
    idx = {s: new[reps[block[s]]] for s in t.states}
    rows = tuple({ev: idx[d] for ev, d in t.delta[s].items()} for s in keep)
    return Automaton(
        t.alphabet, tuple(t.labels[s] for s in keep), rows, idx[t.initial],
        frozenset(idx[m] for m in t.marked), t.name,
    )


def bounded_equal(
    a: Automaton, b: Automaton, k: int, marked_only: bool = True
) -> tuple[bool, Witness | None]:
    """Compare bounded languages of ``a`` and ``b`` without enumerating them.

    Explores pairs of (possibly dead) states breadth-first to depth ``k``;
    returns a shortest distinguishing string when the languages differ.
    """
    names = list(dict.fromkeys(a.alphabet.names + b.alphabet.names))

    def member(x: Automaton, s: int | None) -> bool:
        return s is not None and (not marked_only or s in x.marked)

    start = (a.initial, b.initial)
    parent: dict[tuple, tuple | None] = {start: None}
    frontier = [start]
    depth = 0
    while frontier:
        for pair in frontier:
            if member(a, pair[0]) != member(b, pair[1]):
                word = []
                cur = pair
                while parent[cur] is not None:
                    cur, ev = parent[cur]
                    word.append(ev)
                return False, Witness(tuple(reversed(word)))
        if depth == k:
            break
        nxt = []
        for sa, sb in frontier:
            for ev in names:
                ta = a.delta[sa].get(ev) if sa is not None else None
                tb = b.delta[sb].get(ev) if sb is not None else None
                if ta is None and tb is None:
                    continue
                key = (ta, tb)
                if key not in parent:
                    parent[key] = ((sa, sb), ev)
                    nxt.append(key)
        frontier = nxt
        depth += 1
    return True, None


def project(word: Iterable[str], keep: Iterable[str]) -> tuple[str, ...]:
    """Natural projection of a word onto ``keep``."""
    keep = frozenset(keep)
    return tuple(e for e in word if e in keep)
