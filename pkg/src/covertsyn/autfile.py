"""Text (.aut) and DOT serialization of automata.

Grammar, one item per line, ``#`` starts a comment line::

    automaton <name>
    alphabet: <event> ...
    initial: <state>
    marked: <state> ...
    states: <state> ...        (optional; isolated states)
    trans:
    <src> <event> <dst>
    ...
    end
"""
from __future__ import annotations

import re

from .automata import Alphabet, Automaton, AutomatonError, NondeterminismError, is_dump_label


class AutFormatError(AutomatonError):
    """Malformed .aut text."""



def parse_aut(text: str) -> Automaton:
    lines = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append((n, line))
    it = iter(lines)

    def expect(prefix: str) -> list[str]:
        try:
            n, line = next(it)
        except StopIteration:
            raise AutFormatError(f"missing '{prefix}' section") from None
        head, _, rest = line.partition(" ") if prefix == "automaton" else line.partition(":")
        if head != prefix.rstrip(":"):
            raise AutFormatError(f"line {n}: expected '{prefix}', got {line!r}")
        return rest.split()

    name_parts = expect("automaton")
    if len(name_parts) != 1:
        raise AutFormatError("automaton needs exactly one name")
    try:
        alphabet = Alphabet.of(expect("alphabet:"))
    except AutomatonError as exc:
        raise AutFormatError(str(exc)) from None
    initial = expect("initial:")
    if len(initial) != 1:
        raise AutFormatError("exactly one initial state required")
    marked = expect("marked:")
    states: list[str] = []
    n, line = _next(it, "trans:")
    if line.startswith("states:"):
        states = line.partition(":")[2].split()
        n, line = _next(it, "trans:")
    if line != "trans:":
        raise AutFormatError(f"line {n}: expected 'trans:', got {line!r}")
    triples = []
    for n, line in it:
        if line == "end":
            break
        parts = line.split()
        if len(parts) != 3:
            raise AutFormatError(f"line {n}: transitions are '<src> <event> <dst>'")
        if parts[1] not in alphabet:
            raise AutFormatError(f"line {n}: unknown event {parts[1]!r}")
        triples.append(tuple(parts))
    else:
        raise AutFormatError("missing 'end'")
    extra = next(it, None)
    if extra is not None:
        raise AutFormatError(f"line {extra[0]}: content after 'end'")
    if len(set(marked)) != len(marked):
        raise AutFormatError("duplicate marked state")
    try:
        return Automaton.from_transitions(alphabet, triples, initial[0], marked, states, name_parts[0])
    except NondeterminismError as exc:
        raise AutFormatError(f"determinism violation: {exc}") from None


def _next(it, wanted: str):
    try:
        return next(it)
    except StopIteration:
        raise AutFormatError(f"missing '{wanted}' section") from None


def _natural_key(name: str) -> tuple:
    return tuple((0, int(tok), "") if tok.isdigit() else (1, 0, tok) for tok in re.findall(r"\d+|\D+", name))


def write_aut(a: Automaton) -> str:
    """Canonical text: states in natural name order, transitions then by event order.

    Writing a parsed canonical file reproduces it byte for byte.
    """
    names = [a.state_name(s) for s in a.states]
    if len(set(names)) != len(names):
        raise AutFormatError("state names collide after rendering")
    bad = [nm for nm in names if not nm or any(c.isspace() for c in nm) or nm.startswith("#")]
    if bad:
        raise AutFormatError(f"state names not serializable: {bad}")
    mentioned = {a.initial} | set(a.marked)
    for s, _, t in a.transitions():
        mentioned.update((s, t))
    key = {s: _natural_key(names[s]) for s in a.states}
    order = a.alphabet.index
    out = [
        f"automaton {_safe_name(a.name)}",
        "alphabet: " + " ".join(a.alphabet.names),
        f"initial: {names[a.initial]}",
        "marked: " + " ".join(names[s] for s in sorted(a.marked, key=key.__getitem__)),
    ]
    isolated = sorted((s for s in a.states if s not in mentioned), key=key.__getitem__)
    if isolated:
        out.append("states: " + " ".join(names[s] for s in isolated))
    out.append("trans:")
    trans = sorted(a.transitions(), key=lambda x: (key[x[0]], order[x[1]]))
    out += [f"{names[s]} {ev} {names[t]}" for s, ev, t in trans]
    out.append("end")
    return "\n".join(line.rstrip() for line in out) + "\n"


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c == "_" else "_" for c in name) or "A"


def to_dot(a: Automaton) -> str:
    """Graphviz rendering; marked states are double circles.

    Shapes by label: dump states are grey boxes, labels with ``$`` octagons,
    labels with ``!`` diamonds.
    """
    def quote(s: str) -> str:
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

    out = [f"digraph {_safe_name(a.name)} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for s in a.states:
        name = a.state_name(s)
        attrs = ["shape=" + ("doublecircle" if s in a.marked else "circle")]
        if is_dump_label(a.labels[s]):
            attrs = ["shape=box", "style=filled", "fillcolor=lightgrey"]
        elif "$" in name:
            attrs = ["shape=octagon"]
        elif "!" in name:
            attrs = ["shape=diamond"]
        out.append(f"  s{s} [label={quote(name)}, {', '.join(attrs)}];")
    out.append(f"  __start -> s{a.initial};")
    edges: dict[tuple[int, int], list[str]] = {}
    for s, ev, t in a.transitions():
        edges.setdefault((s, t), []).append(ev)
    for (s, t), evs in edges.items():
        out.append(f"  s{s} -> s{t} [label={quote(', '.join(evs))}];")
    out.append("}")
    return "\n".join(out) + "\n"
