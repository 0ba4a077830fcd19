"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 no attacker, 3 attacker not verified.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .autfile import parse_aut, to_dot, write_aut
from .automata import AutomatonError, Witness, bounded_language, completion, observer, sync_product
from .constructions import EMBEDDED_MODE, PLAIN_MODE, Scenario, surrogate_plant
from .scenario import load_scenario
from .synthesis import EMPTY
from .verify import EMBEDDED, TWO_STEP, UNVERIFIED, pipeline

EXIT_OK, EXIT_INPUT, EXIT_EMPTY, EXIT_UNVERIFIED = 0, 1, 2, 3

BUILDERS = ("gt", "gsa", "mot", "gaf", "sdown", "bts", "ma", "gce", "surrogate")


def _read_aut(path: str):
    try:
        return parse_aut(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise AutomatonError(f"cannot read {path}: {exc.strerror}") from None


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _render(a, dot: bool) -> str:
    return to_dot(a) if dot else write_aut(a)


def _build(scn: Scenario, which: str, concrete: bool, mode: str):
    if which == "surrogate":
        return surrogate_plant(scn, mode)[0]
    if concrete and which in ("bts", "ma"):
        return scn.bt_concrete if which == "bts" else scn.ma_concrete
    return {
        "gt": lambda: scn.gt,
        "gsa": lambda: scn.gsa,
        "mot": lambda: scn.mot,
        "gaf": lambda: scn.gaf,
        "sdown": lambda: scn.sdown,
        "bts": lambda: scn.bt_sdown,
        "ma": lambda: scn.ma_sdown,
        "gce": lambda: scn.gce,
    }[which]()


def cmd_pipeline(args) -> int:
    scn = load_scenario(args.scenario)
    report = pipeline(scn, args.mode)
    kv = "".join(f"{k}={v}\n" for k, v in report.as_kv().items())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if report.attacker is not None:
            (out / "attacker.aut").write_text(write_aut(report.attacker), encoding="utf-8")
            (out / "closed_loop.aut").write_text(write_aut(report.closed_loop), encoding="utf-8")
        (out / "report.txt").write_text(report.render_text(), encoding="utf-8")
        (out / "report.kv").write_text(kv, encoding="utf-8")
    sys.stdout.write(report.render_text() if args.text else kv)
    if report.status == EMPTY:
        return EXIT_EMPTY
    if report.status == UNVERIFIED:
        return EXIT_UNVERIFIED
    return EXIT_OK


def cmd_build(args) -> int:
    scn = load_scenario(args.scenario)
    a = _build(scn, args.which, args.concrete, args.mode)
    if args.complete:
        a = completion(a)
    _emit(_render(a, args.dot), args.output)
    return EXIT_OK


def cmd_product(args) -> int:
    autos = [_read_aut(p) for p in args.files]
    _emit(_render(sync_product(*autos, name=args.name), args.dot), args.output)
    return EXIT_OK


def cmd_observe(args) -> int:
    a = _read_aut(args.file)
    visible = args.visible if args.visible is not None else list(a.alphabet.observable)
    unknown = set(visible) - set(a.alphabet.names)
    if unknown:
        raise AutomatonError(f"visible events not in the alphabet: {sorted(unknown)}")
    obs = observer(a, visible, materialize_empty=args.materialize_empty)
    _emit(_render(obs, args.dot), args.output)
    return EXIT_OK


def cmd_lang(args) -> int:
    a = _read_aut(args.file)
    words = bounded_language(a, args.max_len, marked_only=args.marked)
    lines = [str(Witness(w)) for w in sorted(words, key=lambda w: (len(w), w))]
    _emit("".join(line + "\n" for line in lines), args.output)
    return EXIT_OK


def cmd_dot(args) -> int:
    _emit(to_dot(_read_aut(args.file)), args.output)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; argparse's default 2 would read as "no attacker"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="covertsyn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("pipeline", help="synthesize and verify an attacker for a scenario")
    sp.add_argument("scenario")
    sp.add_argument("--mode", choices=(TWO_STEP, EMBEDDED), default=EMBEDDED)
    sp.add_argument("--out", help="directory for attacker.aut, closed_loop.aut, report.txt, report.kv")
    sp.add_argument("--text", action="store_true", help="print the text report instead of key=value lines")
    sp.set_defaults(func=cmd_pipeline)

    sp = sub.add_parser("build", help="emit one of the intermediate automata")
    sp.add_argument("scenario")
    sp.add_argument("--which", choices=BUILDERS, required=True)
    sp.add_argument("--concrete", action="store_true",
                    help="use the scenario's supervisor instead of S-down for bts/ma")
    sp.add_argument("--mode", choices=(PLAIN_MODE, EMBEDDED_MODE), default=PLAIN_MODE,
                    help="surrogate flavour")
    sp.add_argument("--complete", action="store_true", help="add a dump state")
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("product", help="synchronous product of .aut files")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--name", default="product")
    sp.set_defaults(func=cmd_product)

    sp = sub.add_parser("observe", help="observer (subset construction) of an .aut file")
    sp.add_argument("file")
    sp.add_argument("--visible", nargs="*", help="visible events (default: all plain and # events)")
    sp.add_argument("--materialize-empty", action="store_true")
    sp.set_defaults(func=cmd_observe)

    sp = sub.add_parser("lang", help="print the bounded language, one string per line")
    sp.add_argument("file")
    sp.add_argument("--max-len", type=int, required=True)
    sp.add_argument("--marked", action="store_true", help="marked language only")
    sp.set_defaults(func=cmd_lang)

    sp = sub.add_parser("dot", help="convert an .aut file to Graphviz")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_dot)

    for name, sp in sub.choices.items():
        if name == "pipeline":
            continue
        sp.add_argument("-o", "--output", help="output file (default: stdout)")
        if name in ("build", "product", "observe"):
            sp.add_argument("--dot", action="store_true", help="emit Graphviz instead of .aut")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "max_len", None) is not None and args.max_len < 0:
        print("covertsyn: --max-len must be non-negative", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (AutomatonError, ValueError) as exc:
        print(f"covertsyn: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
