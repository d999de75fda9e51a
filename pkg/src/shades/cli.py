"""Command-line front end: ``shades <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import check_contractive, check_formation
from .automata import Automaton, enumerate_accepted
from .core import EquationSystem, ShadesError, SystemClass, ValidationError, validate_system
from .decompile import decompile
from .equivalence import Outcome, default_fuel, dual_check, equiv, to_machine
from .semantics import format_traces, format_tree, format_word, tree_view, unfold_traces
from .surface import ParseError, parse_automaton, parse_system, print_automaton, print_system
from .transform import (
    cf_to_pushdown,
    dualize,
    nested_to_pushdown,
    onecounter_to_pushdown,
    pushdown_to_nested,
    rec_to_onecounter,
)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_UNKNOWN = 2
EXIT_BOUNDED = 3
EXIT_USAGE = 64
EXIT_DATA = 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _load_system(path: str) -> EquationSystem:
    return parse_system(_read(path))


def _load_automaton(path: str) -> Automaton:
    return parse_automaton(_read(path))


class Report:
    """Collects human lines and a JSON payload for one command."""

    def __init__(self, command: str):
        self.lines: list[str] = []
        self.data: dict = {"command": command}
        self.code = EXIT_OK

    def emit(self, as_json: bool, out) -> int:
        if as_json:
            self.data["exit"] = self.code
            out.write(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        else:
            out.write("".join(line + "\n" for line in self.lines))
        return self.code


def _witness_text(witness) -> str:
    if len(witness) == 2 and isinstance(witness[0], tuple):
        word, state = witness
        return f"{state} after {format_word(word)}"
    return " -> ".join(str(w) for w in witness)


def _verdict_json(v) -> dict:
    return {"status": v.status, "reason": v.reason, "witness": _witness_text(v.witness) if v.witness else None}


def _verdict_line(name: str, v) -> str:
    if v.ok:
        return f"{name}: ok"
    text = f"{name}: {v.status}: {v.reason}"
    if v.witness:
        text += f" [{_witness_text(v.witness)}]"
    return text


def cmd_check(args, rep: Report) -> None:
    sys_ = parse_system(_read(args.file), validate=False)
    valid = validate_system(sys_)
    rep.data["valid"] = valid.ok
    if not valid.ok:
        rep.data["violations"] = [str(v) for v in valid.violations]
        rep.lines += ["valid: fail"] + [f"  {v}" for v in valid.violations]
        rep.code = EXIT_DATA
        return
    rep.lines.append("valid: ok")
    for name, fn in (("contractive", check_contractive), ("formation", check_formation)):
        v = fn(sys_)
        rep.data[name] = _verdict_json(v)
        rep.lines.append(_verdict_line(name, v))
        if v.status == "fail":
            rep.code = EXIT_NEGATIVE
        elif v.status == "unknown" and rep.code == EXIT_OK:
            rep.code = EXIT_UNKNOWN


def cmd_compile(args, rep: Report) -> None:
    text = print_automaton(to_machine(_load_system(args.file)))
    rep.data["automaton"] = text
    if args.output:
        Path(args.output).write_text(text)
        rep.lines.append(f"wrote {args.output}")
    else:
        rep.lines.append(text.rstrip("\n"))


def cmd_decompile(args, rep: Report) -> None:
    text = print_system(decompile(_load_automaton(args.file)))
    rep.data["system"] = text
    rep.lines.append(text.rstrip("\n"))


_TARGETS = ("onecounter", "pushdown", "nested")


def convert(sys_: EquationSystem, target: SystemClass) -> EquationSystem:
    """Route a system to ``target`` through the chain of conversions."""
    steps = 0
    while sys_.cls is not target:
        steps += 1
        if steps > 4:
            raise ShadesError(f"no conversion from {sys_.cls.value} to {target.value}")
        c = sys_.cls
        if c in (SystemClass.FINITE, SystemClass.RECURSIVE):
            sys_ = rec_to_onecounter(sys_)
        elif c is SystemClass.ONE_COUNTER:
            sys_ = onecounter_to_pushdown(sys_)
        elif c is SystemClass.CONTEXT_FREE:
            sys_ = cf_to_pushdown(sys_)
        elif c is SystemClass.PUSHDOWN and target is SystemClass.NESTED:
            sys_ = pushdown_to_nested(sys_)
        elif c is SystemClass.NESTED and target is SystemClass.PUSHDOWN:
            sys_ = nested_to_pushdown(sys_)
        else:
            raise ShadesError(f"no conversion from {c.value} to {target.value}")
    return sys_


def cmd_convert(args, rep: Report) -> None:
    text = print_system(convert(_load_system(args.file), SystemClass(args.to)))
    rep.data["system"] = text
    rep.lines.append(text.rstrip("\n"))


def cmd_dual(args, rep: Report) -> None:
    text = print_system(dualize(_load_system(args.file)))
    rep.data["system"] = text
    rep.lines.append(text.rstrip("\n"))


def _equiv_report(result, rep: Report) -> None:
    rep.data["result"] = result.outcome.value
    rep.lines.append(str(result))
    if result.outcome is Outcome.NOT_EQUIVALENT:
        rep.data["witness"] = list(result.witness)
        rep.data["accepted_by"] = result.accepted_by
        rep.lines.append(f"witness: {format_word(result.witness)}")
        rep.lines.append(f"accepted by: {result.accepted_by}")
        rep.code = EXIT_NEGATIVE
    elif result.outcome is Outcome.EQUIVALENT_UP_TO:
        rep.data["depth"] = result.depth
        rep.lines.append(f"note: no difference among words of length <= {result.depth}; exact equivalence is not decided above finite-state")
        rep.code = EXIT_BOUNDED


def _fuel(args) -> int:
    return default_fuel() if args.fuel is None else args.fuel


def cmd_equiv(args, rep: Report) -> None:
    result = equiv(_load_system(args.a), None, _load_system(args.b), None, _fuel(args))
    _equiv_report(result, rep)


def cmd_dualcheck(args, rep: Report) -> None:
    result = dual_check(_load_system(args.a), None, _load_system(args.b), None, _fuel(args))
    _equiv_report(result, rep)


def cmd_traces(args, rep: Report) -> None:
    if args.file.endswith(".aut"):
        words = enumerate_accepted(_load_automaton(args.file), args.depth)
    else:
        words = unfold_traces(_load_system(args.file), max_len=args.depth)
    text = format_traces(words, args.abbrev)
    rep.data["traces"] = text.splitlines()
    rep.lines.append(text.rstrip("\n"))


def cmd_tree(args, rep: Report) -> None:
    text = format_tree(tree_view(_load_system(args.file), depth=args.depth))
    rep.data["tree"] = text.splitlines()
    rep.lines.append(text.rstrip("\n"))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable report")
    parser = _Parser(prog="shades", description="Workbench for session types defined by parameterised equations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    add("check", cmd_check, "validate, then check contractiveness and formation").add_argument("file")
    p = add("compile", cmd_compile, "compile a system to an automaton")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    add("decompile", cmd_decompile, "turn an automaton back into a system").add_argument("file")
    p = add("convert", cmd_convert, "convert a system to another class")
    p.add_argument("--to", required=True, choices=_TARGETS)
    p.add_argument("file")
    add("dual", cmd_dual, "print the dual system").add_argument("file")
    for name, fn, help_ in (
        ("equiv", cmd_equiv, "compare two types"),
        ("dualcheck", cmd_dualcheck, "check that the second type is dual to the first"),
    ):
        p = add(name, fn, help_)
        p.add_argument("a")
        p.add_argument("b")
        p.add_argument("--fuel", type=int)
    p = add("traces", cmd_traces, "list traces up to a length")
    p.add_argument("file")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--abbrev", action="store_true")
    p = add("tree", cmd_tree, "print the unfolded tree")
    p.add_argument("file")
    p.add_argument("--depth", type=int, required=True)
    return parser


def main(argv: list[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        err.write(f"shades: {e}\n")
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return e.code or EXIT_OK
    rep = Report(args.command)
    try:
        args.fn(args, rep)
    except UsageError as e:
        err.write(f"shades: {e}\n")
        return EXIT_USAGE
    except (ParseError, ValidationError) as e:
        err.write(f"shades: {e}\n")
        return EXIT_DATA
    except ShadesError as e:
        rep.data["error"] = f"{type(e).__name__}: {e}"
        if args.json:
            rep.code = EXIT_NEGATIVE
            return rep.emit(True, out)
        err.write(f"shades: {type(e).__name__}: {e}\n")
        return EXIT_NEGATIVE
    return rep.emit(args.json, out)


if __name__ == "__main__":
    sys.exit(main())
