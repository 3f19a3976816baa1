"""Command-line interface.

Exit codes: 0 when the check holds, 2 when it fails or interference is
found, 1 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import di_rules, primitives, spacetime
from . import trace_core as tc
from .composition import Decomposition, check_decomposition
from .simulator import Network, SimTrace, simulate
from .spec_language import ParseError, parse, spec, unparse

OK, FAIL, ERROR = 0, 2, 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad arguments; 2 is reserved for failed checks here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ERROR, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=1) + "\n"


def _spec_text(args) -> str:
    if args.expr is not None:
        return args.expr
    if args.file is None:
        raise UsageError("give a spec file or --expr")
    return _read(args.file)


def _load_structure(text: str):
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        return tc.from_json(doc.get("structure", doc))
    return spec(text)


def cmd_parse(args):
    text = _spec_text(args)
    e = parse(text)
    r = spec(text)
    if args.format == "text":
        return OK, unparse(e) + "\n"
    return OK, _dump({"expr": unparse(e), "structure": tc.to_json(r)})


def cmd_check_di(args):
    r = _load_structure(_spec_text(args))
    report = di_rules.check_di(r)
    return (OK if report.di else FAIL), _dump(report.to_json())


def cmd_classify(args):
    r = _load_structure(_spec_text(args))
    verdicts = {rule: di_rules.check_rule(r, rule).to_json() for rule in di_rules.RULES}
    return OK, _dump({"class": di_rules.classify(r).value, "rules": verdicts})


def load_manifest(doc) -> Decomposition:
    target = spec(doc["target"])
    names, parts = [], []
    for i, p in enumerate(doc["parts"], 1):
        if isinstance(p, str):
            names.append(f"part{i}")
            parts.append(spec(p))
        else:
            names.append(p.get("name", f"part{i}"))
            parts.append(spec(p["spec"]))
    return Decomposition(target, tuple(parts), tuple(names))


def cmd_decompose(args):
    d = load_manifest(json.loads(_read(args.file)))
    report = check_decomposition(d, strict_forks=args.strict_forks)
    if args.verbose:
        state = "holds" if report.holds else f"fails at {report.failing[0]}"
        print(f"decomposition {state}", file=sys.stderr)
    return (OK if report.holds else FAIL), _dump(report.to_json())


def cmd_simulate(args):
    net = Network.from_json(json.loads(_read(args.file)))
    trace = simulate(net, horizon=args.horizon, seed=args.seed, on_interference=args.on_interference,
                     until=args.until, latch_window=args.latch_window)
    if args.verbose:
        print(f"{len(trace.events)} events, {len(trace.interference)} interference reports", file=sys.stderr)
    return (FAIL if trace.interference else OK), trace.jsonl()


def cmd_graph(args):
    trace = SimTrace.from_jsonl(_read(args.file))
    g = spacetime.build(trace)
    code = OK
    if args.constraints:
        verdict = spacetime.check_order(g, json.loads(_read(args.constraints)))
        if not verdict.ok:
            code = FAIL
        if args.verbose or not verdict.ok:
            for v in verdict.violations:
                print(f"order violated at {v['node']}: {v['then']} before {v['first']} (cycle {v['occurrence']})",
                      file=sys.stderr)
    return code, spacetime.emit(g, args.format)


def _builtin(name: str, args):
    kinds = {k.value.lower().replace("_", "-"): k for k in primitives.PrimitiveKind}
    key = name.lower().replace("_", "-")
    if key in kinds:
        r = primitives.make(kinds[key])
        return {"expr": unparse(r), "structure": tc.to_json(r)}
    if key == "q-element":
        net = primitives.q_element_network(y_skew=(args.y_skew, 0))
        return net.to_json()
    if key == "q-element-constraints":
        return [c.to_json() for c in primitives.Q_ELEMENT_CONSTRAINTS]
    if key == "token-ring-manifest":
        return {
            "target": primitives.ALLOC_TEXT,
            "parts": [{"name": n, "spec": t} for n, t in primitives.ALLOC_PARTS],
        }
    if key == "token-ring":
        return primitives.token_ring(args.n).to_json()
    raise UsageError(f"unknown built-in {name!r}; try one of {', '.join(BUILTINS)}")


BUILTINS = tuple(k.value.lower().replace("_", "-") for k in primitives.PrimitiveKind) + (
    "q-element", "q-element-constraints", "token-ring-manifest", "token-ring",
)


def cmd_primitives(args):
    if args.name is None:
        return OK, "\n".join(BUILTINS) + "\n"
    return OK, _dump(_builtin(args.name, args))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-o", "--output", help="write the result here instead of standard output")
    common.add_argument("-v", "--verbose", action="store_true", help="summaries on standard error")
    p = _Parser(prog="ditrace", description="Trace-structure tools for delay-insensitive circuits.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    def spec_input(sp):
        sp.add_argument("file", nargs="?", help="spec file ('-' for standard input)")
        sp.add_argument("-e", "--expr", help="spec text given inline")

    sp = add("parse", "canonical form of a spec")
    spec_input(sp)
    sp.add_argument("--format", choices=("json", "text"), default="json")
    sp.set_defaults(run=cmd_parse)

    sp = add("check-di", "delay-insensitivity rules")
    spec_input(sp)
    sp.set_defaults(run=cmd_check_di)

    sp = add("classify", "DI class and every rule verdict")
    spec_input(sp)
    sp.set_defaults(run=cmd_classify)

    sp = add("decompose", "check a decomposition manifest")
    sp.add_argument("file")
    sp.add_argument("--strict-forks", action="store_true", help="forbid inputs read by several parts")
    sp.set_defaults(run=cmd_decompose)

    sp = add("simulate", "simulate a netlist")
    sp.add_argument("file")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--horizon", type=int, default=1000, help="number of delivered events")
    sp.add_argument("--until", type=float, help="stop at this simulated time")
    sp.add_argument("--on-interference", choices=("halt", "log"), default="halt")
    sp.add_argument("--latch-window", type=float, default=0)
    sp.set_defaults(run=cmd_simulate)

    sp = add("graph", "space-time graph of a simulation trace")
    sp.add_argument("file", nargs="?", default="-")
    sp.add_argument("--format", choices=("dot", "json"), default="dot")
    sp.add_argument("--constraints", help="JSON list of {node, first, then} order requirements")
    sp.set_defaults(run=cmd_graph)

    sp = add("primitives", "print a built-in spec, netlist or manifest")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--n", type=int, default=3, help="ring size for token-ring")
    sp.add_argument("--y-skew", type=float, default=0, help="extra delay on the y1 branch for q-element")
    sp.set_defaults(run=cmd_primitives)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, text = args.run(args)
    except (UsageError, ParseError, tc.TraceError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR
    if args.output:
        try:
            Path(args.output).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {args.output}: {exc.strerror}", file=sys.stderr)
            return ERROR
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
