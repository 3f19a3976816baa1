"""Rule verdicts and DI class for every built-in primitive and the two event-mode gates."""

import argparse
import json

from ditrace import di_rules as D
from ditrace import primitives as P
from ditrace.spec_language import spec


def rows():
    for kind in P.PrimitiveKind:
        yield kind.value, P.text(kind), spec(P.text(kind))
    yield "AND (event mode)", "-", P.and_gate()
    yield "OR (event mode)", "-", P.or_gate()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--json", action="store_true", help="full reports as JSON")
    args = ap.parse_args()
    if args.json:
        print(json.dumps({name: D.check_di(r).to_json() for name, _, r in rows()}, indent=1, ensure_ascii=False))
        return
    rules = ("R0", "R1", "R2'", "R3'", "R3''", "R3'''")
    print(f"{'primitive':<18}" + "".join(f"{r:>7}" for r in rules) + f"  {'class':<20} text")
    for name, text, r in rows():
        marks = "".join(f"{'yes' if D.check_rule(r, rule).holds else 'no':>7}" for rule in rules)
        print(f"{name:<18}{marks}  {D.classify(r).value:<20} {text}")


if __name__ == "__main__":
    main()
