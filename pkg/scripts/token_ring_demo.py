"""Simulate a token ring and summarise who got the resource and when."""

import argparse
import pathlib

from ditrace import primitives as P
from ditrace import simulator as S
from ditrace import spacetime as G


def grants(trace, n):
    out = {i: [] for i in range(n)}
    for e in trace.events:
        node, port = e.source
        if node.startswith("sequencer_") and port == "p1":
            out[int(node.rsplit("_", 1)[1])].append(S.to_ticks(e.emit_time))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3, help="ring size")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--horizon", type=int, default=300)
    ap.add_argument("--arbitration", choices=("random", "fifo"), default="random")
    ap.add_argument("--dot", type=pathlib.Path, help="also write the space-time graph here")
    args = ap.parse_args()

    net = P.token_ring(args.n, delay=S.uniform(1, 4), arbitration=args.arbitration)
    tr = S.simulate(net, horizon=args.horizon, seed=args.seed)
    print(f"{len(tr.delivered())} events, {len(tr.interference)} interference reports")
    for i, times in grants(tr, args.n).items():
        shown = ", ".join(f"{t:g}" for t in times[:8]) + (" ..." if len(times) > 8 else "")
        print(f"item {i}: {len(times)} grants  [{shown}]")
    bad = P.check_conformance(tr, net)
    print("boundary traces conform" if not bad else f"nonconforming items: {[i for i, _ in bad]}")
    print("token conserved" if P.token_conserved(tr, net) else "token NOT conserved")
    if args.dot:
        args.dot.write_text(G.emit(G.build(tr), "dot"), encoding="utf-8")
        print(f"wrote {args.dot}")


if __name__ == "__main__":
    main()
