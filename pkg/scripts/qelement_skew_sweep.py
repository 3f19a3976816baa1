"""Sweep the extra delay on the y1 branch of the Q-element's isochronic fork.

For each skew, count the seeds whose run reports interference at gate B and
the seeds where the space-time graph shows u arriving at B before y1.
"""

import argparse

from ditrace import primitives as P
from ditrace import simulator as S
from ditrace import spacetime as G


def sweep(skews, seeds, horizon):
    rows = []
    for skew in skews:
        net = P.q_element_network(y_skew=(skew, 0))
        halted = misordered = 0
        for seed in range(seeds):
            tr = S.simulate(net, horizon=horizon, seed=seed, on_interference="log")
            if any(r.location == "B" for r in tr.interference):
                halted += 1
            if not G.check_order(G.build(tr), P.Q_ELEMENT_CONSTRAINTS).ok:
                misordered += 1
        rows.append((skew, halted, misordered))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-skew", type=float, default=14)
    ap.add_argument("--step", type=float, default=1)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--horizon", type=int, default=400)
    args = ap.parse_args()
    skews, s = [], 0.0
    while s <= args.max_skew:
        skews.append(s)
        s += args.step
    print(f"{'skew':>6} {'interference at B':>18} {'order violated':>15}   ({args.seeds} seeds)")
    for skew, halted, misordered in sweep(skews, args.seeds, args.horizon):
        print(f"{skew:6g} {halted:18d} {misordered:15d}")


if __name__ == "__main__":
    main()
