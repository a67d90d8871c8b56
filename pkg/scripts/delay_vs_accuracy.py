"""Per-round delay of the joint solver against the local-accuracy cap."""

import dataclasses

from _common import parser, write
from hapsfl.experiments import ExperimentConfig, sweep, sweep_summary

if __name__ == "__main__":
    p = parser(__doc__, "delay_vs_accuracy.csv")
    p.add_argument("--clients", type=int, nargs="+", default=[100, 1000])
    p.add_argument("--etas", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.9])
    args = p.parse_args()
    rows = []
    for K in args.clients:
        base = ExperimentConfig(clients=K, rounds=args.rounds, learn=False)
        part = sweep("eta", args.etas, ["ccra"], range(args.seeds), base)
        rows += [dict(dataclasses.asdict(r), clients=K) for r in part]
        for row in sweep_summary(part):
            print(f"K={K:>5} eta={row['value']:.2f}  {row['per_round_delay_mean_s']:8.2f} s/round")
    write(args.out, rows)
