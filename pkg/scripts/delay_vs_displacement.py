"""Mean delay as the platform displacement variance grows (paired rounds)."""

import dataclasses

from _common import parser, write
from hapsfl.experiments import ExperimentConfig, ratio_table, sweep, sweep_summary

if __name__ == "__main__":
    p = parser(__doc__, "delay_vs_displacement.csv")
    p.add_argument("--sigma2", type=float, nargs="+", default=[0.01, 0.5, 1.0, 2.0, 3.0])
    p.add_argument("--clients", type=int, default=50)
    args = p.parse_args()
    base = ExperimentConfig(clients=args.clients, rounds=args.rounds, learn=False, antithetic_rounds=True)
    rows = sweep("sigma2", args.sigma2, ["ccra", "haps_no_sel"], range(args.seeds), base)
    write(args.out, [dataclasses.asdict(r) for r in rows])
    for row in ratio_table(sweep_summary(rows)):
        print(f"{row['system']:>12} sigma2={row['value']:<5} ratio {row['ratio']:.4f}")
