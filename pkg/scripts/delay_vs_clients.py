"""Per-round and total delay of every system as the client population grows."""

import dataclasses

from _common import parser, write
from hapsfl.experiments import SYSTEMS, ExperimentConfig, sweep, sweep_summary

if __name__ == "__main__":
    p = parser(__doc__, "delay_vs_clients.csv")
    p.add_argument("--clients", type=int, nargs="+", default=[10, 50, 100, 500])
    args = p.parse_args()
    base = ExperimentConfig(rounds=args.rounds, learn=False)
    rows = sweep("clients", args.clients, SYSTEMS, range(args.seeds), base)
    write(args.out, [dataclasses.asdict(r) for r in rows])
    for row in sweep_summary(rows):
        print(f"{row['system']:>13} K={row['value']:>5.0f}  {row['per_round_delay_mean_s']:10.1f} s/round")
