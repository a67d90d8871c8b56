"""Rounds and cumulative delay to reach a target bound for several participation floors."""

import numpy as np

from _common import parser, write
from hapsfl.experiments import ExperimentConfig, run_experiment
from hapsfl.metrics import summarize

if __name__ == "__main__":
    p = parser(__doc__, "rounds_to_target.csv")
    p.add_argument("--clients", type=int, default=50)
    p.add_argument("--fractions", type=float, nargs="+", default=[0.1, 0.2, 0.4, 0.6, 0.8])
    p.add_argument("--epsilon", type=float, default=None,
                   help="target bound (default: half the first-round bound of the largest floor)")
    args = p.parse_args()
    rows = []
    target = args.epsilon
    for frac in sorted(args.fractions, reverse=True):
        recs = []
        for seed in range(args.seeds):
            cfg = ExperimentConfig(clients=args.clients, rounds=args.rounds, seed=seed, min_fraction=frac)
            recs += run_experiment(cfg).records
        if target is None:
            target = 0.5 * float(np.mean([r.bound for r in recs if r.round == 1]))
        (s,) = summarize(recs, target)
        rows.append({"min_fraction": frac, "target": target, "reached": s.reached, "runs": s.runs,
                     "rounds_to_target": s.rounds_to_target, "delay_to_target_s": s.delay_to_target_s,
                     "per_round_delay_s": s.per_round_delay_mean_s, "final_loss": s.final_loss_mean})
        print(rows[-1])
    write(args.out, rows)
