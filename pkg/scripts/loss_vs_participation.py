"""Final global loss after a fixed number of rounds for several participation sizes."""

import numpy as np

from _common import parser, write
from hapsfl.fl import FlHyperparams, LossModel, generate_noniid_data, random_planner, run_ccra_fl

if __name__ == "__main__":
    p = parser(__doc__, "loss_vs_participation.csv")
    p.add_argument("--population", type=int, default=80)
    p.add_argument("--sizes", type=int, nargs="+", default=[5, 10, 20, 40, 80])
    p.add_argument("--iterations", type=int, default=5)
    args = p.parse_args()
    task = LossModel("linear", generate_noniid_data(0, args.population, 50, 0.5), reg=0.1)
    hyper = FlHyperparams.for_task(task, eta=0.5)
    rows = []
    for m in args.sizes:
        for seed in range(args.seeds):
            planner = random_planner(args.population, m, 0.5, np.random.default_rng([seed, m]))
            run = run_ccra_fl(task, hyper, planner, args.rounds, fixed_iterations=args.iterations)
            for n, loss in enumerate(run.history.global_loss, 1):
                rows.append({"selected": m, "seed": seed, "round": n, "loss": loss,
                             "gap": loss - run.f_star, "bound": run.bounds[n]})
        final = [r["loss"] for r in rows if r["selected"] == m and r["round"] == args.rounds]
        print(f"|K|={m:>3}  final loss {np.mean(final):.4f} +- {np.std(final):.4f}")
    write(args.out, rows)
