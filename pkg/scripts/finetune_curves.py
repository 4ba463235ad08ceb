"""Finetune pretrained versus randomly initialised policies on the PointBox goal task."""
import argparse
import os
import statistics

from diayn.experiments import cached_train, continuous_config, finetune_comparison
from diayn.plots import PlotSpec, export_plot
from diayn.records import write_records


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--budget", type=int, default=60)
    p.add_argument("--out-dir", default="runs/finetune")
    args = p.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    pre_n, rnd_n, rows = [], [], []
    for seed in range(args.seeds):
        a, b, pre, rnd = finetune_comparison(cached_train(continuous_config(seed)), budget=args.budget, seed=seed)
        pre_n.append(a)
        rnd_n.append(b)
        rows += [{"seed": seed, "arm": arm, "episode": i, "return": r}
                 for arm, curve in (("pretrained", pre), ("random", rnd)) for i, r in enumerate(curve)]
        print(f"seed {seed}: episodes to 90% pretrained {a}, random {b}")
    print(f"median: pretrained {statistics.median(pre_n)}, random {statistics.median(rnd_n)}")
    path = os.path.join(args.out_dir, "finetune.tsv")
    write_records(path, rows)
    seed0 = os.path.join(args.out_dir, "seed0.tsv")
    write_records(seed0, [r for r in rows if r["seed"] == 0])
    export_plot(PlotSpec("curve", seed0, os.path.join(args.out_dir, "seed0.svg"), x="episode", y="return",
                         group="arm", xlabel="episode", ylabel="greedy return"))


if __name__ == "__main__":
    main()
