"""Train PointBox and hallway skills; write final-state summaries, traces and SVG plots."""
import argparse
import os

import numpy as np

from diayn.core import rollout
from diayn.experiments import cached_train, continuous_config, dispersion, hallway_exits
from diayn.plots import PlotSpec, export_plot
from diayn.records import write_records


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skills", type=int, default=6)
    p.add_argument("--out-dir", default="runs/dispersion")
    args = p.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for env in ("pointbox", "hallway"):
        rs = cached_train(continuous_config(args.seed, skills=args.skills, env=env))
        minsep, acc, means = dispersion(rs)
        exits, _ = hallway_exits(rs)
        print(f"{env}: min separation {minsep:.3f}, accuracy {acc:.3f}, skills outside corridor {exits}")
        states, _ = rollout(rs, np.arange(args.skills), greedy=True)
        trace = [{"skill": z, "t": t, "x": float(s[0]), "y": float(s[1])}
                 for z in range(args.skills) for t, s in enumerate(states[z])]
        path = os.path.join(args.out_dir, f"{env}_traces.tsv")
        write_records(path, trace)
        export_plot(PlotSpec("trace", path, os.path.join(args.out_dir, f"{env}_xy.svg"), x="x", y="y",
                             group="skill", xlabel="x", ylabel="y", title=env))


if __name__ == "__main__":
    main()
