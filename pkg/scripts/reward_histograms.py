"""Per-skill task-reward distributions on mountain car early and late in training."""
import argparse
import os

import numpy as np

from diayn.core import RunState, reward_histogram, train
from diayn.envs import TaskReward
from diayn.experiments import continuous_config
from diayn.plots import PlotSpec, export_plot
from diayn.records import write_records


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skills", type=int, default=10)
    p.add_argument("--episodes", type=int, default=2000)
    p.add_argument("--checkpoints", type=int, nargs="+", default=[50, 500, 2000])
    p.add_argument("--out-dir", default="runs/histograms")
    args = p.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    tr = TaskReward("x_progress")
    rs = RunState.fresh(continuous_config(args.seed, skills=args.skills, env="mountaincar",
                                          episodes=args.episodes))
    rows = []
    for stop in args.checkpoints:
        rs.config.episodes = stop
        rs, _, _ = train(state=rs)
        hist = reward_histogram(rs, tr, episodes_per_skill=5, greedy=False)
        means = [float(np.mean(h)) for h in hist]
        rows += [{"episode": stop, "skill": z, "value": m} for z, m in enumerate(means)]
        print(f"episode {stop}: variance of per-skill mean reward {np.var(means):.5f}")
    path = os.path.join(args.out_dir, "skill_rewards.tsv")
    write_records(path, rows)
    export_plot(PlotSpec("histogram", path, os.path.join(args.out_dir, "skill_rewards.svg"), group="episode",
                         xlabel="per-skill mean x progress", ylabel="skills", bins=15))


if __name__ == "__main__":
    main()
