"""Imitate expert trajectories from a different-seed run with each method variant."""
import argparse
import os

import numpy as np

from diayn.cli import table
from diayn.downstream import imitation_study, imitation_variants
from diayn.experiments import cached_train, continuous_config
from diayn.plots import PlotSpec, export_plot
from diayn.records import write_records


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--episodes", type=int, default=8000)
    p.add_argument("--variants", nargs="+", default=["full", "few_skills", "low_entropy", "learned_prior"])
    p.add_argument("--out-dir", default="runs/imitation")
    args = p.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    base = continuous_config(0, skills=50, episodes=args.episodes)
    expert = cached_train(continuous_config(100, skills=50, episodes=args.episodes))
    variants = imitation_variants(base)
    rows, summary = [], []
    for name in args.variants:
        recs = imitation_study(cached_train(variants[name]), [expert], per_skill=2)
        rows += [{"variant": name, **r} for r in recs]
        s, d = np.array([r["score"] for r in recs]), np.array([r["distance"] for r in recs])
        summary.append({"variant": name, "tasks": len(recs), "median_distance": float(np.median(d)),
                        "corr_score_distance": float(np.corrcoef(s, d)[0, 1])})
    print(table(summary, ("variant", "tasks", "median_distance", "corr_score_distance")))
    path = os.path.join(args.out_dir, "imitation.tsv")
    # sorted by score so each variant draws as a left-to-right line
    write_records(path, sorted(rows, key=lambda r: (r["variant"], r["score"])))
    export_plot(PlotSpec("trace", path, os.path.join(args.out_dir, "score_vs_distance.svg"), x="score",
                         y="distance", group="variant", xlabel="discriminator score", ylabel="L2 distance"))


if __name__ == "__main__":
    main()
