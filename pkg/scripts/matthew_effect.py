"""Effective number of skills over training, fixed versus learned prior (PointBox, K=10)."""
import argparse
import os

from diayn.experiments import matthew_effect
from diayn.plots import PlotSpec, export_plot
from diayn.records import write_records


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--out-dir", default="runs/matthew")
    args = p.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    rows = []
    for seed in range(args.seeds):
        for prior in ("fixed_uniform", "learned"):
            _, reports = matthew_effect(seed, prior)
            rows += [{"prior": prior, "seed": seed, "episode": e, "effective_skills": r.effective_skills}
                     for e, r in reports]
            print(f"seed {seed} {prior:>13}: min effective skills {min(r.effective_skills for _, r in reports):.2f}")
    path = os.path.join(args.out_dir, "effective_skills.tsv")
    write_records(path, rows)
    for seed in range(args.seeds):
        sub = os.path.join(args.out_dir, f"seed{seed}.tsv")
        write_records(sub, [r for r in rows if r["seed"] == seed])
        export_plot(PlotSpec("curve", sub, os.path.join(args.out_dir, f"seed{seed}.svg"), x="episode",
                             y="effective_skills", group="prior", xlabel="episode", ylabel="effective skills",
                             title=f"seed {seed}"))


if __name__ == "__main__":
    main()
