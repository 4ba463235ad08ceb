"""Meta-controller return over 25 grid goals as the number of skills grows."""
import argparse
import statistics

from diayn.cli import table
from diayn.experiments import cached_train, continuous_config, hierarchy


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--skills", type=int, nargs="+", default=[2, 6, 12])
    args = p.parse_args()
    rows = []
    for k in args.skills:
        runs = [hierarchy(cached_train(continuous_config(seed, skills=k)), seed=seed) for seed in range(args.seeds)]
        rows.append({"skills": k, "meta_median": statistics.median(r[0] for r in runs),
                     "best_single_median": statistics.median(r[1] for r in runs)})
    print(table(rows, ("skills", "meta_median", "best_single_median")))


if __name__ == "__main__":
    main()
