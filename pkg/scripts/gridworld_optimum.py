"""Train 4x4 two-skill gridworld skills and score them with the exact oracle."""
import argparse

from diayn.cli import table
from diayn.experiments import gridworld_optimum


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=5)
    args = p.parse_args()
    rows = []
    for seed in range(args.seeds):
        h, hz, sec = gridworld_optimum(seed)
        rows.append({"seed": seed, "H_Z_given_S": h, "H_Z": hz, "seconds": sec})
    print(table(rows, ("seed", "H_Z_given_S", "H_Z", "seconds")))


if __name__ == "__main__":
    main()
