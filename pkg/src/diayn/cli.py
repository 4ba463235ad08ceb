"""``diayn`` command line: train, eval, finetune, hier, imitate, oracle, plot.

Exit status is 0 on success, 1 for usage, configuration or input errors and 2
for runtime or numeric failures.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import checkpoint, downstream, oracle
from .config import load_config
from .core import METRIC_FIELDS, estimate_objective, reward_histogram, rollout, train
from .envs import GridWorld, TaskReward, goal_grid
from .errors import ConfigError, FormatError, InputError, NumericError
from .plots import KINDS, PlotSpec, export_plot
from .records import read_records, write_records

REPORT_FIELDS = ("episode", "H_Z", "H_Z_given_S", "H_A_given_SZ", "F_estimate", "G_estimate", "effective_skills")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def table(rows, headers):
    """Right-aligned text table."""
    cells = [[h for h in headers]] + [[_fmt(r[h]) for h in headers] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.5f}"
    return str(v)


def _out_path(out_dir, name):
    """Resolve ``name`` inside ``out_dir``; refuse anything that escapes it."""
    root = os.path.realpath(out_dir)
    path = os.path.realpath(os.path.join(root, name))
    if os.path.commonpath([root, path]) != root:
        raise ConfigError(f"output {name!r} lies outside the output directory {out_dir!r}")
    return path


def _config(args):
    overrides = list(args.set or [])
    if getattr(args, "out_dir", None):
        overrides.append(f"out_dir={args.out_dir}")
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "checkpoint", None):
        overrides.append(f"{args.command}.checkpoint={args.checkpoint}")
    return load_config(args.config, overrides)


def _load_checkpoint(path, command):
    if not path:
        raise ConfigError(f"{command}: no checkpoint given (set {command}.checkpoint or pass --checkpoint)")
    if not os.path.exists(path):
        raise ConfigError(f"{command}: checkpoint {path!r} does not exist")
    return checkpoint.load(path)


def _require_task(task, rs, command):
    if task is None:
        raise ConfigError(f"{command}: no task given (set {command}.task)")
    _check_task(task, rs, command)
    return task


def _check_task(task, rs, command):
    dim = rs.env.positions(rs.env.reset(np.random.default_rng(0), 1)).shape[-1]
    if task.kind == "goal_distance" and len(task.goal) != dim:
        raise ConfigError(f"{command}: goal has {len(task.goal)} coordinates but the checkpoint's "
                          f"{rs.env.name} states have {dim}")


def _state_fields(env):
    return ("state",) if env.discrete else tuple(f"s{i}" for i in range(env.state_dim))


def _state_cells(env, s):
    return {"state": int(s)} if env.discrete else {f"s{i}": float(v) for i, v in enumerate(s)}


# ------------------------------------------------------------------ commands

def cmd_train(args):
    rc = _config(args)
    rs, records, reports = train(rc.train)
    write_records(_out_path(rc.out_dir, "metrics.tsv"), records, METRIC_FIELDS)
    write_records(_out_path(rc.out_dir, "reports.tsv"),
                  [{"episode": e, **r.as_dict()} for e, r in reports], REPORT_FIELDS)
    path = checkpoint.save(rs, _out_path(rc.out_dir, "checkpoint.json"))
    checkpoint.save_discriminator(rs.disc, _out_path(rc.out_dir, "discriminator.json"))
    rep = rs.last_report if rs.last_report is not None else estimate_objective(rs, 4 * rc.train.skills)
    print(table([{"term": k, "value": v} for k, v in rep.as_dict().items()], ("term", "value")))
    print(f"checkpoint: {path}")
    return 0


def cmd_eval(args):
    rc = _config(args)
    ec = rc.eval
    rs = _load_checkpoint(ec.checkpoint, "eval")
    task = _require_task(ec.task, rs, "eval")
    hist = reward_histogram(rs, task, ec.episodes_per_skill, greedy=ec.greedy, seed=rc.seed)
    summary = [{"skill": z, "mean": float(np.mean(h)), "std": float(np.std(h)), "min": float(np.min(h)),
                "max": float(np.max(h)), "n": len(h)} for z, h in enumerate(hist)]
    write_records(_out_path(rc.out_dir, "eval.tsv"), summary)
    write_records(_out_path(rc.out_dir, "eval_samples.tsv"),
                  [{"skill": z, "return": r} for z, h in enumerate(hist) for r in h], ("skill", "return"))
    states, masks = rollout(rs, np.arange(rs.config.skills), greedy=True)
    traces = []
    fields = _state_fields(rs.env)
    for z in range(rs.config.skills):
        for t in range(states.shape[1]):
            if t == 0 or masks[z, t - 1]:
                traces.append({"skill": z, "t": t, **_state_cells(rs.env, states[z, t])})
    write_records(_out_path(rc.out_dir, "traces.tsv"), traces, ("skill", "t", *fields))
    print(table(summary, ("skill", "mean", "std", "min", "max", "n")))
    best = max(summary, key=lambda r: r["mean"])
    print(f"best skill: {best['skill']} (mean return {best['mean']:.5f})")
    return 0


def cmd_finetune(args):
    rc = _config(args)
    fc = rc.finetune
    rs = _load_checkpoint(fc.checkpoint, "finetune")
    task = _require_task(fc.task, rs, "finetune")
    arms = ("pretrained", "random") if fc.init == "both" else (fc.init,)
    seed = rs.config.seed if rc.seed is None else rc.seed
    rows = []
    for arm in arms:
        curve = downstream.finetune(rs, task, fc.budget, init=arm, seed=seed, lr=fc.lr)
        rows += [{"arm": arm, "episode": i, "return": r} for i, r in enumerate(curve)]
        print(f"{arm}: start {curve[0]:.5f}  end {curve[-1]:.5f}")
    write_records(_out_path(rc.out_dir, "finetune.tsv"), rows, ("arm", "episode", "return"))
    return 0


def cmd_hier(args):
    rc = _config(args)
    hc = rc.hier
    rs = _load_checkpoint(hc.checkpoint, "hier")
    if rs.env.discrete:
        raise ConfigError("hier: the meta-controller needs a continuous-state checkpoint")
    if hc.goals == "grid":
        tasks = [TaskReward("goal_distance", g) for g in goal_grid()]
        for t in tasks:
            _check_task(t, rs, "hier")
    else:
        tasks = [_require_task(hc.task, rs, "hier")]
    seed = rs.config.seed if rc.seed is None else rc.seed
    _, curve, final = downstream.meta_train(rs, tasks, hc.k, hc.budget, seed=seed, bins=hc.bins,
                                            lr=hc.lr, eps_end=hc.eps_end)
    write_records(_out_path(rc.out_dir, "hier.tsv"),
                  [{"episode": i + 1, "return": float(r.mean())} for i, r in enumerate(curve)], ("episode", "return"))
    single = downstream.skill_returns(rs, tasks)
    rows = [{"task": i, "meta_return": float(final[i]), "best_single_return": float(single[i].max())}
            for i in range(len(tasks))]
    write_records(_out_path(rc.out_dir, "hier_final.tsv"), rows)
    print(f"meta-controller mean return: {float(np.mean(final)):.5f}")
    print(f"best fixed skill mean return: {float(single.mean(axis=0).max()):.5f}")
    return 0


def _read_expert(path, fields):
    if not path or not os.path.exists(path):
        raise InputError(f"expert trajectory file {path!r} does not exist")
    recs = read_records(path)
    if not recs:
        raise InputError(f"expert trajectory {path!r} is empty")
    fields = fields or [k for k in recs[0] if k not in ("t", "skill")]
    try:
        return np.array([[float(r[f]) for f in fields] for r in recs])
    except KeyError as exc:
        raise InputError(f"expert trajectory has no column {exc.args[0]!r}") from None


def cmd_imitate(args):
    rc = _config(args)
    ic = rc.imitate
    if not ic.checkpoint:
        raise ConfigError("imitate: no checkpoint given (set imitate.checkpoint or pass --checkpoint)")
    expert = _read_expert(ic.expert, ic.fields)
    try:
        rs, disc = checkpoint.load(ic.checkpoint), None
    except FormatError:
        rs, disc = None, checkpoint.load_discriminator(ic.checkpoint)
    if rs is not None:
        disc = rs.disc
        if rs.env.discrete:
            expert = expert[:, 0].astype(np.int64)
        elif expert.shape[1] != rs.env.state_dim:
            raise ConfigError(f"imitate: expert states have {expert.shape[1]} columns, "
                              f"{rs.env.name} states have {rs.env.state_dim}")
    z, score = downstream.imitate(disc, expert)
    rec = {"skill": z, "score": score, "distance": math.nan}
    if rs is not None:
        st, m = rollout(rs, [z], greedy=True)
        live = np.concatenate([[True], m[0, :-1]])
        rec["distance"] = downstream.trajectory_distance(rs.env.positions(expert), rs.env.positions(st[0][live]))
    write_records(_out_path(rc.out_dir, "imitate.tsv"), [rec], ("skill", "score", "distance"))
    print(table([rec], ("skill", "score", "distance")))
    return 0


def cmd_oracle(args):
    rows = []
    n = args.n
    h_closed, gap = oracle.lemma2_closed_form(n)
    grid = GridWorld(n)
    rep = oracle.exact_objective(grid, oracle.fig5_policies(n), np.full(2, 0.5))
    rows.append({"quantity": f"H[A|S,Z] closed form (N={n})", "value": h_closed})
    rows.append({"quantity": f"H[A|S,Z] exact (N={n})", "value": rep.H_A_given_SZ})
    rows.append({"quantity": f"gap to log 4 (N={n})", "value": gap})
    rows.append({"quantity": f"half-grid policy verified (N={n})", "value": str(oracle.verify_fig5_policy(n))})
    if args.shape:
        a, b = args.shape
        if a < 1 or b < 1 or (a % 2 and b % 2):
            raise InputError(f"shape {a}x{b} needs an even side to split in halves")
        for part in _half_splits(a, b):
            rows.append({"quantity": f"{a}x{b} halves, border {oracle.border_length(part)}",
                         "value": oracle.partition_objective((a, b), part, args.alpha)})
        if a * b <= 16:
            best, args_ = oracle.best_partitions((a, b), 2, args.alpha)
            borders = sorted({oracle.border_length(p) for p in args_})
            rows.append({"quantity": f"{a}x{b} exhaustive optimum", "value": best})
            rows.append({"quantity": f"{a}x{b} optimum border lengths", "value": " ".join(map(str, borders))})
    print(table(rows, ("quantity", "value")))
    if args.out_dir:
        write_records(_out_path(args.out_dir, "oracle.tsv"), rows, ("quantity", "value"))
    return 0


def _half_splits(a, b):
    x, y = np.meshgrid(np.arange(a), np.arange(b), indexing="ij")
    out = []
    if a % 2 == 0:
        out.append((x >= a // 2).astype(int))
    if b % 2 == 0:
        out.append((y >= b // 2).astype(int))
    return out


def cmd_plot(args):
    out_dir = args.out_dir or "."
    spec = PlotSpec(kind=args.kind, input=args.input, output=_out_path(out_dir, args.output), x=args.x, y=args.y,
                    group=args.group, value=args.value, xlabel=args.xlabel, ylabel=args.ylabel,
                    title=args.title or "", bins=args.bins)
    print(export_plot(spec))
    return 0


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "finetune": cmd_finetune, "hier": cmd_hier,
            "imitate": cmd_imitate, "oracle": cmd_oracle, "plot": cmd_plot}


def build_parser():
    p = _Parser(prog="diayn", description="Unsupervised skill discovery experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("train", "eval", "finetune", "hier", "imitate"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML run configuration")
        s.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key, e.g. train.alpha=0.05 (repeatable)")
        s.add_argument("--out-dir", help="output directory (overrides out_dir)")
        s.add_argument("--seed", type=int, help="global seed (overrides seed)")
        if name != "train":
            s.add_argument("--checkpoint", help="checkpoint path (overrides <command>.checkpoint)")
    o = sub.add_parser("oracle")
    o.add_argument("--n", type=int, default=4, help="side of the square grid for the closed forms")
    o.add_argument("--shape", type=int, nargs=2, metavar=("N", "M"), help="compare half splits of an N x M grid")
    o.add_argument("--alpha", type=float, default=1.0)
    o.add_argument("--out-dir")
    pl = sub.add_parser("plot")
    pl.add_argument("--kind", choices=KINDS, required=True)
    pl.add_argument("--input", required=True)
    pl.add_argument("--output", required=True, help="SVG file name inside --out-dir")
    pl.add_argument("--out-dir")
    pl.add_argument("--x", default="t")
    pl.add_argument("--y", default="value")
    pl.add_argument("--group")
    pl.add_argument("--value", default="value")
    pl.add_argument("--xlabel")
    pl.add_argument("--ylabel")
    pl.add_argument("--title")
    pl.add_argument("--bins", type=int, default=20)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, InputError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
