"""Run configuration: a YAML file plus ``section.key=value`` overrides.

Everything is validated before any compute starts.  Errors point at the line
of the offending key where the file provides one.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import yaml

from .core import TrainConfig
from .envs import ENVS, TaskReward, make_env
from .errors import ConfigError, InputError


@dataclass
class EvalConfig:
    checkpoint: str | None = None
    task: dict | None = None
    episodes_per_skill: int = 1
    greedy: bool = True


@dataclass
class FinetuneConfig:
    checkpoint: str | None = None
    task: dict | None = None
    budget: int = 100
    init: str = "both"  # pretrained, random or both
    lr: float | None = None


@dataclass
class HierConfig:
    checkpoint: str | None = None
    task: dict | None = None
    goals: str | None = None  # "grid" trains one controller per goal of a 5x5 grid
    k: int = 25
    budget: int = 200
    bins: int = 5
    lr: float = 0.5
    eps_end: float = 0.05


@dataclass
class ImitateConfig:
    checkpoint: str | None = None  # full checkpoint or exported discriminator
    expert: str | None = None  # record file, one state per line
    fields: list | None = None  # state columns of the expert file; default: all numeric columns


SECTIONS = {"train": TrainConfig, "eval": EvalConfig, "finetune": FinetuneConfig,
            "hier": HierConfig, "imitate": ImitateConfig}
TOP_LEVEL = {"seed", "out_dir", *SECTIONS}


@dataclass
class RunConfig:
    out_dir: str = "runs/default"
    seed: int | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)
    hier: HierConfig = field(default_factory=HierConfig)
    imitate: ImitateConfig = field(default_factory=ImitateConfig)


def _to_python(node, path, lines):
    """Plain data from a composed YAML node; records the line of every key path."""
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k_node, v_node in node.value:
            key = k_node.value
            if key in out:
                raise ConfigError(f"duplicate key {'.'.join(path + (key,))!r}", line=k_node.start_mark.line + 1)
            out[key] = _to_python(v_node, path + (key,), lines)
            lines[path + (key,)] = k_node.start_mark.line + 1
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_python(v, path + (str(i),), lines) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


def parse_yaml(text):
    """``(data, lines)`` where ``lines`` maps key paths to 1-based line numbers."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                          line=None if mark is None else mark.line + 1) from None
    lines = {}
    if node is None:
        return {}, lines
    data = _to_python(node, (), lines)
    if not isinstance(data, dict):
        raise ConfigError("top level of a config file must be a mapping", line=1)
    return data, lines


def apply_overrides(data, overrides):
    """Apply ``section.key=value`` strings; values are parsed as YAML scalars."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            raise ConfigError(f"override {item!r}: value is not valid YAML") from None
        target = data
        for p in parts[:-1]:
            target = target.setdefault(p, {})
            if not isinstance(target, dict):
                raise ConfigError(f"override {item!r}: {p!r} is not a section")
        target[parts[-1]] = value
    return data


def _task(d, where, line):
    if d is None:
        return None
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a mapping", line=line)
    unknown = set(d) - {"kind", "goal"}
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}", line=line)
    try:
        tr = TaskReward(d.get("kind", "goal_distance"), None if d.get("goal") is None else tuple(d["goal"]))
    except InputError as exc:
        raise ConfigError(f"{where}: {exc}", line=line) from None
    return tr


def build(data, lines=None):
    """Validate plain data into a :class:`RunConfig`."""
    lines = lines or {}
    unknown = set(data) - TOP_LEVEL
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r}; expected one of {sorted(TOP_LEVEL)}", line=lines.get((key,)))
    rc = RunConfig(out_dir=str(data.get("out_dir", RunConfig.out_dir)), seed=data.get("seed"))
    for name, cls in SECTIONS.items():
        section = data.get(name) or {}
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} must be a mapping", line=lines.get((name,)))
        known = {f.name for f in fields(cls)}
        for key in section:
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section {name!r}", line=lines.get((name, key)))
        try:
            setattr(rc, name, cls(**section))
        except TypeError as exc:
            raise ConfigError(f"section {name!r}: {exc}", line=lines.get((name,))) from None
    _validate(rc, lines)
    return rc


def _check_type(value, kind, where, line):
    ok = isinstance(value, kind) and not isinstance(value, bool)
    if not ok:
        raise ConfigError(f"{where} must be {kind.__name__ if isinstance(kind, type) else 'numeric'}, "
                          f"got {value!r}", line=line)


def _validate(rc, lines):
    t = rc.train
    line = lambda *k: lines.get(("train",) + k, lines.get(("train",)))  # noqa: E731
    if rc.seed is not None:
        _check_type(rc.seed, int, "seed", lines.get(("seed",)))
        t.seed = rc.seed
    if not isinstance(t.env, dict):
        raise ConfigError("train.env must be a mapping", line=line("env"))
    if "name" not in t.env:
        raise ConfigError("train.env: missing key 'name'", line=line("env"))
    if t.env["name"] not in ENVS:
        raise ConfigError(f"train.env.name: unknown environment {t.env['name']!r}; choose from {sorted(ENVS)}",
                          line=lines.get(("train", "env", "name")))
    try:
        make_env(t.env)
    except ConfigError as exc:
        raise ConfigError(f"train.env: {exc}", line=line("env")) from None
    for key in ("skills", "episodes", "seed", "batch_episodes", "k_report", "report_bins"):
        _check_type(getattr(t, key), int, f"train.{key}", line(key))
    for key in ("alpha", "gamma", "lr", "q_lr", "disc_lr", "smoothing", "score_decay", "prior_decay"):
        _check_type(getattr(t, key), (int, float), f"train.{key}", line(key))
    try:
        t.validate()
    except ConfigError as exc:
        # messages start with the offending field name
        key = str(exc).split()[0]
        raise ConfigError(f"train: {exc}", line=line(key)) from None
    for name in ("eval", "finetune", "hier"):
        sec = getattr(rc, name)
        sec.task = _task(sec.task, f"{name}.task", lines.get((name, "task")))
    if rc.finetune.init not in ("pretrained", "random", "both"):
        raise ConfigError(f"finetune.init must be pretrained, random or both, got {rc.finetune.init!r}",
                          line=lines.get(("finetune", "init")))
    for name, key in (("finetune", "budget"), ("hier", "budget"), ("hier", "k"), ("hier", "bins"),
                      ("eval", "episodes_per_skill")):
        v = getattr(getattr(rc, name), key)
        _check_type(v, int, f"{name}.{key}", lines.get((name, key)))
        if v < (1 if key != "budget" else 0):
            raise ConfigError(f"{name}.{key} must be positive, got {v}", line=lines.get((name, key)))
    if rc.hier.goals not in (None, "grid"):
        raise ConfigError(f"hier.goals must be 'grid' or absent, got {rc.hier.goals!r}",
                          line=lines.get(("hier", "goals")))


def load_config(path=None, overrides=None):
    """Read, override and validate; ``path=None`` starts from defaults."""
    if path is None:
        data, lines = {}, {}
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
        data, lines = parse_yaml(text)
    apply_overrides(data, overrides)
    return build(data, lines)
