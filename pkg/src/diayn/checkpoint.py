"""Versioned JSON checkpoints.

Python's float repr round-trips exactly, so a saved and reloaded run state is
bit-identical, RNG included.
"""
from __future__ import annotations

import json
import os

from .core import run_state_from_dict, run_state_to_dict
from .discriminator import discriminator_from_state
from .errors import FormatError

CHECKPOINT_VERSION = "diayn-checkpoint/1"
DISCRIMINATOR_VERSION = "diayn-discriminator/1"


def dumps(rs):
    return json.dumps({"version": CHECKPOINT_VERSION, **run_state_to_dict(rs)}, sort_keys=True)


def loads(text):
    d = _parse(text, CHECKPOINT_VERSION)
    try:
        return run_state_from_dict(d)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise FormatError(f"malformed checkpoint: {exc!r}") from exc


def save(rs, path):
    _write(path, dumps(rs))
    return path


def load(path):
    return loads(_read(path))


def save_discriminator(disc, path):
    """Export only the discriminator, e.g. for imitation lookups."""
    _write(path, json.dumps({"version": DISCRIMINATOR_VERSION, "discriminator": disc.state()}, sort_keys=True))
    return path


def load_discriminator(path):
    d = _parse(_read(path), DISCRIMINATOR_VERSION)
    try:
        return discriminator_from_state(d["discriminator"])
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise FormatError(f"malformed discriminator file: {exc!r}") from exc


def _parse(text, version):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(d, dict) or "version" not in d:
        raise FormatError("missing version field")
    if d["version"] != version:
        raise FormatError(f"unsupported version {d['version']!r}, expected {version!r}")
    return d


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not a text file") from exc


def _write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)
