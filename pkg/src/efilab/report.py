"""Analysis reports: a result tree plus flags, rendered as text or JSON."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SIG_DIGITS = 12


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    if not math.isfinite(x):
        return x
    return float(f"{x:.{digits}g}")


def _clean(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = round_sig(float(value))
        return x if math.isfinite(x) else str(x)
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class Report:
    command: str
    seed: int
    version: str
    inputs: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def add_input(self, path: str | Path):
        self.inputs[str(path)] = digest(path)

    def flag(self, severity: str, message: str):
        self.flags.append((severity, message))

    @property
    def has_violation(self) -> bool:
        return any(sev == "violation" for sev, _ in self.flags)

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "inputs": dict(self.inputs),
            "results": _clean(self.results),
            "flags": [list(f) for f in self.flags],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=False) + "\n"

    def to_text(self) -> str:
        rows = list(_flatten(_clean(self.results)))
        width = max([len(k) for k, _ in rows] + [8])
        lines = [f"# {self.command}"]
        lines += [f"{k:<{width}}  {_fmt(v)}" for k, v in rows]
        lines += [f"[{sev}] {msg}" for sev, msg in self.flags]
        return "\n".join(lines) + "\n"


def _flatten(tree, prefix=""):
    if isinstance(tree, dict):
        for k, v in tree.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(tree, list) and tree and all(isinstance(v, dict) for v in tree):
        for i, v in enumerate(tree):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix.rstrip("."), tree


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)
