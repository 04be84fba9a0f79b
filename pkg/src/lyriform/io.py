"""JSON readers and writers, and run manifests."""

from __future__ import annotations

import hashlib
import json
import os
import platform
import time
from pathlib import Path

import numpy as np

from .errors import MalformedInputError
from .measures import ProbabilityMeasure
from .metric_core import FiniteMetricSpace, LengthGraph, intrinsic_metric


def load_json(path) -> object:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise MalformedInputError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: invalid JSON ({exc})") from exc


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def space_from_obj(obj) -> FiniteMetricSpace:
    """A space JSON object, or a length-graph object turned into its intrinsic metric."""
    if not isinstance(obj, dict):
        raise MalformedInputError("space JSON must be an object")
    if "dist" in obj:
        return FiniteMetricSpace.from_json(obj)
    if "vertices" in obj and "edges" in obj:
        return intrinsic_metric(LengthGraph.from_json(obj))
    raise MalformedInputError("expected a space ('dist') or a length graph ('vertices', 'edges')")


def read_space(path) -> FiniteMetricSpace:
    return space_from_obj(load_json(path))


def read_measure(path, space: FiniteMetricSpace) -> ProbabilityMeasure:
    """Measure file: ``{"weights": [...]}``, optionally with an inline ``"space"`` that must match."""
    obj = load_json(path)
    if isinstance(obj, dict) and "space" in obj:
        inline = obj["space"]
        if isinstance(inline, str):
            inline = load_json(Path(path).parent / inline)
        if not space_from_obj(inline).same_as(space):
            raise MalformedInputError(f"{path}: inline space differs from the given space")
    return ProbabilityMeasure.from_json(obj, space)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out, command: str, argv: list, config: dict, seed, inputs: list, started: float, version: str) -> Path:
    """Record what produced ``out``; rerunning ``argv`` reproduces it."""
    digests = {str(p): file_digest(p) for p in inputs if p is not None and os.path.exists(p)}
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": config,
        "seed": seed,
        "version": version,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "inputs": digests,
        "output": str(out),
        "output_sha256": file_digest(out) if os.path.exists(out) else None,
        "wall_clock_seconds": time.time() - started,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    path = Path(str(out) + ".manifest.json")
    write_json(path, manifest)
    return path
