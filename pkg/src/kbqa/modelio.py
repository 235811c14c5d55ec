"""Checkpoint + JSON sidecar persistence and training-log output."""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

from .numcore import checkpoint


def sidecar_path(path):
    return Path(str(path) + ".json")


def save_model(path, kind, params, config, **extra):
    registry = {"kind": kind, "tensors": list(params.tensors)}
    checkpoint.save(path, params, registry=registry)
    meta = {"kind": kind, "config": asdict(config), "seed": params.seed, **extra}
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path, kind):
    with open(sidecar_path(path), encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("kind") != kind:
        raise ValueError(f"{path}: expected a {kind!r} model, found {meta.get('kind')!r}")
    _, _, tensors = checkpoint.load(path)
    return meta, tensors


def write_training_log(rows, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch\tloss\ttrain_accuracy\n")
        for r in rows:
            fh.write(f"{r['epoch']}\t{r['loss']:.10f}\t{r['accuracy']:.10f}\n")
