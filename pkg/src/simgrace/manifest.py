"""Run manifests: resolved configuration plus input fingerprints.

A manifest is written before training starts and carries everything needed
to replay the run: the command, every configuration value with defaults
materialized, the seed, a content fingerprint of the dataset files, the
artifact paths and the tool version.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def dataset_fingerprint(directory: str | Path, name: str) -> dict:
    directory = Path(directory)
    files = {}
    for suffix in ("A", "graph_indicator", "graph_labels", "node_labels"):
        path = directory / f"{name}_{suffix}.txt"
        if path.is_file():
            data = path.read_bytes()
            files[path.name] = {
                "bytes": len(data),
                "sha256": hashlib.sha256(data).hexdigest(),
            }
    return {"name": name, "directory": str(directory), "files": files}


def write_manifest(
    path: str | Path,
    command: str,
    config: dict,
    seed: int,
    dataset: dict | None,
    artifacts: dict[str, str],
    tool_version: str,
) -> dict:
    manifest = {
        "tool": "simgrace",
        "tool_version": tool_version,
        "command": command,
        "seed": seed,
        "config": config,
        "dataset": dataset,
        "artifacts": artifacts,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
