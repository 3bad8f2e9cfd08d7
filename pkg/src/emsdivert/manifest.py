"""Run manifests: reproducibility sidecars for every CLI output.

The manifest carries everything needed to reproduce an artifact
(command, resolved configuration, seeds, input hashes, tool version)
plus the wall-clock timestamps.  Keeping timestamps here and only here
is what lets the artifacts themselves stay byte-identical across runs.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone


@dataclass
class RunManifest:
    command: str
    version: str
    seed: int | None = None
    config_path: str | None = None
    inputs: dict[str, str] = field(default_factory=dict)
    resolved: dict = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""

    def add_input(self, path: str) -> None:
        self.inputs[path] = file_sha256(path)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "config_path": self.config_path,
            "inputs": dict(sorted(self.inputs.items())),
            "resolved": self.resolved,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sidecar_path(out_path: str) -> str:
    return out_path + ".manifest.json"


def write_manifest(out_path: str, manifest: RunManifest) -> str:
    """Write the sidecar next to an output artifact; returns its path."""
    path = sidecar_path(out_path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
