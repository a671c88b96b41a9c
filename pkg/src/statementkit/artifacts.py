"""Artifact persistence: atomic writes, digest-keyed directories, manifests.

Output directories are named <command>-<digest> so a given configuration
always lands in the same place. Directories are immutable: writing the same
artifacts again is a no-op, writing different bytes under the same key is an
error. Every directory carries a manifest recording the resolved
configuration, base seed and output checksums; the manifest is the one file
allowed to contain wall-clock data, so the artifacts themselves stay
byte-identical across reruns.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from .errors import StatementKitError

MANIFEST_KIND = "manifest/1"
MANIFEST_NAME = "manifest.json"


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def config_digest(resolved_config: dict) -> str:
    blob = json.dumps(resolved_config, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def artifact_dir(base, command: str, digest: str) -> Path:
    return Path(base) / f"{command}-{digest}"


def publish(base, command: str, resolved_config: dict, seed: int,
            outputs: dict[str, bytes], notes: dict | None = None) -> Path:
    """Write an artifact set plus manifest into its digest-keyed directory.

    Re-publishing identical bytes is a no-op; conflicting bytes under the
    same key raise. Returns the directory path.
    """
    digest = config_digest(resolved_config)
    target = artifact_dir(base, command, digest)
    manifest_path = target / MANIFEST_NAME

    if manifest_path.exists():
        existing = json.loads(manifest_path.read_text())
        for name, blob in outputs.items():
            want = existing.get("outputs", {}).get(name)
            path = target / name
            if want is None or not path.exists() or sha256_bytes(blob) != want:
                raise StatementKitError(
                    f"{target}: artifact {name} already exists with different content; "
                    "artifacts are immutable"
                )
        return target

    target.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for name, blob in outputs.items():
        atomic_write_bytes(target / name, blob)
        checksums[name] = sha256_bytes(blob)
    manifest = {
        "kind": MANIFEST_KIND,
        "command": command,
        "config_digest": digest,
        "seed": seed,
        "config": resolved_config,
        "outputs": checksums,
        "created": datetime.now(timezone.utc).isoformat(),
    }
    if notes:
        manifest["notes"] = notes
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return target


def load_manifest(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    data = json.loads(path.read_text())
    if data.get("kind") != MANIFEST_KIND:
        raise StatementKitError(f"{path}: not a manifest file")
    return data


def verify_outputs(directory) -> list[str]:
    """Check every artifact against its manifest checksum; return problems."""
    directory = Path(directory)
    manifest = load_manifest(directory)
    problems = []
    for name, want in manifest.get("outputs", {}).items():
        path = directory / name
        if not path.exists():
            problems.append(f"{name}: missing")
        elif sha256_bytes(path.read_bytes()) != want:
            problems.append(f"{name}: checksum mismatch")
    return problems
