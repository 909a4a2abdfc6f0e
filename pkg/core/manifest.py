"""
Manifiesto por directorio de salida: digests de entradas y salidas, digest
de la configuración y versión de la herramienta. El "al día" se decide por
contenido, nunca por fechas.
"""
import hashlib
import json
import os
from typing import Dict, Mapping

from core.log import get_logger

log = get_logger("Manifest")

TOOL_VERSION = "ckgp 1.0.0"
MANIFEST_FILE = "manifest.json"


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _digests(files: Mapping[str, str]) -> Dict[str, str]:
    return {name: file_digest(path) for name, path in sorted(files.items())}


def write_manifest(directory: str, command: str, inputs: Mapping[str, str], outputs: Mapping[str, str],
                   config_digest: str, relation: str = None):
    """``inputs`` y ``outputs`` van de nombre lógico a ruta; las salidas se guardan relativas al directorio."""
    manifest = {
        "tool_version": TOOL_VERSION,
        "command": command,
        "relation": relation,
        "config_digest": config_digest,
        "inputs": _digests(inputs),
        "outputs": {os.path.relpath(p, directory): file_digest(p) for p in sorted(outputs.values())},
    }
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, MANIFEST_FILE), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest


def read_manifest(directory: str):
    path = os.path.join(directory, MANIFEST_FILE)
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def is_up_to_date(directory: str, command: str, inputs: Mapping[str, str], config_digest: str) -> bool:
    manifest = read_manifest(directory)
    if manifest is None or manifest.get("command") != command:
        return False
    if manifest.get("tool_version") != TOOL_VERSION or manifest.get("config_digest") != config_digest:
        return False
    if any(not os.path.exists(p) for p in inputs.values()):
        return False
    if manifest.get("inputs") != _digests(inputs):
        return False
    for rel_path, digest in manifest.get("outputs", {}).items():
        path = os.path.join(directory, rel_path)
        if not os.path.exists(path) or file_digest(path) != digest:
            return False
    return True
