"""
Run Manifests
Records flags, seed, config and input digests next to every output
"""
import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from config import VERSION
from models import RunManifest

logger = logging.getLogger(__name__)


def file_digest(path: Union[str, Path]) -> str:
    """SHA-256 of a file's bytes"""
    sha = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            sha.update(chunk)
    return sha.hexdigest()


def build_manifest(
    subcommand: str,
    flags: Dict[str, Any],
    seed: Optional[int] = None,
    config: Optional[Dict[str, Any]] = None,
    inputs: Iterable[Union[str, Path]] = (),
) -> RunManifest:
    return RunManifest(
        subcommand=subcommand,
        flags={k: (str(v) if isinstance(v, Path) else v) for k, v in flags.items()},
        seed=seed,
        config=config or {},
        input_digests={str(p): file_digest(p) for p in inputs},
        tool_version=VERSION,
    )


def write_manifest(manifest: RunManifest, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(manifest.model_dump_json(indent=2) + "\n")
    logger.info(f"Wrote run manifest to {path}")
    return path


def read_manifest(path: Union[str, Path]) -> RunManifest:
    return RunManifest.model_validate_json(Path(path).read_text())
