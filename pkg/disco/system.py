"""Output directory, artifact checksums and the run manifest."""
import hashlib
import json
import logging
import os
from collections import OrderedDict
from typing import Any, Dict, Optional

from .training.logs import json_default

logger = logging.getLogger(__name__)

MANIFEST = 'manifest.json'


def file_checksum(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


class System:
    """Owns one command's output directory and what gets written there."""

    def __init__(self, out_dir: str, command: str = '', task_manager=None):
        self.out_dir = out_dir
        self.command = command
        self.task_manager = task_manager
        self._name_counter = 0
        self.artifacts: Dict[str, str] = OrderedDict()
        os.makedirs(out_dir, exist_ok=True)

    def new_name(self, prefix: str) -> str:
        """Generate a new unique name with given prefix."""
        self._name_counter += 1
        return f"{prefix}-{self._name_counter}"

    def path(self, name: str) -> str:
        """Absolute location of an artifact called ``name`` inside the output directory."""
        path = name if os.path.isabs(name) else os.path.join(self.out_dir, name)
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return path

    def record(self, path: str) -> str:
        """Checksum a written file and list it in the manifest."""
        checksum = file_checksum(path)
        key = os.path.relpath(path, self.out_dir)
        self.artifacts[key] = checksum
        logger.debug(f"Artifact {key}: sha256 {checksum[:12]}")
        return checksum

    def write_manifest(self, config: Dict[str, Any], seed: int,
                       extra: Optional[Dict[str, Any]] = None) -> str:
        from . import __version__
        manifest = {
            'command': self.command,
            'version': __version__,
            'seed': seed,
            'config': config,
            'artifacts': dict(self.artifacts),
        }
        if extra:
            manifest.update(extra)
        path = os.path.join(self.out_dir, MANIFEST)
        with open(path, 'w') as f:
            json.dump(manifest, f, indent=2, sort_keys=True, default=json_default)
            f.write('\n')
        logger.info(f"Wrote manifest with {len(self.artifacts)} artifacts to {path}")
        return path
