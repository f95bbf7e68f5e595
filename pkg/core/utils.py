"""
File helpers shared by the pipeline commands: hashing, deterministic JSON,
training logs, manifests and the run-directory lock.
"""

import hashlib
import json
import logging
import os
from pathlib import Path

import jsonschema

from core.exceptions import CfxError, MissingPrerequisiteError, RunLockedError

logger = logging.getLogger(__name__)

MANIFEST_FORMAT_VERSION = 1
LOCK_NAME = '.lock'


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def dump_json(data):
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline"""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + '\n'


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + '.tmp')
    tmp.write_text(dump_json(data), encoding='utf-8')
    os.replace(tmp, path)
    return path


def read_json(path, schema=None, producer=None):
    """
    Load a JSON document, optionally validating it against ``schema``.

    A missing file raises MissingPrerequisiteError when ``producer`` names the
    command that creates it.
    """
    path = Path(path)
    if not path.is_file():
        if producer:
            raise MissingPrerequisiteError(path, producer)
        raise CfxError(f"{path} does not exist", code='not_found')
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise CfxError(f"{path} is not valid JSON: {e}", code='bad_json') from e
    if schema is not None:
        try:
            jsonschema.validate(data, schema)
        except jsonschema.ValidationError as e:
            location = '/'.join(str(p) for p in e.absolute_path) or '<root>'
            raise CfxError(f"{path} failed validation at {location}: {e.message}", code='schema') from e
    return data


def require(path, producer):
    path = Path(path)
    if not path.exists():
        raise MissingPrerequisiteError(path, producer)
    return path


class JsonLinesWriter:
    """Appends one JSON object per line; used for training curves"""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = None

    def __enter__(self):
        self._handle = open(self.path, 'w', encoding='utf-8')
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False

    def write(self, record):
        if self._handle is None:
            self._handle = open(self.path, 'a', encoding='utf-8')
        self._handle.write(json.dumps(record, sort_keys=True) + '\n')
        self._handle.flush()

    def close(self):
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def read_json_lines(path):
    with open(path, encoding='utf-8') as handle:
        return [json.loads(line) for line in handle if line.strip()]


def build_manifest(command, config, inputs=(), outputs=()):
    """
    Manifest for an output directory. No timestamps, so identical reruns
    produce identical bytes.
    """
    def hashes(paths):
        return {Path(p).name: sha256_file(p) for p in sorted(paths, key=lambda p: Path(p).name)}

    return {
        'command': command,
        'format_version': MANIFEST_FORMAT_VERSION,
        'config': config.to_dict() if hasattr(config, 'to_dict') else config,
        'config_hash': config.config_hash() if hasattr(config, 'config_hash') else None,
        'inputs': hashes(inputs),
        'outputs': hashes(outputs),
    }


def write_manifest(directory, manifest, name='manifest.json'):
    return write_json(Path(directory) / name, manifest)


class RunDirectoryLock:
    """
    Exclusive lock on an output directory through an ``O_EXCL`` lock file.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.path = self.directory / LOCK_NAME
        self._fd = None

    def acquire(self):
        self.directory.mkdir(parents=True, exist_ok=True)
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RunLockedError(
                f"{self.directory} is locked by another run (remove {self.path} if it is stale)",
                code='locked'
            ) from None
        os.write(self._fd, str(os.getpid()).encode('ascii'))
        return self

    def release(self):
        if self._fd is None:
            return
        os.close(self._fd)
        self._fd = None
        try:
            self.path.unlink()
        except FileNotFoundError:
            logger.warning(f"Lock file {self.path} vanished before release")

    def __enter__(self):
        return self.acquire()

    def __exit__(self, exc_type, exc, tb):
        self.release()
        return False
