"""
Base class for the pipeline management commands.

Plays the part request middleware plays for a web app: every invocation gets
a run id, duration logging, a lock on its output directory, a RunRecord row,
and a uniform mapping from exceptions to process exit codes.
"""

import logging
import time
import uuid
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError

from core.config import FIELDS, RunConfig, load_config
from core.exceptions import EXIT_RUNTIME_FAILURE, CfxError
from core.utils import RunDirectoryLock, build_manifest, write_manifest

logger = logging.getLogger(__name__)


def _flag_name(field_name):
    return '--' + field_name.replace('_', '-')


def add_config_arguments(parser):
    """One kebab-case flag per RunConfig field plus ``--config``"""
    parser.add_argument('--config', dest='config_file', default=None,
                        help='Flat key=value configuration file')
    for name, field in FIELDS.items():
        default = field.default
        if isinstance(default, bool):
            parser.add_argument(_flag_name(name), dest=name, action='store_const', const='true', default=None,
                                help=f'Enable {name} (default: {default})')
        else:
            shown = ','.join(str(v) for v in default) if isinstance(default, tuple) else default
            parser.add_argument(_flag_name(name), dest=name, default=None,
                                help=f'(default: {shown})' if shown not in ('', None) else None)


class CfxCommand(BaseCommand):
    """
    Subclasses implement ``run(config, options)`` and return the lists of
    input and output paths for the manifest, or None to skip it. Outputs go
    to ``run_dir/subdir``; the lock covers the whole run directory.
    """

    command_name = None
    subdir = None
    manifest_name = 'manifest.json'

    def add_arguments(self, parser):
        add_config_arguments(parser)

    def resolve_config(self, options):
        overrides = {name: options.get(name) for name in FIELDS}
        return load_config(options.get('config_file'), overrides)

    def output_dir(self, config):
        base = Path(config.run_dir)
        return base / self.subdir if self.subdir else base

    def run(self, config, options):
        raise NotImplementedError

    def handle(self, *args, **options):
        name = self.command_name or self.__module__.rsplit('.', 1)[-1]
        run_id = str(uuid.uuid4())[:8]
        start = time.time()
        record = None
        logger.info(f"[{run_id}] {name} started")
        try:
            config = self.resolve_config(options)
            directory = self.output_dir(config)
            with RunDirectoryLock(config.run_dir):
                directory.mkdir(parents=True, exist_ok=True)
                record = self._open_record(name, directory, config)
                result = self.run(config, options)
                manifest = None
                if result is not None:
                    inputs, outputs = result
                    manifest = build_manifest(name, config, inputs, outputs)
                    write_manifest(directory, manifest, self.manifest_name)
            self._close_record(record, manifest=manifest)
        except CfxError as e:
            logger.error(f"[{run_id}] {name} failed: {e.message}", exc_info=True)
            self._close_record(record, error=e.message, exit_code=e.exit_code)
            raise CommandError(e.message, returncode=e.exit_code) from e
        except CommandError:
            raise
        except Exception as e:
            logger.error(f"[{run_id}] Unhandled exception in {name}: {e}", exc_info=True)
            self._close_record(record, error=str(e), exit_code=EXIT_RUNTIME_FAILURE)
            raise CommandError(f"{type(e).__name__}: {e}", returncode=EXIT_RUNTIME_FAILURE) from e
        finally:
            logger.info(f"[{run_id}] {name} finished - Duration: {time.time() - start:.3f}s")

    def _open_record(self, name, directory, config: RunConfig):
        from core.models import RunRecord
        try:
            return RunRecord.objects.create(
                command=name, run_dir=str(directory),
                config_hash=config.config_hash(), parameters=config.to_dict(),
            )
        except DatabaseError as e:
            logger.warning(f"Run registry unavailable ({e}); run `python manage.py migrate` to enable it")
            return None

    def _close_record(self, record, manifest=None, error=None, exit_code=0):
        if record is None:
            return
        try:
            if error is None:
                record.mark_completed(manifest)
            else:
                record.mark_failed(error, exit_code)
        except DatabaseError as e:
            logger.warning(f"Could not update run record {record.id}: {e}")

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))
