"""
Exception hierarchy shared by every app.

Each error carries the process exit code the management commands report.
"""

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_MISSING_PREREQUISITE = 3
EXIT_RUNTIME_FAILURE = 4


class CfxError(Exception):
    """Base class for errors raised by this project"""

    exit_code = EXIT_RUNTIME_FAILURE

    def __init__(self, message, code=None):
        self.message = message
        self.code = code
        super().__init__(self.message)


class ConfigError(CfxError):
    """Invalid or inconsistent run configuration"""

    exit_code = EXIT_CONFIG_ERROR


class MissingPrerequisiteError(CfxError):
    """An artifact a command depends on has not been produced yet"""

    exit_code = EXIT_MISSING_PREREQUISITE

    def __init__(self, artifact, producer):
        self.artifact = str(artifact)
        self.producer = producer
        super().__init__(
            f"Missing prerequisite {self.artifact}; run `python manage.py {producer}` first",
            code='missing_prerequisite'
        )


class RunLockedError(CfxError):
    """Another process holds the output directory lock"""


class NumkitError(CfxError):
    """Tensor engine failure"""


class ShapeError(NumkitError):
    """Operands have incompatible shapes"""

    def __init__(self, op, *shapes):
        self.op = op
        self.shapes = shapes
        rendered = ' and '.join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}", code='shape_mismatch')


class NonFiniteError(NumkitError):
    """A gradient or parameter became NaN/inf"""

    def __init__(self, name, message=None):
        self.name = name
        super().__init__(message or f"non-finite values in {name}", code='non_finite')


class CheckpointError(CfxError):
    """Unreadable or inconsistent checkpoint container"""


class ChemistryError(CfxError):
    """Molecule-level failure"""


class SmilesError(ChemistryError):
    """SMILES text could not be parsed"""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} at byte {offset}", code='smiles')


class FeaturizationError(ChemistryError):
    """A molecule cannot be mapped onto the configured feature space"""


class VocabularyError(CfxError):
    """Fragment vocabulary missing an entry or malformed"""


class DatasetError(CfxError):
    """Dataset preparation or split failure"""


class TrainingError(CfxError):
    """Training diverged or was given unusable inputs"""


class PPOError(TrainingError):
    """Policy update aborted; carries the diagnostics gathered so far"""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message, code='ppo')
