"""Exception types raised across the package."""


class SgmError(Exception):
    """Base class for all package errors."""


class CorpusParseError(SgmError, ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class SchemaError(SgmError, ValueError):
    def __init__(self, field, message=None, lineno=None):
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{where}{message or f'missing required field {field!r}'}")
        self.field = field
        self.lineno = lineno


class DuplicateIdError(SgmError, ValueError):
    pass


class ScriptError(SgmError, ValueError):
    """An edit script does not fit the sequence it is applied to."""


class IndexMismatchError(SgmError, ValueError):
    """Query embedder differs from the one the index was built with."""


class CorruptIndexError(SgmError, ValueError):
    pass


class LocalizationError(SgmError, ValueError):
    """The buggy line could not be located inside its method."""


class GenerationError(SgmError, RuntimeError):
    def __init__(self, message, status=None):
        super().__init__(message if status is None else f"{message} (status {status})")
        self.status = status


class DegenerateSampleError(SgmError, ValueError):
    pass


class TrainingError(SgmError, RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class CheckpointError(SgmError, ValueError):
    pass
