"""Exception hierarchy shared across the package.

Every failure the library raises deliberately derives from FuselinkError so
callers (and the CLI) can distinguish expected data/validation problems from
genuine bugs.
"""


class FuselinkError(Exception):
    """Base class for all errors raised on purpose by this package."""


class DimensionError(FuselinkError):
    """Shapes of the operands are incompatible."""


class DomainError(FuselinkError):
    """Input is outside the mathematical domain of the operation."""


class ContractError(FuselinkError):
    """A caller-side precondition was violated (wrong node kind, NaN input)."""


class ConfigurationError(FuselinkError):
    """Invalid configuration value or combination (e.g. dim not divisible by heads)."""


class DataError(FuselinkError):
    """Dataset-level problem: duplicate ids, dangling references, missing records."""


class ParseError(DataError):
    """A record file failed to parse; message carries path and line number."""


class FormatError(FuselinkError):
    """A binary file does not conform to its declared layout."""


class CheckpointError(FormatError):
    """A checkpoint container is missing or carries inconsistent tensors."""


class EvaluationError(FuselinkError):
    """Ranking/evaluation preconditions not met (gold absent, empty results)."""


class TrainingError(FuselinkError):
    """Training cannot proceed (NaN gradients, invalid batch setup)."""


class DegenerateBatchError(FuselinkError):
    """The literal-form contrastive loss hit a near-zero denominator.

    Callers must resample the batch or switch to the standard loss mode.
    """


class ProtocolError(FuselinkError):
    """A provider reply did not match the expected wire shape."""


class InputError(FuselinkError):
    """A user-supplied value is unusable (e.g. blank entity name)."""
