"""Errors raised by the extraction sidecar."""


class ExtractorError(Exception):
    """Base class for deliberate sidecar failures."""


class ManifestError(ExtractorError):
    """The extraction manifest is malformed or references missing files."""


class EncoderLoadError(ExtractorError):
    """A requested encoder backend could not be constructed.

    The message always carries the encoder/model identifier so the CLI can
    surface it on exit.
    """


class RecordError(ExtractorError):
    """Sample/entity record files are malformed or inconsistent."""
