"""Exception types shared across the package."""


class TsVistaError(Exception):
    """Base class for all package errors."""


class MalformedFileError(TsVistaError):
    """A dataset file could not be parsed."""


class FormatError(TsVistaError):
    """A file parsed but violated the declared format (e.g. ragged rows)."""


class ShapeError(TsVistaError):
    """Array arguments have incompatible shapes."""


class ConfigurationError(TsVistaError):
    """A parameter is outside its allowed range."""


class DataError(TsVistaError):
    """Dataset content violates an invariant (e.g. an empty class)."""


class NumericError(TsVistaError):
    """A numeric degenerate case was hit (non-finite loss, zero projection)."""


class ContractError(TsVistaError):
    """A caller broke an input contract (e.g. non-unit rows)."""


class UnsupportedError(TsVistaError):
    """The requested computation is outside the supported range."""
