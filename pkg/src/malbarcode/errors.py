"""Exception hierarchy shared by every stage of the pipeline."""


class MalbarcodeError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(MalbarcodeError):
    """A feature file does not have the expected columns or row width."""


class RowParseError(MalbarcodeError):
    def __init__(self, row_index, message):
        super().__init__(f"row {row_index}: {message}")
        self.row_index = row_index


class LabelError(MalbarcodeError):
    """A label string does not name a known class."""


class AlignmentError(MalbarcodeError):
    """Feature rows and metadata rows disagree in count."""


class CapacityError(MalbarcodeError):
    """More items were requested than are available (samples or symbol capacity)."""

    def __init__(self, message, required_version=None):
        super().__init__(message)
        self.required_version = required_version


class StratificationError(MalbarcodeError):
    pass


class PreconditionError(MalbarcodeError):
    pass


class DegreesOfFreedomError(MalbarcodeError):
    pass


class ParameterError(MalbarcodeError, ValueError):
    pass


class FieldRangeError(MalbarcodeError, ValueError):
    """A value is not an element of the Galois field in use."""


class CorruptionError(MalbarcodeError):
    """Reed-Solomon syndromes of a decoded symbol are not all zero."""


class StructureError(MalbarcodeError):
    """A symbol's function patterns or format/mode information are malformed."""


class ShapeError(MalbarcodeError, ValueError):
    pass


class ArchitectureError(MalbarcodeError):
    pass


class DataError(MalbarcodeError):
    pass


class DegenerateError(MalbarcodeError):
    pass


class SearchError(MalbarcodeError):
    """Every cell of a grid search failed."""
