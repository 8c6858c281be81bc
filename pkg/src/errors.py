"""Exception hierarchy shared by every pipeline stage."""


class AqmSenseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AqmSenseError, ValueError):
    """Invalid profile, config file or parameter range."""


class TopologyError(AqmSenseError):
    """Topology cannot be used (too short path, unreachable sink, ...)."""


class ResourceError(AqmSenseError):
    """A run exceeded a configured resource cap."""


class InsufficientDataError(AqmSenseError):
    """Too few samples to compute a statistic."""


class EmptySeriesError(InsufficientDataError):
    """An operation received an empty series."""


class ShapeError(AqmSenseError, ValueError):
    """Input dimensions do not match the model."""


class DegenerateDatasetError(AqmSenseError):
    """Training data holds a single class or too few examples."""


class StratificationError(AqmSenseError):
    """A class has fewer members than the requested number of folds."""


class MalformedFileError(AqmSenseError, ValueError):
    """An input file cannot be decoded or lacks a required field."""
