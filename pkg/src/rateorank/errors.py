"""Exception types shared across the package."""


class RateorankError(Exception):
    """Base class for all package-specific failures."""


class ConnectivityError(RateorankError, ValueError):
    """A comparison graph (or training fold) does not connect all items."""


class ModelKindError(RateorankError, ValueError):
    """An operation was called with a model kind it does not support."""


class InsufficientDataError(RateorankError, ValueError):
    """Too few observations for the requested procedure."""


class FoldError(RateorankError, ValueError):
    """A cross-validation fold is unusable (e.g. its training graph is disconnected)."""


class PackingConstructionError(RateorankError, ValueError):
    """A packing could not be built or failed its own verification."""


class DataFormatError(RateorankError, ValueError):
    """An input file violates the documented row format."""
