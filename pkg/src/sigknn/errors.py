"""Exception hierarchy shared by every stage of the pipeline."""


class SigError(ValueError):
    """Base class for all recoverable pipeline errors."""


# -- parsing / data ----------------------------------------------------------

class MalformedHeader(SigError):
    pass


class MalformedRow(SigError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class EmptySignature(SigError):
    pass


class NonMonotoneTimestamps(SigError):
    pass


class CountMismatch(SigError):
    pass


class InvalidSample(SigError):
    pass


class DuplicateEntry(SigError):
    pass


class MissingFile(SigError):
    pass


class MalformedManifest(SigError):
    pass


# -- preprocessing / distance ------------------------------------------------

class EmptyAfterFilter(SigError):
    pass


class DimensionMismatch(SigError):
    pass


class InfeasibleBand(SigError):
    pass


class SeriesTooLong(SigError):
    pass


# -- k-NN thresholds ---------------------------------------------------------

class EmptyReferenceSet(SigError):
    pass


class InsufficientReferences(SigError):
    pass


class NoFallbackAvailable(SigError):
    pass


class DegenerateThresholds(SigError):
    pass


class InsufficientData(SigError):
    pass


# -- evaluation --------------------------------------------------------------

class NoEligibleSigners(SigError):
    pass


class SingleClassOnly(SigError):
    pass


class NoCrossing(SigError):
    pass


class ExportError(SigError, OSError):
    """Report files could not be written."""
