"""Exception hierarchy shared by all pipeline stages."""


class PhysioTrustError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class ConfigInvalid(PhysioTrustError):
    pass


class NonMonotonicTimestamps(PhysioTrustError):
    def __init__(self, channel, index):
        self.channel = channel
        self.index = index
        super().__init__(f"{channel}: timestamps not strictly increasing at index {index}")


class EmptyStream(PhysioTrustError):
    def __init__(self, channel):
        self.channel = channel
        super().__init__(f"{channel}: stream is empty")


class RatingOutOfRange(PhysioTrustError):
    pass


class InvalidTau(PhysioTrustError):
    pass


class ConvergenceFailure(PhysioTrustError):
    pass


class SignalTooShort(PhysioTrustError):
    pass


class FlatSignal(PhysioTrustError):
    pass


class TooFewBeats(PhysioTrustError):
    pass


class SchemaMismatch(PhysioTrustError):
    pass


class InsufficientMajority(PhysioTrustError):
    pass


class ParseError(PhysioTrustError):
    def __init__(self, message, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class VersionMismatch(PhysioTrustError):
    pass


class SingleClassData(PhysioTrustError):
    pass


class EmptyMatrix(PhysioTrustError):
    pass


class TooFewRows(PhysioTrustError):
    pass


class LengthMismatch(PhysioTrustError):
    pass


class MissingCoverStats(PhysioTrustError):
    pass


class DegenerateGroups(PhysioTrustError):
    pass
