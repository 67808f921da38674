"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses without inspecting types one by one.
"""


class GPCError(Exception):
    exit_code = 2


class DataError(GPCError):
    exit_code = 2


class NumericalError(GPCError):
    exit_code = 3


class ConfigError(GPCError):
    exit_code = 1


class NotSPD(NumericalError):
    pass


class DomainError(NumericalError):
    pass


class RankError(NumericalError):
    """Fewer nonzero singular values than requested directions.

    ``projection`` holds the partial basis that could be computed.
    """

    def __init__(self, msg, projection=None):
        super().__init__(msg)
        self.projection = projection


class DimMismatch(DataError):
    pass


class ParseError(DataError):
    def __init__(self, msg, line=None, offset=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        if where:
            msg = f"{msg} ({', '.join(where)})"
        super().__init__(msg)
        self.line = line
        self.offset = offset


class InfeasibleK(DataError):
    pass


class TooFewPoints(DataError):
    pass


class OwnerOutOfRange(DataError):
    pass


class OverlapTooLarge(DataError):
    pass


class TooFewClasses(DataError):
    pass
