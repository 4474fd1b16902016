class DataError(ValueError):
    """Input data violates a format or consistency contract."""


class InsufficientDataError(DataError):
    """Not enough users of some group to run the requested protocol."""
