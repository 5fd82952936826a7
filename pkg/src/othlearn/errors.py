"""Common exception base so the CLI can map failures to exit codes."""


class OthlearnError(Exception):
    """Base class for all data/model errors raised by this package."""
