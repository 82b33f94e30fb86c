class GraphLCPError(Exception):
    """Base class for all package errors."""


class InputError(GraphLCPError, ValueError):
    """Malformed or inconsistent input data."""


class ParameterError(GraphLCPError, ValueError):
    """A parameter lies outside its valid range."""
