"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid run configuration, manifest, or input file.

    The CLI maps this to exit code 2; all other failures exit 3.
    """
