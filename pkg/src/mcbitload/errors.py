"""Exception types shared across the package."""


class InfeasibleError(Exception):
    """An instance admits no allocation meeting its constraints."""


class EnumerationTooLargeError(ValueError):
    """The exhaustive search space exceeds the configured guard."""
