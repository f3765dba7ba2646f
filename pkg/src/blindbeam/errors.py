"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Array dimensions disagree (element count, sample count, list length)."""


class ConfigError(ValueError):
    """Scenario configuration is malformed; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
