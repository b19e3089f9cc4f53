"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """An argument is outside the domain of an operation."""


class ConfigurationError(ValueError):
    """A generator configuration field is invalid."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
