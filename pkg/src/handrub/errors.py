"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A config object or file violates its invariants."""


class InputError(ValueError):
    """An operation received structurally invalid input."""


class ParseError(ValueError):
    """A wire line or file could not be parsed."""


class ManifestError(ValueError):
    """A dataset manifest failed validation; message names the offending entry."""
