"""Exception types shared across the package."""


class ShapeMismatch(ValueError):
    """Two inputs that must share a dimension do not."""


class DegenerateInput(ValueError):
    """A metric denominator is zero, so the metric is undefined."""


class FormatError(ValueError):
    """An RSAM file is malformed."""


class ManifestError(ValueError):
    """An activation-set manifest is invalid or inconsistent."""


class ConfigError(ValueError):
    """A training recipe or configuration is out of bounds."""


class EmptyResult(ValueError):
    """An operation would produce an empty matrix."""
