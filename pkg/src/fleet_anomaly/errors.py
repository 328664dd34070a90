"""Exception hierarchy.

Every error carries a short machine-readable ``code`` which the command line
front end reports in its JSON error payload.
"""


class FleetAnomalyError(Exception):
    code = "error"


class CoordinateError(FleetAnomalyError, ValueError):
    code = "coordinate-domain"


class InsufficientVesselsError(FleetAnomalyError, ValueError):
    code = "insufficient-vessels"


class EmptySampleError(FleetAnomalyError, ValueError):
    code = "empty-sample"


class DegenerateSampleError(FleetAnomalyError, ValueError):
    code = "degenerate-sample"


class UndefinedIndexError(FleetAnomalyError, ValueError):
    """Raised when an index cannot be formed from a lag set."""

    code = "undefined-index"


class WindowTooShortError(FleetAnomalyError, ValueError):
    code = "window-too-short"


class ConfigError(FleetAnomalyError, ValueError):
    code = "config-invalid"


class CorruptInputError(FleetAnomalyError, ValueError):
    code = "corrupt-input"


class EmptyPanelError(FleetAnomalyError, ValueError):
    code = "empty-panel"


class InputNotFoundError(FleetAnomalyError, FileNotFoundError):
    code = "input-not-found"
