"""Exception types shared across the toolkit.

Every error raised by library code derives from SimtError so callers (and
the CLI) can distinguish toolkit failures from programming bugs.
"""


class SimtError(Exception):
    """Base class for all toolkit errors."""


class CorpusShapeError(SimtError):
    """Parallel files disagree in shape (e.g. line counts differ)."""


class MalformedSentenceError(SimtError):
    """A corpus line violates the token invariants (empty line, bad token)."""


class ConfigError(SimtError):
    """Invalid configuration value or combination."""


class OOVError(SimtError):
    """A token is not covered by the active lexicon or vocabulary."""


class GatewayError(SimtError):
    """A model endpoint failed: timeout, protocol violation, dead process."""

    def __init__(self, message: str, raw: str | None = None):
        super().__init__(message)
        self.raw = raw


class PolicyError(SimtError):
    """A READ policy could not produce a decision (e.g. classifier down)."""


class MetricInputError(SimtError):
    """Metric preconditions violated; the message names the offending field."""


class AlignmentError(SimtError):
    """Traces and references do not line up by sentence id."""

    def __init__(self, message: str, missing_sids: list[str] | None = None):
        super().__init__(message)
        self.missing_sids = missing_sids or []


class ExportError(SimtError):
    """Writing an output artifact failed; the message names the path."""
