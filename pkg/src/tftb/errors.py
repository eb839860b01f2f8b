"""Exception types shared across the package."""


class TftbError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(TftbError):
    """An array or parameter set does not match the expected layout."""


class NonFiniteError(TftbError):
    """A NaN or Inf appeared where only finite values are allowed."""

    def __init__(self, message: str, sample_id: int | None = None):
        super().__init__(message)
        self.sample_id = sample_id


class CorruptDataError(TftbError):
    """An input file violates its documented binary framing."""


class LedgerError(TftbError):
    """Importance-ledger misuse: unknown ids, empty histories, bad scores."""


class SelectionError(TftbError):
    """Subset selection cannot satisfy its size constraints."""


class BudgetError(TftbError):
    """Time-budget accounting failure, e.g. a budget smaller than warm-up."""


class ConfigError(TftbError):
    """Invalid configuration value or unknown configuration key."""


class ManifestError(TftbError):
    """A run manifest cannot be parsed, or two manifests cannot be compared."""


class TrainingAbort(TftbError):
    """Training aborted mid-run; carries the diagnostic manifest."""

    def __init__(self, message: str, manifest=None):
        super().__init__(message)
        self.manifest = manifest
