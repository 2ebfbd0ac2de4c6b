"""
Error types for Punctual.
"""


class PunctualError(Exception):
    """Base class for every error raised by the engines."""


class ConfigError(PunctualError):
    """Bad run config, missing file, unparsable program or corrupt trace."""


class ProgramLoadError(ConfigError):
    """An adversary program failed to load."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvariantBreach(PunctualError):
    """A construction or verification invariant failed."""

    def __init__(self, invariant: str, detail: str = "", stage: int | None = None):
        self.invariant = invariant
        self.detail = detail
        self.stage = stage
        where = f" at stage {stage}" if stage is not None else ""
        super().__init__(f"{invariant}{where}: {detail}" if detail else f"{invariant}{where}")


class StructureError(PunctualError):
    """Precondition failure of an operation on finite structures."""


class DeferError(PunctualError):
    """The modality was applied to an atom whose image is not installed yet."""

    def __init__(self, atom):
        self.atom = atom
        super().__init__(f"g is undefined on atom {atom[0]}{atom[1]}")
