"""Shared exception types."""


class ShapeError(ValueError):
    """Input array shape incompatible with an operation; message names the axis."""


class FormatError(ValueError):
    """A file or record does not match its documented format."""


class ContractError(RuntimeError):
    """An operation was called outside its documented protocol."""


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
