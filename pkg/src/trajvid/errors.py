"""Error types shared across the package.

Every failure mode that callers are expected to branch on gets its own
exception class with a stable ``code`` string; everything else is allowed
to surface as a plain ValueError/RuntimeError from the underlying library.
"""
from __future__ import annotations


class TrajVidError(Exception):
    """Base class for all package-level errors."""

    code = "ERROR"


class ConfigInvalid(TrajVidError):
    code = "CONFIG_INVALID"


class ConfigMismatch(TrajVidError):
    code = "CONFIG_MISMATCH"


class DimMismatch(TrajVidError):
    code = "DIM_MISMATCH"


class EmptyMask(TrajVidError):
    code = "EMPTY_MASK"

    def __init__(self, message: str = "mask has no set pixel", frame: int | None = None):
        self.frame = frame
        if frame is not None:
            message = f"{message} (frame={frame})"
        super().__init__(message)


class Unreachable(TrajVidError):
    code = "UNREACHABLE"


class UnknownObject(TrajVidError):
    code = "UNKNOWN_OBJECT"


class UnknownToken(TrajVidError):
    code = "UNKNOWN_TOKEN"

    def __init__(self, token: str):
        self.token = token
        super().__init__(f"unknown token: {token!r}")


class OutOfBounds(TrajVidError):
    code = "OUT_OF_BOUNDS"


class ModeMismatch(TrajVidError):
    code = "MODE_MISMATCH"


class NanLoss(TrajVidError):
    code = "NAN_LOSS"

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite loss at step {step}")


class MissingCheckpoint(TrajVidError):
    code = "MISSING_CHECKPOINT"
