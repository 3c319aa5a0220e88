"""Exception types shared across the package."""


class SketchHarpError(Exception):
    """Base class for all package errors."""


class InvalidSketch(SketchHarpError):
    """Raw action sequence or sketch record violates the format contract."""


class OverLimit(SketchHarpError):
    """Sketch exceeds the stroke-count or stroke-length limits."""


class DegenerateCorpus(SketchHarpError):
    """Corpus has zero offset variance; normalization is undefined."""


class CorpusFormatError(SketchHarpError):
    """Corpus file is corrupt. Carries the byte offset of the bad record."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class ShapeError(SketchHarpError):
    """Tensor or sequence shapes do not line up."""


class TrainingDiverged(SketchHarpError):
    """A loss term became NaN/inf during training."""


class CheckpointError(SketchHarpError):
    """Checkpoint archive is missing keys or has a bad manifest."""


class SessionFinished(SketchHarpError):
    """Operation requires an active (unfinished) drawing session."""


class NothingToRetract(SketchHarpError):
    """retract_last called with no committed strokes."""


class EmptySketch(SketchHarpError):
    """Metric requires a non-empty sketch."""


class UnknownLabel(SketchHarpError):
    """Label not in the classifier's class list."""
