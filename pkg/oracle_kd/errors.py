from typing import Any, Optional, Sequence


class OracleKDError(Exception):
    """Base class for every error raised by the package."""


class UsageError(OracleKDError, ValueError):
    pass


class DimensionError(UsageError):

    def __init__(self, op: str, *shapes: Sequence[int]):
        self.op = op
        self.shapes = [tuple(s) for s in shapes]
        joined = ' vs '.join(str(s) for s in self.shapes)
        super().__init__(f'{op}: incompatible shapes {joined}')


class NumericError(OracleKDError, ArithmeticError):

    def __init__(self, op: str):
        self.op = op
        super().__init__(f'{op}: produced non-finite values')


class InfeasibleAlignmentError(OracleKDError):

    def __init__(self, frames: int, length: int, repeats: int):
        self.frames = frames
        self.length = length
        self.repeats = repeats
        super().__init__(
            f'no CTC alignment of {length} labels ({repeats} adjacent repeats) fits into {frames} frames'
        )


class ConfigurationError(OracleKDError):

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(message)


class CheckpointError(OracleKDError):
    pass


class BadMagicError(CheckpointError):
    pass


class BadVersionError(CheckpointError):
    pass


class TruncationError(CheckpointError):
    pass


class GenerationError(OracleKDError):
    pass


class TrainingDivergedError(OracleKDError):

    def __init__(self, loss: float, phase: str = '', epoch: int = -1, sample: Optional[int] = None,
                 log: Optional[Any] = None):
        self.loss = loss
        self.log = log
        self.phase = phase
        self.epoch = epoch
        self.sample = sample
        where = f'phase={phase or "-"} epoch={epoch}'
        if sample is not None:
            where += f' sample={sample}'
        super().__init__(f'training diverged ({where}): loss={loss}')
