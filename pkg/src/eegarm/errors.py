"""Exception types shared across the package."""


class EegArmError(Exception):
    """Base class for all package errors."""


class ConfigError(EegArmError):
    pass


class SizeError(EegArmError, ValueError):
    pass


class DimensionError(EegArmError, ValueError):
    pass


class EncodingError(EegArmError, ValueError):
    pass


class FrameFormatError(EegArmError, ValueError):
    pass


class TransportError(EegArmError, OSError):
    pass


class ProtocolError(EegArmError, ValueError):
    pass


class DatasetError(EegArmError):
    pass


class LoadError(DatasetError):
    def __init__(self, path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


class StratificationError(DatasetError):
    pass


class TrainingError(EegArmError):
    def __init__(self, epoch: int, reason: str):
        super().__init__(f"epoch {epoch}: {reason}")
        self.epoch = epoch
