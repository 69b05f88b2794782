"""
core/errors.py — ringtherm error hierarchy

Every error carries the process exit code the CLI uses for its class:
config=2, compute=3, I/O=4.
"""


class RingthermError(Exception):
    exit_code = 1


class ConfigError(RingthermError):
    """Invalid parameters, specs, grids or config files."""
    exit_code = 2


class ComputeError(RingthermError):
    exit_code = 3


class ConvergenceError(ComputeError):
    pass


class StepperError(ComputeError):
    pass


class StatisticsError(ComputeError):
    pass


class GeometryError(ComputeError):
    pass


class BoundError(ComputeError):
    pass


class FitError(ComputeError):
    pass


class DataIOError(RingthermError):
    exit_code = 4


class ImageFormatError(DataIOError):
    pass


class RecordFormatError(DataIOError):
    pass
