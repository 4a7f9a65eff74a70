"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError -> 3.
"""


class PipelineError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(PipelineError):
    """Invalid configuration file, preset, or parameter combination."""


class DataError(PipelineError):
    """Malformed or inconsistent input data / artifacts (wav files,
    manifests, model containers, missing upstream stage outputs)."""


class NumericError(PipelineError):
    """Numerical failure: degenerate kernel scales, vanishing eigenvalues,
    zero kernel mass and the like."""
