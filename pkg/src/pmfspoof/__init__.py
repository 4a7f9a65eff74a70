"""Time-domain anti-spoofing features from amplitude PMFs.

Pipeline: filter-bank decomposition of raw audio, per-channel amplitude
PMF estimation against global genuine/spoofed models via eight similarity
measures, diffusion-map embedding with Nystrom out-of-sample extension,
and logistic-regression scoring evaluated by EER.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, NumericError, PipelineError

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "PipelineError",
    "__version__",
]
