"""
Exception hierarchy; every error carries the CLI exit code it maps to
"""


class CoauthorNetError(Exception):
    """Base error for the pipeline"""

    exit_code = 1


# I/O and configuration (exit code 2)

class ConfigurationError(CoauthorNetError):
    """Invalid configuration value, lookup table or missing path"""

    exit_code = 2


class DataSourceError(CoauthorNetError):
    """Unreadable input source"""

    exit_code = 2


class EmptyCorpusError(CoauthorNetError):
    """No usable records left after parsing or filtering"""

    exit_code = 2


class SchemaError(CoauthorNetError):
    """Delimited table is missing a required column"""

    exit_code = 2


class FormatError(CoauthorNetError):
    """Malformed file content (embedding text, checkpoint)"""

    exit_code = 2


class GraphConstructionError(CoauthorNetError):
    """Edge list refers to a node outside the declared range"""

    exit_code = 2


class MetricsUnavailableError(CoauthorNetError):
    """Journal metrics could neither be downloaded nor read from cache"""

    exit_code = 2


class ConsistencyError(CoauthorNetError):
    """Artifacts that must agree with each other do not"""

    exit_code = 2


# Lookup failures (exit code 3)

class NodeBoundsError(CoauthorNetError):
    """Node id outside [0, n)"""

    exit_code = 3


class AuthorLookupError(CoauthorNetError):
    """Author name or id cannot be resolved"""

    exit_code = 3

    def __init__(self, message: str, suggestions=None):
        super().__init__(message)
        self.suggestions = list(suggestions or [])


# Verification (exit code 4)

class VerificationError(CoauthorNetError):
    """Gradient check exceeded its tolerance"""

    exit_code = 4


# Internal numerical failures (exit code 1)

class DimensionError(CoauthorNetError):
    """Operand shapes do not conform"""


class TrainingDivergenceError(CoauthorNetError):
    """Loss or gradient became non-finite"""


class SamplingExhaustedError(CoauthorNetError):
    """Could not draw enough distinct negative pairs within the attempt budget"""


class UndefinedMetricError(CoauthorNetError):
    """AUC-ROC undefined for single-class input; partial metrics are attached"""

    def __init__(self, message: str, accuracy: float, f1: float):
        super().__init__(message)
        self.accuracy = accuracy
        self.f1 = f1
