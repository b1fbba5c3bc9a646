"""Exception hierarchy for the fuzzyboost package.

Every error raised on a user-facing path derives from FuzzyBoostError so
callers (and the CLI) can distinguish domain failures from bugs.
"""


class FuzzyBoostError(Exception):
    """Base class for all fuzzyboost domain errors."""


# --- descriptor files -------------------------------------------------------

class DescriptorFileError(FuzzyBoostError):
    """Problem with a descriptor file; message names the offending file."""


class MalformedHeaderError(DescriptorFileError):
    pass


class DimensionMismatchError(FuzzyBoostError):
    """Vector length does not match the expected dimensionality."""


class NonFiniteValueError(DescriptorFileError):
    """A descriptor component is NaN or infinite."""


class EmptyDescriptorsError(DescriptorFileError):
    """A descriptor file or image carries zero descriptor records."""


# --- manifests and learning sets --------------------------------------------

class ManifestError(FuzzyBoostError):
    pass


class LearningSetError(FuzzyBoostError):
    """Positive or negative example pool cannot be assembled."""


# --- training ----------------------------------------------------------------

class TrainingError(FuzzyBoostError):
    """Boosting could not produce a usable ensemble."""


# --- model files -------------------------------------------------------------

class ModelFormatError(FuzzyBoostError):
    pass


class ModelVersionError(ModelFormatError):
    pass


class ModelCorruptError(ModelFormatError):
    """Checksum mismatch or truncated model file."""


class ModelAssemblyError(FuzzyBoostError):
    """Model surgery rejected (duplicate class, incompatible ensemble)."""


# --- baseline ----------------------------------------------------------------

class BaselineError(FuzzyBoostError):
    pass


class DegenerateKernelError(BaselineError):
    """Kernel system could not be solved even with ridge regularization."""


# --- evaluation protocol -------------------------------------------------------

class ProtocolError(FuzzyBoostError):
    """Train/test protocol violation such as split leakage or empty splits."""
