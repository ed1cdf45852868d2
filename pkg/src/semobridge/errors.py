"""Exception types, one per module contract.

The CLI reports failures by class name, so each error names the contract
that was violated rather than a generic condition.
"""


class SemoBridgeError(Exception):
    """Base class for every contract violation in this package."""


# tensor core
class NonFinite(SemoBridgeError):
    """Input or result contains NaN or Inf."""


class SvdFailure(SemoBridgeError):
    """The SVD backing a pseudo-inverse did not converge."""


class DimensionMismatch(SemoBridgeError):
    """Operands disagree on a shared dimension."""


class ShapeMismatch(DimensionMismatch):
    """Operands disagree on full shape."""


class ZeroVector(SemoBridgeError):
    """A row that must have positive norm is zero."""


class NonPositiveTemperature(SemoBridgeError):
    """Softmax temperature must be > 0."""


class NotAProbability(SemoBridgeError):
    """Vector has negative mass or does not sum to 1 within 1e-6."""


# bridge
class EmptyClass(SemoBridgeError):
    """A class has no prompts or no shots."""


class ZeroInverseImage(SemoBridgeError):
    """An embedding maps to (numerically) zero under the inverse projection."""


class UnknownClass(SemoBridgeError):
    """A class id is outside [0, C)."""


# inference
class LabelOutOfRange(SemoBridgeError):
    """A label is outside [0, C)."""


class EmptyInput(SemoBridgeError):
    """An operation that needs at least one row received none."""


# training
class NoValidationSplit(SemoBridgeError):
    """Training requires a non-empty validation split."""


class DivergedLoss(SemoBridgeError):
    """Training loss became non-finite."""


# hpsearch
class BadBounds(SemoBridgeError):
    """A search bound is empty or inverted."""


class EmptyValidation(SemoBridgeError):
    """Blend search requires a non-empty validation split."""


# synthetic generator
class InvalidSpec(SemoBridgeError):
    """A generator parameter is outside its legal range."""


# datastore
class DatastoreError(SemoBridgeError):
    """Base class for file-format violations."""


class BadMagic(DatastoreError):
    """Tensor file does not start with the expected magic bytes."""


class UnsupportedVersion(DatastoreError):
    """Tensor file version byte is not supported."""


class UnsupportedDtype(DatastoreError):
    """Tensor file dtype byte is not f32 or f64."""


class TruncatedPayload(DatastoreError):
    """Tensor file length disagrees with what the header promises."""


class DimOverflow(DatastoreError):
    """Declared dims overflow or exceed the payload address space."""


class MissingFile(DatastoreError):
    """A file referenced by a manifest does not exist."""


class BadManifest(DatastoreError):
    """Manifest is malformed or internally inconsistent."""


class ManifestMismatch(DatastoreError):
    """Model file references a different task manifest than the one loaded."""
