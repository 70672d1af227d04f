"""Exception types raised across the package.

Everything derives from TrustSimError so callers can catch input/validation
problems in one place (the CLI maps them to exit code 2).
"""


class TrustSimError(Exception):
    """Base class for all errors raised by this package."""


# --- corpus ---------------------------------------------------------------

class MissingColumn(TrustSimError):
    """A required column is absent from a corpus file."""


class ValueOutOfRange(TrustSimError):
    """A field value violates its documented range or type."""

    def __init__(self, field, value, row=None, detail=""):
        self.field = field
        self.value = value
        self.row = row
        where = f" (row {row})" if row is not None else ""
        extra = f": {detail}" if detail else ""
        super().__init__(f"{field}={value!r} out of range{where}{extra}")


class IncompleteDialog(TrustSimError):
    """A dialog does not consist of exactly steps 1..12 in order."""

    def __init__(self, user_id, detail=""):
        self.user_id = user_id
        extra = f": {detail}" if detail else ""
        super().__init__(f"incomplete dialog for user {user_id!r}{extra}")


class StepOutOfRange(TrustSimError):
    """Task step outside 1..12."""


class InvalidConfig(TrustSimError):
    """A configuration object fails validation."""


class EmptyCorpus(TrustSimError):
    """An operation requires a non-empty corpus."""


# --- user model -----------------------------------------------------------

class InsufficientUsers(TrustSimError):
    """Trait fitting needs at least two users."""


class InvalidBounds(TrustSimError):
    """Truncation bounds are not an interval, or sd is negative."""


# --- behavior tables ------------------------------------------------------

class NoDataForCondition(TrustSimError):
    """A condition (complexity or step) was never observed in the corpus."""


# --- simulator ------------------------------------------------------------

class WrongActCount(TrustSimError):
    """A full dialog needs exactly one proactive act per task step."""


# --- trust model ----------------------------------------------------------

class SchemaMismatch(TrustSimError):
    """Feature vector does not match the model's feature schema."""


class InsufficientData(TrustSimError):
    """Too few exchanges to train on."""


class DegenerateLabels(TrustSimError):
    """All training labels belong to a single class."""


class EmptyTestSet(TrustSimError):
    """Classifier evaluation needs a non-empty labeled corpus."""


# --- RL environment -------------------------------------------------------

class EpisodeFinished(TrustSimError):
    """step() called after the 12th task step."""


class InvalidHyperparams(TrustSimError):
    """Learner hyperparameters outside their valid ranges."""


# --- evaluation -----------------------------------------------------------

class LengthMismatch(TrustSimError):
    """Paired sequences or distributions differ in length."""


class NegativeEntry(TrustSimError):
    """Probability vectors must be non-negative."""


class EmptySequence(TrustSimError):
    """A sample sequence or distribution carries no mass."""


class AlignmentError(TrustSimError):
    """Simulated log is not aligned 1:1 with the reference corpus."""
