"""Exception hierarchy shared by all modules."""


class BsdError(Exception):
    """Base class for every error raised by this package."""

    code = "error"


class ShapeError(BsdError, ValueError):
    code = "shape"


class DegenerateScalar(BsdError, ZeroDivisionError):
    code = "degenerate_scalar"


class BidegreeError(BsdError, ValueError):
    code = "bidegree"


class DimsError(BsdError, ValueError):
    code = "dims"


class RankError(BsdError, ValueError):
    code = "rank"


class NormalizationError(BsdError, ValueError):
    """The linear part is an embedding but cannot be normalized over Q(i)."""

    code = "normalization"


class TruncationError(BsdError, ValueError):
    code = "truncation"


class InconsistentSystem(BsdError):
    code = "inconsistent"


class ConditionError(BsdError):
    code = "condition"


class ResidualError(BsdError):
    code = "residual"


class ParseError(BsdError, ValueError):
    code = "parse"
