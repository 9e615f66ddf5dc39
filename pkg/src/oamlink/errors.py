"""Exception hierarchy.

Every error carries a ``category`` string that the command line front end
maps to an exit code.
"""


class OamLinkError(Exception):
    category = "error"


class ModelError(OamLinkError, ValueError):
    """Physically or numerically invalid request."""

    category = "model"


class EvanescentMode(ModelError):
    """Wavelength too long for TE10 propagation in the waveguide."""


class NonPhysicalRadius(ModelError):
    pass


class InvalidDistance(ModelError):
    pass


class TruncationTooSmall(ModelError):
    pass


class NoMainLobe(ModelError):
    pass


class InsufficientSamples(ModelError):
    pass


class InvalidGeometry(ModelError):
    pass


class DegenerateDirection(ModelError):
    pass


class ZeroRow(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class MisalignedBits(ModelError):
    pass


class PayloadOverflow(ModelError):
    pass


class ZeroPilotEnergy(ModelError):
    pass


class SingularEstimate(ModelError):
    pass


class LengthMismatch(ModelError):
    pass


class IndexOutOfRange(OamLinkError, IndexError):
    category = "model"


class RankDeficientWarning(RuntimeWarning):
    """Emitted when a capacity expression collapses to -inf."""


class ParseError(OamLinkError):
    category = "parse"

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field


class ValidationError(OamLinkError, ValueError):
    category = "validation"

    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
