"""Exception types shared across the package."""


class TwistrecError(Exception):
    pass


class BranchStraddle(TwistrecError):
    """An enclosure covers a partition boundary (or leaves the partition).

    ``step`` is the orbit step at which it happened, when known.
    """

    def __init__(self, message="enclosure straddles a branch boundary", step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class DigitOverflow(BranchStraddle):
    """A Gauss digit exceeded the configured cap."""


class PieceStraddle(TwistrecError):
    """An enclosure covers a boundary between pieces of a piecewise twist."""


class DegenerateBall(TwistrecError):
    pass


class Unsupported(TwistrecError):
    pass


class ExplosionGuard(TwistrecError):
    """An enumeration would exceed its configured size cap."""


class PrecisionExhausted(TwistrecError):
    pass


class IndeterminateExcess(TwistrecError):
    def __init__(self, rate, limit=0.01):
        super().__init__(f"indeterminate rate {rate:.4f} exceeds {limit}")
        self.rate = rate


class ZeroDenominator(TwistrecError):
    pass


class ConfigError(TwistrecError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
