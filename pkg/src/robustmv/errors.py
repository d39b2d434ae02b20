"""Exception hierarchy.

Everything raised on purpose by the package derives from ``RobustMVError``.
Subclasses of ``NumericError`` signal a failed computation (CLI exit code 3);
the rest are invalid-input errors.
"""


class RobustMVError(Exception):
    pass


class NumericError(RobustMVError):
    """A computation could not be completed reliably."""


class ThetaOutOfDomain(RobustMVError, ValueError):
    pass


class NotPositiveDefinite(NumericError):
    pass


class NumericNonConvergence(NumericError):
    pass


class NonpositiveM(RobustMVError, ValueError):
    pass


class TimeOutOfRange(RobustMVError, ValueError):
    pass


class EmptyMeasure(RobustMVError, ValueError):
    pass


class NonpositiveVariance(RobustMVError, ValueError):
    pass


class TargetBelowInitial(RobustMVError, ValueError):
    pass


class ZeroRiskPremium(RobustMVError, ValueError):
    pass


class InvalidGrid(RobustMVError, ValueError):
    pass


class NonFiniteWealth(NumericError):
    def __init__(self, path_index: int):
        super().__init__(f"non-finite wealth on path {path_index}")
        self.path_index = path_index


class ZeroVariance(NumericError):
    pass


class TooFewSamples(RobustMVError, ValueError):
    pass


class ConfigError(RobustMVError, ValueError):
    pass
