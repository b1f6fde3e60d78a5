"""
Error Types

Exception hierarchy shared by the geometry, engagement, deviation and
simulation modules. Every error raised by this package derives from TDGError
so callers (the CLI, the sweep driver) can catch one type.
"""


class TDGError(Exception):
    """Base exception for target-defense game errors"""
    pass


class NonFiniteValue(TDGError, ValueError):
    """A coordinate or parameter is NaN or infinite"""
    pass


class InvalidSpeedRatio(TDGError, ValueError):
    """Speed ratio outside the open interval (0, 1)"""
    pass


class DegenerateDirection(TDGError):
    """A unit vector was requested between coincident points"""
    pass


class CoincidentAgents(TDGError):
    """An attacker and a defender occupy the same point"""
    pass


class TargetInsideCircle(TDGError):
    """The target lies inside the Apollonius circle, so x_B is not on the boundary"""
    pass


class DegenerateGeometry(TDGError):
    """A construction needed by the deviation analysis does not exist"""
    pass


class Infeasible(TDGError):
    """No interception plan satisfies the feasibility conditions"""
    pass


class NonConvergence(TDGError):
    """A trajectory integration hit its time bound without a terminal event"""
    pass


class SimulationTimeout(TDGError):
    """
    The game did not terminate before t_max.

    The partial trace is attached so callers can still write artifacts.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class ScenarioParseError(TDGError, ValueError):
    """Scenario or sweep file is malformed"""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ScenarioValidationError(TDGError, ValueError):
    """Scenario or sweep file is well-formed but violates an invariant"""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
