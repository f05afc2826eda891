"""Exception hierarchy.

Configuration/input problems derive from :class:`ConfigError` (CLI exit 1),
physics/numerics problems from :class:`PhysicsError` (CLI exit 2).
"""

from __future__ import annotations


class OptoRouterError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(OptoRouterError, ValueError):
    pass


class MissingKey(ConfigError):
    def __init__(self, name: str):
        super().__init__(f"missing required parameter {name!r}")
        self.name = name


class NonPositive(ConfigError):
    def __init__(self, name: str, value: float):
        super().__init__(f"parameter {name!r} must be > 0 (got {value!r})")
        self.name = name
        self.value = value


class NonFinite(ConfigError):
    def __init__(self, name: str, value: object):
        super().__init__(f"parameter {name!r} is not a finite number (got {value!r})")
        self.name = name
        self.value = value


class ParseError(ConfigError):
    def __init__(self, line: int, text: str, reason: str = "expected 'key = value'"):
        super().__init__(f"line {line}: {reason}: {text!r}")
        self.line = line
        self.text = text


class DuplicateKey(ConfigError):
    def __init__(self, name: str, lines: tuple[int, ...]):
        super().__init__(f"key {name!r} defined more than once (lines {', '.join(map(str, lines))})")
        self.name = name
        self.lines = lines


class NonPositiveDistance(ConfigError):
    def __init__(self, r0: float):
        super().__init__(f"equilibrium distance r0 must be > 0 (got {r0!r})")
        self.r0 = r0


class NegativeTemperature(ConfigError):
    def __init__(self, temperature: float):
        super().__init__(f"temperature must be >= 0 K (got {temperature!r})")
        self.temperature = temperature


class PhysicsError(OptoRouterError):
    pass


class DegenerateStiffness(PhysicsError):
    """Effective spring constant m1*w1^2 - hbar^2 lam^2/(m2 w2^2) is not positive."""

    def __init__(self, stiffness: float):
        super().__init__(
            f"effective NMM stiffness is non-positive ({stiffness:.6g} N/m); "
            "Coulomb coupling too strong for a static equilibrium"
        )
        self.stiffness = stiffness


class SolverFailure(PhysicsError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NoStableBranch(PhysicsError):
    pass


class SingularDenominator(PhysicsError):
    def __init__(self, omega: float, value: float):
        super().__init__(f"response denominator vanishes at omega = {omega:.17g} rad/s (|d| = {value:.3e})")
        self.omega = omega
        self.value = value


class SingularMatrix(SingularDenominator):
    """Raised by the numeric oracle; a special case of :class:`SingularDenominator`."""


class NoChannels(PhysicsError):
    pass


class GridTooCoarse(PhysicsError):
    pass
