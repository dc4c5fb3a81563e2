"""Exception hierarchy shared by all robocrane modules.

The CLI maps the three families (config, numerical, transport) onto
distinct exit codes.
"""


class RobocraneError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(RobocraneError):
    """Invalid configuration file, preset name or flag combination."""


class DomainError(RobocraneError, ValueError):
    """A parameter lies outside the domain of an operation."""


class GeometryError(DomainError):
    """Horizontal displacement not reachable with the given rope length."""


class NumericalError(RobocraneError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy answer."""


class DegenerateInputError(NumericalError):
    """Zero polynomial or polynomial of too low a degree."""


class PoleEvaluationError(NumericalError, ZeroDivisionError):
    """Transfer function evaluated at (or numerically on top of) a pole."""


class DivergenceError(NumericalError):
    """Simulation signals blew up."""

    def __init__(self, step: int, t: float, signal: str, value: float):
        self.step = step
        self.t = t
        self.signal = signal
        self.value = value
        super().__init__(
            f"simulation diverged at step {step} (t={t:.6g} s): {signal}={value!r}"
        )


class TransportError(RobocraneError):
    """Socket-level failure in the network loop."""


class StallTimeoutError(TransportError, TimeoutError):
    """Peer stopped answering for too many consecutive ticks."""


class ProtocolError(RobocraneError):
    """Malformed or unknown datagram."""
