"""Admittance parameter sets and the robot/crane design procedures."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError
from .lti import Polynomial, TransferFunction


@dataclass(frozen=True)
class AdmittanceParams:
    """Virtual mass-spring-damper ``M s^2 + B s + K``.

    Attributes:
        M: virtual mass [kg], > 0
        B: virtual damping [N s/m], >= 0
        K: virtual stiffness [N/m], > 0
    """

    M: float
    B: float
    K: float

    def __post_init__(self):
        for name in ("M", "B", "K"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"admittance {name} must be finite, got {v!r}")
        if self.M <= 0:
            raise DomainError(f"admittance mass M must be > 0, got {self.M}")
        if self.B < 0:
            raise DomainError(f"admittance damping B must be >= 0, got {self.B}")
        if self.K <= 0:
            raise DomainError(f"admittance stiffness K must be > 0, got {self.K}")

    @property
    def polynomial(self) -> Polynomial:
        return Polynomial([self.M, self.B, self.K])

    def transfer_function(self) -> TransferFunction:
        """Force to admittance velocity, ``1 / (M s^2 + B s + K)``."""
        return TransferFunction(Polynomial([1.0]), self.polynomial)

    def as_dict(self) -> dict[str, float]:
        return {"M": self.M, "B": self.B, "K": self.K}


@dataclass(frozen=True)
class SecondOrderSpec:
    omega_n: float  # rad/s
    zeta: float

    def __post_init__(self):
        if not self.omega_n > 0:
            raise DomainError(f"omega_n must be > 0, got {self.omega_n}")
        if not self.zeta >= 0:
            raise DomainError(f"zeta must be >= 0, got {self.zeta}")


def to_second_order(p: AdmittanceParams) -> SecondOrderSpec:
    return SecondOrderSpec(
        omega_n=math.sqrt(p.K / p.M),
        zeta=p.B / (2.0 * math.sqrt(p.M * p.K)),
    )


def from_second_order(spec: SecondOrderSpec, M: float) -> AdmittanceParams:
    """Inverse of :func:`to_second_order` for a chosen mass."""
    K = M * spec.omega_n**2
    return AdmittanceParams(M=M, B=2.0 * spec.zeta * math.sqrt(M * K), K=K)


def critical_damping(M: float, K: float) -> float:
    """Damping giving ``zeta == 1``: ``2 sqrt(M K)``."""
    if not (M > 0 and K > 0):
        raise DomainError(f"critical damping needs M > 0 and K > 0, got M={M}, K={K}")
    return 2.0 * math.sqrt(M * K)


@dataclass(frozen=True)
class Design:
    """Designed parameters plus any violated design heuristics.

    Heuristic violations are reported, never enforced; several of the
    bundled presets break them on purpose.
    """

    params: AdmittanceParams
    warnings: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.warnings


def design_robot(M_r: float, K_e: float, K_r: float) -> Design:
    """Critically damped robot admittance for a chosen mass and stiffness.

    Warns when ``K_r <= K_e``: such a robot is softer than the payload
    and cannot push it.
    """
    if not (M_r > 0 and K_e > 0 and K_r > 0):
        raise DomainError(f"design_robot needs positive inputs, got M_r={M_r}, K_e={K_e}, K_r={K_r}")
    warnings = []
    if K_r <= K_e:
        warnings.append(
            f"robot stiffness K_r={K_r:g} is not above environment stiffness K_e={K_e:g}"
        )
    params = AdmittanceParams(M_r, critical_damping(M_r, K_r), K_r)
    return Design(params, tuple(warnings))


def design_crane(robot: AdmittanceParams, M_c: float, K_c: float) -> Design:
    """Critically damped crane admittance, lighter and softer than the robot."""
    if not (M_c > 0 and K_c > 0):
        raise DomainError(f"design_crane needs positive inputs, got M_c={M_c}, K_c={K_c}")
    warnings = []
    if M_c >= robot.M:
        warnings.append(f"crane mass M_c={M_c:g} is not lighter than robot mass M_r={robot.M:g}")
    if K_c >= robot.K:
        warnings.append(f"crane stiffness K_c={K_c:g} is not below robot stiffness K_r={robot.K:g}")
    params = AdmittanceParams(M_c, critical_damping(M_c, K_c), K_c)
    return Design(params, tuple(warnings))
