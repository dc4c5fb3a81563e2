"""Admittance design, stability analysis and simulation for a robot and an
overhead crane carrying a suspended payload together."""
from .admittance import AdmittanceParams, SecondOrderSpec, critical_damping, design_crane, design_robot, to_second_order
from .errors import (
    ConfigError,
    DegenerateInputError,
    DivergenceError,
    DomainError,
    GeometryError,
    NumericalError,
    PoleEvaluationError,
    ProtocolError,
    RobocraneError,
    StallTimeoutError,
    TransportError,
)
from .lti import Polynomial, TransferFunction, cascade, evaluate, poly_roots
from .plant import ActuatorLag, ElasticContact, PendulumEnv, contact_force, estimate_ke, horizontal_force, lag_step
from .sim import ScenarioConfig, SimTrace, TrapezoidProfile, compare, profile_velocity, simulate
from .stability import (
    CoupledCoeffs,
    RootLocusResult,
    StabilityReport,
    Verdict,
    coupled_coeffs,
    crane_char_poly,
    robot_char_poly,
    root_locus_robot,
    routh_general,
    routh_hurwitz_quartic,
)

__version__ = "0.1.0"

__all__ = [
    "ActuatorLag",
    "AdmittanceParams",
    "ConfigError",
    "CoupledCoeffs",
    "DegenerateInputError",
    "DivergenceError",
    "DomainError",
    "ElasticContact",
    "GeometryError",
    "NumericalError",
    "PendulumEnv",
    "PoleEvaluationError",
    "Polynomial",
    "ProtocolError",
    "RobocraneError",
    "RootLocusResult",
    "ScenarioConfig",
    "SecondOrderSpec",
    "SimTrace",
    "StabilityReport",
    "StallTimeoutError",
    "TransferFunction",
    "TransportError",
    "TrapezoidProfile",
    "Verdict",
    "cascade",
    "compare",
    "contact_force",
    "coupled_coeffs",
    "crane_char_poly",
    "critical_damping",
    "design_crane",
    "design_robot",
    "estimate_ke",
    "evaluate",
    "horizontal_force",
    "lag_step",
    "poly_roots",
    "profile_velocity",
    "robot_char_poly",
    "root_locus_robot",
    "routh_general",
    "routh_hurwitz_quartic",
    "simulate",
    "to_second_order",
    "__version__",
]
