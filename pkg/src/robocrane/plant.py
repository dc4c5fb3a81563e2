"""Pendulum payload contact model and first-order actuator lags."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import DomainError, GeometryError

TensionModel = Literal["small-angle", "fixed-height"]
TENSION_MODELS = ("small-angle", "fixed-height")


@dataclass(frozen=True)
class PendulumEnv:
    """Payload hanging from the crane trolley.

    Attributes:
        m: payload mass [kg]
        R: rope length [m]
        g: gravity [m/s^2]
        k_rope: rope elastic constant [N/m]; stored only, no model uses it
    """

    m: float
    R: float
    g: float = 9.81
    k_rope: float | None = None

    def __post_init__(self):
        if not (self.m > 0 and self.R > 0 and self.g > 0):
            raise DomainError(f"pendulum needs m, R, g > 0, got m={self.m}, R={self.R}, g={self.g}")
        if self.k_rope is not None and not self.k_rope > 0:
            raise DomainError(f"k_rope must be > 0 when given, got {self.k_rope}")


@dataclass(frozen=True)
class ElasticContact:
    K_e: float  # N/m

    def __post_init__(self):
        if not self.K_e > 0:
            raise DomainError(f"environment stiffness must be > 0, got {self.K_e}")

    def force(self, x_r: float, x_c: float) -> float:
        return contact_force(self, x_r, x_c)


def _check_model(model: str) -> None:
    if model not in TENSION_MODELS:
        raise DomainError(f"unknown tension model {model!r}, expected one of {TENSION_MODELS}")


def horizontal_force(env: PendulumEnv, L: float, tension_model: TensionModel = "small-angle") -> float:
    """Horizontal force needed to hold the payload displaced by ``L``.

    ``small-angle`` linearises to ``(m g / R) L``. ``fixed-height`` takes
    the rope tension from vertical force balance, ``F_T = m g / cos(theta)``,
    and evaluates ``sin(theta) (F_T - m g cos(theta))`` with
    ``theta = arcsin(L / R)``.

    Raises:
        GeometryError: ``|L| >= R``.
    """
    _check_model(tension_model)
    if not abs(L) < env.R:
        raise GeometryError(f"|L|={abs(L)} must be below rope length R={env.R}")
    Fg = env.m * env.g
    if tension_model == "small-angle":
        return Fg / env.R * L
    theta = math.asin(L / env.R)
    F_T = Fg / math.cos(theta)
    return math.sin(theta) * (F_T - Fg * math.cos(theta))


def ke_table(
    env: PendulumEnv,
    L_range: tuple[float, float],
    n_samples: int,
    tension_model: TensionModel = "small-angle",
) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``(L, F_h)`` pairs evenly over ``L_range``."""
    L_min, L_max = L_range
    if not (0 <= L_min < L_max < env.R):
        raise DomainError(f"need 0 <= L_min < L_max < R={env.R}, got {L_range}")
    if n_samples < 2:
        raise DomainError(f"need at least 2 samples, got {n_samples}")
    L = np.linspace(L_min, L_max, n_samples)
    F = np.array([horizontal_force(env, x, tension_model) for x in L])
    return L, F


def estimate_ke(
    env: PendulumEnv,
    L_range: tuple[float, float],
    n_samples: int = 50,
    tension_model: TensionModel = "small-angle",
) -> ElasticContact:
    """Least-squares slope of ``F_h`` against ``L`` as an environment stiffness."""
    L, F = ke_table(env, L_range, n_samples, tension_model)
    Lc = L - L.mean()
    slope = float(np.dot(Lc, F - F.mean()) / np.dot(Lc, Lc))
    if not slope > 0:
        raise DomainError(
            f"fitted slope {slope:g} N/m is not positive; widen L_range for the {tension_model} model"
        )
    return ElasticContact(slope)


def write_ke_csv(path: str | Path, L: np.ndarray, F: np.ndarray) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["L", "F_h"])
        for a, b in zip(L, F):
            w.writerow([repr(float(a)), repr(float(b))])
    return path


def contact_force(contact: ElasticContact, x_r: float, x_c: float) -> float:
    """``K_e (x_r - x_c)``; positive when the robot/payload leads the crane."""
    return contact.K_e * (x_r - x_c)


@dataclass
class ActuatorLag:
    """First-order velocity loop ``1 / (tau s + 1)``, forward-Euler discretised.

    One instance per simulated axis; not shared between steppers.
    """

    tau: float
    state: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError(f"actuator time constant must be > 0, got {self.tau}")

    def step(self, v_cmd: float, dt: float) -> float:
        if not dt > 0:
            raise DomainError(f"dt must be > 0, got {dt}")
        if dt >= 2.0 * self.tau:
            warnings.warn(
                f"dt={dt:g} >= 2*tau={2 * self.tau:g}: forward Euler is unstable for this lag",
                RuntimeWarning,
                stacklevel=2,
            )
        self.state += dt * (v_cmd - self.state) / self.tau
        return self.state


def lag_step(a: ActuatorLag, v_cmd: float, dt: float) -> float:
    return a.step(v_cmd, dt)
