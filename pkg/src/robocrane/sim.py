"""Fixed-step simulation of the robot/crane collaboration loop.

Per tick ``k`` at ``t = k * dt``:

1. the plant measures ``F = K_e (x_r - x_c)``;
2. the controller reads its admittance outputs ``v_ar`` and ``v_ac``,
   issues ``v_xd - v_ar`` to the robot and ``v_ac`` to the crane, then
   advances both admittances with ``F``;
3. the plant records the row, integrates positions with the current
   velocities and advances both actuator lags with the commands.

Every integrator is forward Euler at ``dt``. :class:`Controller` and
:class:`Plant` are also the two halves driven over the network by
:mod:`robocrane.netloop`, so both paths perform identical arithmetic.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from scipy.linalg import expm

from .admittance import AdmittanceParams
from .errors import DivergenceError, DomainError
from .plant import ActuatorLag, ElasticContact
from .stability import coupled_coeffs

Mode = Literal["collaborative", "velocity-only"]
MODES = ("collaborative", "velocity-only")
COLUMNS = ("t", "v_xd", "v_ar", "v_xr", "x_r", "F", "v_ac", "v_c", "x_c")
DIVERGENCE_LIMIT = 1e9


@dataclass(frozen=True)
class TrapezoidProfile:
    """Ramp-cruise-ramp velocity reference.

    Attributes:
        v_max: cruise velocity [m/s]
        t_ramp: duration of each ramp [s]
        t_cruise: duration at ``v_max`` [s]
        t_start: idle time before the first ramp [s]
    """

    v_max: float = 0.1
    t_ramp: float = 2.0
    t_cruise: float = 8.0
    t_start: float = 2.0

    def __post_init__(self):
        if not self.v_max >= 0:
            raise DomainError(f"v_max must be >= 0, got {self.v_max}")
        if not self.t_ramp > 0:
            raise DomainError(f"t_ramp must be > 0, got {self.t_ramp}")
        if not self.t_cruise >= 0:
            raise DomainError(f"t_cruise must be >= 0, got {self.t_cruise}")
        if not self.t_start >= 0:
            raise DomainError(f"t_start must be >= 0, got {self.t_start}")

    @property
    def end_time(self) -> float:
        return self.t_start + 2.0 * self.t_ramp + self.t_cruise

    def cruise_window(self) -> tuple[float, float]:
        start = self.t_start + self.t_ramp
        return start, start + self.t_cruise

    def velocity(self, t: float) -> float:
        return profile_velocity(self, t)


def profile_velocity(p: TrapezoidProfile, t: float) -> float:
    if t < 0:
        raise DomainError(f"profile time must be >= 0, got {t}")
    tau = t - p.t_start
    if tau <= 0:
        return 0.0
    if tau < p.t_ramp:
        return p.v_max * tau / p.t_ramp
    tau -= p.t_ramp
    if tau <= p.t_cruise:
        return p.v_max
    tau -= p.t_cruise
    if tau < p.t_ramp:
        return p.v_max * (p.t_ramp - tau) / p.t_ramp
    return 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    robot_adm: AdmittanceParams
    crane_adm: AdmittanceParams
    tau_r: float  # s
    tau_c: float  # s
    K_e: float  # N/m
    profile: TrapezoidProfile = field(default_factory=TrapezoidProfile)
    duration: float = 20.0  # s
    dt: float = 0.004  # s
    mode: Mode = "collaborative"

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if not (self.tau_r > 0 and self.tau_c > 0):
            raise DomainError(f"time constants must be > 0, got tau_r={self.tau_r}, tau_c={self.tau_c}")
        if not self.K_e > 0:
            raise DomainError(f"K_e must be > 0, got {self.K_e}")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.duration < self.profile.end_time:
            raise DomainError(
                f"duration {self.duration} s is shorter than the profile ({self.profile.end_time} s)"
            )

    @property
    def n_steps(self) -> int:
        """Rows in the trace, covering ``[0, duration]`` inclusive."""
        return int(round(self.duration / self.dt)) + 1

    def with_(self, **changes) -> ScenarioConfig:
        return replace(self, **changes)


@dataclass
class SimTrace:
    """Sampled signals, one row per tick on a uniform grid.

    ``v_ac`` is the crane velocity command. Columns a run cannot observe
    (for example plant states on the controller side of the network loop)
    hold NaN.
    """

    t: np.ndarray
    v_xd: np.ndarray
    v_ar: np.ndarray
    v_xr: np.ndarray
    x_r: np.ndarray
    F: np.ndarray
    v_ac: np.ndarray
    v_c: np.ndarray
    x_c: np.ndarray

    @classmethod
    def from_rows(cls, rows: list[tuple[float, ...]] | np.ndarray) -> SimTrace:
        a = np.asarray(rows, dtype=float).reshape(-1, len(COLUMNS))
        return cls(*(a[:, i].copy() for i in range(len(COLUMNS))))

    def __len__(self) -> int:
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        if name not in COLUMNS:
            raise KeyError(name)
        return getattr(self, name)

    def as_array(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in COLUMNS])

    def max_abs_deviation(self, other: SimTrace) -> dict[str, float]:
        """Per-column max |self - other|; NaN columns on either side are skipped."""
        if len(self) != len(other):
            raise ValueError(f"trace lengths differ: {len(self)} vs {len(other)}")
        out = {}
        for c in COLUMNS:
            a, b = self.column(c), other.column(c)
            if np.all(np.isnan(a)) or np.all(np.isnan(b)):
                continue
            out[c] = float(np.max(np.abs(a - b))) if len(a) else 0.0
        return out

    def window(self, t0: float, t1: float) -> np.ndarray:
        return (self.t >= t0) & (self.t <= t1)

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for row in self.as_array():
                w.writerow([repr(float(x)) for x in row])
        return path

    @classmethod
    def from_csv(cls, path: str | Path) -> SimTrace:
        with Path(path).open(newline="") as fh:
            r = csv.reader(fh)
            header = tuple(next(r))
            if header != COLUMNS:
                raise ValueError(f"unexpected trace header {header}")
            rows = [[float(x) for x in line] for line in r]
        return cls.from_rows(rows)


class AdmittanceBlock:
    """``1 / (M s^2 + B s + K)`` from force to velocity, forward Euler.

    States are the output ``y`` and its derivative; the output read at
    a tick is the state before that tick's update.
    """

    def __init__(self, params: AdmittanceParams):
        self.params = params
        self.y = 0.0
        self.ydot = 0.0

    @property
    def output(self) -> float:
        return self.y

    def advance(self, force: float, dt: float) -> float:
        p = self.params
        yddot = (force - p.B * self.ydot - p.K * self.y) / p.M
        self.y += dt * self.ydot
        self.ydot += dt * yddot
        return self.y


@dataclass(frozen=True)
class Commands:
    v_xd: float
    v_ar: float
    robot: float
    crane: float


class Controller:
    """Robot and crane admittances plus the velocity reference."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.robot_adm = AdmittanceBlock(cfg.robot_adm)
        self.crane_adm = AdmittanceBlock(cfg.crane_adm)

    def step(self, t: float, force: float) -> Commands:
        cfg = self.cfg
        v_xd = profile_velocity(cfg.profile, t)
        if cfg.mode == "velocity-only":
            return Commands(v_xd, 0.0, v_xd, v_xd)
        v_ar = self.robot_adm.output
        v_ac = self.crane_adm.output
        self.robot_adm.advance(force, cfg.dt)
        self.crane_adm.advance(force, cfg.dt)
        return Commands(v_xd, v_ar, v_xd - v_ar, v_ac)


class Plant:
    """Actuator lags, position integrators and the elastic contact."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.contact = ElasticContact(cfg.K_e)
        self.robot_lag = ActuatorLag(cfg.tau_r)
        self.crane_lag = ActuatorLag(cfg.tau_c)
        self.x_r = 0.0
        self.x_c = 0.0

    def measure(self) -> float:
        return self.contact.force(self.x_r, self.x_c)

    @property
    def v_r(self) -> float:
        return self.robot_lag.state

    @property
    def v_c(self) -> float:
        return self.crane_lag.state

    def advance(self, robot_cmd: float, crane_cmd: float) -> None:
        dt = self.cfg.dt
        self.x_r += dt * self.robot_lag.state
        self.x_c += dt * self.crane_lag.state
        self.robot_lag.step(robot_cmd, dt)
        self.crane_lag.step(crane_cmd, dt)


def check_row(step: int, row: tuple[float, ...]) -> None:
    for name, v in zip(COLUMNS, row):
        if not math.isfinite(v) or abs(v) > DIVERGENCE_LIMIT:
            raise DivergenceError(step, row[0], name, v)


def simulate(cfg: ScenarioConfig) -> SimTrace:
    """Run the scenario in-process.

    Raises:
        DivergenceError: a signal became non-finite or exceeded 1e9.
    """
    ctrl = Controller(cfg)
    plant = Plant(cfg)
    rows = []
    for k in range(cfg.n_steps):
        t = k * cfg.dt
        F = plant.measure()
        cmd = ctrl.step(t, F)
        row = (t, cmd.v_xd, cmd.v_ar, plant.v_r, plant.x_r, F, cmd.crane, plant.v_c, plant.x_c)
        check_row(k, row)
        rows.append(row)
        plant.advance(cmd.robot, cmd.crane)
    return SimTrace.from_rows(rows)


def compare(cfg: ScenarioConfig) -> tuple[SimTrace, SimTrace]:
    """Collaborative run and velocity-only run of the same scenario."""
    return simulate(cfg.with_(mode="collaborative")), simulate(cfg.with_(mode="velocity-only"))


# -- coupled two-mass model -----------------------------------------------------


def two_mass_matrices(
    robot: AdmittanceParams, crane: AdmittanceParams, K_e: float
) -> tuple[np.ndarray, np.ndarray]:
    """State-space form of the robot and crane admittances joined by ``K_e``.

    State ``[x_r, v_r, x_c, v_c]``, input the robot force ``F_r``. The
    contact force ``K_e (x_r - x_c)`` enters both equations with a plus sign.
    """
    Mr, Br, Kr = robot.M, robot.B, robot.K
    Mc, Bc, Kc = crane.M, crane.B, crane.K
    A = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [(K_e - Kr) / Mr, -Br / Mr, -K_e / Mr, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [K_e / Mc, 0.0, -(K_e + Kc) / Mc, -Bc / Mc],
        ]
    )
    B = np.array([0.0, 1.0 / Mr, 0.0, 0.0])
    return A, B


def simulate_two_mass(
    robot: AdmittanceParams,
    crane: AdmittanceParams,
    K_e: float,
    duration: float,
    dt: float,
    force: Callable[[float], float] | None = None,
    x0: np.ndarray | None = None,
    limit: float = 1e12,
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step response of the two-mass model.

    The input is held constant over each step and the step map is the
    exact matrix exponential, so ``dt`` only sets the sampling. Stops
    early once any state exceeds ``limit``.

    Returns:
        ``(t, X)`` with ``X`` of shape ``(len(t), 4)``.
    """
    A, B = two_mass_matrices(robot, crane, K_e)
    aug = np.zeros((5, 5))
    aug[:4, :4] = A
    aug[:4, 4] = B
    Phi = expm(aug * dt)
    Ad, Bd = Phi[:4, :4], Phi[:4, 4]
    n = int(round(duration / dt)) + 1
    x = np.zeros(4) if x0 is None else np.asarray(x0, dtype=float).copy()
    X = np.empty((n, 4))
    for k in range(n):
        X[k] = x
        if not np.all(np.isfinite(x)) or np.abs(x).max() > limit:
            X = X[: k + 1]
            break
        u = force(k * dt) if force is not None else 0.0
        x = Ad @ x + Bd * u
    return np.arange(len(X)) * dt, X


def two_mass_grows(
    robot: AdmittanceParams,
    crane: AdmittanceParams,
    K_e: float,
    periods: float = 400.0,
    samples: int = 8000,
) -> bool:
    """Whether the impulse response of the two-mass model grows.

    The horizon is ``periods / |a4|^(1/4)``, a multiple of the slowest
    characteristic time scale. Growth means the envelope over the last
    eighth exceeds the envelope over the first eighth.
    """
    a4 = abs(coupled_coeffs(robot, crane, K_e).a4)
    w0 = max(a4**0.25, 1e-6)
    T = periods / w0
    x0 = np.array([0.0, 1.0 / robot.M, 0.0, 0.0])
    t, X = simulate_two_mass(robot, crane, K_e, T, T / samples, x0=x0)
    env = np.abs(X).max(axis=1)
    if len(env) < samples or not np.all(np.isfinite(env)):
        return True
    w = samples // 8
    return env[-w:].max() > env[:w].max()
