"""Characteristic polynomials, Routh-Hurwitz tests and root-locus sweeps.

Three loops are analysed:

* robot position-based admittance loop with velocity-lag ``tau_r`` and
  environment stiffness ``K_e``;
* crane admittance cascaded with its velocity loop ``1/(s (tau_c s + 1))``;
* the coupled two-mass model, robot and crane admittances joined by ``K_e``.
"""
from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .admittance import AdmittanceParams, critical_damping
from .errors import DegenerateInputError, DomainError
from .lti import Polynomial, TransferFunction, batch_roots, cascade, poly_roots

log = logging.getLogger(__name__)

MARGINAL_RTOL = 1e-9
ROOT_BAND = 1e-7
BISECT_MAX_ITER = 60


class Verdict(str, enum.Enum):
    STABLE = "stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Condition:
    """One inequality ``lhs > rhs`` of a stability test."""

    name: str
    lhs: float
    rhs: float
    satisfied: bool
    marginal: bool = False


@dataclass(frozen=True)
class StabilityReport:
    verdict: Verdict
    conditions: tuple[Condition, ...]
    roots: np.ndarray | None = None
    rhp_count: int | None = None

    @property
    def stable(self) -> bool:
        return self.verdict is Verdict.STABLE

    def format(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        for c in self.conditions:
            mark = "ok" if c.satisfied else ("MARGINAL" if c.marginal else "FAIL")
            lines.append(f"  {c.name:<28s} {c.lhs:>14.6g} > {c.rhs:<14.6g} [{mark}]")
        if self.roots is not None:
            lines.append("  roots: " + ", ".join(_fmt_root(r) for r in self.roots))
        return "\n".join(lines)


def _fmt_root(r: complex) -> str:
    if r.imag == 0:
        return f"{r.real:.6g}"
    return f"{r.real:.6g}{r.imag:+.6g}j"


# -- characteristic polynomials -------------------------------------------------


def robot_char_poly(adm: AdmittanceParams, tau_r: float, K_e: float) -> Polynomial:
    """Denominator ``c1 s^4 + ... + c5`` of the robot position loop.

    ``c1 = tau M``, ``c2 = tau B + M``, ``c3 = tau K + B``,
    ``c4 = tau K_e + K``, ``c5 = K_e``, with ``K`` the admittance stiffness.
    """
    if not tau_r > 0:
        raise DomainError(f"tau_r must be > 0, got {tau_r}")
    if not K_e > 0:
        raise DomainError(f"K_e must be > 0, got {K_e}")
    M, B, K = adm.M, adm.B, adm.K
    return Polynomial([tau_r * M, tau_r * B + M, tau_r * K + B, tau_r * K_e + K, K_e])


def robot_transfer_function(adm: AdmittanceParams, tau_r: float, K_e: float) -> TransferFunction:
    """``X_r / X_d = s (M s^2 + B s + K) / robot_char_poly``."""
    num = Polynomial([1.0, 0.0]) * adm.polynomial
    return TransferFunction(num, robot_char_poly(adm, tau_r, K_e))


def crane_dynamics(tau_c: float) -> TransferFunction:
    """Crane velocity loop plus integrator, ``1 / (s (tau_c s + 1))``."""
    if not tau_c > 0:
        raise DomainError(f"tau_c must be > 0, got {tau_c}")
    return TransferFunction(Polynomial([1.0]), Polynomial([tau_c, 1.0, 0.0]))


def crane_transfer_function(adm: AdmittanceParams, tau_c: float) -> TransferFunction:
    """Force to crane position: admittance cascaded with crane dynamics."""
    return cascade(adm.transfer_function(), crane_dynamics(tau_c))


def crane_char_poly(adm: AdmittanceParams, tau_c: float) -> Polynomial:
    return crane_transfer_function(adm, tau_c).den


@dataclass(frozen=True)
class CoupledCoeffs:
    """Monic quartic ``s^4 + a1 s^3 + a2 s^2 + a3 s + a4`` of the two-mass model."""

    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self):
        if not all(math.isfinite(a) for a in self.as_tuple()):
            raise DomainError(f"non-finite coupled coefficients {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a1, self.a2, self.a3, self.a4)

    def polynomial(self) -> Polynomial:
        return Polynomial([1.0, *self.as_tuple()])


def coupled_coeffs(robot: AdmittanceParams, crane: AdmittanceParams, K_e: float) -> CoupledCoeffs:
    """Denominator of ``X_c / F_r`` for robot and crane joined by ``K_e``.

    The contact force ``K_e (x_r - x_c)`` enters the robot equation with a
    plus sign and the crane equation with a plus sign.
    """
    if not K_e > 0:
        raise DomainError(f"K_e must be > 0, got {K_e}")
    Mr, Br, Kr = robot.M, robot.B, robot.K
    Mc, Bc, Kc = crane.M, crane.B, crane.K
    d = Mr * Mc
    return CoupledCoeffs(
        a1=(Mr * Bc + Br * Mc) / d,
        a2=(Mr * Kc + Mr * K_e + Br * Bc + Kr * Mc - K_e * Mc) / d,
        a3=(Br * Kc + Br * K_e + Kr * Bc - K_e * Bc) / d,
        a4=(Kr * Kc + Kr * K_e - K_e * Kc) / d,
    )


def coupled_transfer_function(
    robot: AdmittanceParams, crane: AdmittanceParams, K_e: float
) -> TransferFunction:
    """``X_c / F_r = K_e / (s^4 + a1 s^3 + a2 s^2 + a3 s + a4)``."""
    return TransferFunction(Polynomial([K_e]), coupled_coeffs(robot, crane, K_e).polynomial())


# -- Routh-Hurwitz --------------------------------------------------------------


def _near(lhs: float, rhs: float, scale: float, rtol: float) -> bool:
    return abs(lhs - rhs) <= rtol * scale


def _combine(conditions: list[Condition]) -> Verdict:
    if any(not c.satisfied and not c.marginal for c in conditions):
        return Verdict.UNSTABLE
    if any(c.marginal for c in conditions):
        return Verdict.MARGINAL
    return Verdict.STABLE


def routh_hurwitz_quartic(c: CoupledCoeffs | Sequence[float], rtol: float = MARGINAL_RTOL) -> StabilityReport:
    """Closed-form Routh-Hurwitz conditions for a monic quartic.

    Stable iff ``a1 > 0``, ``a3 > 0``, ``a4 > 0`` and
    ``a1 a2 a3 > a3^2 + a1^2 a4``. A condition that holds with equality to
    within ``rtol`` is flagged marginal. Sign conditions are scaled
    homogeneously: ``a_k`` is compared with ``max_j |a_j|^(k/j)``.
    """
    a = c.as_tuple() if isinstance(c, CoupledCoeffs) else tuple(float(x) for x in c)
    if len(a) != 4:
        raise DomainError(f"quartic test needs four coefficients a1..a4, got {len(a)}")
    mags = [abs(x) for x in a]
    conditions = []
    for k in (1, 3, 4):
        ak = a[k - 1]
        scale = max((m ** (k / j) for j, m in enumerate(mags, start=1) if m > 0), default=0.0)
        marginal = _near(ak, 0.0, scale, rtol)
        conditions.append(Condition(f"a{k} > 0", ak, 0.0, ak > 0 and not marginal, marginal))
    a1, a2, a3, a4 = a
    lhs = a1 * a2 * a3
    rhs = a3 * a3 + a1 * a1 * a4
    marginal = _near(lhs, rhs, max(abs(lhs), abs(rhs)), rtol)
    conditions.append(
        Condition("a1*a2*a3 > a3^2 + a1^2*a4", lhs, rhs, lhs > rhs and not marginal, marginal)
    )
    return StabilityReport(_combine(conditions), tuple(conditions))


@dataclass
class RouthArray:
    rows: list[list[float]]
    first_column: list[float]
    zero_rows: list[int] = field(default_factory=list)
    epsilon_rows: list[int] = field(default_factory=list)

    @property
    def sign_changes(self) -> int:
        signs = [math.copysign(1.0, x) for x in self.first_column]
        return sum(1 for u, v in zip(signs, signs[1:]) if u != v)


def routh_array(p: Polynomial, rtol: float = MARGINAL_RTOL) -> RouthArray:
    """Routh array with the two classic special cases handled.

    * A row that is entirely zero (to ``rtol`` of the row two above) is
      replaced by the derivative of the auxiliary polynomial.
    * A zero leading entry in a nonzero row is replaced by a small positive
      epsilon.
    """
    if p.is_zero or p.degree < 1:
        raise DegenerateInputError(f"Routh test needs degree >= 1, got {p}")
    c = list(p.coeffs)
    if c[0] < 0:
        c = [-x for x in c]
    n = p.degree
    width = n // 2 + 1
    r0 = c[0::2] + [0.0] * (width - len(c[0::2]))
    r1 = c[1::2] + [0.0] * (width - len(c[1::2]))
    arr = RouthArray(rows=[r0, r1], first_column=[r0[0]])
    # power of s for row i is n - i
    for i in range(1, n + 1):
        row = arr.rows[i]
        above = arr.rows[i - 1]
        scale = max(abs(x) for x in above) or 1.0
        if all(abs(x) <= rtol * scale for x in row):
            # auxiliary polynomial from the row above, order n - i + 1
            order = n - i + 1
            row = [above[j] * (order - 2 * j) for j in range(width)]
            arr.rows[i] = row
            arr.zero_rows.append(i)
            scale = max(abs(x) for x in row) or 1.0
        if abs(row[0]) <= rtol * scale:
            row = list(row)
            row[0] = rtol * scale if scale > 0 else rtol
            arr.rows[i] = row
            arr.epsilon_rows.append(i)
        arr.first_column.append(row[0])
        if i == n:
            break
        nxt = [
            (row[0] * above[j + 1] - above[0] * row[j + 1]) / row[0] if j + 1 < width else 0.0
            for j in range(width)
        ]
        arr.rows.append(nxt)
    return arr


def root_verdict(roots: Sequence[complex], band: float = ROOT_BAND) -> Verdict:
    """Verdict from root locations, ``max Re`` within ``band`` of 0 is marginal."""
    m = max(np.real(roots))
    if m > band:
        return Verdict.UNSTABLE
    if m >= -band:
        return Verdict.MARGINAL
    return Verdict.STABLE


def routh_general(p: Polynomial, rtol: float = MARGINAL_RTOL) -> StabilityReport:
    """Routh-Hurwitz verdict for any real polynomial of degree >= 1.

    The report carries the roots as an independent cross-check; a
    disagreement is logged, the Routh verdict is returned.
    """
    arr = routh_array(p, rtol)
    conditions = []
    n = p.degree
    for i, v in enumerate(arr.first_column):
        tag = " (aux)" if i in arr.zero_rows else " (eps)" if i in arr.epsilon_rows else ""
        special = bool(tag)
        conditions.append(Condition(f"routh[s^{n - i}]{tag}", v, 0.0, v > 0 and not special, special and v > 0))
    changes = arr.sign_changes
    if changes:
        verdict = Verdict.UNSTABLE
    elif arr.zero_rows or arr.epsilon_rows:
        verdict = Verdict.MARGINAL
    else:
        verdict = Verdict.STABLE
    roots = poly_roots(p)
    rv = root_verdict(roots)
    if rv is not verdict:
        log.warning("Routh verdict %s disagrees with root verdict %s for %s", verdict, rv, p)
    return StabilityReport(verdict, tuple(conditions), roots=roots, rhp_count=changes)


# -- root locus -----------------------------------------------------------------


@dataclass(frozen=True)
class RootLocusResult:
    """Robot-loop roots over a stiffness grid with critically damped ``B``.

    ``roots[i]`` belongs to ``gains[i]``. ``critical_*`` are ``None`` when the
    grid never brackets the corresponding transition.
    """

    gains: np.ndarray
    dampings: np.ndarray
    roots: np.ndarray
    max_re: np.ndarray
    all_real: np.ndarray
    critical_stability_gain: float | None
    critical_oscillation_gain: float | None
    stability_bracket: tuple[float, float] | None = None
    oscillation_bracket: tuple[float, float] | None = None

    @property
    def sweep(self) -> list[tuple[float, np.ndarray, float, bool]]:
        return list(self.points())

    def points(self) -> Iterator[tuple[float, np.ndarray, float, bool]]:
        for k, r, m, a in zip(self.gains, self.roots, self.max_re, self.all_real):
            yield float(k), r, float(m), bool(a)

    def csv_header(self) -> list[str]:
        n = self.roots.shape[1]
        cols = ["K_r", "B_r"]
        for i in range(1, n + 1):
            cols += [f"root{i}_re", f"root{i}_im"]
        return cols + ["max_re", "all_real"]

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.csv_header())
            for k, b, r, m, a in zip(self.gains, self.dampings, self.roots, self.max_re, self.all_real):
                row = [repr(float(k)), repr(float(b))]
                for z in r:
                    row += [repr(float(z.real)), repr(float(z.imag))]
                row += [repr(float(m)), int(bool(a))]
                w.writerow(row)
        return path


def _locus_coeffs(M_r: float, tau_r: float, K_e: float, K: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    B = 2.0 * np.sqrt(M_r * K)
    c = np.column_stack(
        [
            np.full_like(K, tau_r * M_r),
            tau_r * B + M_r,
            tau_r * K + B,
            tau_r * K_e + K,
            np.full_like(K, K_e),
        ]
    )
    return B, c


def _imag_tol(M_r: float, K: float | np.ndarray) -> float | np.ndarray:
    return 1e-6 * np.sqrt(K / M_r)


def _bisect(pred: Callable[[float], bool], lo: float, hi: float, rel_tol: float) -> tuple[float, float]:
    """Shrink ``[lo, hi]`` with ``pred(lo) == False`` and ``pred(hi) == True``."""
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= rel_tol * abs(hi):
            break
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def root_locus_robot(
    M_r: float,
    tau_r: float,
    K_e: float,
    K_grid: Sequence[float] | np.ndarray,
    rel_tol: float = 1e-6,
) -> RootLocusResult:
    """Sweep the robot stiffness with ``B = 2 sqrt(M_r K)`` at each point.

    The critical stability gain is where the largest real part of the
    roots changes sign; the critical oscillation gain is the smallest
    stiffness whose roots are all real (``|Im| <= 1e-6 * omega_n``). Both
    are refined by bisection to ``rel_tol``.
    """
    K = np.asarray(K_grid, dtype=float)
    if K.ndim != 1 or K.size == 0:
        raise DomainError("K_grid must be a nonempty 1-D sequence")
    if np.any(K <= 0) or np.any(np.diff(K) <= 0):
        raise DomainError("K_grid must be positive and strictly ascending")
    if not (M_r > 0 and tau_r > 0 and K_e > 0):
        raise DomainError(f"need M_r, tau_r, K_e > 0, got {M_r}, {tau_r}, {K_e}")

    B, coeffs = _locus_coeffs(M_r, tau_r, K_e, K)
    roots = batch_roots(coeffs)
    max_re = roots.real.max(axis=1)
    all_real = np.abs(roots.imag).max(axis=1) <= _imag_tol(M_r, K)

    def adm(k: float) -> AdmittanceParams:
        return AdmittanceParams(M_r, critical_damping(M_r, k), k)

    def is_stable(k: float) -> bool:
        return poly_roots(robot_char_poly(adm(k), tau_r, K_e)).real.max() < 0

    def is_real(k: float) -> bool:
        r = poly_roots(robot_char_poly(adm(k), tau_r, K_e))
        return np.abs(r.imag).max() <= _imag_tol(M_r, k)

    stab_bracket = None
    crit_stab = None
    unstable = max_re >= 0
    for i in range(len(K) - 1):
        if unstable[i] != unstable[i + 1]:
            if unstable[i]:
                lo, hi = _bisect(is_stable, K[i], K[i + 1], rel_tol)
            else:
                lo, hi = _bisect(lambda k: not is_stable(k), K[i], K[i + 1], rel_tol)
            stab_bracket = (float(lo), float(hi))
            crit_stab = 0.5 * (lo + hi)
            break

    osc_bracket = None
    crit_osc = None
    for i in range(len(K) - 1):
        if not all_real[i] and all_real[i + 1]:
            lo, hi = _bisect(is_real, K[i], K[i + 1], rel_tol)
            osc_bracket = (float(lo), float(hi))
            crit_osc = 0.5 * (lo + hi)
            break

    return RootLocusResult(
        gains=K,
        dampings=B,
        roots=roots,
        max_re=max_re,
        all_real=all_real,
        critical_stability_gain=None if crit_stab is None else float(crit_stab),
        critical_oscillation_gain=None if crit_osc is None else float(crit_osc),
        stability_bracket=stab_bracket,
        oscillation_bracket=osc_bracket,
    )
