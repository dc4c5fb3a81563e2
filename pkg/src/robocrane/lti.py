"""Real-coefficient polynomials and SISO rational transfer functions.

Coefficients are stored highest degree first, the same convention as
``numpy.polyval`` / ``numpy.roots``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateInputError, NumericalError, PoleEvaluationError

STRIP_RTOL = 1e-12
ROOT_RTOL = 1e-9


def _normalize(coeffs: Iterable[float]) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    if not c:
        return (0.0,)
    big = max(abs(x) for x in c)
    if big == 0.0:
        return (0.0,)
    i = 0
    while i < len(c) - 1 and abs(c[i]) < STRIP_RTOL * big:
        i += 1
    return tuple(c[i:])


@dataclass(frozen=True, init=False)
class Polynomial:
    """Polynomial with real coefficients, highest degree first.

    Leading coefficients smaller than ``1e-12 * max|c|`` are stripped on
    construction, so ``degree`` reflects numerically meaningful terms only.
    """

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        object.__setattr__(self, "coeffs", _normalize(coeffs))

    @classmethod
    def from_roots(cls, roots: Iterable[complex], gain: float = 1.0) -> Polynomial:
        c = np.real_if_close(np.poly(list(roots)), tol=1e6)
        if np.iscomplexobj(c):
            raise DegenerateInputError("roots do not form conjugate pairs")
        return cls(gain * c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    @property
    def lead(self) -> float:
        return self.coeffs[0]

    def __call__(self, s: complex) -> complex:
        acc = 0.0
        for c in self.coeffs:
            acc = acc * s + c
        return acc

    def __add__(self, other: Polynomial | float) -> Polynomial:
        other = _as_poly(other)
        return Polynomial(np.polyadd(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial(-c for c in self.coeffs)

    def __sub__(self, other: Polynomial | float) -> Polynomial:
        return self + (-_as_poly(other))

    def __rsub__(self, other: float) -> Polynomial:
        return _as_poly(other) - self

    def __mul__(self, other: Polynomial | float) -> Polynomial:
        other = _as_poly(other)
        return Polynomial(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def monic(self) -> Polynomial:
        if self.is_zero:
            raise DegenerateInputError("zero polynomial has no monic form")
        return Polynomial(c / self.lead for c in self.coeffs)

    def roots(self, tol: float = ROOT_RTOL) -> np.ndarray:
        return poly_roots(self, tol)

    def __repr__(self) -> str:
        return f"Polynomial({list(self.coeffs)!r})"


def _as_poly(x: Polynomial | float | Sequence[float]) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    if np.isscalar(x):
        return Polynomial([x])
    return Polynomial(x)


def residual_scale(p: Polynomial, r: complex) -> float:
    """Backward-error scale ``sum |c_i| |r|^i`` used to judge root residuals."""
    m = abs(r)
    acc = 0.0
    for c in p.coeffs:
        acc = acc * m + abs(c)
    return acc


def poly_roots(p: Polynomial, tol: float = ROOT_RTOL) -> np.ndarray:
    """All complex roots of ``p`` with multiplicity.

    Roots are eigenvalues of the companion matrix. Every root is checked
    against ``|p(r)| <= tol * sum|c_i||r|^i`` (floored at
    ``1e-12 * max|c|``); a failure raises
    :class:`NumericalError` carrying the offending roots.

    Returns:
        complex array of length ``p.degree``, sorted by (real, imag).
    """
    if p.is_zero:
        raise DegenerateInputError("cannot take roots of the zero polynomial")
    if p.degree < 1:
        raise DegenerateInputError(f"degree {p.degree} polynomial has no roots")
    c = np.asarray(p.coeffs, dtype=float)
    if not np.all(np.isfinite(c)):
        raise DegenerateInputError(f"non-finite coefficients {p.coeffs}")
    try:
        r = np.linalg.eigvals(_companion(c))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration did not converge for {p}") from exc
    r = np.asarray(r, dtype=complex)
    # floor: trailing terms below the strip threshold are noise, as leading ones are
    floor = STRIP_RTOL * np.abs(c).max()
    bad = [
        (z, abs(p(z)), max(residual_scale(p, z), floor))
        for z in r
        if not abs(p(z)) <= tol * max(residual_scale(p, z), floor)
    ]
    if bad:
        detail = ", ".join(f"{z:.6g} (|p|={v:.3g}, scale={s:.3g})" for z, v, s in bad)
        err = NumericalError(f"root residual above tolerance {tol:g}: {detail}")
        err.partial_roots = r
        raise err
    return _sorted(r)


def _companion(c: np.ndarray) -> np.ndarray:
    n = len(c) - 1
    comp = np.zeros((n, n))
    comp[0, :] = -c[1:] / c[0]
    comp[1:, :-1] = np.eye(n - 1)
    return comp


def _sorted(r: np.ndarray) -> np.ndarray:
    return r[np.lexsort((r.imag, r.real))]


def batch_roots(coeff_rows: np.ndarray) -> np.ndarray:
    """Roots of many same-degree polynomials at once.

    Args:
        coeff_rows: (N, n+1) array, one polynomial per row, leading
            coefficients nonzero.

    Returns:
        (N, n) complex array, each row sorted by (real, imag).
    """
    c = np.asarray(coeff_rows, dtype=float)
    if c.ndim != 2 or c.shape[1] < 2:
        raise DegenerateInputError("need an (N, n+1) coefficient array with n >= 1")
    if np.any(c[:, 0] == 0.0):
        raise DegenerateInputError("zero leading coefficient in batch")
    N, n = c.shape[0], c.shape[1] - 1
    comp = np.zeros((N, n, n))
    comp[:, 0, :] = -c[:, 1:] / c[:, :1]
    idx = np.arange(n - 1)
    comp[:, idx + 1, idx] = 1.0
    r = np.linalg.eigvals(comp).astype(complex)
    order = np.lexsort((r.imag, r.real), axis=-1)
    return np.take_along_axis(r, order, axis=-1)


@dataclass(frozen=True)
class TransferFunction:
    """Rational transfer function ``num(s) / den(s)``.

    No pole-zero cancellation happens implicitly; products keep every factor.
    """

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if not isinstance(self.num, Polynomial):
            object.__setattr__(self, "num", Polynomial(self.num))
        if not isinstance(self.den, Polynomial):
            object.__setattr__(self, "den", Polynomial(self.den))
        if self.den.is_zero:
            raise DegenerateInputError("transfer function denominator is zero")

    @classmethod
    def identity(cls) -> TransferFunction:
        return cls(Polynomial([1.0]), Polynomial([1.0]))

    def __call__(self, s: complex) -> complex:
        return evaluate(self, s)

    def __mul__(self, other: TransferFunction) -> TransferFunction:
        return cascade(self, other)

    def poles(self) -> np.ndarray:
        return poly_roots(self.den)

    def zeros(self) -> np.ndarray:
        return poly_roots(self.num) if self.num.degree >= 1 else np.array([], complex)

    def dc_gain(self) -> float:
        return float(np.real(evaluate(self, 0.0)))


def cascade(a: TransferFunction, b: TransferFunction) -> TransferFunction:
    """Series connection ``a * b``: numerators and denominators multiply."""
    return TransferFunction(a.num * b.num, a.den * b.den)


def evaluate(t: TransferFunction, s: complex) -> complex:
    """Evaluate ``t`` at complex frequency ``s``.

    Raises:
        PoleEvaluationError: ``den(s)`` is zero relative to its coefficient scale.
    """
    d = t.den(s)
    if abs(d) <= 1e-15 * residual_scale(t.den, s):
        raise PoleEvaluationError(f"s={s!r} is a pole of the transfer function")
    val = t.num(s) / d
    if isinstance(s, complex) or np.iscomplexobj(s):
        return complex(val)
    return val
