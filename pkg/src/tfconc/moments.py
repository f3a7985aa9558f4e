"""Generalized means and dispersions of unit-norm sampled functions.

For p > 1 the objective ``phi(a) = integral |t - a|^p |h(t)|^2 dt`` is strictly
convex, so its minimizer (the p-mean) is unique and golden-section search finds it
without derivatives.  The p-dispersion is the square root of the minimum value,
for every p.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import InvalidArgument, UnsupportedExponent
from .grid import SampledFunction, fourier

__all__ = [
    "ConcentrationReport",
    "ProbeEntry",
    "golden_section_minimize",
    "moment_objective",
    "p_mean",
    "p_dispersion",
    "concentration_report",
    "convergence_probe",
    "STEP_II_ALPHA",
]

UNIT_NORM_TOL = 1e-6
SUPPORT_FLOOR = 1e-14
MEAN_TOL = 1e-10
# Largest |alpha| for which the perturbed mean provably stays within 2*(4*Delta^2)^(1/p).
STEP_II_ALPHA = math.sqrt(38) / 2 - 3

_INVPHI = (math.sqrt(5) - 1) / 2
_CHEB_NODES = 32


def golden_section_minimize(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = MEAN_TOL,
    max_iter: int = 500,
    diff: Callable[[float, float], float] | None = None,
) -> tuple[float, float]:
    """Minimize a unimodal ``func`` on [lo, hi] to absolute tolerance ``tol`` in x.

    Returns ``(x, func(x))``.  The endpoints are compared at the end so that a
    minimum sitting on the boundary of the bracket is returned exactly.

    ``diff(x, y)``, when given, must return ``func(x) - func(y)``; the search then
    branches on its sign instead of on two separately rounded values, which keeps
    the comparisons meaningful once the bracket is far below sqrt(eps).
    """
    if diff is None:

        def diff(x, y):
            return func(x) - func(y)

    if hi < lo:
        lo, hi = hi, lo
    if hi - lo <= tol:
        x = 0.5 * (lo + hi)
        return x, func(x)
    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if diff(x1, x2) <= 0:
            b, x2 = x2, x1
            x1 = b - _INVPHI * (b - a)
        else:
            a, x1 = x1, x2
            x2 = a + _INVPHI * (b - a)
    x = 0.5 * (a + b)
    for edge in (lo, hi):
        if diff(edge, x) < 0:
            x = edge
    return x, func(x)


def _check_unit(h: SampledFunction) -> None:
    if abs(h.norm - 1.0) > UNIT_NORM_TOL:
        raise InvalidArgument(
            f"expected a unit-norm function, got norm {h.norm:.12g} "
            f"(tolerance {UNIT_NORM_TOL})"
        )


@lru_cache(maxsize=32)
def _zeta_tail(s: float) -> np.polynomial.Chebyshev:
    """Chebyshev fit of x -> zeta(s, 1 + x) on [0, 1] (Hurwitz zeta, analytic there)."""
    x = 0.5 + 0.5 * np.cos(np.pi * (np.arange(_CHEB_NODES) + 0.5) / _CHEB_NODES)
    y = [float(mpmath.zeta(s, 1 + xi)) for xi in x]
    return np.polynomial.Chebyshev.fit(x, y, _CHEB_NODES - 1, domain=[0, 1])


def _hurwitz(s: float, beta: float) -> float:
    # zeta(s, b) = b**(-s) + zeta(s, 1 + b) for 0 < b <= 1
    return beta ** (-s) + float(_zeta_tail(s)(beta))


class _Objective:
    """Riemann sum of |t - a|^p |h|^2, with the kink at t = a corrected.

    For p not an even integer the plain sum oscillates in a with period dt (the
    kink of |t - a|^p moves between nodes).  The leading two terms of the
    generalized Euler-Maclaurin expansion for an algebraic kink are subtracted;
    their coefficients are Hurwitz zeta values at the node offsets.
    """

    def __init__(self, h: SampledFunction, p: float):
        self.p = float(p)
        self.t = h.t
        self.dt = h.grid.spacing
        self.w = h.values.real**2 + h.values.imag**2
        self.wq = self.dt * self.w
        self.smooth = self.p.is_integer() and int(self.p) % 2 == 0

    def __call__(self, a: float) -> float:
        return float(np.dot(np.abs(self.t - a) ** self.p, self.wq)) - self._correction(a)

    def diff(self, a: float, b: float) -> float:
        """phi(a) - phi(b) without cancellation between the two sums."""
        if a == b:
            return 0.0
        t, p = self.t, self.p
        u = np.abs(t - a)
        v = np.abs(t - b)
        # u - v is exact away from the interval between a and b
        du = np.where(t >= max(a, b), b - a, np.where(t <= min(a, b), a - b, u - v))
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = v**p * np.expm1(p * np.log1p(du / v))
        terms = np.where(v == 0, u**p, terms)
        return float(np.dot(terms, self.wq)) - (self._correction(a) - self._correction(b))

    def _correction(self, a: float) -> float:
        if self.smooth:
            return 0.0
        t, w, dt, p = self.t, self.w, self.dt, self.p
        n = t.shape[0]
        x = (a - float(t[0])) / dt
        j = math.floor(x)
        if j < 0 or j >= n:
            return 0.0
        u = x - j
        wm, w0, w1, w2 = (float(w[(j + k) % n]) for k in (-1, 0, 1, 2))
        # cubic Lagrange interpolation of |h|^2 and its derivative at a
        wa = (
            -u * (u - 1) * (u - 2) / 6 * wm
            + (u + 1) * (u - 1) * (u - 2) / 2 * w0
            - (u + 1) * u * (u - 2) / 2 * w1
            + (u + 1) * u * (u - 1) / 6 * w2
        )
        dwa = (
            -(3 * u * u - 6 * u + 2) / 6 * wm
            + (3 * u * u - 4 * u - 1) / 2 * w0
            - (3 * u * u - 2 * u - 2) / 2 * w1
            + (3 * u * u - 1) / 6 * w2
        ) / dt
        b_right = 1.0 - u
        b_left = u if u > 0 else 1.0
        z0 = _hurwitz(-p, b_right) + _hurwitz(-p, b_left)
        z1 = _hurwitz(-p - 1, b_right) - _hurwitz(-p - 1, b_left)
        return dt ** (p + 1) * (z0 * wa + dt * z1 * dwa)


def moment_objective(h: SampledFunction, p: float, a: float) -> float:
    """Quadrature value of integral |t - a|^p |h(t)|^2 dt for unit-norm ``h``."""
    _check_unit(h)
    if not p > 0:
        raise InvalidArgument(f"p must be positive, got {p}")
    if not math.isfinite(a):
        raise InvalidArgument(f"a must be finite, got {a}")
    return _Objective(h, p)(float(a))


def _minimize(h: SampledFunction, p: float) -> tuple[float, float]:
    _check_unit(h)
    if not p > 1:
        raise UnsupportedExponent(
            f"p = {p}: the minimizer is unique only for p > 1"
        )
    amp = np.abs(h.values)
    support = np.flatnonzero(amp > SUPPORT_FLOOR)
    lo, hi = float(h.t[support[0]]), float(h.t[support[-1]])
    phi = _Objective(h, p)
    return golden_section_minimize(phi, lo, hi, tol=MEAN_TOL, diff=phi.diff)


def p_mean(h: SampledFunction, p: float) -> float:
    """The unique minimizer of ``moment_objective(h, p, .)``."""
    return _minimize(h, p)[0]


def p_dispersion(h: SampledFunction, p: float) -> float:
    """Square root of the minimal value of ``moment_objective(h, p, .)``."""
    return math.sqrt(_minimize(h, p)[1])


@dataclass(frozen=True)
class ConcentrationReport:
    p: float
    q: float
    time_mean: float
    time_dispersion: float
    freq_mean: float
    freq_dispersion: float
    heisenberg_product: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ConcentrationReport:
        return cls(**{k: float(d[k]) for k in cls.__dataclass_fields__})


def concentration_report(f: SampledFunction, p: float = 2, q: float = 2) -> ConcentrationReport:
    """Means and dispersions of ``f`` (with exponent p) and of its transform (with q)."""
    mu_t, v_t = _minimize(f, p)
    mu_f, v_f = _minimize(fourier(f), q)
    dt, df = math.sqrt(v_t), math.sqrt(v_f)
    return ConcentrationReport(
        p=float(p),
        q=float(q),
        time_mean=mu_t,
        time_dispersion=dt,
        freq_mean=mu_f,
        freq_dispersion=df,
        heisenberg_product=dt * df,
    )


@dataclass(frozen=True)
class ProbeEntry:
    """One row of :func:`convergence_probe`.

    ``mean_bound``/``mean_bound_ok`` are only set when |alpha| lies in the region
    where the mean of the perturbed function is guaranteed to stay within
    ``2 * (4 * Delta_p(f)^2)^(1/p)`` of the mean of ``f``.
    """

    alpha: float
    report: ConcentrationReport
    mean_gap: float
    dispersion_gap: float
    mean_bound: float | None
    mean_bound_ok: bool | None


def convergence_probe(
    f: SampledFunction,
    g: SampledFunction,
    alphas: Sequence[float],
    p: float = 2,
    q: float = 2,
) -> list[ProbeEntry]:
    """Reports of ``h_alpha = (f + alpha g) / ||f + alpha g||`` for each alpha.

    As alpha -> 0 the mean and dispersion of ``h_alpha`` converge to those of ``f``.
    """
    for a in alphas:
        if not abs(a) < 1:
            raise InvalidArgument(f"alpha must satisfy |alpha| < 1, got {a}")
    _check_unit(f)
    _check_unit(g)
    base = concentration_report(f, p, q)
    bound = 2.0 * (4.0 * base.time_dispersion**2) ** (1.0 / p)
    out = []
    for a in alphas:
        a = float(a)
        h = f if a == 0 else (f + a * g).normalized()
        rep = base if a == 0 else concentration_report(h, p, q)
        gap = abs(rep.time_mean - base.time_mean)
        certified = abs(a) < STEP_II_ALPHA
        out.append(
            ProbeEntry(
                alpha=a,
                report=rep,
                mean_gap=gap,
                dispersion_gap=abs(rep.time_dispersion - base.time_dispersion),
                mean_bound=bound if certified else None,
                mean_bound_ok=(gap <= bound) if certified else None,
            )
        )
    return out
