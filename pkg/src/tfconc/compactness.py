"""Equicontinuity and decay moduli for finite families, and compact-set membership tests.

A bounded family in L2(R) is relatively compact when it is equicontinuous
(``int |f(t+a) - f(t)|^2 dt -> 0`` uniformly as ``a -> 0``) and has uniform decay
(``int_{|t|>=R} |f|^2 -> 0`` uniformly as ``R -> inf``).  The Fourier transform
swaps the two conditions.  On a finite family both moduli are finite maxima, which
this module tabulates side by side.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EdgeMassWarning, InvalidArgument
from .grid import SampledFunction, fourier, tail_mass
from .moments import ConcentrationReport
from .systems import EnvelopePair

__all__ = [
    "CompactnessProfile",
    "HeuristicRow",
    "equicontinuity_modulus",
    "decay_modulus",
    "duality_check",
    "kaq_membership",
    "envelope_membership",
    "kaq_tail_bound",
    "EDGE_TOL",
    "ENVELOPE_SLACK",
]

EDGE_TOL = 1e-9
EDGE_FRACTION = 0.45  # mass beyond 45% of the half-window counts as "at the edge"
ENVELOPE_SLACK = 1e-9
CAP_SLACK = 1e-9
_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class HeuristicRow:
    """One diagnostic comparison ``omega(a)`` vs ``4 rho_hat(R) + (2 pi a R)^2 max ||f||^2``."""

    a: float
    R: float
    omega: float
    dual_rho: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.omega <= self.bound


@dataclass(frozen=True)
class CompactnessProfile:
    shift_modulus: list[tuple[float, float]]
    decay_modulus: list[tuple[float, float]]
    dual_decay_modulus: list[tuple[float, float]]
    heuristic: list[HeuristicRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "shift_modulus": [[a, w] for a, w in self.shift_modulus],
            "decay_modulus": [[R, r] for R, r in self.decay_modulus],
            "dual_decay_modulus": [[R, r] for R, r in self.dual_decay_modulus],
        }
        if self.heuristic:
            d["heuristic"] = [
                {"a": h.a, "R": h.R, "omega": h.omega, "dual_rho": h.dual_rho, "bound": h.bound}
                for h in self.heuristic
            ]
        return d


def _common_grid(family: Sequence[SampledFunction]):
    if not family:
        raise InvalidArgument("empty family")
    grid = family[0].grid
    for f in family[1:]:
        if f.grid != grid:
            raise InvalidArgument("family members live on different grids")
    return grid


def _warn_edge(family: Sequence[SampledFunction], domain: str) -> None:
    R = EDGE_FRACTION * family[0].grid.extent
    worst = max(tail_mass(f, R) for f in family)
    if worst > EDGE_TOL:
        warnings.warn(
            f"{domain} mass {worst:.3g} beyond |t| >= {R:g}; circular shifts wrap it around",
            EdgeMassWarning,
            stacklevel=3,
        )


def _shift_steps(a: float, dt: float) -> int:
    k = round(a / dt)
    if abs(a / dt - k) > _ALIGN_TOL * max(1.0, abs(k)):
        raise InvalidArgument(f"shift {a} is not a multiple of the grid spacing {dt}")
    return int(k)


def equicontinuity_modulus(
    family: Sequence[SampledFunction], shifts: Sequence[float]
) -> list[tuple[float, float]]:
    """Per shift ``a``: the largest ``||f(. + a) - f||^2`` over the family (circular shift)."""
    grid = _common_grid(family)
    steps = [_shift_steps(float(a), grid.spacing) for a in shifts]
    _warn_edge(family, "time")
    out = []
    for a, k in zip(shifts, steps):
        w = 0.0
        for f in family:
            d = np.roll(f.values, -k) - f.values
            w = max(w, grid.spacing * float(np.sum(d.real**2 + d.imag**2)))
        out.append((float(a), w))
    return out


def decay_modulus(
    family: Sequence[SampledFunction], radii: Sequence[float]
) -> list[tuple[float, float]]:
    """Per radius ``R``: the largest tail mass beyond ``R`` over the family."""
    _common_grid(family)
    return [(float(R), max(tail_mass(f, R) for f in family)) for R in radii]


def duality_check(
    family: Sequence[SampledFunction], shifts: Sequence[float], radii: Sequence[float]
) -> CompactnessProfile:
    """Shift modulus of the family next to the decay modulus of its transforms.

    The ``heuristic`` rows compare ``omega(a)`` with
    ``4 rho_hat(R) + (2 pi a R)^2 max ||f||^2``, which follows from splitting
    ``int |fhat|^2 |exp(2 pi i a xi) - 1|^2`` at ``|xi| = R``.  They are diagnostic.
    """
    omega = equicontinuity_modulus(family, shifts)
    rho = decay_modulus(family, radii)
    dual = [fourier(f) for f in family]
    _warn_edge(dual, "frequency")
    rho_hat = decay_modulus(dual, radii)
    sup_sq = max(f.norm for f in family) ** 2
    rows = [
        HeuristicRow(a, R, w, r, 4 * r + (2 * math.pi * a * R) ** 2 * sup_sq)
        for a, w in omega
        for R, r in rho_hat
    ]
    return CompactnessProfile(omega, rho, rho_hat, rows)


def kaq_membership(report: ConcentrationReport, A: float) -> bool:
    """True iff both means and both dispersions are at most ``A`` in magnitude.

    A 1e-9 slack absorbs quadrature noise for values lying exactly on the cap.
    """
    vals = (report.time_mean, report.time_dispersion, report.freq_mean, report.freq_dispersion)
    return all(abs(v) <= A + CAP_SLACK for v in vals)


def envelope_membership(f: SampledFunction, pair: EnvelopePair) -> bool:
    """Pointwise domination ``|f| <= phi`` and ``|fhat| <= psi`` up to a 1e-9 slack."""
    if f.grid != pair.grid:
        raise InvalidArgument(f"grid mismatch: {f.grid} vs {pair.grid}")
    if np.any(np.abs(f.values) > pair.time_envelope + ENVELOPE_SLACK):
        return False
    return not np.any(np.abs(fourier(f).values) > pair.freq_envelope + ENVELOPE_SLACK)


def kaq_tail_bound(A: float, p: float, R: float) -> float:
    """``2^p A^2 / R^p``: tail bound beyond ``R`` for members with p-mean and p-dispersion at most A."""
    if not A > 0:
        raise InvalidArgument(f"A must be positive, got {A}")
    if not p > 1:
        raise InvalidArgument(f"p must exceed 1, got {p}")
    if not R > 2 * A:
        raise InvalidArgument(f"need R > 2A, got R = {R}, A = {A}")
    return 2.0**p * A * A / R**p
