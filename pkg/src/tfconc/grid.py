"""Uniform centered grids, sampled L2 functions and the unitary Fourier transform.

A :class:`Grid` with ``n_points`` samples covers the window ``[-T/2, T/2)`` with
``t_k = (k - n_points/2) * dt``.  The Fourier transform uses the convention

    fhat(xi) = integral f(t) exp(-2 pi i t xi) dt

and maps a function on a grid of extent ``T`` to one on the dual grid of extent
``1/dt`` and spacing ``1/T``.  Both grids are treated as periodic, so quadrature
is a plain Riemann sum and the discrete transform is exactly unitary.
"""

from __future__ import annotations

import contextlib
import csv
import io
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

from .errors import InvalidArgument, NumericDomainError

__all__ = [
    "Grid",
    "SampledFunction",
    "make_grid",
    "sample",
    "fourier",
    "inverse_fourier",
    "inner_product",
    "tail_mass",
    "step_function",
    "indicator",
    "modulate",
    "write_csv",
    "read_csv",
]

_GRID_RTOL = 1e-12

# Test hook: a nonzero value bends the centering phase of the forward transform
# only, which breaks unitarity of the fourier/inverse_fourier pair.
_phase_corruption = 0.0


@dataclass(frozen=True, eq=False)
class Grid:
    n_points: int
    extent: float

    @property
    def spacing(self) -> float:
        return self.extent / self.n_points

    @property
    def dual_spacing(self) -> float:
        return 1.0 / self.extent

    @property
    def dual_extent(self) -> float:
        return self.n_points / self.extent

    @cached_property
    def points(self) -> np.ndarray:
        t = (np.arange(self.n_points) - self.n_points // 2) * self.spacing
        t.setflags(write=False)
        return t

    def dual(self) -> Grid:
        return Grid(self.n_points, self.dual_extent)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self.n_points == other.n_points and math.isclose(
            self.extent, other.extent, rel_tol=_GRID_RTOL
        )

    def __hash__(self):
        return hash((self.n_points, round(self.extent, 9)))

    def __repr__(self):
        return f"Grid(n_points={self.n_points}, extent={self.extent!r})"


def make_grid(extent: float, n_points: int) -> Grid:
    """Centered grid of ``n_points`` samples spanning a window of length ``extent``."""
    if isinstance(n_points, bool) or int(n_points) != n_points:
        raise InvalidArgument(f"n_points must be an integer, got {n_points!r}")
    n_points = int(n_points)
    if n_points < 2 or n_points & (n_points - 1):
        raise InvalidArgument(f"n_points must be a power of two >= 2, got {n_points}")
    extent = float(extent)
    if not math.isfinite(extent) or extent <= 0:
        raise InvalidArgument(f"extent must be positive and finite, got {extent}")
    return Grid(n_points, extent)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples of an L2 function on ``grid``; ``norm`` is the quadrature L2 norm."""

    grid: Grid
    values: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True).reshape(-1)
        if v.shape[0] != self.grid.n_points:
            raise InvalidArgument(
                f"expected {self.grid.n_points} samples, got {v.shape[0]}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        sq = float(np.sum(v.real**2 + v.imag**2))
        object.__setattr__(self, "norm", math.sqrt(self.grid.spacing * sq))

    @property
    def t(self) -> np.ndarray:
        return self.grid.points

    def is_unit_norm(self, tol: float = 1e-9) -> bool:
        return abs(self.norm - 1.0) <= tol

    def normalized(self) -> SampledFunction:
        if self.norm == 0:
            raise InvalidArgument("cannot normalize the zero function")
        return SampledFunction(self.grid, self.values / self.norm)

    def conj(self) -> SampledFunction:
        return SampledFunction(self.grid, np.conj(self.values))

    def _check(self, other):
        if not isinstance(other, SampledFunction):
            return NotImplemented
        if other.grid != self.grid:
            raise InvalidArgument(f"grid mismatch: {self.grid} vs {other.grid}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        if isinstance(scalar, SampledFunction):
            return NotImplemented
        return SampledFunction(self.grid, self.values * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SampledFunction(self.grid, self.values / complex(scalar))

    def __neg__(self):
        return SampledFunction(self.grid, -self.values)


def sample(grid: Grid, f: Callable) -> SampledFunction:
    """Evaluate ``f`` at every grid point.

    ``f`` may be vectorized over numpy arrays; otherwise it is called once per point.
    """
    t = grid.points
    try:
        values = np.asarray(f(t), dtype=np.complex128)
    except (TypeError, ValueError):
        values = None
    if values is None or values.shape != t.shape:
        values = np.array([complex(f(float(x))) for x in t], dtype=np.complex128)
    bad = ~np.isfinite(values)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise NumericDomainError(f"non-finite value {values[k]} at t = {t[k]}")
    return SampledFunction(grid, values)


def _centering(n: int, corruption: float = 0.0) -> np.ndarray:
    k = np.arange(n)
    if corruption:
        return np.exp(1j * np.pi * k * (1.0 + corruption))
    return np.where(k % 2 == 0, 1.0, -1.0)


def fourier(f: SampledFunction) -> SampledFunction:
    """Unitary transform onto the dual grid approximating the continuous Fourier integral."""
    grid = f.grid
    n = grid.n_points
    sign = _centering(n)
    pre = _centering(n, _phase_corruption)
    # exp(-i pi n / 2) from the product of the two centered indices
    global_sign = -1.0 if (n // 2) % 2 else 1.0
    out = grid.spacing * global_sign * sign * np.fft.fft(pre * f.values)
    return SampledFunction(grid.dual(), out)


def inverse_fourier(f: SampledFunction) -> SampledFunction:
    """Adjoint (and inverse) of :func:`fourier`; ``f`` lives on a dual grid."""
    grid = f.grid
    n = grid.n_points
    sign = _centering(n)
    global_sign = -1.0 if (n // 2) % 2 else 1.0
    out = grid.spacing * n * global_sign * sign * np.fft.ifft(sign * f.values)
    return SampledFunction(grid.dual(), out)


@contextlib.contextmanager
def corrupted_phase(amount: float = 1e-3):
    """Temporarily corrupt the forward centering phase (negative-control hook)."""
    global _phase_corruption
    old = _phase_corruption
    _phase_corruption = float(amount)
    try:
        yield
    finally:
        _phase_corruption = old


def inner_product(f: SampledFunction, g: SampledFunction) -> complex:
    """Quadrature value of <f, g> = integral f conj(g)."""
    if f.grid != g.grid:
        raise InvalidArgument(f"grid mismatch: {f.grid} vs {g.grid}")
    return complex(f.grid.spacing * np.vdot(g.values, f.values))


def tail_mass(f: SampledFunction, R: float) -> float:
    """Quadrature mass of |f|^2 on |t| >= R."""
    if not R > 0:
        raise InvalidArgument(f"R must be positive, got {R}")
    if R >= f.grid.extent / 2:
        raise InvalidArgument(
            f"R = {R} is not inside the window of half-width {f.grid.extent / 2}"
        )
    mask = np.abs(f.t) >= R
    v = f.values[mask]
    return float(f.grid.spacing * np.sum(v.real**2 + v.imag**2))


def step_function(pieces: Iterable[tuple[float, float, float]]) -> Callable:
    """Piecewise-constant function from ``(a, b, height)`` intervals with real heights.

    At a jump the sample is chosen so that |f|^2 equals the average of its one-sided
    limits, which makes the Riemann sum of |f|^2 trapezoidal across the jump.
    """
    pieces = [(float(a), float(b), float(h)) for a, b, h in pieces]
    for a, b, _ in pieces:
        if not a < b:
            raise InvalidArgument(f"empty interval [{a}, {b}]")

    def f(t):
        t = np.asarray(t, dtype=float)
        left = np.zeros_like(t)
        right = np.zeros_like(t)
        for a, b, h in pieces:
            left += np.where((a < t) & (t <= b), h, 0.0)
            right += np.where((a <= t) & (t < b), h, 0.0)
        rms = np.sqrt(0.5 * (left**2 + right**2))
        sign = np.where(left + right < 0, -1.0, 1.0)
        return np.where(left == right, left, sign * rms)

    return f


def indicator(a: float, b: float, height: float = 1.0) -> Callable:
    """``height`` times the characteristic function of [a, b]."""
    return step_function([(a, b, height)])


def modulate(f: SampledFunction, freq: float) -> SampledFunction:
    """Multiply by exp(2 pi i freq t); shifts the frequency content by ``freq``."""
    return SampledFunction(f.grid, np.exp(2j * np.pi * freq * f.t) * f.values)


def write_csv(f: SampledFunction, path) -> None:
    """Write ``t,re,im`` rows with 17 significant digits."""
    own = isinstance(path, (str, os.PathLike))
    fh = open(path, "w", newline="") if own else path
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "re", "im"])
        for t, v in zip(f.t, f.values):
            w.writerow([f"{t:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])
    finally:
        if own:
            fh.close()


def read_csv(path) -> SampledFunction:
    """Inverse of :func:`write_csv`; the grid is recovered from the ``t`` column."""
    if isinstance(path, (str, os.PathLike)):
        with open(path, newline="") as fh:
            text = fh.read()
    else:
        text = path.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["t", "re", "im"]:
        raise InvalidArgument("expected header 't,re,im'")
    data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise InvalidArgument("need at least two samples")
    n = data.shape[0]
    dt = (data[-1, 0] - data[0, 0]) / (n - 1)
    grid = make_grid(n * dt, n)
    if not np.allclose(data[:, 0], grid.points, rtol=0, atol=1e-9 * grid.extent):
        raise InvalidArgument("t column is not a centered uniform grid")
    return SampledFunction(grid, data[:, 1] + 1j * data[:, 2])
