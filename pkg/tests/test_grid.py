import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from tfconc.errors import InvalidArgument, NumericDomainError
from tfconc.grid import (
    SampledFunction,
    fourier,
    indicator,
    inner_product,
    inverse_fourier,
    make_grid,
    modulate,
    read_csv,
    sample,
    tail_mass,
    write_csv,
)

from conftest import gauss


def test_make_grid_fields():
    grid = make_grid(32, 4096)
    assert grid.spacing == 1 / 128
    assert grid.dual_spacing == 1 / 32
    assert grid.dual_extent == 128
    assert grid.spacing * grid.n_points == grid.extent
    assert grid.points[2048] == 0.0


def test_smallest_grid():
    assert list(make_grid(1, 2).points) == [-0.5, 0.0]


@pytest.mark.parametrize("args", [(16, 1000), (16, 1), (0, 64), (-1, 64), (16, 64.5)])
def test_make_grid_rejects(args):
    with pytest.raises(InvalidArgument):
        make_grid(*args)


def test_sample_gaussian_norm(g):
    assert abs(g.norm - 1) <= 1e-9
    oracle, _ = integrate.quad(lambda t: math.sqrt(2) * math.exp(-2 * math.pi * t * t), -np.inf, np.inf)
    assert abs(g.norm**2 - oracle) <= 1e-9


def test_sample_indicator_norm(grid):
    chi = sample(grid, indicator(-0.5, 0.5))
    assert abs(chi.norm - 1) <= 1e-3
    # jump samples sit at the midpoint of |f|^2
    assert chi.values[grid.n_points // 2 + 64].real == pytest.approx(1 / math.sqrt(2))


def test_sample_zero_and_nonfinite(grid):
    assert sample(grid, lambda t: 0 * t).norm == 0
    with pytest.raises(NumericDomainError), np.errstate(divide="ignore"):
        sample(grid, lambda t: 1 / t)


def test_sample_scalar_callable(grid):
    f = sample(grid, lambda x: math.exp(-math.pi * x * x))
    assert f.values[grid.n_points // 2] == 1


@pytest.mark.parametrize("xi", [-2.0, -0.5, 0.0, 0.75, 3.0])
def test_fourier_matches_direct_integral(g, xi):
    gh = fourier(g)
    k = int(round(xi / gh.grid.spacing)) + gh.grid.n_points // 2
    assert gh.t[k] == xi
    re, _ = integrate.quad(lambda t: 2**0.25 * math.exp(-math.pi * t * t) * math.cos(2 * math.pi * t * xi), -10, 10, limit=200)
    im, _ = integrate.quad(lambda t: -(2**0.25) * math.exp(-math.pi * t * t) * math.sin(2 * math.pi * t * xi), -10, 10, limit=200)
    assert abs(gh.values[k] - (re + 1j * im)) <= 1e-8


def test_fourier_gaussian_fixed(g):
    gh = fourier(g)
    assert gh.grid.extent == 128
    assert np.max(np.abs(gh.values - 2**0.25 * np.exp(-np.pi * gh.t**2))) <= 1e-8


def test_fourier_zero(grid):
    z = fourier(SampledFunction(grid, np.zeros(grid.n_points)))
    assert np.all(z.values == 0)
    assert np.all(inverse_fourier(z).values == 0)


def test_fourier_order_four(grid, rng):
    t = grid.points
    v = sum(
        (rng.normal() + 1j * rng.normal()) * np.exp(-np.pi * (t - rng.uniform(-3, 3)) ** 2)
        * np.exp(2j * np.pi * rng.uniform(-5, 5) * t)
        for _ in range(5)
    )
    f = SampledFunction(grid, v)
    f4 = fourier(fourier(fourier(fourier(f))))
    assert f4.grid == grid
    assert np.max(np.abs(f4.values - f.values)) <= 1e-9


def test_fourier_small_grid():
    # n_points = 2 has an odd half-length, exercising the global sign
    grid = make_grid(1, 2)
    f = SampledFunction(grid, [1.0, 2.0])
    direct = [grid.spacing * sum(f.values * np.exp(-2j * np.pi * grid.points * xi)) for xi in grid.dual().points]
    assert np.allclose(fourier(f).values, direct)


def test_inverse_roundtrip_gaussian(g):
    assert np.max(np.abs(inverse_fourier(fourier(g)).values - g.values)) <= 1e-10


def test_inverse_roundtrip_random(grid, rng):
    f = SampledFunction(grid, rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points))
    back = inverse_fourier(fourier(f))
    assert (back - f).norm <= 1e-10 * f.norm


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_plancherel(seed):
    grid = make_grid(32, 4096)
    r = np.random.default_rng(seed)
    f = SampledFunction(grid, r.normal(size=grid.n_points) + 1j * r.normal(size=grid.n_points))
    assert abs(fourier(f).norm - f.norm) <= 1e-10 * f.norm


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    a=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
    b=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
)
def test_linearity(seed, a, b):
    grid = make_grid(32, 1024)
    r = np.random.default_rng(seed)
    f = SampledFunction(grid, r.normal(size=grid.n_points))
    h = SampledFunction(grid, r.normal(size=grid.n_points) * 1j)
    lhs = fourier(a * f + b * h).values
    rhs = a * fourier(f).values + b * fourier(h).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, abs(a) + abs(b))


@pytest.mark.parametrize("s", [-4.0, -1.3, 0.0, 0.3, 2.7, 4.0])
def test_translation_modulation_duality(grid, g, s):
    shifted = fourier(sample(grid, gauss(shift=s)))
    gh = fourier(g)
    expected = np.exp(-2j * np.pi * s * gh.t) * gh.values
    assert np.max(np.abs(shifted.values - expected)) <= 1e-8


def test_inner_product_gaussian_overlap(grid, g):
    g1 = sample(grid, gauss(shift=1))
    assert abs(inner_product(g, g1) - math.exp(-math.pi / 2)) <= 1e-8
    assert abs(math.exp(-math.pi / 2) - 0.207880) < 1e-6


def test_inner_product_self(grid, rng):
    f = SampledFunction(grid, rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points))
    ip = inner_product(f, f)
    assert ip.imag == 0 and ip.real >= 0
    assert ip.real == pytest.approx(f.norm**2, rel=1e-12)


def test_inner_product_ambiguity(grid, g):
    g11 = sample(grid, gauss(shift=1, mod=1))
    re, _ = integrate.quad(lambda t: math.sqrt(2) * math.exp(-math.pi * (t * t + (t - 1) ** 2)) * math.cos(2 * math.pi * t), -10, 10)
    im, _ = integrate.quad(lambda t: -math.sqrt(2) * math.exp(-math.pi * (t * t + (t - 1) ** 2)) * math.sin(2 * math.pi * t), -10, 10)
    assert abs(inner_product(g, g11) - (re + 1j * im)) <= 1e-8
    assert abs(abs(inner_product(g, g11)) - math.exp(-math.pi)) <= 1e-7


def test_inner_product_grid_mismatch(g):
    other = sample(make_grid(16, 4096), gauss())
    with pytest.raises(InvalidArgument):
        inner_product(g, other)


def test_tail_mass_gaussian(g):
    oracle = special.erfc(2 * math.sqrt(2 * math.pi))
    assert oracle == pytest.approx(1.4e-12, rel=0.1)
    assert tail_mass(g, 2) <= 1e-11
    # the sample at |t| = R carries full weight, a relative bias of order dt
    assert tail_mass(g, 2) == pytest.approx(oracle, rel=0.15)


def test_tail_mass_indicator(grid):
    assert tail_mass(sample(grid, indicator(-0.5, 0.5)), 1) == 0


def test_tail_mass_monotone(grid, rng):
    t = grid.points
    f = SampledFunction(grid, np.exp(-np.abs(t)) * (1 + rng.uniform(size=t.size)))
    values = [tail_mass(f, r) for r in np.linspace(0.01, 15.9, 80)]
    assert all(a >= b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("R", [16, 20, 0, -1])
def test_tail_mass_rejects(g, R):
    with pytest.raises(InvalidArgument):
        tail_mass(g, R)


def test_modulate_shifts_spectrum(grid, g):
    m = fourier(modulate(g, 3))
    assert np.max(np.abs(m.values - 2**0.25 * np.exp(-np.pi * (m.t - 3) ** 2))) <= 1e-8


def test_csv_roundtrip(grid, g):
    f = modulate(g, 0.7)
    buf = io.StringIO()
    write_csv(f, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "t,re,im"
    back = read_csv(io.StringIO(text))
    assert back.grid == grid
    assert np.array_equal(back.values, f.values)


def test_csv_rejects_bad_header():
    with pytest.raises(InvalidArgument):
        read_csv(io.StringIO("x,y\n1,2\n"))
