import json
import math
import warnings

import numpy as np
import pytest
from scipy import special

from tfconc.compactness import (
    decay_modulus,
    duality_check,
    envelope_membership,
    equicontinuity_modulus,
    kaq_membership,
    kaq_tail_bound,
)
from tfconc.errors import EdgeMassWarning, InvalidArgument
from tfconc.grid import SampledFunction, fourier, indicator, inverse_fourier, make_grid, sample, tail_mass
from tfconc.moments import concentration_report
from tfconc.systems import build_perturbed_exact, envelopes, gabor_atom

from conftest import gauss, random_smooth


@pytest.fixture(scope="module")
def fine():
    # dt = 1/160 so that a = 0.1 is a whole number of samples
    return make_grid(25.6, 4096)


def shift_energy(s):
    return 2 * (1 - math.exp(-math.pi * s * s / 2))


# --- equicontinuity ----------------------------------------------------------------


def test_shift_indicator(fine):
    chi = sample(fine, indicator(0, 1))
    [(a, w)] = equicontinuity_modulus([chi], [0.1])
    assert a == 0.1
    assert abs(w - 0.2) <= 2 * fine.spacing


def test_shift_zero(grid, rng):
    fam = [random_smooth(grid, rng) for _ in range(3)]
    assert equicontinuity_modulus(fam, [0.0]) == [(0.0, 0.0)]


def test_shift_gaussian(g):
    [(_, w)] = equicontinuity_modulus([g], [0.25])
    assert shift_energy(0.25) == pytest.approx(0.18702, abs=1e-5)
    assert abs(w - shift_energy(0.25)) <= 1e-4


def test_shift_not_aligned(g):
    with pytest.raises(InvalidArgument):
        equicontinuity_modulus([g], [0.1])


def test_shift_negative_matches_positive(g):
    (_, wp), (_, wn) = equicontinuity_modulus([g], [0.5, -0.5])
    assert wp == pytest.approx(wn, rel=1e-12)


def test_shift_takes_family_max(grid, g):
    wide = sample(grid, lambda t: np.exp(-np.pi * (t / 3) ** 2)).normalized()
    [(_, w)] = equicontinuity_modulus([wide, g], [0.25])
    assert w == pytest.approx(shift_energy(0.25), abs=1e-4)


def test_shift_edge_warning(grid):
    flat = sample(grid, lambda t: np.ones_like(t)).normalized()
    with pytest.warns(EdgeMassWarning):
        equicontinuity_modulus([flat], [0.25])


# --- decay ---------------------------------------------------------------------------


def test_decay_gaussian(g):
    [(R, rho)] = decay_modulus([g], [2])
    assert R == 2
    assert special.erfc(2 * math.sqrt(2 * math.pi)) < 1e-11
    assert rho <= 1e-11


def test_decay_translates(grid):
    fam = [sample(grid, gauss(shift=s)) for s in (-1, 0, 1)]
    [(_, rho)] = decay_modulus(fam, [4])
    assert rho <= 1e-12


def test_decay_indicator(grid):
    assert decay_modulus([sample(grid, indicator(-0.5, 0.5))], [1]) == [(1.0, 0.0)]


def test_decay_monotone(grid, rng):
    fam = [random_smooth(grid, rng) for _ in range(4)]
    rho = [r for _, r in decay_modulus(fam, np.linspace(0.1, 15, 60))]
    assert all(a >= b for a, b in zip(rho, rho[1:]))


def test_decay_bad_radius(g):
    with pytest.raises(InvalidArgument):
        decay_modulus([g], [16])


# --- duality ----------------------------------------------------------------------------


def test_duality_bandlimited(grid):
    dual = grid.dual()
    bump = sample(dual, lambda x: np.where(np.abs(x) <= 1, np.cos(np.pi * x / 2) ** 2, 0.0)).normalized()
    f = inverse_fourier(bump)
    assert f.grid == grid
    assert tail_mass(fourier(f), 1.0 + dual.spacing) <= 1e-24
    shifts = [k * grid.spacing for k in range(1, 9)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EdgeMassWarning)
        prof = duality_check([f], shifts, [1.5])
    for a, w in prof.shift_modulus:
        assert w <= (2 * math.pi * a) ** 2 + 1e-6


def test_duality_gaussian(g):
    prof = duality_check([g], [0.25, 1 / 32, 1 / 128], [2, 4])
    ws = [w for _, w in prof.shift_modulus]
    assert ws[0] > ws[1] > ws[2] > 0
    assert all(r <= 1e-11 for _, r in prof.dual_decay_modulus)
    assert all(h.holds for h in prof.heuristic)


def test_duality_modulated_family_degrades_together(grid, g):
    a, R = 1 / 32, 4.0
    omegas, rhos = [], []
    for M in (0, 5, 10, 20):
        fam = [sample(grid, gauss(mod=m)) for m in range(M + 1)]
        prof = duality_check(fam, [a], [R])
        omegas.append(prof.shift_modulus[0][1])
        rhos.append(prof.dual_decay_modulus[0][1])
    assert omegas == sorted(omegas) and omegas[-1] > 10 * omegas[0]
    assert rhos[0] <= 1e-11 and rhos[-1] == pytest.approx(1, abs=1e-9)
    # the family member e^{2 pi i M t} g has omega = 2 - 2 cos(2 pi M a) exp(-pi a^2 / 2)
    assert omegas[-1] == pytest.approx(
        max(2 - 2 * math.cos(2 * math.pi * m * a) * math.exp(-math.pi * a * a / 2) for m in range(21)), abs=1e-8
    )


def test_duality_plancherel_consistency(grid, rng):
    fam = [random_smooth(grid, rng) for _ in range(3)]
    radii = [0.5, 2, 8]
    prof = duality_check(fam, [1 / 64], radii)
    assert prof.dual_decay_modulus == decay_modulus([fourier(f) for f in fam], radii)
    assert prof.decay_modulus == decay_modulus(fam, radii)


def test_profile_json(g):
    prof = duality_check([g], [0.0, 0.25], [2])
    d = json.loads(json.dumps(prof.to_dict()))
    assert list(d)[:3] == ["shift_modulus", "decay_modulus", "dual_decay_modulus"]
    assert d["shift_modulus"][0] == [0.0, 0.0]


# --- membership ------------------------------------------------------------------------


def test_kaq_gaussian(g):
    assert kaq_membership(concentration_report(g), 1)


def test_kaq_atom(grid):
    assert not kaq_membership(concentration_report(gabor_atom(grid, (3, 2))), 1)


def test_kaq_zero_bound(g):
    assert not kaq_membership(concentration_report(g), 0)


@pytest.mark.parametrize("A,p,R,expected", [(1, 2, 4, 0.25), (1, 2, 40, 0.0025), (0.5, 3, 2, 0.25), (1, 3, 4, 0.125)])
def test_kaq_tail_bound(A, p, R, expected):
    assert kaq_tail_bound(A, p, R) == pytest.approx(expected)


def test_kaq_tail_bound_rejects():
    with pytest.raises(InvalidArgument):
        kaq_tail_bound(1, 2, 1.5)
    with pytest.raises(InvalidArgument):
        kaq_tail_bound(1, 2, 2)
    with pytest.raises(InvalidArgument):
        kaq_tail_bound(1, 1, 4)


def test_krt_consistency(grid):
    rng = np.random.default_rng(5)
    A = 3.0
    checked = 0
    for _ in range(30):
        f = random_smooth(grid, rng, n_terms=int(rng.integers(1, 4)))
        for p in (2, 3):
            r = concentration_report(f, p, 2)
            if not kaq_membership(r, A):
                continue
            checked += 1
            for R in (6.5, 8, 12, 15):
                assert tail_mass(f, R) <= kaq_tail_bound(A, p, R) + 1e-9
    assert checked >= 10


@pytest.fixture(scope="module")
def perturbed():
    grid = make_grid(32, 4096)
    _, elements = build_perturbed_exact(grid, 6, 0.1)
    return elements, envelopes(elements)


def test_envelope_own_members(perturbed):
    elements, pair = perturbed
    assert all(envelope_membership(f, pair) for f in elements)


def test_envelope_double(grid, g):
    assert not envelope_membership(2 * g, envelopes([g]))


def test_envelope_translate_escapes(grid, perturbed):
    elements, pair = perturbed
    moved = gabor_atom(grid, (0, 5))
    assert np.any(np.abs(moved.values) > pair.time_envelope + 1e-9)
    assert not envelope_membership(moved, pair)


def test_envelope_grid_mismatch(g):
    other = make_grid(16, 4096)
    with pytest.raises(InvalidArgument):
        envelope_membership(g, envelopes([sample(other, gauss())]))


def test_envelope_phase_irrelevant(perturbed):
    elements, pair = perturbed
    f = elements[2]
    assert envelope_membership(SampledFunction(f.grid, 1j * f.values), pair)
