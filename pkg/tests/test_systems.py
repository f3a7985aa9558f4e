import math

import numpy as np
import pytest

from tfconc.errors import ConstructionFailure, InvalidArgument, OutOfWindowError
from tfconc.grid import fourier, inner_product, make_grid
from tfconc.moments import concentration_report, p_dispersion
from tfconc.systems import (
    GaborIndex,
    SystemSpec,
    build_perturbed_exact,
    build_system,
    enumerate_exact_G0,
    envelopes,
    gabor_atom,
    gaussian,
    reconstruct_e,
)

from conftest import GAUSS_DISPERSION


@pytest.fixture(scope="module")
def perturbed8():
    return build_perturbed_exact(make_grid(32, 4096), 8, 0.1, 2, 2)


def test_gaussian(grid):
    g = gaussian(grid)
    assert abs(g.norm - 1) <= 1e-9
    assert g.values[grid.n_points // 2] == pytest.approx(2**0.25)
    assert 2**0.25 == pytest.approx(1.189207, abs=1e-6)
    assert np.allclose(g.values[1:][::-1], g.values[1:], atol=0)
    gh = fourier(g)
    assert np.max(np.abs(gh.values - gaussian(gh.grid).values)) <= 1e-8


def test_atom_origin_is_gaussian(grid):
    assert np.array_equal(gabor_atom(grid, (0, 0)).values, gaussian(grid).values)


def test_atom_report(grid):
    r = concentration_report(gabor_atom(grid, GaborIndex(3, 2)), 2, 2)
    got = (r.time_mean, r.time_dispersion, r.freq_mean, r.freq_dispersion)
    assert np.allclose(got, (2, GAUSS_DISPERSION, 3, GAUSS_DISPERSION), rtol=0, atol=1e-6)
    assert abs(gabor_atom(grid, (3, 2)).norm - 1) <= 1e-9


def test_atom_overlap(grid):
    ip = inner_product(gabor_atom(grid, (0, 0)), gabor_atom(grid, (0, 1)))
    assert abs(abs(ip) - math.exp(-math.pi / 2)) <= 1e-8


@pytest.mark.parametrize("idx", [(0, 12), (0, -12), (60, 0), (-61, 3)])
def test_atom_out_of_window(grid, idx):
    with pytest.raises(OutOfWindowError):
        gabor_atom(grid, idx)


def test_atom_inside_window(grid):
    gabor_atom(grid, (59, 11))


def test_enumerate_g0_small():
    assert enumerate_exact_G0(3).indices == [(0, 0), (-1, -1), (-1, 0)]


def test_enumerate_g0_nine():
    idx = enumerate_exact_G0(9).indices
    assert len(idx) == 9
    assert (1, 1) not in idx
    shell1 = {(m, n) for m in (-1, 0, 1) for n in (-1, 0, 1)} - {(0, 0), (1, 1)}
    assert set(idx[1:8]) == shell1
    assert idx[8] == (-2, -2)


def test_enumerate_g0_excludes_and_orders():
    idx = enumerate_exact_G0(200).indices
    assert (1, 1) not in idx
    assert len(set(idx)) == 200
    shells = [max(abs(m), abs(n)) for m, n in idx]
    assert shells == sorted(shells)
    for r in set(shells):
        block = [i for i, s in zip(idx, shells) if s == r]
        assert block == sorted(block)


def test_spec_rejects_bad_alpha():
    with pytest.raises(InvalidArgument):
        SystemSpec("perturbed_exact", 2, 0.1, alphas=[0.4, 0.3])
    with pytest.raises(InvalidArgument):
        SystemSpec("gabor_exact_G0", 2, indices=[(0, 0), (1, 1)])
    with pytest.raises(InvalidArgument):
        SystemSpec("nonsense", 2)


def test_spec_json_roundtrip(perturbed8):
    spec, _ = perturbed8
    d = spec.to_dict()
    assert list(d)[:5] == ["kind", "count", "epsilon", "indices", "alphas"]
    assert d["indices"][0] == [0, 0]
    assert SystemSpec.from_dict(d) == spec


def test_perturbed_bounds(perturbed8):
    spec, elements = perturbed8
    threshold = GAUSS_DISPERSION + 0.1
    assert threshold == pytest.approx(0.3821, abs=1e-4)
    for f in elements:
        assert abs(f.norm - 1) <= 1e-9
        r = concentration_report(f, 2, 2)
        assert r.time_dispersion < threshold and r.freq_dispersion < threshold
        assert abs(r.time_mean) < 0.1 and abs(r.freq_mean) < 0.1


def test_perturbed_alphas(perturbed8):
    spec, _ = perturbed8
    for n, a in enumerate(spec.alphas, start=1):
        assert 0 < a < 2.0**-n


def test_perturbed_rebuild_matches(grid, perturbed8):
    spec, elements = perturbed8
    rebuilt = build_system(grid, spec)
    assert all(np.allclose(a.values, b.values, atol=1e-15) for a, b in zip(rebuilt, elements))


def test_loose_epsilon_keeps_initial_alpha(grid):
    spec, elements = build_perturbed_exact(grid, 6, 1.0)
    g = gaussian(grid)
    d_time = p_dispersion(g, 2)
    d_freq = p_dispersion(fourier(g), 2)
    for n, (a, f) in enumerate(zip(spec.alphas, elements), start=1):
        assert a == min(2.0**-n, 0.08) / 2
        e = gabor_atom(grid, spec.indices[n])
        u = g + a * e
        r = concentration_report(u / u.norm, 2, 2)
        assert abs(r.time_mean) < 1 and abs(r.freq_mean) < 1
        assert r.time_dispersion < d_time + 1 and r.freq_dispersion < d_freq + 1


def test_unreachable_epsilon_fails(grid):
    with pytest.raises(ConstructionFailure) as info:
        build_perturbed_exact(grid, 2, 1e-12)
    assert info.value.condition in {"time_mean", "freq_mean", "time_dispersion", "freq_dispersion"}


def test_envelope_singleton(grid):
    g = gaussian(grid)
    env = envelopes([g])
    assert np.array_equal(env.time_envelope, np.abs(g.values))
    assert env.time_envelope_norm == pytest.approx(1, abs=1e-12)
    assert env.freq_envelope_norm == pytest.approx(1, abs=1e-12)


def test_envelope_perturbed(perturbed8):
    env = envelopes(perturbed8[1])
    assert env.time_envelope_norm <= 4
    assert env.freq_envelope_norm <= 4


def test_envelope_grid_mismatch(grid):
    with pytest.raises(InvalidArgument):
        envelopes([gaussian(grid), gaussian(make_grid(16, 4096))])
    with pytest.raises(InvalidArgument):
        envelopes([])


@pytest.mark.parametrize("n", [1, 8])
def test_reconstruct(grid, perturbed8, n):
    spec, _ = perturbed8
    e = reconstruct_e(perturbed8, n)
    assert (e - gabor_atom(grid, spec.indices[n])).norm <= 1e-7


def test_reconstruct_detects_wrong_alpha(grid, perturbed8):
    spec, _ = perturbed8
    n = 3
    a = spec.alphas[n - 1]
    err = (reconstruct_e(perturbed8, n, alpha=a + 1e-3) - gabor_atom(grid, spec.indices[n])).norm
    assert err > 1e-4
    # first-order sensitivity: e_{n+1} * delta / (alpha + delta) in norm
    assert err == pytest.approx(1e-3 / (a + 1e-3), rel=1e-6)


def test_reconstruct_wrong_kind(grid):
    spec = enumerate_exact_G0(3)
    with pytest.raises(InvalidArgument):
        reconstruct_e((spec, build_system(grid, spec)), 1)


def test_g0_covariance(grid):
    spec = enumerate_exact_G0(25)
    for idx, f in zip(spec.indices, build_system(grid, spec)):
        r = concentration_report(f, 2, 2)
        assert r.time_mean == pytest.approx(idx.n, abs=1e-6)
        assert r.freq_mean == pytest.approx(idx.m, abs=1e-6)
        assert r.time_dispersion == pytest.approx(GAUSS_DISPERSION, abs=1e-6)
        assert r.freq_dispersion == pytest.approx(GAUSS_DISPERSION, abs=1e-6)
