"""Tests for the Fourier-lattice fields, Sobolev norms and lattice sums."""

import math

import numpy as np
import pytest

from src.core.errors import LatticeError
from src.spectral.lattice import (
    FOURIER_SCALE,
    ContrastField,
    Lattice,
    analyze,
    l2_inner,
    project_to_D,
    sobolev_inner,
    sobolev_norm,
    truncation_diagnostics,
)
from src.spectral.phantoms import (
    constant_mode_value,
    enveloped_random,
    plane_mode_samples,
    random_band_limited,
    single_mode,
    smooth_bump,
)
from src.spectral.sums import (
    SobolevParams,
    embedding_constant,
    high_freq_split_check,
    lattice_sum,
    lattice_sum_bound_check,
    lattice_sum_shells,
)


def test_lattice_default_grid_and_aliasing():
    """The default grid has 2N+1 points; smaller grids alias retained modes."""
    assert Lattice(max_degree=3).grid_size == 7, "default grid should be 2N+1"
    assert Lattice(max_degree=3).shape == (7, 7, 7)
    with pytest.raises(ValueError):
        Lattice(max_degree=3, grid_size=5)


def test_index_outside_lattice_raises(lattice):
    with pytest.raises(LatticeError):
        lattice.index_of((3, 0, 0))


def test_constant_field_coefficient(lattice):
    """A constant c has f^(0) = (2 pi)^(3/2) c and no other modes."""
    f = analyze(np.full(lattice.grid_shape, 0.5 + 0j), lattice)
    assert f.coefficient((0, 0, 0)) == pytest.approx(constant_mode_value(0.5)), "zeroth coefficient mismatch"
    others = f.coeffs.copy()
    others[lattice.index_of((0, 0, 0))] = 0
    assert np.max(np.abs(others)) < 1e-12, "a constant should excite only the zero mode"


def test_single_mode_samples(lattice):
    f = single_mode(lattice, (1, 0, -2))
    expected = plane_mode_samples(lattice, (1, 0, -2)) / FOURIER_SCALE
    assert np.allclose(f.samples, expected, atol=1e-12), "mode samples should be exp(i gamma.x) / (2 pi)^(3/2)"


def test_evaluate_matches_grid_samples(lattice):
    f = random_band_limited(lattice, seed=4)
    x1, x2, x3 = lattice.grid_points()
    points = np.stack([x1, x2, x3], axis=-1)
    inside = np.sqrt(x1 ** 2 + x2 ** 2 + x3 ** 2) <= math.pi
    values = f.evaluate(points)
    assert np.allclose(values[inside], f.samples[inside], atol=1e-12), "pointwise evaluation should match the grid"
    assert np.all(values[~inside] == 0), "evaluation should vanish outside the support ball"


def test_parseval(lattice):
    """Grid quadrature of |f|^2 equals the coefficient sum for band-limited fields."""
    f = random_band_limited(lattice, seed=1)
    quad = (2.0 * math.pi / lattice.grid_size) ** 3 * np.sum(np.abs(f.samples) ** 2)
    assert quad == pytest.approx(sobolev_norm(f, 0.0) ** 2, rel=1e-12)
    assert l2_inner(f, f).real == pytest.approx(sobolev_norm(f, 0.0) ** 2, rel=1e-12)


def test_sobolev_norm_of_single_mode(lattice):
    f = single_mode(lattice, (1, 0, 0))
    assert sobolev_norm(f, 2.0) == pytest.approx(2.0), "(1 + 1)^2 weight should give norm 2"


def test_sobolev_inner_is_hermitian(lattice):
    f = random_band_limited(lattice, seed=2)
    g = random_band_limited(lattice, seed=3)
    assert sobolev_inner(f, g, 2.0) == pytest.approx(np.conj(sobolev_inner(g, f, 2.0)))


def test_fields_on_different_lattices_do_not_mix(lattice):
    f = ContrastField.zeros(lattice)
    g = ContrastField.zeros(Lattice(max_degree=3))
    with pytest.raises(LatticeError):
        f + g


def test_smooth_bump_admissibility(lattice):
    assert smooth_bump(lattice, 0.2).admissible, "a small real bump lies in the admissible set"
    assert not smooth_bump(lattice, 2.0).in_D, "Re f > 1 violates the admissible set"
    assert not smooth_bump(lattice, 0.2j).in_D, "positive imaginary part violates the admissible set"
    with pytest.raises(LatticeError):
        smooth_bump(lattice, 0.2, radius=0.8 * math.pi, center=(0.5 * math.pi, 0.0, 0.0))


def test_project_to_D_is_idempotent_with_hard_mask(lattice):
    f = random_band_limited(lattice, seed=5, scale=5.0)
    once = project_to_D(f, plateau_radius=math.pi)
    twice = project_to_D(once, plateau_radius=math.pi)
    assert once.admissible, "projection should land in the admissible set"
    assert np.allclose(once.coeffs, twice.coeffs, atol=1e-12), "projection should be idempotent"


def test_enveloped_random_is_real_and_supported(lattice):
    f = enveloped_random(lattice, seed=0, amplitude=0.05)
    assert f.admissible
    assert np.max(np.abs(f.samples.imag)) < 1e-12
    with pytest.raises(LatticeError):
        enveloped_random(lattice, seed=0, imaginary_part=0.1)


def test_truncation_diagnostics_share(lattice):
    report = truncation_diagnostics(random_band_limited(lattice, seed=6), 4.0)
    assert 0.0 <= report["outer_shell_share"] <= 1.0
    assert report["max_degree"] == lattice.max_degree


def test_sobolev_params_validation():
    assert SobolevParams().mu == pytest.approx(4.0 / 7.0)
    with pytest.raises(ValueError, match="m > 3/2"):
        SobolevParams(m=1.5, s=4.0)
    with pytest.raises(ValueError):
        SobolevParams(m=2.0, s=5.5)


def test_embedding_constant():
    value = embedding_constant(2.0)
    assert value > (2.0 * math.pi) ** -1.5, "the sum contains the gamma = 0 term"
    with pytest.raises(LatticeError):
        embedding_constant(1.5)


@pytest.mark.parametrize("rho, expected", [(1.0, 7.0), (1.5, 19.0), (1.8, 27.0), (0.5, 1.0)])
def test_lattice_point_counts(rho, expected):
    assert lattice_sum(0.0, rho) == expected, f"lattice points in the ball of radius {rho}"


@pytest.mark.parametrize("lam", [-2.0, -0.5, 0.0, 1.0])
def test_lattice_sum_enumerations_agree(lam):
    assert lattice_sum(lam, 6.3) == pytest.approx(lattice_sum_shells(lam, 6.3), rel=1e-12)


def test_lattice_sum_bound_check_excludes_borderline_exponent():
    with pytest.raises(LatticeError, match="3/2"):
        lattice_sum_bound_check(-1.5, [1.0, 2.0])


@pytest.mark.parametrize("lam", [-3.0, -2.0, 0.0, 1.0, 2.0])
def test_lattice_sum_growth_is_bounded(lam):
    report = lattice_sum_bound_check(lam, np.geomspace(1.0, 50.0, 12))
    assert report.bounded, f"ratio should stay bounded for lambda={lam} (slope {report.top_decade_slope})"
    assert report.tau == max(lam + 1.5, 0.0)


@pytest.mark.parametrize("rho", [1.0, 1.5, 2.0, 3.0])
def test_high_freq_split_holds(lattice, rho):
    params = SobolevParams()
    for seed in range(10):
        report = high_freq_split_check(
            random_band_limited(lattice, 2 * seed), random_band_limited(lattice, 2 * seed + 1), params, rho
        )
        assert report.holds, f"splitting inequality failed for seed {seed}, rho {rho}"
