import numpy as np
import pytest

from kgl.dyadic import (
    DyadicError,
    block,
    block_norms,
    block_sum,
    block_norm_characterization,
    build_bump_pair,
    max_freq_shell,
    max_phase_shell,
    project_frequency,
    project_phase,
)
from kgl.grid import SpectralField, VelocityGrid
from kgl.multipliers import weighted_sobolev_norm
from tests.conftest import random_band_limited


def test_bump_values_at_origin(bump_pair):
    assert bump_pair.psi(np.array([0.0]))[0] == 1.0
    assert bump_pair.phi(np.array([0.0]))[0] == 0.0


def test_bump_ranges(bump_pair):
    xs = np.linspace(0, 10, 4001)
    for vals in (bump_pair.psi(xs), bump_pair.phi(xs)):
        assert vals.min() >= 0.0
        assert vals.max() <= 1.0


def test_partition_of_unity_random_points(bump_pair):
    rng = np.random.default_rng(0)
    xs = rng.uniform(0.0, 100.0, size=10_000)
    total = bump_pair.psi(xs) + sum(bump_pair.phi(xs / 2.0**j) for j in range(9))
    assert np.max(np.abs(total - 1.0)) <= 1e-12


def test_partition_example_at_two(bump_pair):
    x = np.array([2.0])
    psi2 = bump_pair.psi(x)[0]
    total = psi2 + bump_pair.phi(x)[0] + bump_pair.phi(x / 2.0)[0]
    assert psi2 == 0.0
    assert total == pytest.approx(1.0, abs=1e-12)


def test_ring_supports(bump_pair):
    xs = np.linspace(0, 12, 10_000)
    phi = bump_pair.phi(xs)
    assert np.all(phi[xs < 0.75] == 0.0)
    assert np.all(phi[xs > 8.0 / 3.0] == 0.0)


def test_ring_disjointness_two_apart(bump_pair):
    xs = np.linspace(0.0, 50.0, 10_000)
    prod = bump_pair.phi(xs) * bump_pair.phi(xs / 4.0)  # shells (0, 2)
    assert np.all(prod == 0.0)
    prod_psi = bump_pair.psi(xs) * bump_pair.phi(xs / 2.0)  # psi vs shell 1
    assert np.all(prod_psi == 0.0)


def test_mesh_resolution_guard():
    with pytest.raises(DyadicError):
        build_bump_pair(mesh_resolution=512)


def test_phase_partition_telescopes(grid1d, bump_pair):
    # fields supported in |v| <= 2^K * 3/4 are reproduced by the partial sum
    v = grid1d.v_meshes[0]
    f = SpectralField.from_samples(grid1d, np.exp(-(v**2)))
    kmax = max_phase_shell(grid1d)
    total = sum(
        project_phase(f, k, bump_pair).samples for k in range(-1, kmax + 1)
    )
    assert np.max(np.abs(total - f.samples)) <= 1e-12


def test_phase_projection_inner_support(grid1d, bump_pair):
    v = grid1d.v_meshes[0]
    f = SpectralField.from_samples(grid1d, np.where(np.abs(v) <= 0.5, 1.0, 0.0))
    for k in range(0, max_phase_shell(grid1d) + 1):
        assert project_phase(f, k, bump_pair).l2_norm() == 0.0


def test_phase_almost_orthogonality(grid1d, bump_pair):
    rng = np.random.default_rng(4)
    kmax = max_phase_shell(grid1d)
    # overlap-count oracle: pointwise sum of squared ring weights in [1/2, 1]
    v = np.linspace(0, grid1d.half_width, 20_000)
    sq = bump_pair.psi(v) ** 2 + sum(
        bump_pair.phi(v / 2.0**k) ** 2 for k in range(kmax + 2)
    )
    assert np.all(sq <= 1.0 + 1e-12)
    assert np.all(sq >= 0.5 - 1e-12)
    for _ in range(100):
        f = random_band_limited(grid1d, rng)
        total = sum(
            project_phase(f, k, bump_pair).l2_norm() ** 2 for k in range(-1, kmax + 1)
        )
        n2 = f.l2_norm() ** 2
        assert n2 / 2.0 <= total <= 2.0 * n2


def test_frequency_single_mode_mapping(bump_pair):
    grid = VelocityGrid(1, 256, np.pi)
    v = grid.v_meshes[0]
    f = SpectralField.from_samples(grid, np.exp(1j * v))  # |eta| = 1
    out0 = project_frequency(f, 0, bump_pair)
    expected = bump_pair.phi(np.array([1.0]))[0]
    assert out0.l2_norm() == pytest.approx(expected * f.l2_norm(), rel=1e-12)
    out3 = project_frequency(f, 3, bump_pair)  # 2^-3 < 3/4: outside ring 3
    assert out3.l2_norm() <= 1e-15 * f.l2_norm()  # only FFT rounding survives


def test_frequency_reconstruction(grid1d, bump_pair):
    rng = np.random.default_rng(9)
    jmax = max_freq_shell(grid1d)
    for _ in range(50):
        f = random_band_limited(grid1d, rng)
        total = sum(
            project_frequency(f, j, bump_pair).samples for j in range(-1, jmax + 1)
        )
        err = np.max(np.abs(total - f.samples)) / max(np.max(np.abs(f.samples)), 1e-300)
        assert err <= 1e-10


def test_frequency_disjoint_projections(grid1d, bump_pair):
    rng = np.random.default_rng(10)
    f = random_band_limited(grid1d, rng)
    twice = project_frequency(project_frequency(f, 2, bump_pair), 4, bump_pair)
    assert twice.l2_norm() == 0.0


def test_frequency_nyquist_guard(grid1d, bump_pair):
    jmax = max_freq_shell(grid1d)
    with pytest.raises(DyadicError):
        project_frequency(
            SpectralField.from_samples(grid1d, np.zeros(grid1d.shape)),
            jmax + 1,
            bump_pair,
        )


def test_block_sum_homogeneity(grid1d, bump_pair, gaussian_half):
    rep = block_norm_characterization(gaussian_half, 1.0, 0.5, bump_pair)
    doubled = block_norm_characterization(gaussian_half * 2.0, 1.0, 0.5, bump_pair)
    assert doubled.value == pytest.approx(2.0 * rep.value, rel=1e-12)


def test_block_sum_against_plain_norm(grid1d, bump_pair):
    rng = np.random.default_rng(12)
    for _ in range(20):
        f = random_band_limited(grid1d, rng)
        norms = block_norms(f, bump_pair)
        total = block_sum(norms, 0.0, 0.0)
        n = f.l2_norm()
        # almost-orthogonality: two overlapping rings per index direction
        assert n / 2.0 <= total <= 2.0 * n


def test_block_vs_direct_norm_gaussian(grid1d, bump_pair, gaussian_half):
    rep = block_norm_characterization(gaussian_half, 1.0, 1.0 / 3.0, bump_pair)
    direct = weighted_sobolev_norm(gaussian_half, 1.0, 1.0 / 3.0)
    assert rep.tail_converged
    assert 1.0 / 8.0 <= rep.value / direct <= 8.0


def test_block_report_rows(grid1d, bump_pair, gaussian_half):
    rep = block_norm_characterization(gaussian_half, 0.0, 0.0, bump_pair)
    row = rep.rows[0]
    assert set(row) == {"j", "k", "block_l2", "weight_2kp", "weight_2mj", "contribution"}
    total = sum(r["contribution"] for r in rep.rows)
    assert rep.value == pytest.approx(np.sqrt(total), rel=1e-12)


def test_block_operator_composition(grid1d, bump_pair, gaussian_half):
    b = block(gaussian_half, 2, 1, bump_pair)
    manual = project_frequency(project_phase(gaussian_half, 1, bump_pair), 2, bump_pair)
    assert np.allclose(b.samples, manual.samples, atol=1e-14)


def test_frequency_reconstruction_2d(bump_pair):
    grid = VelocityGrid(2, 64, 8.0)
    rng = np.random.default_rng(14)
    amp = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    amp[grid.eta_abs > 0.45 * grid.nyquist] = 0.0
    f = SpectralField.from_samples(grid, np.fft.ifftn(amp, norm="ortho").real)
    jmax = max_freq_shell(grid)
    total = sum(project_frequency(f, j, bump_pair).samples for j in range(-1, jmax + 1))
    err = np.max(np.abs(total - f.samples)) / np.max(np.abs(f.samples))
    assert err <= 1e-10
