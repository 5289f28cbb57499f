import numpy as np
import pytest

from ssb import (
    Field2,
    SpectralEngine,
    annulus_shape,
    boundary_flux,
    enlarged_domain,
    error_report,
    make_grid,
    rasterize,
    reference_solve,
    smooth,
    steady_annulus,
    steady_annulus_xy,
)
from ssb.analysis import (
    HEAT_PRESETS,
    SWEEP_CSV_HEADER,
    interp_bilinear,
    resolution_for,
    steady_annulus_max_abs,
    write_sweep_csv,
)
from ssb.models import allen_cahn, heat_with_source


class TestSteadyAnnulus:
    def test_value_at_inner_radius(self):
        assert steady_annulus(1.0, 0.0) == pytest.approx(1 / 5 - 31 / 50 - 8 / 25, abs=1e-14)
        assert steady_annulus(1.0, 0.0) == pytest.approx(-0.74, abs=1e-12)

    def test_value_at_outer_radius(self):
        assert steady_annulus(2.0, 0.0) == pytest.approx(8 / 5 - 124 / 50 - 2 / 25, abs=1e-14)
        assert steady_annulus(2.0, 0.0) == pytest.approx(-0.96, abs=1e-12)

    def test_node_line_at_45_degrees(self):
        for r in (1.0, 1.37, 2.0):
            assert abs(steady_annulus(r, np.pi / 4)) < 1e-14

    def test_no_flux_radial_derivative(self):
        # symbolic radial derivative vanishes at both radii
        def g_prime(r):
            return 3 * r**2 / 5 - 31 * r / 25 + 16 / (25 * r**3)

        assert g_prime(1.0) == pytest.approx(0.0, abs=1e-14)
        assert g_prime(2.0) == pytest.approx(0.0, abs=1e-14)
        # cross-check against a central finite difference of the solution itself
        h = 1e-6
        for r in (1.0, 2.0):
            fd = (steady_annulus(r + h, 0.0) - steady_annulus(r - h, 0.0)) / (2 * h)
            assert abs(fd) < 1e-8

    def test_rejects_origin(self):
        with pytest.raises(ValueError):
            steady_annulus(0.0, 0.0)

    def test_max_abs_from_radial_scan(self):
        # |g| is largest at the outer radius where g = -0.96
        assert steady_annulus_max_abs() == pytest.approx(0.96, abs=1e-9)


class TestErrorReport:
    @pytest.fixture()
    def setup(self):
        grid = enlarged_domain(annulus_shape(), 0.1, 120)
        chi = rasterize(annulus_shape(), grid)
        exact_field = np.zeros(grid.shape)
        mask = chi.data == 1
        exact_field[mask] = steady_annulus_xy(grid.xg[mask], grid.yg[mask])
        return grid, chi, Field2(grid, exact_field)

    def test_exact_solution_scores_zero(self, setup):
        grid, chi, exact = setup
        rep = error_report(exact, steady_annulus_xy, chi)
        assert rep.E == 0.0 and rep.e == 0.0

    def test_uniform_offset(self, setup):
        grid, chi, exact = setup
        shifted = Field2(grid, exact.data + 0.01)
        rep = error_report(shifted, steady_annulus_xy, chi, exact_max=0.96)
        assert rep.E == pytest.approx(0.01, rel=1e-9)
        assert rep.e == pytest.approx(0.01 / 0.96, rel=1e-9)

    def test_outside_errors_ignored(self, setup):
        grid, chi, exact = setup
        noisy = exact.data.copy()
        noisy[chi.data == 0] = 1e6
        rep = error_report(Field2(grid, noisy), steady_annulus_xy, chi)
        assert rep.E == 0.0

    def test_error_field_zero_outside(self, setup):
        grid, chi, exact = setup
        rep = error_report(Field2(grid, exact.data + 0.5), steady_annulus_xy, chi)
        assert (rep.error_field.data[chi.data == 0] == 0).all()

    def test_empty_domain_rejected(self):
        grid = make_grid(16, 16, 1.0, 1.0)
        chi = Field2.zeros(grid)
        with pytest.raises(ValueError, match="empty"):
            error_report(chi, lambda x, y: x, chi)


class TestBoundaryFlux:
    def test_constant_field_zero_flux(self):
        grid = enlarged_domain(annulus_shape(), 0.1, 80)
        flux = boundary_flux(Field2.full(grid, 2.0), annulus_shape(), samples=200)
        assert flux < 1e-12

    @staticmethod
    def _tapered_steady(n):
        """Steady annulus solution smoothly cut off away from the ring.

        The analytic tanh taper equals 1 in a neighborhood of the annulus (so
        values and gradients near its boundary are exactly those of the steady
        solution) and rolls off to zero well before both the origin
        singularity and the domain border, keeping the sampled field periodic
        and smooth to spectral accuracy.
        """
        grid = enlarged_domain(annulus_shape(), 0.05, n)
        r = np.hypot(grid.xg, grid.yg)  # cell-centered grid: r > 0 everywhere
        taper = 0.25 * (1 + np.tanh((r - 0.6) / 0.05)) * (1 + np.tanh((2.3 - r) / 0.05))
        vals = steady_annulus_xy(grid.xg, grid.yg)
        return grid, Field2(grid, vals * taper)

    def test_steady_solution_flux_small_and_second_order(self):
        # the exact solution has zero normal derivative on both circles, so
        # the sampled flux is pure discretization error and shrinks ~ N^-2
        fluxes = {}
        for n in (200, 400):
            grid, u = self._tapered_steady(n)
            fluxes[n] = boundary_flux(u, annulus_shape(), samples=8 * n)
        assert fluxes[400] < fluxes[200] / 3.0
        assert fluxes[200] < 0.05

    def test_bilinear_interpolation_exact_on_linear_field(self):
        grid = make_grid(32, 32, 1.0, 1.0)
        f = Field2.from_function(grid, lambda x, y: 2 * x + 3 * y)
        pts = np.array([[0.3111, 0.2555], [0.5017, 0.7231]])
        vals = interp_bilinear(f, pts)
        np.testing.assert_allclose(vals, 2 * pts[:, 0] + 3 * pts[:, 1], rtol=1e-12)


class TestReferenceSolve:
    def test_heat_mode_decay_second_order(self):
        grid = make_grid(32, 32, 2 * np.pi, 2 * np.pi)
        model = heat_with_source(1.0, cx=100.0, cy=100.0)  # source far away is irrelevant; build pure diffusion below
        from ssb.models import ReactionModel

        pure = ReactionModel(
            names=("u",),
            diffusivities=(1.0,),
            rate_builder=lambda g: lambda F, t: (np.zeros(g.shape),),
        )
        u0 = Field2.from_function(grid, lambda x, y: np.cos(x))
        (out,) = reference_solve(pure, [u0], t_end=0.5, refinement=50)
        err = np.abs(out.data - np.exp(-0.5) * np.cos(grid.xg)).max()
        assert 1e-5 < err < 5e-3  # finite-difference accuracy, not spectral

    def test_zero_stays_zero(self):
        grid = make_grid(16, 16, 1.0, 1.0)
        model = allen_cahn(0.1)
        (out,) = reference_solve(model, [Field2.zeros(grid)], t_end=0.3, refinement=10)
        assert np.abs(out.data).max() == 0.0

    def test_unstable_refinement_rejected(self):
        grid = make_grid(16, 16, 1.0, 1.0)
        from ssb.models import ReactionModel

        # dt_hint far above the explicit CFL bound for this grid
        stiff = ReactionModel(
            names=("u",),
            diffusivities=(1.0,),
            rate_builder=lambda g: lambda F, t: (np.zeros(g.shape),),
            dt_hint=1.0,
        )
        with pytest.raises(ValueError, match="CFL"):
            reference_solve(stiff, [Field2.zeros(grid)], t_end=0.1, refinement=1)


class TestSweepPlumbing:
    def test_resolution_matches_published_ranges(self):
        preset = HEAT_PRESETS["annulus"]
        assert resolution_for(preset, 0.05, 1.5) == 150
        assert resolution_for(preset, 0.05, 5.0) == 500
        assert resolution_for(preset, 0.10, 1.5) == 90
        assert resolution_for(preset, 0.10, 5.0) == 300
        assert resolution_for(preset, 0.025, 1.5) == 270
        assert resolution_for(preset, 0.025, 5.0) == 900
        assert resolution_for(preset, 0.05, 4.0) == 400
        assert resolution_for(preset, 0.025, 4.0) == 720

    def test_quarter_uses_same_bounding_square(self):
        assert resolution_for(HEAT_PRESETS["quarter_annulus"], 0.05, 4.0) == 400

    def test_csv_roundtrip(self, tmp_path):
        from ssb.analysis import SweepCell

        cells = [
            SweepCell(
                preset="annulus",
                xi=0.1,
                eta=2.0,
                n=120,
                t_final=6.0,
                dt=1e-4,
                E=0.01,
                e=0.0104,
                wall_seconds=1.5,
            ),
            SweepCell(
                preset="annulus",
                xi=0.1,
                eta=3.0,
                n=180,
                t_final=6.0,
                dt=float("nan"),
                E=float("nan"),
                e=float("nan"),
                wall_seconds=0.1,
                error="boom",
            ),
        ]
        path = tmp_path / "sweep.csv"
        write_sweep_csv(cells, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == ",".join(SWEEP_CSV_HEADER)
        assert len(lines) == 3
        fields = lines[1].split(",")
        assert float(fields[0]) == 0.1 and int(fields[2]) == 120
        assert np.isnan(float(lines[2].split(",")[4]))
