import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssb import Field2, eta, make_grid, wavenumbers


class TestMakeGrid:
    def test_basic_spacing(self):
        g = make_grid(64, 64, 2 * np.pi, 2 * np.pi)
        assert g.dx == pytest.approx(2 * np.pi / 64, rel=1e-15)
        assert g.dy == g.dx

    def test_small_grid_spacing(self):
        g = make_grid(8, 8, 1.0, 1.0)
        assert g.dx == 0.125

    @pytest.mark.parametrize("nx,ny", [(7, 8), (8, 7), (9, 9)])
    def test_odd_counts_rejected(self, nx, ny):
        with pytest.raises(ValueError, match="even|at least 8"):
            make_grid(nx, ny, 1.0, 1.0)

    def test_odd_count_message(self):
        with pytest.raises(ValueError, match="even"):
            make_grid(10, 9, 1.0, 1.0)

    @pytest.mark.parametrize("nx,ny", [(6, 8), (8, 4), (2, 2)])
    def test_too_small_rejected(self, nx, ny):
        with pytest.raises(ValueError, match="at least 8"):
            make_grid(nx, ny, 1.0, 1.0)

    @pytest.mark.parametrize("lx,ly", [(0.0, 1.0), (1.0, -2.0)])
    def test_nonpositive_lengths_rejected(self, lx, ly):
        with pytest.raises(ValueError, match="positive"):
            make_grid(8, 8, lx, ly)

    def test_corner_coordinates(self):
        g = make_grid(16, 12, 3.0, 2.4, x0=-1.0, y0=0.5)
        assert g.point(0, 0) == (-1.0, 0.5)
        xe, ye = g.point(g.nx - 1, g.ny - 1)
        assert xe == pytest.approx(-1.0 + 3.0 - g.dx, abs=1e-14)
        assert ye == pytest.approx(0.5 + 2.4 - g.dy, abs=1e-14)
        assert g.xg[0, 0] == -1.0 and g.yg[0, 0] == 0.5


class TestWavenumbers:
    def test_standard_ordering_two_pi(self):
        g = make_grid(8, 8, 2 * np.pi, 2 * np.pi)
        k = wavenumbers(g, "x")
        np.testing.assert_allclose(k, [0, 1, 2, 3, -4, -3, -2, -1], atol=1e-14)

    def test_scaling_by_length(self):
        # unit-length axis scales every mode by 2*pi/L
        g = make_grid(8, 8, 1.0, 1.0)
        k = wavenumbers(g, "y")
        np.testing.assert_allclose(k / (2 * np.pi), [0, 1, 2, 3, -4, -3, -2, -1], atol=1e-14)

    def test_dc_mode_zero(self):
        g = make_grid(10, 14, 3.7, 0.9)
        assert wavenumbers(g, "x")[0] == 0.0
        assert wavenumbers(g, "y")[0] == 0.0

    def test_bad_axis(self):
        g = make_grid(8, 8, 1.0, 1.0)
        with pytest.raises(ValueError, match="axis"):
            wavenumbers(g, "z")

    @given(st.sampled_from([8, 10, 16, 24, 64]), st.floats(0.5, 20.0))
    def test_antisymmetry_below_nyquist(self, n, length):
        g = make_grid(n, n, length, length)
        k = wavenumbers(g, "x")
        for j in range(1, n // 2):
            assert k[j] == pytest.approx(-k[n - j], rel=1e-15)
        # Nyquist convention: index n/2 carries the negative wavenumber
        assert k[n // 2] == pytest.approx(-np.pi * n / length, rel=1e-15)


class TestEta:
    # resolutions straight from the published parameter ranges
    @pytest.mark.parametrize(
        "xi,side,n,expect",
        [
            (0.05, 5.0, 150, 1.5),
            (0.05, 5.0, 500, 5.0),
            (0.10, 6.0, 300, 5.0),
            (0.10, 6.0, 90, 1.5),
            (0.025, 4.5, 270, 1.5),
            (0.025, 4.5, 900, 5.0),
        ],
    )
    def test_interface_resolution(self, xi, side, n, expect):
        g = make_grid(n, n, side, side)
        assert eta(g, xi) == pytest.approx(expect, rel=1e-12)

    def test_requires_square_cells(self):
        g = make_grid(16, 16, 2.0, 1.0)
        with pytest.raises(ValueError, match="square"):
            eta(g, 0.1)

    def test_requires_positive_xi(self):
        g = make_grid(8, 8, 1.0, 1.0)
        with pytest.raises(ValueError, match="positive"):
            eta(g, 0.0)


class TestField2:
    def test_shape_checked(self):
        g = make_grid(8, 10, 1.0, 1.0)
        with pytest.raises(ValueError, match="shape"):
            Field2(g, np.zeros((8, 10)))  # transposed: shape is (ny, nx)
        f = Field2(g, np.zeros((10, 8)))
        assert f.data.shape == (10, 8)

    def test_nonfinite_rejected(self):
        g = make_grid(8, 8, 1.0, 1.0)
        bad = np.zeros((8, 8))
        bad[3, 5] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            Field2(g, bad)

    def test_from_function_samples_coordinates(self):
        g = make_grid(8, 8, 1.0, 1.0, x0=2.0, y0=-1.0)
        f = Field2.from_function(g, lambda x, y: x + 10 * y)
        assert f.data[0, 0] == pytest.approx(2.0 + 10 * (-1.0))
        assert f.data[3, 1] == pytest.approx((2.0 + g.dx) + 10 * (-1.0 + 3 * g.dy))
