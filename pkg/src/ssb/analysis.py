"""Reference solutions, error norms, flux diagnostics, and convergence sweeps.

The heat-equation benchmark on the annulus has a closed-form steady state,
which makes fully quantitative error studies possible; the quarter annulus
reuses the same solution (it also satisfies the no-flux conditions on the
radial cuts). A small brute-force finite-difference integrator provides an
independent oracle for the nonlinear stepper on periodic problems.
"""

from __future__ import annotations

import concurrent.futures
import csv
import math
import multiprocessing
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .geometry import Shape, annulus_shape, boundary_points, enlarged_domain, quarter_annulus_shape, rasterize
from .grid import Field2, Grid2
from .models import ReactionModel, heat_with_source
from .phasefield import smooth
from .spectral import SpectralEngine
from .stepper import SplitStepper, default_dt

__all__ = [
    "steady_annulus",
    "steady_annulus_xy",
    "steady_annulus_max_abs",
    "ErrorReport",
    "error_report",
    "boundary_flux",
    "interp_bilinear",
    "reference_solve",
    "HeatPreset",
    "HEAT_PRESETS",
    "resolution_for",
    "SweepCell",
    "run_heat_cell",
    "convergence_sweep",
    "write_sweep_csv",
    "SWEEP_CSV_HEADER",
]


# -- exact steady state of the annulus heat benchmark --------------------------


def _radial_profile(r):
    return r**3 / 5.0 - 31.0 / 50.0 * r**2 - 8.0 / 25.0 / r**2


def steady_annulus(r, theta):
    """Steady solution g(r)*cos(2*theta) of the sourced heat equation, D = 1.

    g(r) = r^3/5 - 31 r^2/50 - 8/(25 r^2); its radial derivative vanishes at
    r = 1 and r = 2, which is exactly the no-flux condition on the annulus.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("steady_annulus requires r > 0")
    out = _radial_profile(r) * np.cos(2.0 * np.asarray(theta, dtype=float))
    return float(out) if out.ndim == 0 else out


def steady_annulus_xy(x, y):
    """Cartesian wrapper of :func:`steady_annulus` about the origin."""
    r = np.hypot(x, y)
    return steady_annulus(r, np.arctan2(y, x))


def steady_annulus_max_abs(n_scan: int = 200001) -> float:
    """max |u| over the annulus, from a dense 1D radial scan (|cos| peaks at 1)."""
    r = np.linspace(1.0, 2.0, n_scan)
    return float(np.abs(_radial_profile(r)).max())


# -- error norms ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ErrorReport:
    """Max-norm errors over the domain interior (points with chi = 1)."""

    E: float
    e: float
    xi: float
    eta: float
    n: int
    t_final: float
    error_field: Field2


def error_report(
    u: Field2,
    exact: Callable[[np.ndarray, np.ndarray], np.ndarray],
    chi: Field2,
    *,
    exact_max: float | None = None,
    xi: float = math.nan,
    eta: float = math.nan,
    t_final: float = math.nan,
) -> ErrorReport:
    """Absolute and relative max-norm errors of u against an exact solution.

    Errors are evaluated only at grid points inside the domain; the relative
    error is normalized by ``exact_max`` when given (e.g. the true maximum of
    the analytical solution over the continuous domain), else by the maximum
    of |exact| over the same grid points.
    """
    if u.grid != chi.grid:
        raise ValueError("solution and indicator grids differ")
    mask = chi.data == 1.0
    if not mask.any():
        raise ValueError("empty domain: chi has no interior points")
    xs = u.grid.xg[mask]
    ys = u.grid.yg[mask]
    exact_vals = np.asarray(exact(xs, ys), dtype=float)
    diff = np.abs(u.data[mask] - exact_vals)
    err_max = float(diff.max())
    denom = float(exact_max) if exact_max is not None else float(np.abs(exact_vals).max())
    if denom <= 0:
        raise ValueError("relative-error denominator must be positive")
    field = np.zeros(u.grid.shape)
    field[mask] = diff
    return ErrorReport(
        E=err_max,
        e=err_max / denom,
        xi=xi,
        eta=eta,
        n=u.grid.nx,
        t_final=t_final,
        error_field=Field2(u.grid, field),
    )


# -- boundary flux diagnostic -----------------------------------------------------


def interp_bilinear(f: Field2, pts: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a field at (m, 2) points, periodic wrap."""
    grid = f.grid
    fx = (pts[:, 0] - grid.x0) / grid.dx
    fy = (pts[:, 1] - grid.y0) / grid.dy
    i0 = np.floor(fx).astype(np.int64)
    j0 = np.floor(fy).astype(np.int64)
    sx = fx - i0
    sy = fy - j0
    i0 %= grid.nx
    j0 %= grid.ny
    i1 = (i0 + 1) % grid.nx
    j1 = (j0 + 1) % grid.ny
    d = f.data
    return (
        (1 - sx) * (1 - sy) * d[j0, i0]
        + sx * (1 - sy) * d[j0, i1]
        + (1 - sx) * sy * d[j1, i0]
        + sx * sy * d[j1, i1]
    )


def boundary_flux(u: Field2, shape: Shape, samples: int, engine: SpectralEngine | None = None) -> float:
    """max |n . grad(u)| over sampled boundary points of an analytic shape.

    The gradient is computed spectrally on the grid and interpolated
    bilinearly to the sample points. Raster masks cannot enumerate their
    boundary and are not supported.
    """
    if engine is None:
        engine = SpectralEngine(u.grid)
    pts, normals = boundary_points(shape, samples)
    gx, gy = engine.gradient(u)
    flux = normals[:, 0] * interp_bilinear(gx, pts) + normals[:, 1] * interp_bilinear(gy, pts)
    return float(np.abs(flux).max())


# -- brute-force finite-difference oracle ------------------------------------------


def reference_solve(
    model: ReactionModel,
    fields0: Sequence[Field2],
    t_end: float,
    refinement: int = 100,
) -> tuple[Field2, ...]:
    """Independent fine-step oracle on a periodic grid (no boundary embedding).

    Integrates the same reaction-diffusion system with a 5-point
    central-difference Laplacian and explicit Euler steps of size
    ``default_dt(model, grid) / refinement``. Checks the diffusive CFL bound
    up front and raises on instability.
    """
    if refinement < 1:
        raise ValueError("refinement must be at least 1")
    grid = fields0[0].grid
    dt = default_dt(model, grid) / refinement
    dmax = max(model.diffusivities)
    inv_dx2 = 1.0 / grid.dx**2
    inv_dy2 = 1.0 / grid.dy**2
    if dmax > 0 and dt > 1.0 / (2 * dmax * (inv_dx2 + inv_dy2)):
        raise ValueError(f"refinement {refinement} leaves dt={dt:.3g} above the explicit CFL bound")
    rates = model.rates_on(grid)
    arrays = [f.data.copy() for f in fields0]

    def lap5(a):
        return (np.roll(a, 1, axis=1) + np.roll(a, -1, axis=1) - 2 * a) * inv_dx2 + (
            np.roll(a, 1, axis=0) + np.roll(a, -1, axis=0) - 2 * a
        ) * inv_dy2

    t = 0.0
    while t_end - t > 1e-12 * max(dt, 1.0):
        h = min(dt, t_end - t)
        f = rates(arrays, t)
        arrays = [
            a + h * (d * lap5(a) + fj) if d > 0 else a + h * fj
            for a, d, fj in zip(arrays, model.diffusivities, f)
        ]
        t += h
        if not all(np.isfinite(a).all() for a in arrays):
            raise ValueError(f"oracle went unstable at t={t:.6g} with refinement {refinement}")
    return tuple(Field2(grid, a) for a in arrays)


# -- convergence sweeps --------------------------------------------------------------


@dataclass(frozen=True)
class HeatPreset:
    """Sourced heat benchmark with a known steady state, run to t_final."""

    name: str
    shape_factory: Callable[[], Shape]
    exact: Callable[[np.ndarray, np.ndarray], np.ndarray]
    exact_max: float
    t_final: float = 6.0
    d: float = 1.0


HEAT_PRESETS: dict[str, HeatPreset] = {
    "annulus": HeatPreset(
        name="annulus",
        shape_factory=annulus_shape,
        exact=steady_annulus_xy,
        exact_max=steady_annulus_max_abs(),
    ),
    "quarter_annulus": HeatPreset(
        name="quarter_annulus",
        shape_factory=quarter_annulus_shape,
        exact=steady_annulus_xy,
        exact_max=steady_annulus_max_abs(),
    ),
}


def resolution_for(preset: HeatPreset, xi: float, eta: float) -> int:
    """Grid points per side for a target interface resolution eta = xi/dx.

    Derived from the enlarged-domain side (bounding square plus the 10*xi
    margin on each side); rounded to the nearest even count.
    """
    box = preset.shape_factory().bbox()
    side = max(box[1] - box[0], box[3] - box[2]) + 20.0 * xi
    n = int(round(side * eta / xi))
    n += n % 2
    if n < 8:
        raise ValueError(f"resolution {n} too small for xi={xi}, eta={eta}")
    return n


@dataclass(frozen=True, eq=False)
class SweepCell:
    """One (xi, eta) cell of a convergence sweep."""

    preset: str
    xi: float
    eta: float
    n: int
    t_final: float
    dt: float
    E: float
    e: float
    wall_seconds: float
    error: str | None = None
    report: ErrorReport | None = None
    field: Field2 | None = None


def run_heat_cell(
    preset_name: str,
    xi: float,
    eta: float,
    dt: float | None = None,
    keep_field: bool = False,
    threads: int | None = None,
) -> SweepCell:
    """Run one heat benchmark cell end to end and measure its errors."""
    preset = HEAT_PRESETS[preset_name]
    n = resolution_for(preset, xi, eta)
    t0 = time.perf_counter()
    try:
        shape = preset.shape_factory()
        grid = enlarged_domain(shape, xi, n)
        engine = SpectralEngine(grid, threads=threads)
        chi = rasterize(shape, grid)
        pf = smooth(chi, xi, engine)
        model = heat_with_source(preset.d)
        dt_run = dt if dt is not None else default_dt(model, grid)
        stepper = SplitStepper(dt_run, model, pf, engine)
        state = stepper.initial_state([Field2.zeros(grid)])
        state = stepper.run(state, preset.t_final)
        report = error_report(
            state.fields[0],
            preset.exact,
            chi,
            exact_max=preset.exact_max,
            xi=xi,
            eta=eta,
            t_final=preset.t_final,
        )
    except Exception as exc:  # recorded per cell, sweeps keep going
        return SweepCell(
            preset=preset_name,
            xi=xi,
            eta=eta,
            n=n,
            t_final=preset.t_final,
            dt=dt if dt is not None else math.nan,
            E=math.nan,
            e=math.nan,
            wall_seconds=time.perf_counter() - t0,
            error=f"{type(exc).__name__}: {exc}",
        )
    return SweepCell(
        preset=preset_name,
        xi=xi,
        eta=eta,
        n=n,
        t_final=preset.t_final,
        dt=dt_run,
        E=report.E,
        e=report.e,
        wall_seconds=time.perf_counter() - t0,
        report=report,
        field=state.fields[0] if keep_field else None,
    )


def _cell_job(args):
    preset_name, xi, eta, dt, keep_field, threads = args
    return run_heat_cell(preset_name, xi, eta, dt=dt, keep_field=keep_field, threads=threads)


def convergence_sweep(
    preset_name: str,
    xi_list: Sequence[float],
    eta_list: Sequence[float],
    dt_for: Callable[[float, float], float | None] | None = None,
    jobs: int = 1,
    keep_fields: bool = False,
) -> list[SweepCell]:
    """Errors over the (xi, eta) product grid, optionally with parallel cells.

    Cells are independent runs; failures are recorded in their cell rather
    than aborting the sweep. Row order is xi-major and deterministic.
    """
    if preset_name not in HEAT_PRESETS:
        raise ValueError(f"unknown preset {preset_name!r}; choose from {sorted(HEAT_PRESETS)}")
    if not xi_list or not eta_list:
        raise ValueError("xi_list and eta_list must be non-empty")
    params = [
        (preset_name, xi, eta, dt_for(xi, eta) if dt_for else None, keep_fields, None)
        for xi in xi_list
        for eta in eta_list
    ]
    if jobs <= 1:
        return [_cell_job(p) for p in params]
    # worker processes each own their engine and a single compute thread
    params = [p[:5] + (1,) for p in params]
    ctx = multiprocessing.get_context("spawn")
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
        return list(pool.map(_cell_job, params))


SWEEP_CSV_HEADER = ("xi", "eta", "N", "t_final", "E", "e", "wall_seconds")


def write_sweep_csv(cells: Sequence[SweepCell], path: str | Path) -> None:
    """Machine-readable sweep table; failed cells carry nan errors."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_HEADER)
        for c in cells:
            writer.writerow([
                repr(c.xi),
                repr(c.eta),
                c.n,
                repr(c.t_final),
                repr(c.E),
                repr(c.e),
                f"{c.wall_seconds:.3f}",
            ])
