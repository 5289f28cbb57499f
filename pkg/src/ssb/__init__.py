"""Spectral smoothed-boundary solver for reaction-diffusion PDEs.

Solves no-flux problems on irregular 2D domains by embedding the domain in a
periodic rectangle through a smoothed indicator function, differentiating
pseudo-spectrally, and time-stepping with Strang splitting (exact Fourier
diffusion plus an explicit midpoint stage for the remainder).
"""

__version__ = "0.1.0"

from .analysis import (
    ErrorReport,
    SweepCell,
    boundary_flux,
    convergence_sweep,
    error_report,
    reference_solve,
    run_heat_cell,
    steady_annulus,
    steady_annulus_xy,
    write_sweep_csv,
)
from .geometry import (
    Annulus,
    Circle,
    Difference,
    Intersection,
    Polygon,
    RasterMask,
    Rectangle,
    Sector,
    Shape,
    Union,
    annulus_shape,
    boundary_points,
    contains,
    enlarged_domain,
    load_mask,
    quarter_annulus_shape,
    rasterize,
    zhole_annulus,
)
from .grid import Field2, Grid2, eta, make_grid, wavenumbers
from .models import (
    FentonKarmaParams,
    ReactionModel,
    allen_cahn,
    allen_cahn_ic,
    fenton_karma,
    fenton_karma_rest_state,
    heat_with_source,
    voltage_mv,
)
from .phasefield import PhaseField, advective_term, gaussian_kernel, smooth
from .spectral import SpectralEngine
from .stepper import BlowUpError, SolverState, SplitStepper, default_dt

__all__ = [
    "__version__",
    "Annulus",
    "BlowUpError",
    "Circle",
    "Difference",
    "ErrorReport",
    "Field2",
    "FentonKarmaParams",
    "Grid2",
    "Intersection",
    "PhaseField",
    "Polygon",
    "RasterMask",
    "ReactionModel",
    "Rectangle",
    "Sector",
    "Shape",
    "SolverState",
    "SpectralEngine",
    "SplitStepper",
    "SweepCell",
    "Union",
    "advective_term",
    "allen_cahn",
    "allen_cahn_ic",
    "annulus_shape",
    "boundary_flux",
    "boundary_points",
    "contains",
    "convergence_sweep",
    "default_dt",
    "enlarged_domain",
    "error_report",
    "eta",
    "fenton_karma",
    "fenton_karma_rest_state",
    "gaussian_kernel",
    "heat_with_source",
    "load_mask",
    "make_grid",
    "quarter_annulus_shape",
    "rasterize",
    "reference_solve",
    "run_heat_cell",
    "smooth",
    "steady_annulus",
    "steady_annulus_xy",
    "voltage_mv",
    "wavenumbers",
    "write_sweep_csv",
    "zhole_annulus",
]
