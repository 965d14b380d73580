"""De Gennes and Chen-Lubensky smectic-A models under strong fields.

Double-well potentials and transition costs, discrete energies with exact
gradients, gradient-flow solvers, a 1D truncated-Newton minimizer and
sharp-interface convergence studies.
"""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    CHEN_LUBENSKY,
    DEGENNES,
    DivergenceError,
    FlowConfig,
    FlowResult,
    MonotonicityWarning,
    SimState,
    initial_condition,
    run_flow,
    step_cl,
    step_degennes,
)
from .energy import (  # noqa: E402
    EnergyBreakdown,
    ModelParams,
    energy_cl_1d,
    energy_cl_2d,
    energy_cl_3d,
    energy_degennes_2d,
    energy_degennes_3d,
    sharp_interface_energy_cl,
    sharp_interface_energy_dg,
    variational_gradient,
)
from .gamma import (  # noqa: E402
    ChevronReport,
    ConstructionError,
    convergence_study,
    detect_chevron,
    recovery_profile,
)
from .geodesics import GeodesicResult, c0_quadrature, closed_form, discrete_shortest_path  # noqa: E402
from .grid import (  # noqa: E402
    DirectorField,
    Grid,
    GridError,
    ScalarField,
    helmholtz_solve,
    make_grid,
    read_snapshot,
    spectral_diff,
    write_snapshot,
)
from .minimize1d import NonConvergenceError, ProfileState, WrapError, minimize_profile  # noqa: E402
from .potentials import (  # noqa: E402
    CLWellSpec,
    ParameterError,
    WellSpec,
    angle_well,
    cl_well,
    degennes_well,
    phi_transform,
    w_cl_theta,
    w_degennes,
)
