"""Trajectory representation of quantum motion at step barriers and square wells.

Closed-form solution pairs, Hamilton's characteristic function, reflection
times, Goos-Haenchen shifts, libration observables, bound-state quantization
and the constants-of-motion inversion, with independent numerical oracles.
"""

from .basis import BasisSample, eval_basis, eval_basis_barrier, eval_basis_well, wronskian, wronskian_norm
from .core import (
    BarrierScenario,
    ConvergenceError,
    DomainError,
    DuctScenario,
    IllConditionedError,
    MeasurementInconsistency,
    Microstate,
    ObliqueScenario,
    UnitSystem,
    WellScenario,
    derive_wavenumbers,
    total_energy,
    validate_microstate,
)
from .hj_engine import (
    TrajectoryPoint,
    conjugate_momentum,
    hamilton_characteristic,
    hj_residual,
    sample_trajectory,
    trajectory_time,
    trajectory_y,
)
from .observables import (
    ConsistencyReport,
    MotionConstants,
    gh_displacement_barrier,
    gh_displacements_duct,
    libration_displacement,
    libration_period,
    motion_constants,
    overdetermination_check,
    recover_coefficients,
    reflection_time_barrier,
    reflection_times_well,
)
from .quantization import BoundLevel, action_variable, level_of, symmetric_levels

__version__ = "0.1.0"
