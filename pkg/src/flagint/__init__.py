"""Multiplicative integration of matrix-valued forms.

Path holonomy of connections, surface holonomy of 2-flags, curvature and
Bianchi checks, monodromy of flat connections and small cohomology
computations, with a JSON-driven command line on top.
"""

from __future__ import annotations

from flagint.algebra import (
    commutator,
    conjugate,
    group_distance,
    group_inverse,
    mat_exp,
    mat_log,
    random_algebra_element,
    random_unimodular,
)
from flagint.cohomology import (
    alpha_class,
    conjugacy_invariants,
    discrepancy_S1,
    monodromy_representation,
    same_alpha_class,
)
from flagint.errors import (
    ConfigError,
    DimensionError,
    FlagintError,
    InvalidInputError,
    NotIntegrableError,
    OutOfDomainError,
    SingularMatrixError,
)
from flagint.forms import (
    ConnectionForm,
    FormFlag,
    GaugeFunction,
    TwoForm,
    covariant_ext_derivative,
    curvature,
    flatness_residual,
    gauge_transform_connection,
    gauge_transform_curvature,
    preset_alpha_connection,
    preset_constant,
    preset_cr_connection,
    random_gauge_function,
    random_polynomial_connection,
)
from flagint.holonomy import (
    Word,
    boundary_loop_holonomy,
    cube_boundary_holonomy,
    loop_curvature_estimate,
    path_holonomy,
    refine,
    surface_holonomy,
    word_holonomy,
)
from flagint.lattice import HomotopySpec, PathSpec, lattice_2d, sample_path

__version__ = "0.1.0"

__all__ = [
    "alpha_class",
    "boundary_loop_holonomy",
    "commutator",
    "ConfigError",
    "conjugacy_invariants",
    "conjugate",
    "ConnectionForm",
    "covariant_ext_derivative",
    "cube_boundary_holonomy",
    "curvature",
    "DimensionError",
    "discrepancy_S1",
    "FlagintError",
    "flatness_residual",
    "FormFlag",
    "gauge_transform_connection",
    "gauge_transform_curvature",
    "GaugeFunction",
    "group_distance",
    "group_inverse",
    "HomotopySpec",
    "InvalidInputError",
    "lattice_2d",
    "loop_curvature_estimate",
    "mat_exp",
    "mat_log",
    "monodromy_representation",
    "NotIntegrableError",
    "OutOfDomainError",
    "path_holonomy",
    "PathSpec",
    "preset_alpha_connection",
    "preset_constant",
    "preset_cr_connection",
    "random_algebra_element",
    "random_gauge_function",
    "random_polynomial_connection",
    "random_unimodular",
    "refine",
    "same_alpha_class",
    "sample_path",
    "SingularMatrixError",
    "surface_holonomy",
    "TwoForm",
    "Word",
    "word_holonomy",
]
