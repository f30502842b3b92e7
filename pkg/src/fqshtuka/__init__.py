"""Exact computations with finite and local shtukas over small F_q-algebras,
their group schemes, Verschiebung, Anderson-module towers and deformations."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .field import FqField, field_for
from .algebra import (AlgebraHom, FdAlgebra, base_algebra, bivariate_truncated,
                      finite_field_algebra, quotient, residue_field, tensor,
                      truncated_polynomial, with_zeta)
from .zseries import ZMatrix, ZSeries, divide_by_z_minus_zeta, parse_series, solve_series
from .shtuka import (FiniteShtuka, LocalShtuka, boundedness_check, colie,
                     decompose_etale_nilpotent, dual, internal_hom, nilpotence_checks,
                     sequence_check, tate_object, tate_twist, tensor as tensor_shtukas,
                     truncate, verschiebung)
from .drinfeld import (Presentation, TestAlgebra, catalog, order, points,
                       presentation, radicial_check)
from .hopf import (balanced_check, canonical_deformation, mq_roundtrip,
                   mu_p_obstruction, primitives, strictness_check)
from .anderson import (AndersonTower, DeformationProblem, build_tower, deform_lift,
                       equivalence_check, frobenius_kernel_check, hodge_filtration,
                       omega_stabilization, point_flatness_check, restrict_to_small,
                       zd_verschiebung_check)
