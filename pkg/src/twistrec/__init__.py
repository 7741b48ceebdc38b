"""Twisted recurrence experiments for expanding interval maps.

Certified orbit arithmetic for beta-maps, the Gauss map, similarity IFS
expanders and circle rotations, with Monte Carlo estimators for the
measures of A_n = {x : d(T^n x, f(x)) < psi(n)}.
"""

from .algebraic import AlgebraicReal, GOLDEN, GOLDEN_ALPHA, TRIBONACCI, quadratic
from .certified import CertifiedPoint
from .errors import (BranchStraddle, ConfigError, DegenerateBall, DigitOverflow, ExplosionGuard,
                     IndeterminateExcess, PieceStraddle, PrecisionExhausted, TwistrecError, Unsupported,
                     ZeroDenominator)
from .systems import (SystemSpec, apply, beta_system, branch_index, gauss_system, ifs_system, iterate,
                      orbit, parse_system, required_precision, rotation_system)
from .measures import (BallMeasureBracket, MeasureEstimate, ball_measure, density, interval_measure,
                       sample, wilson_interval)
from .cylinders import (CylinderGeom, CylinderWord, ParryCoding, count_cylinders, cylinders_of_order,
                        full_subcylinder, is_admissible, kj_sum, parry_digits)
from .targets import PsiSpec, parse_psi, series_class, series_partial
from .twists import TwistSpec, commutes_with, eval_twist, parse_twist
from .estimators import (HitRecord, QuasiIndependenceReport, chung_erdos_bound, estimate_mu_An,
                         estimate_pairwise, hit_statistics, hit_test, posmeas_bound, verdict)
from .conditions import (check_ahlfors, check_conformality, check_distortion, check_expanding,
                         check_kj_sum, check_pseudo_markov, condition_report, estimate_mixing)

__version__ = "0.1.0"
