"""Travelling waves of a parabolic-elliptic chemotaxis system with logistic source."""
__version__ = "0.1.0"

from .errors import (BudgetExceeded, ChemoWaveError, Divergence, DomainError,
                     InadmissibleParameters, NoConstruction, NoRoot, NotApplicable,
                     WindowUndefined)
from .params import (ModelParams, SpeedRange, WaveNumbers, admissible_window, chi_star,
                     constraint_values, denominator, is_admissible, m_tau, mu_from_speed,
                     mu_max, wave_speed)
from .field import (Grid, Profile, field_derivative, solve_field_kernel, solve_field_ode,
                    verify_field_bounds)
from .envelope import (Envelope, EnvelopeConstants, build_envelope, membership, residual,
                       verify_all, verify_sub, verify_sub_shifted, verify_super_constant,
                       verify_super_phi)
from .wave import (Trajectory, WaveProfile, decay_rate, evolve_coupled, evolve_frozen,
                   fixed_point_wave, front_speed, long_time_limit, stationary_residual)
from .spectra import (EigenProblem, dirichlet_length, neumann_dirichlet_length,
                      nonexistence_certificate, principal_eigen)
