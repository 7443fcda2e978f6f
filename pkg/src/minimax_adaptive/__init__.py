"""Explicit minimax adaptive control for linear plants with unknown sign.

The plant ``x+ = iAx + Bu + w`` has an unknown constant ``i`` in ``{-1, +1}``.
This package synthesises the saturated adaptive controller from a game
Riccati equation, certifies it, evaluates the closed-form value function,
simulates the closed-loop game and checks the optimality results numerically.
"""

from .errors import (AmbiguousBracketError, DegenerateProblemError, DivergenceError,
                     InfeasibleAdversaryError, InfeasibleGameError, InvalidArgumentError,
                     MinimaxError, NonConvergenceError, NumericalError,
                     RiccatiInfeasibleError, SingularMatrixError, UnboundedGameError)
from .riccati import (GameSpec, RiccatiSolution, check_condition_ii, check_lower_bound,
                      classify, gamma_search, solve_riccati)
from .value import (ClosedFormValue, lemma_aa_minimax, v_bar0, v_bar1, v_star)
from .bellman import (SearchGrid, appendix_identity_check, bellman_apply, cdm_check_i_bruteforce,
                      cdm_check_ii, fixed_point_residual, value_iteration)
from .game import (AdversaryPolicy, InfoState, Trajectory, controller_u, dissipation_check,
                   simulate, update_info, worst_case_v)

__version__ = "0.1.0"
