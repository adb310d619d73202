"""Zero-determinant strategies in repeated threshold public goods and
snowdrift games."""

__version__ = "0.1.0"

from .errors import (InfeasibleParameters, InvalidSpec, NoFeasibleSlope,
                     NotEnforceable, NotFound, SlopeAtOne, SlopeOutOfRange,
                     StateSpaceTooLarge)
from .games import (AssumptionReport, Family, GameSpec, PayoffTable,
                    check_social_dilemma, payoff_table, pgg_payoffs, sdg_payoffs)
from .regions import (RegionGrid, SlopeBound, equalizer_exists,
                      numeric_slope_bound, pgg_extortionate_bound,
                      pgg_generous_bound, region_sweep, sdg_extortionate_bound,
                      sdg_generous_bound)
from .verify import (PayoffOutcome, StrategyProfile, exact_discounted_payoffs,
                     random_memory_one, relation_residual, simulate_monte_carlo)
from .zd import (LBounds, MemoryOneStrategy, ZDClass, ZDParameters, construct_zd,
                 enforceable, feasible_phi_interval, l_bounds,
                 min_enforceable_delta, payoff_vector_coplayers,
                 payoff_vector_self)
