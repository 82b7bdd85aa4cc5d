"""Theory back-ends: exact linear programming and interval reasoning."""
from .icp import icp_check, replay_refutation
from .interval import exact_interval, interval_eval
from .simplex import InfeasibleInput, Sat, Simplex, Unknown, Unsat, lp_extremum, lp_feasible

__all__ = [
    "InfeasibleInput", "Sat", "Simplex", "Unknown", "Unsat", "exact_interval",
    "icp_check", "interval_eval", "lp_extremum", "lp_feasible", "replay_refutation",
]
