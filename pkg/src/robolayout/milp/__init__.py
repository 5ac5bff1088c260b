"""Self-contained MILP: bounded revised simplex plus best-first branch-and-bound."""
from .bnb import TIMEOUT, MilpSolution, SolverParams, presolve, solve_milp
from .lpformat import read_lp, read_solution, write_lp, write_solution
from .model import EQ, GE, LE, MilpModel, ModelBuilder, family_of
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, BoundedSimplex, LpSolution, solve_lp

__all__ = [
    "EQ", "GE", "LE", "INFEASIBLE", "OPTIMAL", "TIMEOUT", "UNBOUNDED",
    "BoundedSimplex", "LpSolution", "MilpModel", "MilpSolution", "ModelBuilder",
    "SolverParams", "family_of", "presolve", "read_lp", "read_solution", "solve_lp",
    "solve_milp", "write_lp", "write_solution",
]
