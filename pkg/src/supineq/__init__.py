"""Sup-type geometric inequalities on grids: sup functionals, rearrangements,
conformal lifts, competing-symmetries iterations and counterexample families."""

__version__ = "0.1.0"
