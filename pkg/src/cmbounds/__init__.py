"""Computational tools for denominators of genus-2 CM class invariants.

Submodules:

* ``qalg``      definite quaternion algebras, maximal orders, short vectors
* ``quadcm``    binary forms, the elliptic j-function, Hilbert and modular polynomials
* ``ssgraph``   supersingular j-invariants and minimal isogeny degrees
* ``cmfield``   primitive quartic CM fields, their orders, ideals and class groups
* ``embed``     the finite search for embeddings of O_K into End(E1 x E2)
* ``siegel``    genus-2 theta constants, Siegel modular forms, Igusa invariants
* ``classpoly`` CM points, Igusa class polynomials, curve-side invariants
* ``cli``       command-line front end
"""

__version__ = "0.1.0"


class CMBoundsError(Exception):
    """Base class for errors raised by the package."""

    exit_code = 1


class InvalidInput(CMBoundsError, ValueError):
    exit_code = 2


class PrecisionExhausted(CMBoundsError, ArithmeticError):
    """Numerical recognition failed even after precision escalation."""

    exit_code = 3


class BudgetExceeded(CMBoundsError, RuntimeError):
    exit_code = 4
