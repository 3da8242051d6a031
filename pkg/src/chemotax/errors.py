"""Exception hierarchy shared across the package.

ValidationError maps to CLI exit status 1, NumericalError to exit status 2.
"""

from __future__ import annotations


class ChemotaxError(Exception):
    """Base class for all package errors."""


class ValidationError(ChemotaxError):
    """Bad inputs: manifests, parameters, missing files."""


class NumericalError(ChemotaxError):
    """A run failed numerically (overflowing probabilities, Newton, CFL)."""


class ProbabilityOverflowError(NumericalError):
    """Directional movement probabilities summed above 1 at some lattice site.

    Flags parameter sets that violate the eta*psi(.) <= 1 feasibility
    assumption in effect; carries the offending site and step.
    """

    def __init__(self, process: str, site, step: int, total: float):
        self.process = process
        self.site = site
        self.step = step
        self.total = total
        super().__init__(
            f"{process} probabilities sum to {total:.6g} > 1 at site {site}, step {step}"
        )


class NewtonDivergenceError(NumericalError):
    """Newton iterations exhausted; carries the last residual."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"Newton failed to converge after {iterations} iterations "
            f"(last max-residual {residual:.6g})"
        )


class CFLViolationError(NumericalError):
    """Explicit 2D step size exceeds the documented stability estimate."""

    def __init__(self, dt: float, dt_bound: float):
        self.dt = dt
        self.dt_bound = dt_bound
        super().__init__(f"dt={dt:.6g} exceeds explicit stability bound {dt_bound:.6g}")
