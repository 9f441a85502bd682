"""Exception hierarchy shared by all rankrelax modules."""


class RankRelaxError(Exception):
    """Base class for all library errors."""


class ConfigError(RankRelaxError):
    """Invalid configuration value or combination."""


class NonPositiveJacobian(RankRelaxError):
    """det(F) <= 0 where a positive Jacobian is required."""


class IndexOutOfRange(RankRelaxError, IndexError):
    """Multi-index outside the lattice ranges."""


class OutOfDomain(RankRelaxError):
    """Query point outside the lattice bounding box."""


class SpecMismatch(RankRelaxError):
    """Two fields built over different lattice specifications."""


class TooFewPoints(RankRelaxError):
    """Fewer than two samples supplied to the 1-D envelope."""


class EmptySet(RankRelaxError):
    """Direction-set parameters admit no entries."""


class MissingForest(RankRelaxError):
    """Tree construction requested without a tracked lamination history."""


class HmViolation(RankRelaxError):
    """A lamination branching pair fails the rank-one connectivity test."""


class MaterialError(RankRelaxError):
    """Material evaluation failure with element/quadrature context."""


class NoConvergence(RankRelaxError):
    """Nonlinear solve failed to converge at a load step."""

    def __init__(self, step, iterations, residual=None):
        self.step = step
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence at load step {step} after {iterations} iterations"
            + (f" (residual {residual:.3e})" if residual is not None else "")
        )


class SingularTangent(RankRelaxError):
    """Assembled tangent matrix is singular or badly conditioned."""


class IoError(RankRelaxError):
    """File input/output failure surfaced by the CLI."""
