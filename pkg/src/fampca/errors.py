"""Exception hierarchy.

Two branches matter for the CLI exit codes: ValidationError (bad inputs or
infeasible requests, exit code 2) and NumericalError (a computation that was
attempted but failed numerically, exit code 3).
"""


class FamPcaError(Exception):
    """Base class for all package errors."""


class ValidationError(FamPcaError):
    """Input or configuration rejected before any real computation."""


class NumericalError(FamPcaError):
    """A numerical routine failed on otherwise valid input."""


class MonomorphicSnp(ValidationError):
    """One or more SNP rows have zero variance and cannot be standardized."""

    def __init__(self, rows):
        self.rows = list(rows)
        shown = ", ".join(str(r) for r in self.rows[:10])
        more = "" if len(self.rows) <= 10 else f" (+{len(self.rows) - 10} more)"
        super().__init__(
            f"{len(self.rows)} monomorphic SNP row(s) cannot be scaled: "
            f"rows [{shown}]{more}; drop them first"
        )


class MissingGenotypes(ValidationError):
    """Missing entries present while the policy demands complete data."""


class DimensionMismatch(ValidationError):
    """Array shapes or index sets do not line up."""


class ZeroVarianceColumn(ValidationError):
    """A genotype column is constant, so column correlations are undefined."""


class TooFewSingletons(ValidationError):
    """An operation needs at least two unrelated individuals."""


class StratumMismatch(ValidationError):
    """Stratum labels do not cover the individuals being evaluated."""


class EmptyStratumPart(ValidationError):
    """A stratum has no members in a required part of the related/unrelated split."""


class DegenerateColumn(ValidationError):
    """A score column is identically zero where variation is required."""


class InsufficientPoints(ValidationError):
    """Too few points for the requested smoothing window."""


class InfeasibleDesign(ValidationError):
    """Simulation design parameters cannot be satisfied exactly.

    Carries a `suggestion` string describing the nearest feasible choice.
    """

    def __init__(self, message, suggestion=None):
        self.suggestion = suggestion
        if suggestion:
            message = f"{message}; nearest feasible: {suggestion}"
        super().__init__(message)


class ParseError(ValidationError):
    """A file does not conform to its documented format."""


class UnknownId(ValidationError):
    """An identifier referenced in one input is absent from another."""


class ConvergenceFailure(NumericalError):
    """An iterative decomposition did not converge."""


class NotPositiveDefinite(NumericalError):
    """A matrix required to be (semi)definite has disqualifying eigenvalues."""


class DegenerateFamily(NumericalError):
    """A family block cannot be whitened or rotated (zero or parallel vectors)."""
