"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all errors raised by dispersive_lab."""


class ParameterError(LabError, ValueError):
    pass


class DomainError(LabError, ValueError):
    """Argument outside the region where a formula is defined."""


class UnsupportedOrderError(DomainError):
    pass


class PotentialError(LabError):
    """A potential failed to evaluate or violates the transversal gauge."""


class PositivityError(LabError):
    """The shifted angular operator P = L + (n-2)^2/4 is not strictly positive."""

    def __init__(self, mu0, n):
        self.mu0 = float(mu0)
        self.n = int(n)
        shift = (n - 2) ** 2 / 4
        super().__init__(
            f"P not strictly positive: lowest angular eigenvalue mu_0 = {self.mu0:.12g} "
            f"gives mu_0 + (n-2)^2/4 = {self.mu0 + shift:.3g} <= 0 (n = {n})"
        )


class ScenarioError(LabError):
    pass
