"""Exception types shared across the package."""

__all__ = ["SolverFailure"]


class SolverFailure(RuntimeError):
    """Numerical breakdown in a factorization or linear solve.

    Carries the ensemble context when raised during an inversion so callers
    can log, freeze or reject the offending candidate instead of crashing.

    Attributes
    ----------
    member : int or None
        Index of the ensemble member whose solve failed, if applicable.
    iteration : int or None
        Inversion iteration at which the failure occurred, if applicable.
    """

    def __init__(self, message, *, member=None, iteration=None):
        context = []
        if iteration is not None:
            context.append(f"iteration {iteration}")
        if member is not None:
            context.append(f"member {member}")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)
        self.member = member
        self.iteration = iteration
