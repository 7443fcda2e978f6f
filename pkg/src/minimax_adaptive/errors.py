"""Exception types raised across the package."""


class MinimaxError(Exception):
    """Base class for all errors raised by :mod:`minimax_adaptive`."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class InvalidArgumentError(MinimaxError, ValueError):
    code = "invalid-argument"


class NumericalError(MinimaxError, ArithmeticError):
    code = "numerical-error"


class SingularMatrixError(NumericalError):
    code = "singular-matrix"

    def __init__(self, message, smallest_abs_eig=None):
        super().__init__(message)
        self.smallest_abs_eig = smallest_abs_eig

    def to_dict(self):
        d = super().to_dict()
        d["smallest_abs_eig"] = self.smallest_abs_eig
        return d


class DegenerateProblemError(NumericalError):
    code = "degenerate-problem"


class RiccatiInfeasibleError(MinimaxError):
    """The Riccati recursion left the admissible set ``0 < P < gamma^2 I``."""

    code = "gamma-too-small"

    def __init__(self, message, iterate=None, iteration=None, constraint=None):
        super().__init__(message)
        self.iterate = iterate
        self.iteration = iteration
        self.constraint = constraint

    def to_dict(self):
        d = super().to_dict()
        d["iteration"] = self.iteration
        d["constraint"] = self.constraint
        d["iterate"] = None if self.iterate is None else self.iterate.tolist()
        return d


class NonConvergenceError(NumericalError):
    code = "non-convergence"

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations

    def to_dict(self):
        d = super().to_dict()
        d["residual"] = self.residual
        d["iterations"] = self.iterations
        return d


class AmbiguousBracketError(MinimaxError):
    code = "ambiguous-bracket"


class UnboundedGameError(MinimaxError):
    code = "unbounded-game"


class DivergenceError(MinimaxError):
    code = "divergence"


class InfeasibleAdversaryError(MinimaxError):
    code = "infeasible-adversary"


class InfeasibleGameError(MinimaxError):
    """The requested operation needs a game that is at least not provably infeasible."""

    code = "infeasible-game"
