"""Exception types shared across the library."""


class GaugemechError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(GaugemechError):
    pass


class AntisymmetryViolation(GaugemechError):
    pass


class JacobiViolation(GaugemechError):
    def __init__(self, residual, message=None):
        self.residual = float(residual)
        super().__init__(message or f"Jacobi residual {self.residual:.3e} above tolerance")


class UnknownPreset(GaugemechError):
    pass


class NotASubalgebra(GaugemechError):
    pass


class NotAnIdeal(GaugemechError):
    pass


class InvalidParams(GaugemechError):
    pass


class NotRankZero(GaugemechError):
    pass


class DifferentialNotVanishing(GaugemechError):
    def __init__(self, grad_norm, message=None):
        self.grad_norm = float(grad_norm)
        super().__init__(message or f"|dH| = {self.grad_norm:.3e} does not vanish on the base submanifold")


class BaseBlockSingular(GaugemechError):
    pass


class NotAutomorphism(GaugemechError):
    pass


class SingularBlock(GaugemechError):
    pass


class IndexOutOfRange(GaugemechError):
    pass


class NonFiniteState(GaugemechError):
    def __init__(self, step, message=None):
        self.step = int(step)
        super().__init__(message or f"non-finite state encountered at step {self.step}")


class NewtonDivergence(GaugemechError):
    pass


class SingularMetric(GaugemechError):
    pass


class UnknownGroup(GaugemechError):
    pass


class NotSu2Triple(GaugemechError):
    pass


class UnsupportedPower(GaugemechError):
    pass


class InvalidScenario(GaugemechError):
    pass
