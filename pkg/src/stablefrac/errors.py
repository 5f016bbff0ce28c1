"""Exception hierarchy shared by all modules."""


class StableFracError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(StableFracError):
    pass


class ParseError(StableFracError):
    pass


class ValidationError(StableFracError):
    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(str(v) for v in report.violations))


class GenerationExhausted(StableFracError):
    pass


class InvalidMatching(StableFracError):
    pass


class BoundExceeded(StableFracError):
    pass


class WeightInvariantViolated(StableFracError):
    pass


class WeightsNotConvex(StableFracError):
    pass


class NotDoublyStochastic(StableFracError):
    pass


class CycleEncountered(StableFracError):
    pass


class InvalidRotation(StableFracError):
    pass


class NumericBlowup(StableFracError):
    pass


class InternalInstabilityBug(StableFracError):
    """The solver produced a matching that its own verifier rejects."""


class WeightLpAnomaly(StableFracError):
    """No non-integral weights were found for a residual that should admit them."""


class FamilyTooLarge(StableFracError):
    pass
