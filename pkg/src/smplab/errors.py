"""Exception hierarchy shared by all solver modules."""


class SMPError(Exception):
    """Base class for every error raised by smplab."""


class NonIntegrableSingularity(SMPError):
    pass


class OutOfDomain(SMPError):
    pass


class SignStructureViolation(SMPError):
    pass


class PrerequisiteFailed(SMPError):
    pass


class NoSignChange(SMPError):
    pass


class NotFlat(SMPError):
    pass


class MeshMisaligned(SMPError):
    pass


class SolverDiverged(SMPError):
    pass


class NoConvergence(SMPError):
    pass


class BallNotInterior(SMPError):
    pass


class DegenerateRatio(SMPError):
    pass


class SubsolutionCheckFailed(SMPError):
    def __init__(self, message, node=None, defect=None):
        super().__init__(message)
        self.node = node
        self.defect = defect


class CertificateFailed(SMPError):
    def __init__(self, message, node=None, gap=None):
        super().__init__(message)
        self.node = node
        self.gap = gap


class PositivityPrerequisiteFailed(SMPError):
    pass


class ResolventNotPositive(SMPError):
    pass


class IterationStalled(SMPError):
    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}


class BracketViolated(SMPError):
    pass


class OrthogonalityViolated(SMPError):
    pass


class ConfigError(SMPError):
    """Malformed or schema-violating run configuration (CLI exit code 1)."""


class HypothesisWarning(UserWarning):
    """A positivity hypothesis failed; the computation continues without its guarantee."""
