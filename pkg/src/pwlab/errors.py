"""Exception hierarchy shared by all pwlab modules."""


class PwlabError(Exception):
    """Base class for all pwlab errors."""


class InvalidSpec(PwlabError):
    """Domain specification violates a structural constraint (size, mode count)."""


class PoincareViolation(InvalidSpec):
    """lambda_1 + beta <= 0: the quadratic form is not coercive on this domain."""


class SizeMismatch(PwlabError):
    """Field or coefficient vector length does not match the domain."""


class ZeroField(PwlabError):
    """Operation undefined for the zero field."""


class NegativeInput(PwlabError):
    """Argument must be nonnegative."""


class DeltaOutOfRange(PwlabError):
    """delta outside [0, d] where the well geometry requires it."""


class PreconditionViolated(PwlabError):
    """A stated hypothesis (e.g. J(u) <= d - delta) does not hold."""


class NonConvergence(PwlabError):
    """Iterative solver exhausted its iteration budget."""


class SignFlip(PwlabError):
    """Ground-state iterate developed a significant negative part."""


class BracketingFailure(PwlabError):
    """Shooting solver found no sign change inside the search bracket."""


class CertificationFailure(PwlabError):
    """A trial field beat the computed minimum on the constraint set."""

    def __init__(self, message, trial_index=None, trial_value=None):
        super().__init__(message)
        self.trial_index = trial_index
        self.trial_value = trial_value


class BlowUpDetected(PwlabError):
    """State norm crossed the blow-up threshold."""

    def __init__(self, message, t=None, h01_norm=None):
        super().__init__(message)
        self.t = t
        self.h01_norm = h01_norm


class NonFinite(PwlabError):
    """State contains NaN or Inf."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class InsufficientSamples(PwlabError):
    """Too few trajectory samples for the requested diagnostic."""


class NonPositiveEnergy(PwlabError):
    """Energy not positive on the requested fit window."""


class WindowOutOfRange(PwlabError):
    """Requested time window not covered by the trajectory."""


class NoDissipation(PwlabError):
    """Observability ratio undefined: no energy was dissipated on the window."""


class NotKPlus(PwlabError):
    """State is not in the K+ set, as required by the operation."""


class ConfigError(PwlabError):
    """Scenario configuration is malformed."""
