"""Exception types shared across the package."""


class DrivenSSHError(Exception):
    """Base class for package errors."""


class UnsupportedConfigurationError(DrivenSSHError):
    pass


class NumericalError(DrivenSSHError):
    """A propagation or decomposition step failed or breached its tolerance."""


class GaugeError(DrivenSSHError):
    """Invariants were requested outside the time-symmetric frame (theta != 0)."""


class SymmetryBrokenError(DrivenSSHError):
    """Half-period micromotion lost the block structure chiral symmetry implies."""


class ClassificationError(DrivenSSHError):
    pass


class NotInPhaseError(DrivenSSHError):
    """No localized 0/pi mode pair was found at the requested location."""


class InsufficientDataError(DrivenSSHError):
    pass


class UnsupportedInteractionError(DrivenSSHError):
    pass


class GeometryError(DrivenSSHError):
    pass


class DataError(DrivenSSHError):
    """Malformed or inconsistent input table or configuration."""


class ConfigError(DataError):
    pass
