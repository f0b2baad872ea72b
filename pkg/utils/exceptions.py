class IDPINNError(Exception):
    """Base class for every error raised by this package"""

    error_type = "idpinn_error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details


# ================== AUTODIFF ==================

class TapeMismatchError(IDPINNError):
    error_type = "tape_mismatch"


class JetShapeError(IDPINNError):
    error_type = "jet_shape"


class UnsupportedOrderError(IDPINNError):
    error_type = "unsupported_order"


class JetOrderError(IDPINNError):
    error_type = "jet_order"


# ================== NETWORK / PROBLEMS / GEOMETRY ==================

class DimensionMismatchError(IDPINNError):
    error_type = "dimension_mismatch"


class OracleConvergenceError(IDPINNError):
    error_type = "oracle_convergence"


class PoolExhaustedError(IDPINNError):
    error_type = "pool_exhausted"


# ================== TRAINING / METRICS / CONFIG ==================

class UndefinedMetricError(IDPINNError):
    error_type = "undefined_metric"


class DivergenceError(IDPINNError):
    error_type = "divergence"


class ConfigError(IDPINNError):
    error_type = "invalid_config"


class MissingArtifactError(IDPINNError):
    error_type = "missing_artifact"
