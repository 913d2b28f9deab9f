class SublinearError(Exception):
    """Base class for every error raised by the package"""
    pass

class ContractViolationError(SublinearError):
    """An oracle or local procedure was called outside its contract
    (index out of range, non-canonical edge id, wrong endpoint)"""
    pass

class InstanceValidationError(SublinearError):
    """A set system or metric instance violates its invariants"""
    pass

class ConfigurationError(SublinearError):
    """Estimator parameters are out of range or incompatible with the instance"""
    pass

class SizeLimitExceededError(SublinearError):
    """An exact solver was asked for an instance beyond its enforced size limit"""
    pass

class DegenerateDataError(SublinearError):
    """Not enough distinct data to fit an exponent"""
    pass

class RunCancelledError(SublinearError):
    """A racing run was cancelled between two oracle calls"""
    pass

class ExperimentError(SublinearError):
    """An experiment spec cannot be executed"""
    pass
