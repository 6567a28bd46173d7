"""
Exceptions raised by forestmfg
"""


class ForestMFGException(Exception):
    pass


class ValidationError(ForestMFGException, ValueError):
    pass


class DomainError(ValidationError):
    pass


class WellPosednessError(ValidationError):
    pass


class DegenerateSampleError(ValidationError):
    pass


class FOSDViolation(ValidationError):
    pass


class WeakInstrumentError(ValidationError):
    pass


class MalformedRowError(ValidationError):
    def __init__(self, path, line, reason):
        self.path = path
        self.line = line
        self.reason = reason
        ValidationError.__init__(self, "%s, line %d: %s" % (path, line, reason))


class ConvergenceError(ForestMFGException):
    def __init__(self, message, residual=None, profile=None):
        self.residual = residual
        self.profile = profile
        if residual is not None:
            message = "%s (residual %.3e)" % (message, residual)
        ForestMFGException.__init__(self, message)


class QuadratureError(ConvergenceError):
    pass
