class OZBaseException(Exception):
    pass


# FLOW CONTROL
class FailButContinue(OZBaseException):
    pass


class FailCatastrophically(OZBaseException):
    pass


# CONFIGURATION & IO
class InvalidConfigurationError(FailCatastrophically):
    pass


class MatrixFormatError(FailCatastrophically):
    pass


# INPUT VALIDATION
class ShapeMismatchError(FailButContinue):
    pass


class NonFiniteInputError(FailButContinue):
    pass


# NUMBER THEORY & PLANNING
class ModulusError(FailButContinue):
    pass


class BudgetError(FailButContinue):
    pass


class PreconditionError(FailButContinue):
    pass


class SliceWidthError(FailButContinue):
    pass


class ExponentRangeError(FailButContinue):
    pass


# RECONSTRUCTION & VERIFICATION
class AmbiguityError(FailButContinue):
    """The uniqueness window 2 * c_max < M does not hold; the result may have several candidates."""


class NoSolutionError(FailButContinue):
    pass


class ToleranceError(FailButContinue):
    pass
