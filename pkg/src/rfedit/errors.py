"""Exception hierarchy shared across the package."""


class RfEditError(Exception):
    """Base class for all errors raised by rfedit."""


class NotSpd(RfEditError, ValueError):
    """A matrix failed Cholesky factorisation (non-positive pivot)."""


class InvalidSchedule(RfEditError, ValueError):
    pass


class DegenerateStep(RfEditError, ValueError):
    pass


class FieldError(RfEditError):
    """A velocity field could not be evaluated at the requested point."""


class UnknownCondition(RfEditError, KeyError):
    pass


class ScheduleMismatch(RfEditError, ValueError):
    pass


class InvalidConfig(RfEditError, ValueError):
    pass


class DimMismatch(RfEditError, ValueError):
    pass


class ParseError(RfEditError, ValueError):
    """Malformed input file. ``where`` names the line or field at fault."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class ValidationError(InvalidConfig):
    """Config violates one or more invariants; ``problems`` lists all of them."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class RunFailed(RfEditError):
    """One experiment cell failed; ``run`` names the method and seed."""

    def __init__(self, run, cause):
        self.run = run
        super().__init__(f"{run}: {type(cause).__name__}: {cause}")
