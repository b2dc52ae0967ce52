"""Exception hierarchy shared by all frontlim modules."""


class FrontlimError(Exception):
    """Base class for all frontlim errors."""


class SpecError(FrontlimError):
    """A configuration, model or experiment spec violates an invariant.

    The message names the violated invariant. The CLI maps this to exit
    code 2.
    """


class NoInterfaceError(SpecError):
    """Signed-distance construction was asked for a one-signed field."""


class NumericalError(FrontlimError):
    """A solver produced non-finite values.

    The message names the solver and the step at which the blow-up was
    detected. The CLI maps this to exit code 3.
    """
