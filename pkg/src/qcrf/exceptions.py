"""Exception hierarchy shared by the library and the command line."""


class InputError(ValueError):
    """Inputs violate a documented precondition (shape, range, size guard)."""


class InfeasibleError(InputError):
    """A variable has no finite-cost label."""


class FormatError(InputError):
    """A serialized file is malformed.

    Parameters
    ----------
    message : str
        Human readable description.
    offset : int
        Byte offset in the file at which the problem was detected.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UndefinedResultError(ArithmeticError):
    """The requested quantity is mathematically undefined for the inputs."""


class InvariantError(RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""
