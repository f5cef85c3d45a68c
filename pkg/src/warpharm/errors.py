"""Exception hierarchy shared by all modules."""


class WarpHarmError(Exception):
    """Base class for every error raised by the package."""


class InvalidAlgebra(WarpHarmError, ValueError):
    pass


class AmbiguousSigns(WarpHarmError, ValueError):
    """A structure constant is too close to zero to classify reliably."""


class NotUnit(WarpHarmError, ValueError):
    pass


class OutOfDomain(WarpHarmError, ValueError):
    pass


class NonPositiveInitial(WarpHarmError, ValueError):
    pass


class DomainCollapse(WarpHarmError):
    def __init__(self, t_star, reason="f reached f_min_tol"):
        self.t_star = float(t_star)
        self.reason = reason
        super().__init__(f"domain collapse at t={self.t_star:.12g} ({reason})")


class EmptyDomain(WarpHarmError, ValueError):
    pass


class SingularWarp(WarpHarmError, ValueError):
    pass


class NoCase(WarpHarmError):
    """The harmonicity system admits no warp constant for this field."""


class BadParams(WarpHarmError, ValueError):
    pass


class BadRegime(WarpHarmError, ValueError):
    pass


class SingularMetric(WarpHarmError, ValueError):
    pass


class SchemaError(WarpHarmError, ValueError):
    def __init__(self, errors):
        # errors: list of (json_path, message)
        self.errors = list(errors)
        msg = "; ".join(f"{p}: {m}" for p, m in self.errors)
        super().__init__(msg)
