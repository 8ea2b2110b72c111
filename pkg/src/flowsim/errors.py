"""Exception types raised across the package."""


class FlowSimError(Exception):
    """Base class for all flowsim errors."""


class InvalidParameterError(FlowSimError, ValueError):
    pass


class NoGatewayError(FlowSimError):
    """No access point or sink serves the sensor's network."""


class NoRouteError(FlowSimError):
    """The node is not part of the controller map."""


class UndefinedRatioError(FlowSimError, ZeroDivisionError):
    pass


class UnknownFeatureError(FlowSimError, KeyError):
    pass


class InvalidModelError(FlowSimError, ValueError):
    pass


class ConfigError(FlowSimError):
    """Malformed experiment spec file.

    Carries the offending line number and field when known so the CLI can
    point at the exact spot.
    """

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
