"""Exception hierarchy.

``InputError`` covers anything the caller got wrong (ranges, formats, shapes).
``InfeasibleError`` and ``CapacityError`` signal that the request is valid but
the modeled hardware cannot satisfy it; the CLI maps the two families to
distinct exit codes.
"""


class PolyEOError(Exception):
    pass


class InputError(PolyEOError, ValueError):
    pass


class RangeError(InputError):
    pass


class FormatError(InputError):
    pass


class ShapeError(InputError):
    pass


class MappingError(InputError):
    pass


class StepSizeError(InputError):
    pass


class InfeasibleError(PolyEOError):
    pass


class CapacityError(PolyEOError):
    pass


class SaturationError(CapacityError):
    pass


class BusyError(PolyEOError):
    pass


class IndeterminateLevelError(PolyEOError):
    """Port transmission fell between the logic-0 and logic-1 thresholds."""


class StabilityError(PolyEOError):
    pass
