"""Extended costs: non-negative rationals (or floats) plus an absorbing infinity.

Costs are plain ``Fraction`` (default, exact) or ``float`` values, with the
singleton ``INF`` as the unique infinite element.  ``INF`` absorbs addition
and compares strictly above every finite cost, so ordinary ``+``, ``<`` and
``sum`` work on mixed values.
"""

from __future__ import annotations

from fractions import Fraction


class _Infinity:
    """The unique infinite cost.  Never instantiate; use ``INF``."""

    _singleton = None

    def __new__(cls):
        if cls._singleton is None:
            cls._singleton = super().__new__(cls)
        return cls._singleton

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __sub__(self, other):
        if other is self:
            raise ArithmeticError("INF - INF is undefined")
        return self

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __eq__(self, other):
        return other is self

    def __ne__(self, other):
        return other is not self

    def __hash__(self):
        return hash("vcsp-infinity")

    def __repr__(self):
        return "inf"


INF = _Infinity()

#: Default tolerance for cost comparisons in floating mode.
FLOAT_TOL = 1e-9


def is_finite(c):
    return c is not INF


def cost_le(a, b, tol=0):
    """a <= b up to tolerance, with INF handled exactly."""
    if a is INF:
        return b is INF
    if b is INF:
        return True
    return a <= b + tol


def cost_eq(a, b, tol=0):
    if a is INF or b is INF:
        return a is b
    if tol:
        return abs(a - b) <= tol
    return a == b


def parse_cost(token, float_mode=False, line=None):
    """Parse a cost token: ``inf``, an integer, a decimal, or ``p/q``."""
    from .errors import FormatError

    if token == "inf":
        return INF
    try:
        value = Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"bad cost {token!r}", line=line) from None
    if value < 0:
        raise FormatError(f"negative cost {token!r}", line=line)
    return float(value) if float_mode else value


def format_cost(c):
    if c is INF:
        return "inf"
    if isinstance(c, Fraction):
        return str(c)
    return repr(c)
