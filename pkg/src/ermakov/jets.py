"""Second-order jets: truncated Taylor arithmetic ``(f, f', f'')``.

Generator coefficients are written once as ordinary expressions in
``theta`` and ``u``; evaluating them on jets yields exact first and second
total derivatives along a curve (or exact partials when one argument is
seeded with a unit derivative).
"""

from __future__ import annotations

import math


class Jet:
    __slots__ = ("v", "d1", "d2")

    def __init__(self, v, d1=0.0, d2=0.0):
        self.v = float(v)
        self.d1 = float(d1)
        self.d2 = float(d2)

    def __repr__(self):
        return f"Jet({self.v!r}, {self.d1!r}, {self.d2!r})"

    def __add__(self, o):
        if isinstance(o, Jet):
            return Jet(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
        return Jet(self.v + o, self.d1, self.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.d1, -self.d2)

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, Jet):
            return Jet(
                self.v * o.v,
                self.d1 * o.v + self.v * o.d1,
                self.d2 * o.v + 2 * self.d1 * o.d1 + self.v * o.d2,
            )
        return Jet(self.v * o, self.d1 * o, self.d2 * o)

    __rmul__ = __mul__

    def reciprocal(self):
        return compose(self, 1 / self.v, -1 / self.v**2, 2 / self.v**3)

    def __truediv__(self, o):
        if isinstance(o, Jet):
            return self * o.reciprocal()
        return Jet(self.v / o, self.d1 / o, self.d2 / o)

    def __rtruediv__(self, o):
        return self.reciprocal() * o

    def __pow__(self, n):
        if n == 2:
            return self * self
        v = self.v
        return compose(self, v**n, n * v ** (n - 1), n * (n - 1) * v ** (n - 2))


def compose(inner, g0, g1, g2):
    """Jet of ``g(inner)`` given ``g, g', g''`` evaluated at ``inner.v``."""
    if not isinstance(inner, Jet):
        return g0
    return Jet(g0, g1 * inner.d1, g2 * inner.d1**2 + g1 * inner.d2)


def sin(a):
    if isinstance(a, Jet):
        s, c = math.sin(a.v), math.cos(a.v)
        return compose(a, s, c, -s)
    return math.sin(a)


def cos(a):
    if isinstance(a, Jet):
        s, c = math.sin(a.v), math.cos(a.v)
        return compose(a, c, -s, -c)
    return math.cos(a)


def value(a) -> float:
    return a.v if isinstance(a, Jet) else float(a)


def d1(a) -> float:
    return a.d1 if isinstance(a, Jet) else 0.0


def d2(a) -> float:
    return a.d2 if isinstance(a, Jet) else 0.0
