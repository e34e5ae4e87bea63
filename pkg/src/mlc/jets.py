"""Forward-mode Taylor jets for scalar fields of two variables.

A Jet2Scalar carries the value of a scalar field together with its
partial derivatives up to third order at a single point.  Arithmetic
propagates the product and chain rules exactly, so any quantity built
from jets (Christoffel symbols, curvature tensors, covariant
derivatives of curvature) has exact derivatives up to the tracked
order.  There is no step-size truncation error anywhere, only
roundoff.

Order bookkeeping: leaves (coordinates, constants) start at order 3
and ``partial`` lowers the order by one.  Combining jets of different
orders yields the minimum of the two orders; derivative slots above a
jet's order are meaningless and must not be read.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import UsageError

__all__ = ["Jet2Scalar", "exp", "promote", "reciprocal", "sqrt"]


def _sym3_mix(second, first):
    # second[ab] * first[c], symmetrized over the three index placements
    out = np.einsum("ab,c->abc", second, first)
    out += np.einsum("ac,b->abc", second, first)
    out += np.einsum("bc,a->abc", second, first)
    return out


class Jet2Scalar:
    """Degree-3 truncated Taylor data of a scalar in two variables.

    value  : f(p)
    first  : (2,) gradient
    second : (2, 2) symmetric Hessian
    third  : (2, 2, 2) totally symmetric third derivatives
    order  : highest derivative slot that is meaningful
    """

    __slots__ = ("value", "first", "second", "third", "order")

    def __init__(self, value, first=None, second=None, third=None, order=3):
        self.value = float(value)
        self.first = np.zeros(2) if first is None else np.asarray(first, dtype=float)
        self.second = np.zeros((2, 2)) if second is None else np.asarray(second, dtype=float)
        self.third = np.zeros((2, 2, 2)) if third is None else np.asarray(third, dtype=float)
        self.order = int(order)

    @classmethod
    def constant(cls, value):
        return cls(value)

    @classmethod
    def coordinate(cls, value, axis):
        """The coordinate function x (axis 0) or y (axis 1) at a point."""
        if axis not in (0, 1):
            raise UsageError("coordinate axis must be 0 or 1, got %r" % (axis,))
        first = np.zeros(2)
        first[axis] = 1.0
        return cls(value, first)

    def partial(self, axis):
        """Jet of the partial derivative; one order lower than self."""
        if axis not in (0, 1):
            raise UsageError("partial axis must be 0 or 1, got %r" % (axis,))
        if self.order < 1:
            raise UsageError("cannot differentiate an order-0 jet")
        return Jet2Scalar(
            self.first[axis],
            self.second[axis].copy(),
            self.third[axis].copy(),
            None,
            order=self.order - 1,
        )

    # arithmetic ------------------------------------------------------

    def __add__(self, other):
        other = promote(other)
        return Jet2Scalar(
            self.value + other.value,
            self.first + other.first,
            self.second + other.second,
            self.third + other.third,
            min(self.order, other.order),
        )

    __radd__ = __add__

    def __neg__(self):
        return Jet2Scalar(-self.value, -self.first, -self.second, -self.third, self.order)

    def __sub__(self, other):
        return self + (-promote(other))

    def __rsub__(self, other):
        return (-self) + promote(other)

    def __mul__(self, other):
        other = promote(other)
        f0, g0 = self.value, other.value
        fa, ga = self.first, other.first
        fA, gA = self.second, other.second
        second = fA * g0 + f0 * gA + np.outer(fa, ga) + np.outer(ga, fa)
        third = self.third * g0 + f0 * other.third
        third += _sym3_mix(fA, ga) + _sym3_mix(gA, fa)
        return Jet2Scalar(
            f0 * g0,
            fa * g0 + f0 * ga,
            second,
            third,
            min(self.order, other.order),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * reciprocal(promote(other))

    def __rtruediv__(self, other):
        return promote(other) * reciprocal(self)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise UsageError("jet powers must be nonnegative integers")
        out = Jet2Scalar.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    def compose(self, p0, p1, p2, p3):
        """Jet of phi(f) given the scalar derivatives of phi at f.value."""
        a, A = self.first, self.second
        second = p2 * np.outer(a, a) + p1 * A
        third = p3 * np.einsum("a,b,c->abc", a, a, a) + p2 * _sym3_mix(A, a) + p1 * self.third
        return Jet2Scalar(p0, p1 * a, second, third, self.order)

    def __repr__(self):
        return "Jet2Scalar(%.6g, d=%s, order=%d)" % (self.value, self.first, self.order)


def promote(obj):
    """Wrap a plain number as a constant jet; pass jets through."""
    if isinstance(obj, Jet2Scalar):
        return obj
    return Jet2Scalar.constant(float(obj))


def reciprocal(f):
    f = promote(f)
    v = f.value
    if v == 0.0:
        raise UsageError("reciprocal of a jet with zero value")
    return f.compose(1.0 / v, -1.0 / v**2, 2.0 / v**3, -6.0 / v**4)


def sqrt(f):
    f = promote(f)
    v = f.value
    if v <= 0.0:
        raise UsageError("sqrt needs a positive jet value, got %g" % v)
    r = math.sqrt(v)
    return f.compose(r, 0.5 / r, -0.25 / (v * r), 0.375 / (v * v * r))


def exp(f):
    f = promote(f)
    e = math.exp(f.value)
    return f.compose(e, e, e, e)
