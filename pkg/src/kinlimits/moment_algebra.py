"""Exact polynomial algebra in velocity space weighted by the unit Maxwellian.

Polynomials in ``(v1, v2, v3)`` carry :class:`fractions.Fraction` coefficients,
and every inner product ``<p, q>_M = int p q M dv`` is evaluated in closed form
from one-dimensional Gaussian moments.  Nothing in this module rounds.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Union

import numpy as np

Exponent = tuple[int, int, int]
Scalar = Union[int, Fraction]

__all__ = [
    "VelocityPolynomial",
    "gaussian_moment",
    "inner_product",
    "kernel_basis",
    "project_collision_invariants",
    "make_A",
    "make_B",
    "const",
    "v",
    "speed_squared",
]


def _as_fraction(c: Scalar) -> Fraction:
    if isinstance(c, float):
        raise TypeError("floats are not accepted; pass int or Fraction")
    return Fraction(c)


class VelocityPolynomial:
    """Sparse polynomial ``sum c_abc v1^a v2^b v3^c`` with rational coefficients.

    Instances are treated as immutable values: arithmetic returns new objects
    and zero coefficients are never stored.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Exponent, Scalar] | None = None):
        clean: dict[Exponent, Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != 3 or min(exp) < 0:
                raise ValueError(f"bad exponent triple {exp!r}")
            c = _as_fraction(c)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if not clean[exp]:
                    del clean[exp]
        self._terms = clean
        self._hash = None

    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    @property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, exp: Exponent) -> Fraction:
        return self._terms.get(tuple(exp), Fraction(0))

    # arithmetic -----------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "VelocityPolynomial":
        if isinstance(other, VelocityPolynomial):
            return other
        return VelocityPolynomial({(0, 0, 0): other})

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for exp, c in other._terms.items():
            out[exp] = out.get(exp, Fraction(0)) + c
        return VelocityPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return VelocityPolynomial({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, VelocityPolynomial):
            c = _as_fraction(other)
            return VelocityPolynomial({e: c * x for e, x in self._terms.items()})
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return VelocityPolynomial(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (Fraction(1) / _as_fraction(other))

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, VelocityPolynomial):
            try:
                other = self._coerce(other)
            except TypeError:
                return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # evaluation -----------------------------------------------------------
    def __call__(self, v1, v2, v3):
        """Evaluate in floating point (used to sample onto velocity grids)."""
        v1, v2, v3 = (np.asarray(x, dtype=float) for x in (v1, v2, v3))
        out = np.zeros(np.broadcast(v1, v2, v3).shape)
        for (a, b, c), coef in self._terms.items():
            out = out + float(coef) * v1**a * v2**b * v3**c
        return out

    def __repr__(self):
        if not self._terms:
            return "VelocityPolynomial(0)"
        parts = []
        for (a, b, c), coef in sorted(self._terms.items(), key=lambda t: (-sum(t[0]), t[0])):
            mono = "*".join(
                f"v{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate((a, b, c)) if e
            )
            parts.append(f"{coef}" + (f"*{mono}" if mono else ""))
        return "VelocityPolynomial(" + " + ".join(parts) + ")"


def const(c: Scalar) -> VelocityPolynomial:
    return VelocityPolynomial({(0, 0, 0): c})


def v(i: int) -> VelocityPolynomial:
    """Velocity component ``v_i`` for ``i`` in 1..3."""
    if i not in (1, 2, 3):
        raise ValueError("axis must be 1, 2 or 3")
    exp = [0, 0, 0]
    exp[i - 1] = 1
    return VelocityPolynomial({tuple(exp): 1})


def speed_squared() -> VelocityPolynomial:
    return VelocityPolynomial({(2, 0, 0): 1, (0, 2, 0): 1, (0, 0, 2): 1})


@lru_cache(maxsize=None)
def _double_factorial_odd(e: int) -> int:
    # (e-1)!! for even e, with (-1)!! = 1
    out = 1
    for k in range(e - 1, 0, -2):
        out *= k
    return out


def gaussian_moment(a: int, b: int, c: int) -> Fraction:
    """``int v1^a v2^b v3^c M dv`` for the unit Maxwellian ``M``."""
    if min(a, b, c) < 0:
        raise ValueError("exponents must be nonnegative")
    if a % 2 or b % 2 or c % 2:
        return Fraction(0)
    return Fraction(_double_factorial_odd(a) * _double_factorial_odd(b) * _double_factorial_odd(c))


def expectation(p: VelocityPolynomial) -> Fraction:
    """``<p, 1>_M``."""
    return sum((c * gaussian_moment(*e) for e, c in p._terms.items()), Fraction(0))


def inner_product(p: VelocityPolynomial, q: VelocityPolynomial) -> Fraction:
    """Exact ``<p, q>_M``."""
    total = Fraction(0)
    for e1, c1 in p._terms.items():
        for e2, c2 in q._terms.items():
            a, b, c = e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]
            if a % 2 or b % 2 or c % 2:
                continue
            total += c1 * c2 * gaussian_moment(a, b, c)
    return total


def kernel_basis() -> list[VelocityPolynomial]:
    """Collision invariants ``1, v1, v2, v3, |v|^2``."""
    return [const(1), v(1), v(2), v(3), speed_squared()]


def _orthogonal_kernel_basis() -> list[VelocityPolynomial]:
    # 1, v_i and |v|^2 - 3 are mutually M-orthogonal
    return [const(1), v(1), v(2), v(3), speed_squared() - 3]


def project_collision_invariants(p: VelocityPolynomial) -> VelocityPolynomial:
    """M-orthogonal projection of ``p`` onto span{1, v1, v2, v3, |v|^2}."""
    out = VelocityPolynomial()
    for e in _orthogonal_kernel_basis():
        coef = inner_product(p, e) / inner_product(e, e)
        if coef:
            out = out + e * coef
    return out


def _check_axis(i: int) -> None:
    if i not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {i!r}")


def make_A(i: int) -> VelocityPolynomial:
    """Heat-flux moment ``A_i = (|v|^2 - 5) v_i / 2``."""
    _check_axis(i)
    return (speed_squared() - 5) * v(i) * Fraction(1, 2)


def make_B(i: int, j: int) -> VelocityPolynomial:
    """Traceless stress moment ``B_ij = v_i v_j - |v|^2 delta_ij / 3``."""
    _check_axis(i)
    _check_axis(j)
    out = v(i) * v(j)
    if i == j:
        out = out - speed_squared() * Fraction(1, 3)
    return out


def from_terms(items: Iterable[tuple[Exponent, Scalar]]) -> VelocityPolynomial:
    return VelocityPolynomial(dict(items))
