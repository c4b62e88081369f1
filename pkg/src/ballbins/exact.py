"""Exact scalar and polynomial arithmetic.

Scalars are :class:`fractions.Fraction`.  Polynomials live in a fixed
universe of variables ``x_0, ..., x_{m}`` and are stored sparsely as a map
from exponent tuples to nonzero Fraction coefficients::

    x_0**2 * x_1 + 3   ->   {(2, 1): Fraction(1), (0, 0): Fraction(3)}

Stationary probabilities have denominators that are products of the prefix
sums ``y_k = x_0 + ... + x_k``, so :class:`PolyFraction` keeps its
denominator as a tuple of y-exponents and only expands it on demand.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from numbers import Rational as _RationalABC
from typing import Dict, Iterable, Mapping, Sequence, Tuple, Union

Rational = Fraction
Exponent = Tuple[int, ...]
Scalar = Union[int, Fraction]


def parse_rational(text: Union[str, int, Fraction]) -> Fraction:
    """Parse ``"p/q"``, an integer or a decimal string exactly ("0.25" -> 1/4)."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    s = str(text).strip()
    if not s:
        raise ValueError("empty rational")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational {text!r}") from exc


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _is_scalar(v) -> bool:
    return isinstance(v, (int, _RationalABC)) and not isinstance(v, bool)


class MultiPoly:
    """Sparse polynomial with Fraction coefficients in ``nvars`` variables."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponent, Scalar] | None = None):
        self.nvars = nvars
        clean: Dict[Exponent, Fraction] = {}
        if terms:
            for exps, coeff in terms.items():
                if len(exps) != nvars:
                    raise ValueError(f"exponent {exps} does not match {nvars} variables")
                if coeff:
                    clean[tuple(exps)] = Fraction(coeff)
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: Dict[Exponent, Fraction]) -> "MultiPoly":
        p = cls.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        p._hash = None
        return p

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls._raw(nvars, {})

    @classmethod
    def const(cls, nvars: int, value: Scalar) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def var(cls, nvars: int, idx: int) -> "MultiPoly":
        if not 0 <= idx < nvars:
            raise ValueError(f"variable x_{idx} outside universe of {nvars} variables")
        exps = [0] * nvars
        exps[idx] = 1
        return cls._raw(nvars, {tuple(exps): Fraction(1)})

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff: Scalar = 1) -> "MultiPoly":
        return cls(len(exps), {tuple(exps): coeff})

    # -- arithmetic ----------------------------------------------------
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError(
                    f"variable universes differ: {self.nvars} vs {other.nvars}")
            return other
        if _is_scalar(other):
            return MultiPoly.const(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return MultiPoly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if _is_scalar(other):
            other = Fraction(other)
            if not other:
                return MultiPoly.zero(self.nvars)
            return MultiPoly._raw(self.nvars, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: Dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly._raw(self.nvars, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not _is_scalar(other):
            return NotImplemented
        return self * (1 / Fraction(other))

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = MultiPoly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        if _is_scalar(other):
            return self == MultiPoly.const(self.nvars, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    # -- queries ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def evaluate(self, values: Sequence[Scalar]) -> Fraction:
        if len(values) < self.nvars:
            raise ValueError(f"need {self.nvars} values, got {len(values)}")
        vals = [Fraction(v) for v in values[: self.nvars]]
        total = Fraction(0)
        for exps, coeff in self.terms.items():
            term = coeff
            for v, e in zip(vals, exps):
                if e:
                    term *= v ** e
            total += term
        return total

    def substitute(self, mapping: Mapping[int, "MultiPoly"]) -> "MultiPoly":
        """Replace variables ``x_i`` (keys) by polynomials of the same universe."""
        for p in mapping.values():
            self._coerce(p)
        out = MultiPoly.zero(self.nvars)
        for exps, coeff in self.terms.items():
            kept = list(exps)
            term = MultiPoly.const(self.nvars, coeff)
            for i, sub in mapping.items():
                if exps[i]:
                    term = term * sub ** exps[i]
                    kept[i] = 0
            out = out + term * MultiPoly._raw(self.nvars, {tuple(kept): Fraction(1)})
        return out

    def to_json(self) -> list:
        return [{"exps": list(e), "coeff": format_rational(c)}
                for e, c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, nvars: int, data: Iterable[dict]) -> "MultiPoly":
        out = cls.zero(nvars)
        for t in data:
            out = out + cls(nvars, {tuple(t["exps"]): parse_rational(t["coeff"])})
        return out

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for exps, coeff in sorted(self.terms.items(), reverse=True):
            mono = "*".join(f"x{i}" + (f"^{e}" if e > 1 else "")
                            for i, e in enumerate(exps) if e)
            if not mono:
                parts.append(format_rational(coeff))
            elif coeff == 1:
                parts.append(mono)
            else:
                parts.append(f"{format_rational(coeff)}*{mono}")
        return " + ".join(parts)


def variables(nvars: int) -> list[MultiPoly]:
    """The rate variables ``[x_0, ..., x_{nvars-1}]``."""
    return [MultiPoly.var(nvars, i) for i in range(nvars)]


@lru_cache(maxsize=None)
def prefix_sum(nvars: int, k: int) -> MultiPoly:
    """``y_k = x_0 + ... + x_k`` expanded."""
    if not 0 <= k < nvars:
        raise ValueError(f"y_{k} needs x_0..x_{k} but universe has {nvars} variables")
    terms = {}
    for i in range(k + 1):
        e = [0] * nvars
        e[i] = 1
        terms[tuple(e)] = Fraction(1)
    return MultiPoly._raw(nvars, terms)


@lru_cache(maxsize=4096)
def _y_power(nvars: int, k: int, e: int) -> MultiPoly:
    if e == 0:
        return MultiPoly.const(nvars, 1)
    if e == 1:
        return prefix_sum(nvars, k)
    half = _y_power(nvars, k, e // 2)
    sq = half * half
    return sq * prefix_sum(nvars, k) if e & 1 else sq


def y_product(nvars: int, ypow: Sequence[int]) -> MultiPoly:
    """Expand ``prod_k y_k**ypow[k-1]``."""
    out = MultiPoly.const(nvars, 1)
    for k, e in enumerate(ypow, start=1):
        if e:
            out = out * _y_power(nvars, k, e)
    return out


def _trim(ypow: Sequence[int]) -> Tuple[int, ...]:
    ypow = list(ypow)
    while ypow and ypow[-1] == 0:
        ypow.pop()
    return tuple(ypow)


class PolyFraction:
    """``num / prod_k y_k**ypow[k-1]`` with ``num`` a :class:`MultiPoly`.

    No cancellation is attempted; two fractions are equal when their
    cross-products agree.
    """

    __slots__ = ("num", "ypow")

    def __init__(self, num: MultiPoly, ypow: Sequence[int] = ()):
        if any(e < 0 for e in ypow):
            raise ValueError("negative y exponent")
        ypow = _trim(ypow)
        if len(ypow) >= num.nvars:
            raise ValueError(f"y_{len(ypow)} is outside a universe of {num.nvars} variables")
        self.num = num
        self.ypow = ypow

    @property
    def nvars(self) -> int:
        return self.num.nvars

    @classmethod
    def const(cls, nvars: int, value: Scalar) -> "PolyFraction":
        return cls(MultiPoly.const(nvars, value))

    @property
    def den(self) -> MultiPoly:
        return y_product(self.nvars, self.ypow)

    def _lift(self, target: Sequence[int]) -> MultiPoly:
        extra = [t - (self.ypow[i] if i < len(self.ypow) else 0)
                 for i, t in enumerate(target)]
        return self.num * y_product(self.nvars, extra)

    def _coerce(self, other):
        if isinstance(other, PolyFraction):
            if other.nvars != self.nvars:
                raise ValueError("variable universes differ")
            return other
        if isinstance(other, MultiPoly):
            return PolyFraction(other)
        if _is_scalar(other):
            return PolyFraction.const(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        width = max(len(self.ypow), len(other.ypow))
        a = list(self.ypow) + [0] * (width - len(self.ypow))
        b = list(other.ypow) + [0] * (width - len(other.ypow))
        common = [max(i, j) for i, j in zip(a, b)]
        return PolyFraction(self._lift(common) + other._lift(common), common)

    __radd__ = __add__

    def __neg__(self):
        return PolyFraction(-self.num, self.ypow)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __mul__(self, other):
        if _is_scalar(other):
            return PolyFraction(self.num * other, self.ypow)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        width = max(len(self.ypow), len(other.ypow))
        a = list(self.ypow) + [0] * (width - len(self.ypow))
        b = list(other.ypow) + [0] * (width - len(other.ypow))
        return PolyFraction(self.num * other.num, [i + j for i, j in zip(a, b)])

    __rmul__ = __mul__

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return fraction_equal(self, other)

    __hash__ = None

    def evaluate(self, values: Sequence[Scalar]) -> Fraction:
        return self.num.evaluate(values) / self.den.evaluate(values)

    def to_json(self) -> dict:
        return {"nvars": self.nvars, "num": self.num.to_json(), "den_y_powers": list(self.ypow)}

    @classmethod
    def from_json(cls, data: dict) -> "PolyFraction":
        return cls(MultiPoly.from_json(data["nvars"], data["num"]), data["den_y_powers"])

    def __repr__(self):
        den = "*".join(f"y{k}" + (f"^{e}" if e > 1 else "")
                       for k, e in enumerate(self.ypow, start=1) if e)
        return f"({self.num!r})" + (f"/({den})" if den else "")


FractionLike = Union[PolyFraction, Tuple[MultiPoly, MultiPoly]]


def _num_den(f: FractionLike) -> Tuple[MultiPoly, MultiPoly]:
    if isinstance(f, PolyFraction):
        return f.num, f.den
    num, den = f
    return num, den


def fraction_equal(a: FractionLike, b: FractionLike) -> bool:
    """``a == b`` as rational functions, by cross-multiplication.

    Accepts :class:`PolyFraction` objects or plain ``(num, den)`` pairs of
    :class:`MultiPoly`.
    """
    an, ad = _num_den(a)
    bn, bd = _num_den(b)
    return an * bd == bn * ad


class UniPoly:
    """Dense univariate polynomial in ``lam``; ``coeffs[i]`` multiplies ``lam**i``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Scalar] = ()):
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def lam(cls) -> "UniPoly":
        return cls((0, 1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def _coerce(self, other):
        if isinstance(other, UniPoly):
            return other
        if _is_scalar(other):
            return UniPoly((other,))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return UniPoly(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self):
        return UniPoly(-c for c in self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self.coeffs or not other.coeffs:
            return UniPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return UniPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = UniPoly((1,))
        for _ in range(k):
            out = out * self
        return out

    def __divmod__(self, other):
        other = self._coerce(other)
        if not other.coeffs:
            raise ZeroDivisionError("division by the zero polynomial")
        rem = list(self.coeffs)
        lead = other.coeffs[-1]
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return UniPoly(), UniPoly(rem)
        quot = [Fraction(0)] * (dq + 1)
        for i in range(dq, -1, -1):
            q = rem[i + len(other.coeffs) - 1] / lead
            quot[i] = q
            if q:
                for j, c in enumerate(other.coeffs):
                    rem[i + j] -= q * c
        return UniPoly(quot), UniPoly(rem)

    def exact_div(self, other) -> "UniPoly":
        q, r = divmod(self, other)
        if r.coeffs:
            raise ArithmeticError("polynomial division is not exact")
        return q

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.coeffs == other.coeffs

    __hash__ = None

    def __bool__(self):
        return bool(self.coeffs)

    def __call__(self, value: Scalar) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * value + c
        return acc

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"{format_rational(c)}*lam^{i}"
                          for i, c in enumerate(self.coeffs) if c)
