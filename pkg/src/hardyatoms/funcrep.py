"""Exact piecewise representation of finite sums of ``c * x**k * ln(x)**m``.

The class is closed under the Hardy operator, its dual, addition and scaling,
so atoms and their operator images can be integrated in closed form.
Pieces are half-open ``[lo, hi)``; a point belongs to the piece that starts
at or before it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DivergenceError, DomainError, UnsupportedTermError

MIN_POWER = -2
MAX_LOG_EXP = 2
SIGN_SAMPLES = 1024


@dataclass(frozen=True)
class Term:
    """One summand ``coeff * x**power * ln(x)**log_exp``."""

    coeff: float
    power: int
    log_exp: int = 0

    def __post_init__(self):
        if not math.isfinite(self.coeff):
            raise DomainError(f"term coefficient must be finite, got {self.coeff}")
        if int(self.power) != self.power or self.power < MIN_POWER:
            raise UnsupportedTermError(f"power {self.power} outside integer range >= {MIN_POWER}")
        if self.log_exp not in (0, 1, 2):
            raise UnsupportedTermError(f"log exponent {self.log_exp} not in {{0, 1, 2}}")
        object.__setattr__(self, "power", int(self.power))
        object.__setattr__(self, "coeff", float(self.coeff))


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi < math.inf):
            raise DomainError(f"interval needs 0 <= lo < hi < inf, got ({self.lo}, {self.hi})")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


@dataclass(frozen=True)
class Piece:
    interval: Interval
    terms: tuple[Term, ...]

    @property
    def lo(self) -> float:
        return self.interval.lo

    @property
    def hi(self) -> float:
        return self.interval.hi


@dataclass(frozen=True)
class GeneralizedPiecewiseFunction:
    """Sorted, disjoint pieces; zero outside them.

    ``tail`` marks an unbounded ``tail / x`` continuation to the right of the
    last piece. It is only produced by the Hardy operator on inputs with
    nonzero mean.
    """

    pieces: tuple[Piece, ...] = ()
    tail: float = 0.0
    _los: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        for a, b in zip(pieces, pieces[1:]):
            if b.lo < a.hi:
                raise DomainError("pieces must be sorted and pairwise disjoint")
        if self.tail and not pieces:
            raise DomainError("a tail needs at least one piece to anchor it")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "tail", float(self.tail))
        object.__setattr__(self, "_los", np.array([p.lo for p in pieces]))

    @property
    def support(self) -> Interval | None:
        if not self.pieces:
            return None
        return Interval(self.pieces[0].lo, self.pieces[-1].hi)

    @property
    def end(self) -> float:
        return self.pieces[-1].hi if self.pieces else 0.0

    @property
    def is_zero(self) -> bool:
        return self.tail == 0.0 and all(not p.terms for p in self.pieces)

    def breakpoints(self) -> list[float]:
        pts = set()
        for p in self.pieces:
            pts.add(p.lo)
            pts.add(p.hi)
        return sorted(pts)

    def __call__(self, x):
        return evaluate(self, x)

    def __add__(self, other):
        return linear_combine([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        return linear_combine([(1.0, self), (-1.0, other)])

    def __mul__(self, scalar: float):
        return linear_combine([(float(scalar), self)])

    __rmul__ = __mul__

    def __neg__(self):
        return linear_combine([(-1.0, self)])


PiecewiseFunction = GeneralizedPiecewiseFunction


# ---------------------------------------------------------------- construction


def piece(lo: float, hi: float, terms: Iterable[Term | tuple]) -> Piece:
    ts = tuple(t if isinstance(t, Term) else Term(*t) for t in terms)
    return Piece(Interval(lo, hi), combine_terms(ts))


def from_pieces(spec: Iterable[tuple[float, float, Iterable]], tail: float = 0.0) -> GeneralizedPiecewiseFunction:
    """Build from ``(lo, hi, terms)`` triples; terms may be ``Term`` or tuples."""
    return GeneralizedPiecewiseFunction(tuple(piece(lo, hi, ts) for lo, hi, ts in spec), tail)


def polynomial(coeffs: Sequence[float], lo: float, hi: float) -> GeneralizedPiecewiseFunction:
    """Single piece ``sum(coeffs[k] * x**k)`` on ``[lo, hi)``."""
    return from_pieces([(lo, hi, [Term(c, k) for k, c in enumerate(coeffs) if c != 0.0])])


def step_function(breaks: Sequence[float], values: Sequence[float]) -> GeneralizedPiecewiseFunction:
    if len(breaks) != len(values) + 1:
        raise DomainError("need one more break than values")
    return from_pieces(
        [(breaks[i], breaks[i + 1], [Term(v, 0)] if v != 0.0 else []) for i, v in enumerate(values)]
    )


ZERO = GeneralizedPiecewiseFunction()


# ---------------------------------------------------------------- term algebra


def combine_terms(terms: Iterable[Term]) -> tuple[Term, ...]:
    """Merge like terms, drop zeros, order by (power, log_exp)."""
    acc: dict[tuple[int, int], float] = {}
    for t in terms:
        key = (t.power, t.log_exp)
        acc[key] = acc.get(key, 0.0) + t.coeff
    return tuple(Term(c, k, m) for (k, m), c in sorted(acc.items()) if c != 0.0)


def multiply_terms(a: Sequence[Term], b: Sequence[Term]) -> tuple[Term, ...]:
    out = []
    for s in a:
        for t in b:
            if s.log_exp + t.log_exp > MAX_LOG_EXP:
                raise UnsupportedTermError("product would need ln(x)**3")
            out.append(Term(s.coeff * t.coeff, s.power + t.power, s.log_exp + t.log_exp))
    return combine_terms(out)


def power_terms(terms: Sequence[Term], n: int) -> tuple[Term, ...]:
    out: tuple[Term, ...] = (Term(1.0, 0),)
    for _ in range(n):
        out = multiply_terms(out, terms)
    return out


def _antiderivative_one(t: Term) -> list[Term]:
    k, m, c = t.power, t.log_exp, t.coeff
    if k == -1:
        if m + 1 > MAX_LOG_EXP:
            raise UnsupportedTermError("integral of ln(x)**2 / x needs ln(x)**3")
        return [Term(c / (m + 1), 0, m + 1)]
    n = k + 1
    if m == 0:
        return [Term(c / n, n)]
    if m == 1:
        return [Term(c / n, n, 1), Term(-c / n**2, n)]
    return [Term(c / n, n, 2), Term(-2.0 * c / n**2, n, 1), Term(2.0 * c / n**3, n)]


def antiderivative(terms: Sequence[Term]) -> tuple[Term, ...]:
    """Term-by-term primitive with zero constant of integration."""
    out: list[Term] = []
    for t in terms:
        out.extend(_antiderivative_one(t))
    return combine_terms(out)


def eval_terms(terms: Sequence[Term], x):
    """Evaluate a term list at ``x > 0`` (scalar or array)."""
    if np.ndim(x) == 0:
        x = float(x)
        lx = math.log(x) if any(t.log_exp for t in terms) else 0.0
        s = 0.0
        for t in terms:
            v = t.coeff * x**t.power
            if t.log_exp:
                v *= lx**t.log_exp
            s += v
        return s
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    lx = np.log(x) if any(t.log_exp for t in terms) else None
    for t in terms:
        v = t.coeff * x**t.power
        if t.log_exp:
            v = v * lx**t.log_exp
        out += v
    return out


def eval_terms_derivative(terms: Sequence[Term], x):
    """Derivative of a term list, evaluated numerically (no power cap)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    lx = np.log(x)
    for t in terms:
        k, m, c = t.power, t.log_exp, t.coeff
        if k:
            out += c * k * x ** (k - 1.0) * lx**m
        if m:
            out += c * m * x ** (k - 1.0) * lx ** (m - 1)
    return out


def terms_limit_at_zero(terms: Sequence[Term]) -> float:
    """Right limit at 0; raises when it is infinite."""
    val = 0.0
    for t in terms:
        if t.power > 0:
            continue
        if t.power == 0 and t.log_exp == 0:
            val += t.coeff
            continue
        raise DomainError("function is unbounded at 0 (not integrable from 0)")
    return val


def antiderivative_value(prim: Sequence[Term], x: float) -> float:
    if x == 0.0:
        return terms_limit_at_zero(prim)
    return eval_terms(prim, x)


def shift_power(f: GeneralizedPiecewiseFunction, k: int) -> GeneralizedPiecewiseFunction:
    """Multiply by ``x**k``."""
    if f.tail:
        raise DomainError("cannot reweight a function with an unbounded tail")
    return GeneralizedPiecewiseFunction(
        tuple(Piece(p.interval, tuple(Term(t.coeff, t.power + k, t.log_exp) for t in p.terms)) for p in f.pieces)
    )


def times_log(f: GeneralizedPiecewiseFunction) -> GeneralizedPiecewiseFunction:
    """Multiply by ``ln x``."""
    if f.tail:
        raise DomainError("cannot reweight a function with an unbounded tail")
    pieces = []
    for p in f.pieces:
        if any(t.log_exp >= MAX_LOG_EXP for t in p.terms):
            raise UnsupportedTermError("product would need ln(x)**3")
        pieces.append(Piece(p.interval, tuple(Term(t.coeff, t.power, t.log_exp + 1) for t in p.terms)))
    return GeneralizedPiecewiseFunction(tuple(pieces))


def dilate(f: GeneralizedPiecewiseFunction, lam: float, amplitude: float = 1.0) -> GeneralizedPiecewiseFunction:
    """Return ``x -> amplitude * f(lam * x)``."""
    if lam <= 0:
        raise DomainError("dilation factor must be positive")
    ll = math.log(lam)
    pieces = []
    for p in f.pieces:
        out = []
        for t in p.terms:
            base = amplitude * t.coeff * lam**t.power
            for j in range(t.log_exp + 1):
                c = base * comb(t.log_exp, j) * ll ** (t.log_exp - j)
                if c != 0.0:
                    out.append(Term(c, t.power, j))
        pieces.append(Piece(Interval(p.lo / lam, p.hi / lam), combine_terms(out)))
    return GeneralizedPiecewiseFunction(tuple(pieces), amplitude * f.tail / lam)


# ---------------------------------------------------------------- evaluation


def _piece_index(f: GeneralizedPiecewiseFunction, x):
    idx = np.searchsorted(f._los, x, side="right") - 1
    return idx


def evaluate(f: GeneralizedPiecewiseFunction, x):
    """Pointwise value at ``x > 0``; vectorised over arrays."""
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa <= 0) or np.any(np.isnan(xa)):
        raise DomainError("evaluation requires x > 0")
    out = np.zeros_like(xa)
    if f.pieces:
        idx = _piece_index(f, xa)
        for i, p in enumerate(f.pieces):
            mask = (idx == i) & (xa < p.hi)
            if p.terms and mask.any():
                out[mask] = eval_terms(p.terms, xa[mask])
        if f.tail:
            mask = xa >= f.end
            out[mask] = f.tail / xa[mask]
    return float(out[0]) if scalar else out


def definite_integral(f: GeneralizedPiecewiseFunction, a: float, b: float) -> float:
    """Exact integral over ``[a, b]`` from closed-form primitives."""
    if not (0.0 <= a <= b):
        raise DomainError(f"need 0 <= a <= b, got a={a}, b={b}")
    total = 0.0
    for p in f.pieces:
        lo, hi = max(p.lo, a), min(p.hi, b)
        if lo >= hi or not p.terms:
            continue
        prim = antiderivative(p.terms)
        total += antiderivative_value(prim, hi) - antiderivative_value(prim, lo)
    if f.tail and b > f.end:
        if math.isinf(b):
            raise DivergenceError("integral of c/x tail diverges at infinity")
        total += f.tail * (math.log(b) - math.log(max(a, f.end)))
    return total


def total_integral(f: GeneralizedPiecewiseFunction) -> float:
    if not f.pieces:
        return 0.0
    return definite_integral(f, 0.0, f.end)


def absolute_mass_scale(f: GeneralizedPiecewiseFunction) -> float:
    """Sum of the absolute per-term integrals; a cancellation-free size scale."""
    s = 0.0
    for p in f.pieces:
        for t in p.terms:
            prim = antiderivative((t,))
            s += abs(antiderivative_value(prim, p.hi) - antiderivative_value(prim, p.lo))
    return s


# ---------------------------------------------------------------- combination


def linear_combine(fs: Sequence[tuple[float, GeneralizedPiecewiseFunction]]) -> GeneralizedPiecewiseFunction:
    """Pointwise ``sum(lam * f)`` over the union of the input breakpoints."""
    fs = [(float(lam), f) for lam, f in fs]
    tails = [(lam, f) for lam, f in fs if f.tail and lam]
    if tails:
        horizon = max(f.end for _, f in fs)
        fs = [(lam, _materialize_tail(f, horizon)) for lam, f in fs]
    pts = sorted({x for _, f in fs for x in f.breakpoints()})
    pieces = []
    for lo, hi in zip(pts, pts[1:]):
        ts: list[Term] = []
        for lam, f in fs:
            if lam == 0.0:
                continue
            for p in f.pieces:
                if p.lo <= lo and hi <= p.hi:
                    ts.extend(Term(lam * t.coeff, t.power, t.log_exp) for t in p.terms)
                    break
        terms = combine_terms(ts)
        if terms:
            pieces.append(Piece(Interval(lo, hi), terms))
    tail = sum(lam * f.tail for lam, f in fs)
    if tail and not pieces:
        pieces.append(Piece(Interval(pts[-2], pts[-1]), ()))
    if tail and pieces[-1].hi < pts[-1]:
        pieces.append(Piece(Interval(pieces[-1].hi, pts[-1]), ()))
    return GeneralizedPiecewiseFunction(tuple(pieces), tail)


def _materialize_tail(f: GeneralizedPiecewiseFunction, horizon: float) -> GeneralizedPiecewiseFunction:
    if not f.tail or f.end >= horizon:
        return f
    extra = Piece(Interval(f.end, horizon), (Term(f.tail, -1),))
    return GeneralizedPiecewiseFunction(f.pieces + (extra,), f.tail)


# ---------------------------------------------------------------- sign changes


def sign_change_points(f: GeneralizedPiecewiseFunction, tol: float = 1e-13, samples: int = SIGN_SAMPLES) -> list[float]:
    """Interior points where ``f`` changes sign, each to within ``tol``.

    Roots are bracketed by dense sampling of each piece and refined with
    Brent's method. Zeros where ``f`` touches 0 without changing sign may be
    missed, as may pairs of roots closer together than the sample spacing.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    out: list[float] = []
    for p in f.pieces:
        out.extend(_piece_sign_changes(p, tol, max(samples, SIGN_SAMPLES)))
    return out


def _piece_sign_changes(p: Piece, tol: float, n: int) -> list[float]:
    if not p.terms:
        return []
    if len(p.terms) == 1 and p.terms[0].log_exp == 0:
        return []
    return bracket_roots(lambda t: eval_terms(p.terms, t), p.lo, p.hi, tol, n)


def bracket_roots(fn, lo: float, hi: float, tol: float, n: int = SIGN_SAMPLES) -> list[float]:
    """Sign changes of a vectorised ``fn`` strictly inside ``(lo, hi)``."""
    x = np.linspace(lo, hi, n)
    inset = 1e-12 * (hi - lo)
    x[0] = lo + inset
    x[-1] = hi - inset
    with np.errstate(all="ignore"):
        v = fn(x)
    nz = np.flatnonzero(np.isfinite(v) & (v != 0.0))
    if nz.size < 2:
        return []
    s = np.sign(v[nz])
    flips = np.flatnonzero(s[:-1] != s[1:])
    roots = []
    scalar = lambda t: float(fn(t))  # noqa: E731
    for j in flips:
        a, b = x[nz[j]], x[nz[j + 1]]
        fa, fb = scalar(a), scalar(b)
        if fa * fb > 0:
            # the array and scalar paths disagree within round-off; keep the smaller end
            roots.append(float(a if abs(fa) < abs(fb) else b))
            continue
        roots.append(float(brentq(scalar, a, b, xtol=tol / 4, rtol=4 * np.finfo(float).eps, maxiter=200)))
    return roots


# ---------------------------------------------------------------- serialization


def to_dict(f: GeneralizedPiecewiseFunction) -> dict:
    d: dict = {
        "pieces": [
            {
                "lo": p.lo,
                "hi": p.hi,
                "terms": [{"coeff": t.coeff, "power": t.power, "log_exp": t.log_exp} for t in p.terms],
            }
            for p in f.pieces
        ]
    }
    if f.tail:
        d["tail"] = f.tail
    return d


def from_dict(d: dict) -> GeneralizedPiecewiseFunction:
    pieces = tuple(
        Piece(
            Interval(float(p["lo"]), float(p["hi"])),
            tuple(Term(float(t["coeff"]), int(t["power"]), int(t.get("log_exp", 0))) for t in p["terms"]),
        )
        for p in d["pieces"]
    )
    return GeneralizedPiecewiseFunction(pieces, float(d.get("tail", 0.0)))


def to_json(f: GeneralizedPiecewiseFunction) -> str:
    return json.dumps(to_dict(f))


def from_json(s: str) -> GeneralizedPiecewiseFunction:
    return from_dict(json.loads(s))
