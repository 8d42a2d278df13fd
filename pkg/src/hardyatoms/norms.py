"""Weighted L^q norms, L^p quasi-norm integrals and sup norms.

``lp_integral`` splits the domain at piece boundaries and interior sign
changes, so ``|f|**p`` is a smooth power of a fixed-sign function on every
segment. Integer exponents with integer weight powers are then integrated in
closed form; everything else goes through adaptive tanh-sinh quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DivergenceError, DomainError, UnsupportedTermError
from .funcrep import (
    GeneralizedPiecewiseFunction,
    Interval,
    Piece,
    Term,
    antiderivative,
    bracket_roots,
    eval_terms,
    eval_terms_derivative,
    power_terms,
    sign_change_points,
    terms_limit_at_zero,
)
from .quadrature import ZERO_RESULT, QuadResult, integrate

EPS = np.finfo(float).eps
DEFAULT_REL_TOL = 1e-10
ROOT_TOL = 1e-13


@dataclass(frozen=True)
class WeightSpec:
    """``w == 1`` (kind ``unit``) or ``w(x) = x**alpha`` (kind ``power``)."""

    kind: str = "unit"
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("unit", "power"):
            raise DomainError(f"unknown weight kind {self.kind!r}")
        if self.kind == "power" and not self.alpha > -1.0:
            raise DomainError(f"power weight needs alpha > -1, got {self.alpha}")
        if self.kind == "unit":
            object.__setattr__(self, "alpha", 0.0)
        object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def power(cls, alpha: float) -> "WeightSpec":
        return cls("power", alpha)

    @property
    def exponent(self) -> float:
        return self.alpha if self.kind == "power" else 0.0

    def mass(self, interval: Interval) -> float:
        """Closed-form integral of the weight over ``interval``."""
        if self.kind == "unit" or self.alpha == 0.0:
            return interval.hi - interval.lo
        e = self.alpha + 1.0
        return (interval.hi**e - interval.lo**e) / e

    def __call__(self, x):
        if self.kind == "unit":
            return np.ones_like(np.asarray(x, dtype=float))
        return np.asarray(x, dtype=float) ** self.alpha

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d: dict) -> "WeightSpec":
        return cls(d["kind"], float(d.get("alpha", 0.0)))


UNIT = WeightSpec()


def _is_int(v: float) -> bool:
    return float(v).is_integer()


def _power_integral(lo: float, hi: float, e: float) -> float:
    """Integral of ``x**e`` over ``[lo, hi]``."""
    if lo == 0.0 and e <= -1.0:
        raise DivergenceError(f"x**{e} is not integrable at 0")
    if e == -1.0:
        return math.log(hi / lo)
    return (hi ** (e + 1.0) - lo ** (e + 1.0)) / (e + 1.0)


def _abs_primitive_scale(prim, a: float, b: float) -> float:
    s = 0.0
    for x in (a, b):
        if x == 0.0:
            continue
        lx = abs(math.log(x))
        for t in prim:
            s += abs(t.coeff) * x**t.power * lx**t.log_exp
    return s


def _segments(p: Piece) -> list[tuple[float, float]]:
    cuts = [p.lo]
    cuts.extend(sign_change_points(GeneralizedPiecewiseFunction((p,)), ROOT_TOL * max(1.0, p.hi)))
    cuts.append(p.hi)
    return [(a, b) for a, b in zip(cuts, cuts[1:]) if b > a]


def _segment_sign(terms, a: float, b: float) -> float:
    return math.copysign(1.0, eval_terms(terms, 0.5 * (a + b)))


def _piece_lp(p: Piece, power: float, alpha: float, rel_tol: float) -> QuadResult:
    terms = p.terms
    if not terms:
        return ZERO_RESULT
    if len(terms) == 1 and terms[0].log_exp == 0:
        t = terms[0]
        v = abs(t.coeff) ** power * _power_integral(p.lo, p.hi, t.power * power + alpha)
        return QuadResult(v, 8 * EPS * abs(v), 1)
    segs = _segments(p)
    if _is_int(power) and _is_int(alpha):
        try:
            exact = _piece_lp_exact(terms, segs, int(power), int(alpha))
        except (UnsupportedTermError, DomainError):
            exact = None
        # expanded powers can cancel badly; then quadrature is the better route
        if exact is not None and exact.abs_error_estimate <= rel_tol * exact.value:
            return exact
    if alpha:
        g = lambda x: np.abs(eval_terms(terms, x)) ** power * x**alpha  # noqa: E731
    else:
        g = lambda x: np.abs(eval_terms(terms, x)) ** power  # noqa: E731
    out = ZERO_RESULT
    for a, b in segs:
        out = out + integrate(g, a, b, rel_tol=rel_tol, abs_tol=1e-15)
    return out


def _piece_lp_exact(terms, segs, n: int, alpha: int) -> QuadResult:
    prod = power_terms(terms, n)
    if alpha:
        prod = tuple(Term(t.coeff, t.power + alpha, t.log_exp) for t in prod)
    prim = antiderivative(prod)
    val, err = 0.0, 0.0
    for a, b in segs:
        fa = terms_limit_at_zero(prim) if a == 0.0 else eval_terms(prim, a)
        piece_val = eval_terms(prim, b) - fa
        if n % 2:
            piece_val *= _segment_sign(terms, a, b)
        val += piece_val
        err += 64 * EPS * (_abs_primitive_scale(prim, a, b) + abs(piece_val))
    return QuadResult(abs(val), err, len(segs))


def _tail_lp(c: float, end: float, power: float, alpha: float, horizon: float | None) -> QuadResult:
    e = alpha - power
    amp = abs(c) ** power
    if e < -1.0:
        v = amp * end ** (e + 1.0) / -(e + 1.0)
        return QuadResult(v, 8 * EPS * v, 1)
    if horizon is None:
        raise DivergenceError(
            f"c/x tail makes the integral infinite for p={power} with weight exponent {alpha}; "
            "pass a finite horizon to truncate"
        )
    if horizon <= end:
        return ZERO_RESULT
    v = amp * _power_integral(end, horizon, e)
    return QuadResult(v, 8 * EPS * v, 1, truncated=True)


def lp_integral(
    f: GeneralizedPiecewiseFunction,
    p: float,
    weight: WeightSpec = UNIT,
    rel_tol: float = DEFAULT_REL_TOL,
    horizon: float | None = None,
) -> QuadResult:
    """Integral of ``|f|**p * w`` over the half-line.

    A ``c/x`` tail contributes in closed form when integrable; otherwise a
    ``DivergenceError`` is raised unless ``horizon`` is given, in which case
    the tail is cut there and the result is flagged ``truncated`` (a lower
    bound for the divergent integral).
    """
    if not p > 0:
        raise DomainError(f"exponent p must be positive, got {p}")
    if not 1e-13 < rel_tol < 1e-2:
        raise DomainError(f"rel_tol must lie in (1e-13, 1e-2), got {rel_tol}")
    alpha = weight.exponent
    total = ZERO_RESULT
    for pc in f.pieces:
        total = total + _piece_lp(pc, p, alpha, rel_tol)
    if f.tail:
        total = total + _tail_lp(f.tail, f.end, p, alpha, horizon)
    return total


# ---------------------------------------------------------------- sup norm


def _piece_sup(p: Piece) -> float:
    terms = p.terms
    if not terms:
        return 0.0
    cands = [p.lo, p.hi]
    if all(t.log_exp == 0 for t in terms):
        # x**3 * f'(x) is a polynomial because every power is >= -2
        top = max(t.power for t in terms) + 2
        coef = np.zeros(top + 1)
        for t in terms:
            coef[t.power + 2] += t.coeff * t.power
        coef = np.trim_zeros(coef, "b")
        if coef.size > 1:
            for r in npoly.polyroots(coef):
                x = float(r.real)
                if p.lo < x < p.hi:
                    cands.append(x)
    else:
        cands.extend(bracket_roots(lambda x: eval_terms_derivative(terms, x), p.lo, p.hi, ROOT_TOL * p.hi))
    best = 0.0
    for x in cands:
        v = abs(terms_limit_at_zero(terms)) if x == 0.0 else abs(eval_terms(terms, x))
        best = max(best, v)
    return best


def sup_abs(f: GeneralizedPiecewiseFunction) -> float:
    """Essential supremum of ``|f|`` from endpoint values and critical points."""
    best = max((_piece_sup(p) for p in f.pieces), default=0.0)
    if f.tail:
        best = max(best, abs(f.tail) / f.end)
    return best


def lq_norm_with_error(
    f: GeneralizedPiecewiseFunction,
    q: float,
    weight: WeightSpec = UNIT,
    rel_tol: float = DEFAULT_REL_TOL,
) -> tuple[float, float]:
    """``(norm, abs_error)``; the weight is ignored when ``q`` is infinite."""
    if q == math.inf:
        v = sup_abs(f)
        return v, 16 * EPS * v
    if not q >= 1:
        raise DomainError(f"q must lie in [1, inf], got {q}")
    r = lp_integral(f, q, weight, rel_tol)
    v = r.value ** (1.0 / q)
    err = v / q * r.abs_error_estimate / r.value if r.value > 0 else r.abs_error_estimate ** (1.0 / q)
    return v, err


def lq_norm(
    f: GeneralizedPiecewiseFunction,
    q: float,
    weight: WeightSpec = UNIT,
    rel_tol: float = DEFAULT_REL_TOL,
) -> float:
    return lq_norm_with_error(f, q, weight, rel_tol)[0]


# ---------------------------------------------------------------- auxiliary inequalities


@dataclass(frozen=True)
class AuxiliaryCheck:
    lhs10: float
    rhs10: float
    lhs11: float
    rhs11: float
    passed: bool

    @property
    def margin(self) -> float:
        m = self.rhs10 - self.lhs10
        if not math.isnan(self.lhs11):
            m = min(m, self.lhs11 - self.rhs11)
        return m


def auxiliary_inequality_check(x0: float, x1: float, p: float) -> AuxiliaryCheck:
    """``(x1-x0)**(p+1) < x1**(p+1) - x0**(p+1)`` and, for ``p < 1``,
    ``(x1-x0)**(1-p) > x1**(1-p) - x0**(1-p)``."""
    if not 0 < x0 < x1:
        raise DomainError(f"need 0 < x0 < x1, got x0={x0}, x1={x1}")
    if not p > 0:
        raise DomainError(f"need p > 0, got {p}")
    d = x1 - x0
    lhs10, rhs10 = d ** (p + 1.0), x1 ** (p + 1.0) - x0 ** (p + 1.0)
    ok = lhs10 < rhs10
    if p < 1:
        lhs11, rhs11 = d ** (1.0 - p), x1 ** (1.0 - p) - x0 ** (1.0 - p)
        ok = ok and lhs11 > rhs11
    else:
        lhs11 = rhs11 = math.nan
    return AuxiliaryCheck(lhs10, rhs10, lhs11, rhs11, ok)
