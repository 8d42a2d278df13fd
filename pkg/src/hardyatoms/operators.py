"""Closed-form Hardy operator ``Hf(x) = (1/x) int_0^x f`` and its dual
``H*f(x) = int_x^inf f`` on piecewise functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .atoms import Atom, AtomSpec
from .errors import PreconditionError
from .funcrep import (
    GeneralizedPiecewiseFunction,
    Interval,
    Piece,
    Term,
    absolute_mass_scale,
    antiderivative,
    antiderivative_value,
    combine_terms,
    eval_terms,
    linear_combine,
)
from .norms import UNIT

ZERO_MASS_TOL = 1e-12
HORIZON_FACTOR = 1e6


@dataclass(frozen=True)
class OperatorImage:
    fn: GeneralizedPiecewiseFunction
    compact_support: bool
    total_mass: float = 0.0
    horizon: float | None = None


def _mass_is_zero(mass: float, f: GeneralizedPiecewiseFunction, tol: float) -> bool:
    return abs(mass) <= tol * max(absolute_mass_scale(f), 1e-300)


def hardy(f: GeneralizedPiecewiseFunction, zero_tol: float = ZERO_MASS_TOL) -> OperatorImage:
    """Apply ``H`` piece by piece.

    On ``[lo, hi)`` the image is ``(C + F(x) - F(lo)) / x`` with ``F`` the
    closed-form primitive and ``C`` the mass to the left. Inputs with nonzero
    mean leave an unbounded ``mass / x`` tail, recorded in ``fn.tail``.
    """
    if f.tail:
        raise PreconditionError("H needs an input of bounded support")
    pieces: list[Piece] = []
    acc = 0.0
    prev_end = f.pieces[0].lo if f.pieces else 0.0
    for p in f.pieces:
        if p.lo > prev_end and acc != 0.0:
            pieces.append(Piece(Interval(prev_end, p.lo), (Term(acc, -1),)))
        if p.terms:
            prim = antiderivative(p.terms)
            f_lo = antiderivative_value(prim, p.lo)
            terms = [Term(t.coeff, t.power - 1, t.log_exp) for t in prim]
            terms.append(Term(acc - f_lo, -1))
            pieces.append(Piece(p.interval, combine_terms(terms)))
            acc += eval_terms(prim, p.hi) - f_lo
        elif acc != 0.0:
            pieces.append(Piece(p.interval, (Term(acc, -1),)))
        prev_end = p.hi
    compact = _mass_is_zero(acc, f, zero_tol)
    tail = 0.0 if compact else acc
    end = f.end
    return OperatorImage(
        GeneralizedPiecewiseFunction(tuple(pieces), tail),
        compact,
        acc,
        None if compact else HORIZON_FACTOR * end,
    )


def dual_hardy(f: GeneralizedPiecewiseFunction, zero_tol: float = ZERO_MASS_TOL) -> OperatorImage:
    """Apply ``H*``: on ``[lo, hi)`` the image is ``R + F(hi) - F(x)`` with
    ``R`` the mass to the right. Left of the support it equals the total mass,
    which is dropped when it vanishes to ``zero_tol``."""
    if f.tail:
        raise PreconditionError("H* needs an input of bounded support")
    pieces: list[Piece] = []
    right = 0.0
    next_lo = None
    for p in reversed(f.pieces):
        if next_lo is not None and next_lo > p.hi and right != 0.0:
            pieces.append(Piece(Interval(p.hi, next_lo), (Term(right, 0),)))
        if p.terms:
            prim = antiderivative(p.terms)
            f_hi = eval_terms(prim, p.hi)
            terms = [Term(-t.coeff, t.power, t.log_exp) for t in prim]
            terms.append(Term(right + f_hi, 0))
            pieces.append(Piece(p.interval, combine_terms(terms)))
            right += f_hi - antiderivative_value(prim, p.lo)
        elif right != 0.0:
            pieces.append(Piece(p.interval, (Term(right, 0),)))
        next_lo = p.lo
    compact = _mass_is_zero(right, f, zero_tol)
    if not compact and next_lo and next_lo > 0.0:
        pieces.append(Piece(Interval(0.0, next_lo), (Term(right, 0),)))
    pieces.reverse()
    return OperatorImage(GeneralizedPiecewiseFunction(tuple(pieces)), compact, right)


def conjugate(q: float) -> float:
    """``q' = q/(q-1)`` with ``inf' = 1`` and ``1' = inf``."""
    if q == math.inf:
        return 1.0
    if q == 1.0:
        return math.inf
    return q / (q - 1.0)


def hardy_image_scale(q: float) -> float:
    return 1.0 / conjugate(q)


def dual_image_scale(p: float, q: float) -> float:
    """Factor that turns ``H*a`` of a weighted atom into an unweighted atom."""
    if q == math.inf:
        return (1.0 + p) ** (-1.0 / p)
    if q == 1.0:
        if p == 1.0:
            raise PreconditionError("the q = 1 scale needs p != 1")
        return (1.0 - p) * (1.0 + p) ** (1.0 - 1.0 / p)
    return 1.0 / q


def hardy_image_atom_candidate(a: Atom) -> tuple[float, GeneralizedPiecewiseFunction, AtomSpec]:
    spec = a.spec
    if not spec.log_moment:
        raise PreconditionError("the H image is an atom only for L-atoms (log moment required)")
    if spec.q == 1.0:
        raise PreconditionError("the H image needs q > 1")
    scale = hardy_image_scale(spec.q)
    img = hardy(a.fn)
    return scale, linear_combine([(scale, img.fn)]), replace(spec, log_moment=False)


def dual_image_atom_candidate(a: Atom) -> tuple[float, GeneralizedPiecewiseFunction, AtomSpec]:
    spec = a.spec
    if spec.s < 1:
        raise PreconditionError("the H* image needs s >= 1")
    if spec.weight.kind != "power" or spec.weight.alpha != spec.p:
        raise PreconditionError("the H* image needs an atom with weight x**p")
    if spec.q == 1.0 and spec.p == 1.0:
        raise PreconditionError("q = 1 requires p != 1")
    scale = dual_image_scale(spec.p, spec.q)
    img = dual_hardy(a.fn)
    target = replace(spec, s=spec.s - 1, weight=UNIT, log_moment=False)
    return scale, linear_combine([(scale, img.fn)]), target
