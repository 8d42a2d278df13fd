"""Checkable predicates for each inequality, producing ``BoundReport`` objects."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .atoms import (
    Atom,
    AtomicSum,
    AtomSpec,
    AtomValidationReport,
    inv,
    moment,
    sum_quasinorm_upper,
    validate_atom,
)
from .errors import DomainError, PreconditionError
from .funcrep import linear_combine
from .norms import DEFAULT_REL_TOL, lp_integral
from .operators import (
    conjugate,
    dual_hardy,
    dual_image_atom_candidate,
    hardy,
    hardy_image_atom_candidate,
)
from .quadrature import integrate

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"
LN2 = math.log(2.0)
MARGIN_FRACTION = 0.01
THM2_NOTE = (
    "the sum bound is checked on H* applied to each atom, as the per-atom estimate requires; "
    "thm2-literal additionally evaluates H."
)
THM4_NOTE = "hypothesis s-1>0 relaxed to s>=1; the argument only uses moments up to s-1"
CLASSICAL_NOTE = "for 0<p<1 the constant p'^p is evaluated as |p/(p-1)|^p"


# ---------------------------------------------------------------- constants


def _fmt(q: float) -> str:
    return "inf" if q == math.inf else repr(q)


def _check_atom_exponents(p: float, q: float):
    if not 0 < p <= 1:
        raise DomainError(f"p must lie in (0, 1], got {p}")
    if not (q == math.inf or q >= 1):
        raise DomainError(f"q must lie in [1, inf], got {q}")
    if not p < q:
        raise DomainError(f"need p < q, got p={p}, q={q}")


def c1_pow(p: float, q: float) -> float:
    """Per-atom bound ``1 / (1 - p/q)`` on ``int |Ha|**p``."""
    _check_atom_exponents(p, q)
    return 1.0 / (1.0 - p * inv(q))


def c1(p: float, q: float) -> float:
    """``(1 - p/q)**(-1/p)``, the constant for ``||Hf||_p``."""
    _check_atom_exponents(p, q)
    return (1.0 - p * inv(q)) ** (-1.0 / p)


def _check_weighted_domain(p: float, q: float):
    if not 0 < p <= 1:
        raise DomainError(f"p must lie in (0, 1], got {p}")
    if q == math.inf:
        return
    if q == 1.0:
        if p == 1.0:
            raise DomainError("q = 1 requires p != 1 (p < 1)")
        return
    if not 1.0 < q < math.inf:
        raise DomainError(f"q must be 1, inf, or lie in (1, inf), got {q}")
    if not p < q - 1.0:
        raise DomainError(f"prop4 requires p < q-1 when 1 < q < inf (got p={p}, q-1={q - 1.0})")


def c2_pow(p: float, q: float, variant: str = "printed") -> float:
    """Per-atom bound on ``int |H*a|**p`` for ``(p,q,0)_{x^p}``-atoms.

    ``variant="derived"`` replaces the factor ``(1+p)**(p/q-1)`` of the
    ``1 < q < inf`` case by ``(1+p)**(1-p/q)``, which is what
    ``(int t**p dt)**(p/q-1)`` expands to.
    """
    _check_weighted_domain(p, q)
    if q == math.inf:
        return 1.0
    if q == 1.0:
        return 1.0 / ((1.0 - p) * (1.0 + p) ** p)
    qp = conjugate(q)
    lead = (1.0 - p * qp / q) ** (-p / qp)
    expo = p / q - 1.0 if variant == "printed" else 1.0 - p / q
    return lead * (1.0 + p) ** expo / ((1.0 / qp - p / q) * p + 1.0)


def c2(p: float, q: float, variant: str = "printed") -> float:
    """Constant for ``||H*f||_p`` on ``H^{p,q,0}_{x^p}``."""
    _check_weighted_domain(p, q)
    if q == math.inf:
        return 1.0
    if q == 1.0:
        return (1.0 - p) ** (-1.0 / p) / (p + 1.0)
    qp = conjugate(q)
    lead = (1.0 - p * qp / q) ** (-1.0 / qp)
    expo = 1.0 / q - 1.0 / p if variant == "printed" else 1.0 / p - 1.0 / q
    return lead * (1.0 + p) ** expo / ((1.0 / qp - p / q) * p + 1.0) ** (1.0 / p)


def classical_hardy_constant(p: float) -> float:
    """``|p'|**p`` with ``p' = p/(p-1)``."""
    if p <= 0 or p == 1:
        raise DomainError(f"classical constant needs p > 0, p != 1, got {p}")
    return abs(p / (p - 1.0)) ** p


def classical_dual_constant(p: float) -> float:
    if p <= 0 or p == 1:
        raise DomainError(f"classical constant needs p > 0, p != 1, got {p}")
    return p**p


CONSTANTS = {
    "c1": c1,
    "c1_pow": c1_pow,
    "c2": c2,
    "c2_pow": c2_pow,
    "ln2": lambda: LN2,
    "classical_hardy": classical_hardy_constant,
    "classical_dual": classical_dual_constant,
}


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class BoundReport:
    """One inequality check ``lhs < bound`` (or ``>`` when ``reverse``)."""

    check_id: str
    lhs: float
    bound: float
    strict: bool
    quad_error: float
    verdict: str
    reverse: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.lhs / self.bound

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        return d


def decide(lhs: float, bound: float, err: float, strict: bool, reverse: bool = False) -> str:
    """Three-way verdict with an honest error budget.

    A strict check passes only when the margin exceeds the error and the
    error is below 1% of the margin. A non-strict check passes whenever
    ``lhs <= bound + err``, which admits exact equality cases.
    """
    if reverse:
        lhs, bound = -lhs, -bound
    margin = bound - lhs
    if not strict and margin >= -err:
        return PASS
    if abs(margin) > err and err <= MARGIN_FRACTION * abs(margin):
        return PASS if margin > 0 else FAIL
    return INCONCLUSIVE


def make_report(check_id, lhs, bound, err, strict, reverse=False, **metadata) -> BoundReport:
    return BoundReport(
        check_id, float(lhs), float(bound), bool(strict), float(err), decide(lhs, bound, err, strict, reverse),
        reverse, metadata,
    )


def _atom_tag(a: Atom) -> str:
    sp = a.spec
    iv = sp.interval
    tag = f"p={sp.p!r},q={_fmt(sp.q)},s={sp.s},x0={iv.lo!r},x1={iv.hi!r}"
    if "seed" in a.provenance:
        tag += f",seed={a.provenance['seed']}"
    return tag


# ---------------------------------------------------------------- atom-level checks


def check_prop1(a: Atom, rel_tol: float = DEFAULT_REL_TOL) -> BoundReport:
    """``int |Ha|**p < 1/(1 - p/q)`` for a (p,q,0)-atom."""
    sp = a.spec
    if sp.weight.kind != "unit":
        raise PreconditionError("prop1 takes unweighted atoms")
    img = hardy(a.fn)
    r = lp_integral(img.fn, sp.p, rel_tol=rel_tol)
    return make_report(
        f"prop1[{_atom_tag(a)}]", r.value, c1_pow(sp.p, sp.q), r.abs_error_estimate, sp.interval.lo > 0,
        compact_support=img.compact_support,
    )


def check_prop4(a: Atom, rel_tol: float = DEFAULT_REL_TOL, variant: str = "printed") -> BoundReport:
    """``int |H*a|**p`` against the three-case bound for (p,q,0)_{x^p}-atoms."""
    sp = a.spec
    if sp.weight.kind != "power" or sp.weight.alpha != sp.p:
        raise PreconditionError("prop4 takes atoms with weight x**p")
    bound = c2_pow(sp.p, sp.q, variant)
    img = dual_hardy(a.fn)
    r = lp_integral(img.fn, sp.p, rel_tol=rel_tol)
    return make_report(
        f"prop4[{_atom_tag(a)}]", r.value, bound, r.abs_error_estimate, sp.interval.lo > 0,
        compact_support=img.compact_support, constant_variant=variant,
    )


def check_log2(a: Atom) -> BoundReport:
    """``int |Ha| < ln 2`` for (1,inf,0)-atoms; non-strict when ``x0 = 0``."""
    sp = a.spec
    if sp.p != 1.0 or sp.q != math.inf or sp.weight.kind != "unit":
        raise PreconditionError("log2 check takes (1, inf, 0)-atoms with unit weight")
    r = lp_integral(hardy(a.fn).fn, 1.0)
    return make_report(f"log2[{_atom_tag(a)}]", r.value, LN2, r.abs_error_estimate, sp.interval.lo > 0)


# ---------------------------------------------------------------- sum-level checks


def _sum_tag(s: AtomicSum) -> str:
    sp = s.spec
    return f"p={sp.p!r},q={_fmt(sp.q)},n={len(s.entries)}"


def _strict_sum(s: AtomicSum) -> bool:
    return all(a.spec.interval.lo > 0 for _, a in s.entries)


def _norm_from_integral(value: float, err: float, p: float) -> tuple[float, float]:
    v = value ** (1.0 / p)
    if value > 0:
        return v, v / p * err / value
    return v, err ** (1.0 / p)


def check_thm1(s: AtomicSum, rel_tol: float = DEFAULT_REL_TOL) -> BoundReport:
    """``||H(sum lam a)||_p < c1 * (sum |lam|**p)**(1/p)``."""
    sp = s.spec
    if sp.weight.kind != "unit":
        raise PreconditionError("thm1 takes unweighted atoms")
    r = lp_integral(hardy(s.function()).fn, sp.p, rel_tol=rel_tol)
    lhs, err = _norm_from_integral(r.value, r.abs_error_estimate, sp.p)
    qn = sum_quasinorm_upper(s)
    return make_report(f"thm1[{_sum_tag(s)}]", lhs, c1(sp.p, sp.q) * qn, err, _strict_sum(s), quasinorm_upper=qn)


def check_thm2(
    s: AtomicSum, rel_tol: float = DEFAULT_REL_TOL, literal: bool = False, variant: str = "printed"
) -> BoundReport:
    """``||H*(sum lam a)||_p < c2 * (sum |lam|**p)**(1/p)``; ``literal`` uses H."""
    sp = s.spec
    if sp.weight.kind != "power" or sp.weight.alpha != sp.p:
        raise PreconditionError("thm2 takes atoms with weight x**p")
    bound_c = c2(sp.p, sp.q, variant)
    f = s.function()
    img = hardy(f) if literal else dual_hardy(f)
    r = lp_integral(img.fn, sp.p, rel_tol=rel_tol)
    lhs, err = _norm_from_integral(r.value, r.abs_error_estimate, sp.p)
    qn = sum_quasinorm_upper(s)
    op = "H" if literal else "H*"
    return make_report(
        f"thm2[{_sum_tag(s)},op={op}]", lhs, bound_c * qn, err, _strict_sum(s),
        operator=op, quasinorm_upper=qn, note=THM2_NOTE, constant_variant=variant,
    )


# ---------------------------------------------------------------- atom images


def check_thm3(a: Atom, tol: float = 1e-9) -> AtomValidationReport:
    """Validate ``(1/q') Ha`` as a (p,q,s)-atom, size condition strict."""
    sp = a.spec
    if not sp.q > 1:
        raise PreconditionError("thm3 needs 1 < q <= inf")
    _, fn, target = hardy_image_atom_candidate(a)
    return validate_atom(fn, target, tol, strict_size=True)


def check_thm4(a: Atom, tol: float = 1e-9) -> AtomValidationReport:
    """Validate the scaled ``H*a`` as a (p,q,s-1)-atom with unit weight."""
    _, fn, target = dual_image_atom_candidate(a)
    return validate_atom(fn, target, tol, strict_size=True)


def image_slack_epsilon(atoms: list[Atom], grid=None, tol: float = 1e-9) -> tuple[float, list[float]]:
    """Largest ``eps`` on ``grid`` with every ``Ha/(q' - eps)`` still an atom.

    Also returns, per atom, the exact slack ``q' - ||Ha||_q / budget``.
    """
    from .norms import lq_norm

    slacks = []
    for a in atoms:
        qp = conjugate(a.spec.q)
        _, fn, target = hardy_image_atom_candidate(a)
        ha = linear_combine([(qp, fn)])
        slacks.append(qp - lq_norm(ha, a.spec.q) / target.norm_budget)
    qp = conjugate(atoms[0].spec.q)
    if grid is None:
        grid = np.linspace(0.0, qp, 101)[1:-1]
    best = 0.0
    for eps in sorted(grid):
        ok = True
        for a in atoms:
            _, fn, target = hardy_image_atom_candidate(a)
            scaled = linear_combine([(conjugate(a.spec.q) / (qp - eps), fn)])
            if not validate_atom(scaled, target, tol, strict_size=True).passed:
                ok = False
                break
        if ok:
            best = float(eps)
        else:
            break
    return best, slacks


# ---------------------------------------------------------------- classical inequalities


def _hardy_family(p: float, A: float):
    # f = x**(-1/p) on (1, A); Hf = I(x)/x with I(x) = int_1^x t**(-1/p) dt
    e = 1.0 - 1.0 / p

    def hf(x):
        return np.expm1(e * np.log(x)) / e / x

    tail_c = math.expm1(e * math.log(A)) / e
    return hf, tail_c


def _dual_family(p: float, A: float):
    # f = x**(-1-1/p) on (1, A), so (x f)**p = 1/x; H*f = p (x**(-1/p) - A**(-1/p))
    a_pow = A ** (-1.0 / p)

    def hsf(x):
        return p * a_pow * np.expm1(np.log(A / x) / p)

    return hsf, p * (1.0 - a_pow)


def check_classical(
    p: float,
    A: float,
    direction: str = "hardy",
    rel_tol: float = DEFAULT_REL_TOL,
    horizon_factor: float = 1e6,
) -> BoundReport:
    """Near-extremiser check of the classical inequalities.

    ``lhs`` is the quotient ``int (Tf_A)**p / int g_A**p`` for the family
    ``f_A = x**(-1/p)`` (``direction="hardy"``) or ``x**(-1-1/p)``
    (``"dual"``) on ``(1, A)``; the denominator is ``ln A`` in both cases.
    For ``p < 1`` the inequality reverses. A divergent ``c/x`` tail is cut at
    ``horizon_factor * A`` and the truncated value is a lower bound.
    """
    if p <= 0 or p == 1:
        raise DomainError(f"classical checks need p > 0 and p != 1, got {p}")
    if not A > 1:
        raise DomainError(f"family parameter A must exceed 1, got {A}")
    reverse = p < 1
    denom = math.log(A)
    truncated = False
    meta: dict = {"A": A, "p": p, "direction": direction}
    if direction == "hardy":
        hf, c = _hardy_family(p, A)
        body = integrate(lambda x: hf(x) ** p, 1.0, A, rel_tol=rel_tol)
        if p > 1:
            tail = c**p * A ** (1.0 - p) / (p - 1.0)
        else:
            X = horizon_factor * A
            tail = c**p * (X ** (1.0 - p) - A ** (1.0 - p)) / (1.0 - p)
            truncated = True
            meta["horizon"] = X
        num, err = body.value + tail, body.abs_error_estimate + 8e-16 * abs(tail)
        bound = classical_hardy_constant(p)
    elif direction == "dual":
        hsf, left = _dual_family(p, A)
        body = integrate(lambda x: hsf(x) ** p, 1.0, A, rel_tol=rel_tol)
        num, err = body.value + left**p, body.abs_error_estimate
        bound = classical_dual_constant(p)
    else:
        raise DomainError(f"direction must be 'hardy' or 'dual', got {direction!r}")
    if reverse:
        meta["note"] = CLASSICAL_NOTE
    meta.update(numerator=num, denominator=denom, truncated=truncated)
    return make_report(
        f"classical[{direction},p={p!r},A={A!r}]", num / denom, bound, err / denom, True, reverse, **meta
    )


# ---------------------------------------------------------------- self test


def harness_self_test(atoms: list[Atom], factor: float = 2.0, rel_tol: float = DEFAULT_REL_TOL) -> list[BoundReport]:
    """Run prop1 on atoms inflated by ``factor``; some reports should FAIL."""
    out = []
    for a in atoms:
        bad = Atom(a.spec, linear_combine([(factor, a.fn)]), a.norm_budget, {**a.provenance, "inflated": factor})
        out.append(check_prop1(bad, rel_tol))
    return out


def image_moments(fn, s: int) -> list[float]:
    return [moment(fn, b) for b in range(s + 1)]


__all__ = [
    "BoundReport",
    "PASS",
    "FAIL",
    "INCONCLUSIVE",
    "LN2",
    "c1",
    "c1_pow",
    "c2",
    "c2_pow",
    "check_prop1",
    "check_prop4",
    "check_log2",
    "check_thm1",
    "check_thm2",
    "check_thm3",
    "check_thm4",
    "check_classical",
    "classical_dual_constant",
    "classical_hardy_constant",
    "decide",
    "harness_self_test",
    "image_slack_epsilon",
    "AtomSpec",
]
