"""Construction and validation of (p, q, s)_w-atoms and finite atomic sums.

An atom is supported in ``(x0, x1)``, has weighted L^q norm at most
``(int_I w)**(1/q - 1/p)``, and integrates to zero against ``x**beta`` for
``beta = 0..s``. L-atoms additionally integrate to zero against ``ln x``.

Atoms are built by drawing a random unit vector from the null space of the
moment matrix and rescaling it so that the size condition holds with
equality.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from math import comb

import numpy as np

from .errors import DomainError, InfeasibleError, NumericalRankError
from .funcrep import (
    GeneralizedPiecewiseFunction,
    Interval,
    definite_integral,
    dilate,
    from_dict,
    linear_combine,
    polynomial,
    shift_power,
    step_function,
    times_log,
    to_dict,
)
from .norms import UNIT, WeightSpec, lq_norm_with_error
from .quadrature import integrate

RANK_TOL = 1e-8
SATURATION_REL_TOL = 1e-12


def _q_to_json(q: float):
    return "inf" if q == math.inf else q


def _q_from_json(q) -> float:
    return math.inf if q in ("inf", "Infinity", math.inf) else float(q)


def inv(q: float) -> float:
    """``1/q`` with ``1/inf = 0``."""
    return 0.0 if q == math.inf else 1.0 / q


@dataclass(frozen=True)
class AtomSpec:
    p: float
    q: float
    s: int
    interval: Interval
    weight: WeightSpec = UNIT
    log_moment: bool = False
    allow_zero_left: bool = False

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise DomainError(f"p must lie in (0, 1], got {self.p}")
        if not (self.q == math.inf or 1.0 <= self.q < math.inf):
            raise DomainError(f"q must lie in [1, inf], got {self.q}")
        if not self.p < self.q:
            raise DomainError(f"atoms need p < q, got p={self.p}, q={self.q}")
        if int(self.s) != self.s or self.s < 0:
            raise DomainError(f"s must be a non-negative integer, got {self.s}")
        if not self.allow_zero_left and self.interval.lo <= 0.0:
            raise DomainError("x0 must be > 0 unless allow_zero_left is set")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "s", int(self.s))

    @property
    def norm_budget(self) -> float:
        return self.weight.mass(self.interval) ** (inv(self.q) - 1.0 / self.p)

    @property
    def n_constraints(self) -> int:
        return self.s + 1 + (1 if self.log_moment else 0)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": _q_to_json(self.q),
            "s": self.s,
            "interval": [self.interval.lo, self.interval.hi],
            "weight": self.weight.to_dict(),
            "log_moment": self.log_moment,
            "allow_zero_left": self.allow_zero_left,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AtomSpec":
        lo, hi = d["interval"]
        return cls(
            p=float(d["p"]),
            q=_q_from_json(d["q"]),
            s=int(d["s"]),
            interval=Interval(float(lo), float(hi)),
            weight=WeightSpec.from_dict(d.get("weight", {"kind": "unit"})),
            log_moment=bool(d.get("log_moment", False)),
            allow_zero_left=bool(d.get("allow_zero_left", False)),
        )


@dataclass(frozen=True)
class Atom:
    spec: AtomSpec
    fn: GeneralizedPiecewiseFunction
    norm_budget: float
    provenance: dict = field(default_factory=dict, compare=False)

    @property
    def scale(self) -> float:
        """Tolerance scale ``budget * |I|`` for the moment conditions."""
        return self.norm_budget * self.spec.interval.length

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "fn": to_dict(self.fn),
            "norm_budget": self.norm_budget,
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Atom":
        return cls(AtomSpec.from_dict(d["spec"]), from_dict(d["fn"]), float(d["norm_budget"]), d.get("provenance", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "Atom":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class AtomicSum:
    entries: tuple[tuple[float, Atom], ...]
    p: float

    def __post_init__(self):
        entries = tuple((float(lam), a) for lam, a in self.entries)
        if not entries:
            raise DomainError("an atomic sum needs at least one entry")
        ref = entries[0][1].spec
        for _, a in entries:
            s = a.spec
            if (s.p, s.q, s.s, s.weight, s.log_moment) != (ref.p, ref.q, ref.s, ref.weight, ref.log_moment):
                raise DomainError("all atoms of a sum must share p, q, s, weight and log_moment")
        if ref.p != self.p:
            raise DomainError("sum exponent must match the atoms' p")
        object.__setattr__(self, "entries", entries)

    @property
    def spec(self) -> AtomSpec:
        return self.entries[0][1].spec

    def function(self) -> GeneralizedPiecewiseFunction:
        return linear_combine([(lam, a.fn) for lam, a in self.entries])

    def to_dict(self) -> dict:
        return {"p": self.p, "entries": [{"lambda": lam, "atom": a.to_dict()} for lam, a in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "AtomicSum":
        return cls(tuple((float(e["lambda"]), Atom.from_dict(e["atom"])) for e in d["entries"]), float(d["p"]))


# ---------------------------------------------------------------- measurements


def weight_mass(weight: WeightSpec, interval: Interval) -> float:
    return weight.mass(interval)


def moment(fn: GeneralizedPiecewiseFunction, beta: int) -> float:
    """Exact ``int fn(x) x**beta dx``."""
    if not fn.pieces:
        return 0.0
    return definite_integral(shift_power(fn, int(beta)), 0.0, fn.end)


def log_moment(fn: GeneralizedPiecewiseFunction) -> float:
    """Exact ``int fn(x) ln(x) dx``."""
    if not fn.pieces:
        return 0.0
    return definite_integral(times_log(fn), 0.0, fn.end)


def sum_quasinorm_upper(s: AtomicSum) -> float:
    """``(sum |lambda_k|**p)**(1/p)``: an upper bound for the quasinorm."""
    return sum(abs(lam) ** s.p for lam, _ in s.entries) ** (1.0 / s.p)


# ---------------------------------------------------------------- moment systems


@dataclass(frozen=True)
class AtomFamily:
    """Ansatz for atom shapes: a polynomial of ``size`` degree, or ``size`` equal steps."""

    kind: str = "poly"
    size: int = 2

    def __post_init__(self):
        if self.kind not in ("poly", "steps"):
            raise DomainError(f"unknown atom family {self.kind!r}")
        if self.kind == "steps" and self.size < 1:
            raise DomainError("a step family needs at least one step")
        if self.kind == "poly" and self.size < 0:
            raise DomainError("polynomial degree must be non-negative")

    @property
    def n_coeffs(self) -> int:
        return self.size + 1 if self.kind == "poly" else self.size


def _log_row_poly(interval: Interval, degree: int) -> np.ndarray:
    # ln(c + h u) = ln h + ln(g + u); the ln h part lies in the span of the
    # beta = 0 row, so only int u**j ln(g + u) du is needed.
    c = 0.5 * (interval.lo + interval.hi)
    h = 0.5 * interval.length
    g = c / h
    if g > 2.0:
        nodes, weights = np.polynomial.legendre.leggauss(64)
        lg = np.log(g + nodes)
        return np.array([np.dot(weights, nodes**j * lg) for j in range(degree + 1)])
    row = []
    for j in range(degree + 1):
        r = integrate(lambda u, j=j: u**j * np.log(g + u), -1.0, 1.0, rel_tol=1e-14, abs_tol=1e-17)
        row.append(r.value)
    return np.array(row)


def moment_matrix(spec: AtomSpec, family: AtomFamily) -> np.ndarray:
    """Constraint rows in the coordinates ``u = (x - c) / h`` on ``[-1, 1]``.

    Moment rows use ``u**beta`` in place of ``x**beta``; both span the same
    space, so the null spaces agree.
    """
    iv = spec.interval
    n = family.n_coeffs
    rows = []
    if family.kind == "poly":
        for beta in range(spec.s + 1):
            rows.append([(1.0 - (-1.0) ** (j + beta + 1)) / (j + beta + 1) for j in range(n)])
        if spec.log_moment:
            rows.append(list(_log_row_poly(iv, family.size)))
    else:
        ub = np.linspace(-1.0, 1.0, n + 1)
        for beta in range(spec.s + 1):
            e = beta + 1
            rows.append(list((ub[1:] ** e - ub[:-1] ** e) / e))
        if spec.log_moment:
            xb = _step_breaks(iv, n)
            prim = np.array([0.0 if x == 0.0 else x * math.log(x) - x for x in xb])
            rows.append(list(np.diff(prim) / (0.5 * iv.length)))
    return np.array(rows, dtype=float)


def _step_breaks(iv: Interval, n: int) -> list[float]:
    b = list(np.linspace(iv.lo, iv.hi, n + 1))
    b[0], b[-1] = iv.lo, iv.hi
    return b


def null_space_basis(spec: AtomSpec, family: AtomFamily) -> np.ndarray:
    """Orthonormal basis (columns) of the moment-matrix null space."""
    m = moment_matrix(spec, family)
    n = family.n_coeffs
    if m.shape[0] >= n:
        raise InfeasibleError(
            f"{m.shape[0]} constraints on {n} coefficients leave only the zero function; raise the degree"
        )
    _, sv, vt = np.linalg.svd(m)
    if sv[-1] < RANK_TOL * sv[0]:
        raise NumericalRankError(
            f"moment matrix numerically rank-deficient (sigma_min/sigma_max = {sv[-1] / sv[0]:.2e}); "
            "interval too ill-conditioned"
        )
    return vt[m.shape[0] :].T


def _u_poly_to_x(b: np.ndarray, iv: Interval) -> list[float]:
    c = 0.5 * (iv.lo + iv.hi)
    h = 0.5 * iv.length
    out = [0.0] * len(b)
    for j, bj in enumerate(b):
        if bj == 0.0:
            continue
        fac = bj / h**j
        for i in range(j + 1):
            out[i] += fac * comb(j, i) * (-c) ** (j - i)
    return out


def function_from_coefficients(spec: AtomSpec, family: AtomFamily, b: np.ndarray) -> GeneralizedPiecewiseFunction:
    iv = spec.interval
    if family.kind == "poly":
        return polynomial(_u_poly_to_x(np.asarray(b, dtype=float), iv), iv.lo, iv.hi)
    return step_function(_step_breaks(iv, family.size), [float(v) for v in b])


def saturate(spec: AtomSpec, fn: GeneralizedPiecewiseFunction, provenance: dict | None = None) -> Atom:
    """Rescale ``fn`` so its weighted L^q norm equals the atom budget."""
    budget = spec.norm_budget
    nrm, _ = lq_norm_with_error(fn, spec.q, spec.weight, SATURATION_REL_TOL)
    if nrm == 0.0:
        raise InfeasibleError("cannot saturate the zero function")
    scaled = linear_combine([(budget / nrm, fn)])
    return Atom(spec, scaled, budget, dict(provenance or {}))


def atom_from_combination(
    spec: AtomSpec, family: AtomFamily, z: np.ndarray, basis: np.ndarray | None = None, provenance: dict | None = None
) -> Atom:
    """Saturated atom from null-space coordinates ``z`` (normalised internally)."""
    if basis is None:
        basis = null_space_basis(spec, family)
    z = np.asarray(z, dtype=float)
    nz = np.linalg.norm(z)
    if nz == 0.0:
        raise DomainError("null-space coordinates must not all vanish")
    b = basis @ (z / nz)
    return saturate(spec, function_from_coefficients(spec, family, b), provenance)


def build_atom(spec: AtomSpec, degree: int, seed: int) -> Atom:
    """Single-piece polynomial atom of degree at most ``degree``."""
    need = spec.n_constraints
    if degree < need:
        raise InfeasibleError(f"degree {degree} too small: need at least {need} for {need} constraints")
    family = AtomFamily("poly", degree)
    basis = null_space_basis(spec, family)
    z = np.random.default_rng(seed).standard_normal(basis.shape[1])
    return atom_from_combination(spec, family, z, basis, {"family": "poly", "degree": degree, "seed": seed})


def build_step_atom(spec: AtomSpec, steps: int, seed: int) -> Atom:
    """Piecewise-constant atom on ``steps`` equal subintervals."""
    family = AtomFamily("steps", steps)
    basis = null_space_basis(spec, family)
    z = np.random.default_rng(seed).standard_normal(basis.shape[1])
    return atom_from_combination(spec, family, z, basis, {"family": "steps", "steps": steps, "seed": seed})


def square_wave_atom(spec: AtomSpec) -> Atom:
    """``+c`` on the left half, ``-c`` on the right half, saturated."""
    iv = spec.interval
    mid = 0.5 * (iv.lo + iv.hi)
    fn = step_function([iv.lo, mid, iv.hi], [1.0, -1.0])
    return saturate(spec, fn, {"family": "squarewave"})


def dilate_atom(a: Atom, lam: float) -> Atom:
    """``x -> lam**(1/p) a(lam x)`` on ``(x0/lam, x1/lam)``; unit weight only."""
    if a.spec.weight.kind != "unit":
        raise DomainError("dilation closure holds for the unit weight only")
    iv = a.spec.interval
    spec = replace(a.spec, interval=Interval(iv.lo / lam, iv.hi / lam))
    fn = dilate(a.fn, lam, lam ** (1.0 / a.spec.p))
    return Atom(spec, fn, spec.norm_budget, {**a.provenance, "dilation": lam})


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class AtomValidationReport:
    support_ok: bool
    norm_ok: bool
    moments_ok: bool
    log_moment_ok: bool
    norm: float
    norm_error: float
    budget: float
    moments: tuple[float, ...]
    log_moment_value: float | None
    scale: float
    tol: float
    strict_size: bool = False
    trivial: bool = False

    @property
    def passed(self) -> bool:
        return self.support_ok and self.norm_ok and self.moments_ok and self.log_moment_ok

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["moments"] = list(self.moments)
        d["passed"] = self.passed
        d["verdict"] = self.verdict
        return d


def validate_atom(
    fn: GeneralizedPiecewiseFunction, spec: AtomSpec, tol: float = 1e-9, strict_size: bool = False
) -> AtomValidationReport:
    """Check every atom condition; failures are reported, never raised.

    With ``strict_size`` the size condition must hold strictly even after
    adding the norm's error estimate.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    iv = spec.interval
    budget = spec.norm_budget
    scale = budget * iv.length
    sup = fn.support
    support_ok = fn.tail == 0.0 and (sup is None or iv.contains(sup))
    trivial = fn.is_zero
    if fn.tail:
        nrm, err = math.inf, 0.0
    else:
        nrm, err = lq_norm_with_error(fn, spec.q, spec.weight)
    if strict_size:
        norm_ok = nrm + err < budget
    else:
        norm_ok = nrm <= budget * (1.0 + tol)
    if fn.tail:
        moms = tuple(math.nan for _ in range(spec.s + 1))
        moments_ok = False
    else:
        moms = tuple(moment(fn, b) for b in range(spec.s + 1))
        moments_ok = all(abs(m) <= tol * scale for m in moms)
    lm = None
    log_ok = True
    if spec.log_moment:
        lm = math.nan if fn.tail else log_moment(fn)
        log_ok = abs(lm) <= tol * scale
    return AtomValidationReport(
        support_ok, norm_ok, moments_ok, log_ok, nrm, err, budget, moms, lm, scale, tol, strict_size, trivial
    )
