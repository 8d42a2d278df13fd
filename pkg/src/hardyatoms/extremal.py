"""Derivative-free search for atoms that come closest to a bound.

The search space is the unit sphere of the moment-constraint null space
together with ``t = ln(x0/x1)``; ``x1`` is pinned to 1 because every objective
here is dilation invariant. A compass search polls ``+-`` each coordinate,
moves on the first improvement and halves its step otherwise.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .atoms import Atom, AtomFamily, AtomSpec, atom_from_combination, null_space_basis
from .errors import DomainError, InfeasibleError
from .funcrep import Interval
from .norms import DEFAULT_REL_TOL, WeightSpec, lp_integral
from .operators import dual_hardy, hardy
from .verify import FAIL, INCONCLUSIVE, LN2, c1_pow, c2_pow, decide

OBJECTIVES = ("prop1", "prop4", "log2")
CSV_COLUMNS = ("p", "q", "s", "r", "tightness", "best_value", "bound", "seed", "iters")
MIN_STEP = 1e-7


@dataclass(frozen=True)
class SearchConfig:
    spec: AtomSpec
    family: AtomFamily = AtomFamily("steps", 4)
    restarts: int = 4
    max_iters: int = 200
    seed: int = 0
    objective: str = "prop1"
    r_min: float = 1e-8
    r_max: float = 0.9
    rel_tol: float = DEFAULT_REL_TOL
    constant_variant: str = "printed"

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise DomainError("restarts and max_iters must be at least 1")
        if self.objective not in OBJECTIVES:
            raise DomainError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if not 0 < self.r_min < self.r_max < 1:
            raise DomainError("need 0 < r_min < r_max < 1")
        sp = self.spec
        if self.objective == "prop1" and sp.weight.kind != "unit":
            raise DomainError("prop1 search needs the unit weight")
        if self.objective == "prop4" and (sp.weight.kind != "power" or sp.weight.alpha != sp.p):
            raise DomainError("prop4 search needs the weight x**p")
        if self.objective == "log2" and (sp.p != 1.0 or sp.q != math.inf):
            raise DomainError("log2 search needs p = 1 and q = inf")
        if self.family.n_coeffs <= sp.n_constraints:
            raise InfeasibleError(
                f"family {self.family.kind}/{self.family.size} has a trivial null space under "
                f"{sp.n_constraints} constraints"
            )

    @property
    def bound(self) -> float:
        sp = self.spec
        if self.objective == "prop1":
            return c1_pow(sp.p, sp.q)
        if self.objective == "prop4":
            return c2_pow(sp.p, sp.q, self.constant_variant)
        return LN2


@dataclass(frozen=True)
class ExtremalResult:
    best_atom: Atom
    best_value: float
    bound: float
    trajectory: tuple[tuple[int, float], ...]
    evaluations: int
    violations: int
    inconclusive: int
    iters: int
    best_restart: int
    worst_ratio: float = field(default=0.0)

    @property
    def tightness(self) -> float:
        return self.best_value / self.bound

    @property
    def r(self) -> float:
        return self.best_atom.spec.interval.lo / self.best_atom.spec.interval.hi


class _Objective:
    """Candidate evaluation with a cached null-space basis."""

    def __init__(self, cfg: SearchConfig):
        self.cfg = cfg
        self.bound = cfg.bound
        self._basis = None
        if not cfg.spec.log_moment:
            # rows in the rescaled coordinate do not depend on the interval
            self._basis = null_space_basis(cfg.spec, cfg.family)
        self.evaluations = 0
        self.violations = 0
        self.inconclusive = 0
        self.worst_ratio = 0.0

    @property
    def dim(self) -> int:
        if self._basis is not None:
            return self._basis.shape[1]
        return null_space_basis(replace(self.cfg.spec, interval=Interval(0.5, 1.0)), self.cfg.family).shape[1]

    def atom(self, z: np.ndarray, t: float) -> Atom:
        spec = replace(self.cfg.spec, interval=Interval(math.exp(t), 1.0))
        return atom_from_combination(spec, self.cfg.family, z, self._basis, {"family": self.cfg.family.kind})

    def __call__(self, z: np.ndarray, t: float) -> tuple[float, Atom]:
        a = self.atom(z, t)
        op = dual_hardy if self.cfg.objective == "prop4" else hardy
        p = 1.0 if self.cfg.objective == "log2" else a.spec.p
        r = lp_integral(op(a.fn).fn, p, rel_tol=self.cfg.rel_tol)
        self.evaluations += 1
        verdict = decide(r.value, self.bound, r.abs_error_estimate, strict=True)
        if verdict == FAIL:
            self.violations += 1
        elif verdict == INCONCLUSIVE:
            self.inconclusive += 1
        self.worst_ratio = max(self.worst_ratio, r.value / self.bound)
        return r.value, a


def _search_one(cfg: SearchConfig, restart: int) -> dict:
    rng = np.random.default_rng([cfg.seed, restart])
    obj = _Objective(cfg)
    t_lo, t_hi = math.log(cfg.r_min), math.log(cfg.r_max)
    t_scale = 0.25 * (t_hi - t_lo)
    n = obj.dim

    def fresh():
        z0 = rng.standard_normal(n)
        return z0 / np.linalg.norm(z0), rng.uniform(t_lo, t_hi)

    z, t = fresh()
    cur, best_atom = obj(z, t)
    best = cur
    step = 0.5
    traj = [(0, best)]
    for it in range(1, cfg.max_iters + 1):
        improved = False
        # a freshly rotated polling basis each iteration lets the search follow
        # ridges created by the sup-norm saturation
        basis = np.linalg.qr(rng.standard_normal((n, n)))[0]
        for k in rng.permutation(n + 1):
            for sign in (1.0, -1.0):
                zc, tc = z.copy(), t
                if k < n:
                    zc += sign * step * basis[:, k]
                    if not np.any(zc):
                        continue
                    zc /= np.linalg.norm(zc)
                else:
                    tc = min(max(t + sign * step * t_scale, t_lo), t_hi)
                    if tc == t:
                        continue
                val, a = obj(zc, tc)
                if val > cur:
                    cur, z, t = val, zc, tc
                    if val > best:
                        best, best_atom = val, a
                    improved = True
                    break
            if improved:
                break
        if not improved:
            step *= 0.5
            if step < MIN_STEP:
                # converged: spend the remaining budget on a fresh local search
                z, t = fresh()
                cur, a = obj(z, t)
                if cur > best:
                    best, best_atom = cur, a
                step = 0.5
        traj.append((it, best))
    return {
        "restart": restart,
        "best_value": best,
        "best_atom": best_atom,
        "trajectory": traj,
        "evaluations": obj.evaluations,
        "violations": obj.violations,
        "inconclusive": obj.inconclusive,
        "worst_ratio": obj.worst_ratio,
    }


def extremize(cfg: SearchConfig, jobs: int = 1) -> ExtremalResult:
    """Maximise the objective over ``cfg.restarts`` seeded compass searches.

    Restarts are independent; the merge takes the largest value and breaks
    ties by the lower restart index, so the result does not depend on ``jobs``.
    """
    if jobs > 1 and cfg.restarts > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, cfg.restarts)) as ex:
            runs = list(ex.map(_search_one, [cfg] * cfg.restarts, range(cfg.restarts)))
    else:
        runs = [_search_one(cfg, k) for k in range(cfg.restarts)]
    win = max(runs, key=lambda r: (r["best_value"], -r["restart"]))
    # trajectory of the running best across restarts, restart-major order
    traj, best, it = [], -math.inf, 0
    for run in sorted(runs, key=lambda r: r["restart"]):
        for _, v in run["trajectory"]:
            best = max(best, v)
            traj.append((it, best))
            it += 1
    return ExtremalResult(
        best_atom=win["best_atom"],
        best_value=win["best_value"],
        bound=cfg.bound,
        trajectory=tuple(traj),
        evaluations=sum(r["evaluations"] for r in runs),
        violations=sum(r["violations"] for r in runs),
        inconclusive=sum(r["inconclusive"] for r in runs),
        iters=cfg.restarts * cfg.max_iters,
        best_restart=win["restart"],
        worst_ratio=max(r["worst_ratio"] for r in runs),
    )


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[dict, ...]
    skipped: tuple[dict, ...]
    evaluations: int
    violations: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: _csv_value(row[k]) for k in CSV_COLUMNS})
        return buf.getvalue()

    def plot_data(self) -> str:
        """Whitespace-separated ``p q tightness bound best_value`` columns."""
        lines = ["# p q tightness bound best_value"]
        for row in self.rows:
            lines.append(" ".join(_csv_value(row[k]) for k in ("p", "q", "tightness", "bound", "best_value")))
        return "\n".join(lines) + "\n"


def _csv_value(v) -> str:
    if isinstance(v, float):
        return "inf" if v == math.inf else repr(v)
    return str(v)


def _row_config(template: SearchConfig, p: float, q: float) -> SearchConfig:
    weight = WeightSpec.power(p) if template.objective == "prop4" else template.spec.weight
    spec = replace(template.spec, p=p, q=q, weight=weight)
    return replace(template, spec=spec)


def tightness_sweep(grid, template: SearchConfig, jobs: int = 1) -> SweepResult:
    """Run ``extremize`` on each admissible ``(p, q)``; the rest are skipped."""
    rows, skipped, evals, viol = [], [], 0, 0
    for p, q in sorted({(float(p), float(q)) for p, q in grid}):
        try:
            cfg = _row_config(template, p, q)
        except (DomainError, InfeasibleError) as exc:
            skipped.append({"p": p, "q": q, "reason": str(exc)})
            continue
        res = extremize(cfg, jobs)
        evals += res.evaluations
        viol += res.violations
        rows.append(
            {
                "p": p,
                "q": q,
                "s": cfg.spec.s,
                "r": res.r,
                "tightness": res.tightness,
                "best_value": res.best_value,
                "bound": res.bound,
                "seed": cfg.seed,
                "iters": res.iters,
                "evaluations": res.evaluations,
                "violations": res.violations,
            }
        )
    return SweepResult(tuple(rows), tuple(skipped), evals, viol)
