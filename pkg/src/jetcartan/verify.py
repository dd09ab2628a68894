"""Residual tensors and their numerical verification over seeded samples."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .symexpr import Expr, as_expr, evaluate_batch
from .tensors import as_expr_array


class SamplingError(RuntimeError):
    """Too many sample points fell outside the evaluation domain."""


@dataclass(frozen=True)
class SamplingPlan:
    seed: int = 0
    count: int = 50
    # (lo, hi) per coordinate name; unnamed coordinates use ``default_box``
    domain: dict = field(default_factory=dict)
    default_box: tuple = (-1.0, 1.0)
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    max_retries: int = 50

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("sampling plan needs count >= 1")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        for name, (lo, hi) in self.domain.items():
            if not lo < hi:
                raise ValueError(f"empty interval for {name}")

    def bounds(self, n: int) -> np.ndarray:
        names = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
        return np.array([self.domain.get(nm, self.default_box) for nm in names], dtype=float)

    def with_(self, **changes) -> "SamplingPlan":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return SamplingPlan(**fields)


@dataclass
class ResidualTensor:
    """LHS and RHS of an identity over its free indices."""

    name: str
    slots: tuple
    lhs: np.ndarray
    rhs: np.ndarray
    family: str = ""

    def __post_init__(self):
        self.lhs = as_expr_array(self.lhs)
        self.rhs = as_expr_array(self.rhs)
        if self.lhs.shape != self.rhs.shape:
            raise ValueError(f"{self.name}: lhs/rhs shapes differ")

    def difference(self) -> np.ndarray:
        out = np.empty(self.lhs.shape, dtype=object)
        for idx in np.ndindex(*self.lhs.shape):
            out[idx] = self.lhs[idx] - self.rhs[idx]
        return out

    def exact_zero(self) -> bool:
        return all(e.is_zero() for e in self.difference().flat)


@dataclass
class IdentityResult:
    name: str
    family: str
    max_abs: float
    max_rel: float
    worst_point: dict | None
    worst_index: tuple | None
    passed: bool
    exact_zero: bool
    suspect: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "family": self.family,
            "max_abs": self.max_abs,
            "max_rel": self.max_rel,
            "worst_point": self.worst_point,
            "worst_index": list(self.worst_index) if self.worst_index is not None else None,
            "verdict": "pass" if self.passed else "fail",
            "exact_zero": self.exact_zero,
            "suspect": self.suspect,
            "note": self.note,
        }


@dataclass
class VerificationReport:
    results: list
    seed: int
    count: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> IdentityResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def names(self) -> list:
        return [r.name for r in self.results]

    def to_dict(self) -> dict:
        return {"seed": self.seed, "points": self.count, "results": [r.to_dict() for r in self.results]}

    def summary(self) -> str:
        lines = []
        for r in self.results:
            flag = "SUSPECT" if r.suspect else ("pass" if r.passed else "FAIL")
            lines.append(f"{r.name:<28} {flag:<8} max_abs={r.max_abs:.3e} max_rel={r.max_rel:.3e}")
        return "\n".join(lines)


def draw_points(plan: SamplingPlan, n: int, rng: np.random.Generator, count: int) -> np.ndarray:
    b = plan.bounds(n)
    u = rng.random((count, b.shape[0]))
    return b[:, 0] + u * (b[:, 1] - b[:, 0])


def _split(pts: np.ndarray, n: int):
    return pts[:, 0], pts[:, 1 : 1 + n].T, pts[:, 1 + n :].T


def sample_values(
    exprs: Sequence[Expr],
    plan: SamplingPlan,
    n: int,
    guards: Sequence[Expr] = (),
    guard_min: float = 1e-6,
):
    """Evaluate expressions at ``plan.count`` admissible points.

    Points where any expression leaves its domain, or a guard expression is
    not above ``guard_min``, are redrawn (bounded retries).
    Returns ``(points, values)``.
    """
    exprs = [as_expr(e) for e in exprs]
    guards = [as_expr(g) for g in guards]
    allx = exprs + guards
    rng = np.random.default_rng(plan.seed)
    pts = draw_points(plan, n, rng, plan.count)
    vals = np.empty((len(allx), plan.count))
    todo = np.arange(plan.count)
    culprit = None
    for _ in range(plan.max_retries + 1):
        v, bad, c = evaluate_batch(allx, *_split(pts[todo], n))
        culprit = culprit or c
        if guards:
            bad |= np.any(v[len(exprs) :] <= guard_min, axis=0)
        vals[:, todo] = v
        todo = todo[bad]
        if todo.size == 0:
            return pts, vals[: len(exprs)]
        pts[todo] = draw_points(plan, n, rng, todo.size)
    where = f" (first offending subtree: {culprit})" if culprit is not None else ""
    raise SamplingError(f"{todo.size} points still outside the domain after {plan.max_retries} retries{where}")


def _point_dict(p: np.ndarray, n: int) -> dict:
    return {"t": float(p[0]), "x": [float(v) for v in p[1 : 1 + n]], "y": [float(v) for v in p[1 + n :]]}


def verify(
    residuals: Sequence[ResidualTensor],
    plan: SamplingPlan,
    n: int,
    guards: Sequence[Expr] = (),
) -> VerificationReport:
    """Max absolute and scale-relative residual of every identity.

    The scale-relative residual is |L - R| / (1 + |L| + |R|).  An identity
    passes when either maximum is within its tolerance.
    """
    exprs = []
    spans = []
    for res in residuals:
        start = len(exprs)
        exprs.extend(res.lhs.flat)
        exprs.extend(res.rhs.flat)
        spans.append((start, res.lhs.size))
    pts, vals = sample_values(exprs, plan, n, guards)
    results = []
    for res, (start, size) in zip(residuals, spans):
        if size == 0:
            results.append(IdentityResult(res.name, res.family, 0.0, 0.0, None, None, True, True))
            continue
        L = vals[start : start + size]
        R = vals[start + size : start + 2 * size]
        diff = np.abs(L - R)
        rel = diff / (1.0 + np.abs(L) + np.abs(R))
        flat = int(np.argmax(rel))
        comp, pt = np.unravel_index(flat, rel.shape)
        max_abs = float(diff.max())
        max_rel = float(rel.max())
        worst = _point_dict(pts[pt], n) if max_rel > 0 else None
        widx = tuple(int(i) for i in np.unravel_index(comp, res.lhs.shape)) if max_rel > 0 else None
        passed = max_abs <= plan.abs_tol or max_rel <= plan.rel_tol
        results.append(
            IdentityResult(res.name, res.family, max_abs, max_rel, worst, widx, passed, res.exact_zero())
        )
    return VerificationReport(results, plan.seed, plan.count)
