"""Metrics, Christoffel symbols, nonlinear connections and the adapted frame.

Array conventions (0-based, upper indices first):

* ``gamma[i, j, k]`` is the Christoffel symbol with upper ``i``;
* ``NonlinearConnection.M[r]`` is the temporal component M^(r)_(1)1 and
  ``N[r, i]`` the spatial component N^(r)_(1)i;
* frame indices run over ``0`` (d/dt adapted), ``1..n`` (d/dx^i adapted) and
  ``n+1..2n`` (d/dy_1^i).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .symexpr import (
    ONE,
    ZERO,
    Coordinate,
    Expr,
    add,
    as_expr,
    diff,
    mul,
    power,
    simplify,
    substitute,
    y_vars,
)
from .tensors import SL, SU, DTensor, as_expr_array, expr_array

T = Coordinate("t")


def X(i: int) -> Coordinate:
    """Spatial coordinate for 0-based array index ``i``."""
    return Coordinate("x", i + 1)


def Y(i: int) -> Coordinate:
    """Fibre coordinate for 0-based array index ``i``."""
    return Coordinate("y", i + 1)


def delta(i: int, j: int) -> Expr:
    return ONE if i == j else ZERO


@dataclass(frozen=True)
class TemporalMetric:
    h11: Expr

    def __post_init__(self):
        h = as_expr(self.h11)
        object.__setattr__(self, "h11", h)
        if h.free - {T}:
            raise ValueError(f"h11 must depend on t only, got {h}")


@dataclass(frozen=True)
class SpatialMetric:
    phi: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        phi = as_expr_array(self.phi)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise ValueError("phi must be a square matrix")
        n = phi.shape[0]
        allowed = {X(i) for i in range(n)}
        for i, j in itertools.product(range(n), repeat=2):
            if phi[i, j].free - allowed:
                raise ValueError(f"phi[{i},{j}] must depend on x only")
            if simplify(phi[i, j] - phi[j, i]) is not ZERO:
                raise ValueError(f"phi is not symmetric at ({i + 1},{j + 1})")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "n", n)


@dataclass(frozen=True)
class NonlinearConnection:
    M: np.ndarray
    N: np.ndarray

    def __post_init__(self):
        M = as_expr_array(self.M)
        N = as_expr_array(self.N)
        n = M.shape[0]
        if M.shape != (n,) or N.shape != (n, n):
            raise ValueError("nonlinear connection arrays have inconsistent shapes")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "N", N)

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @classmethod
    def zero(cls, n: int) -> "NonlinearConnection":
        return cls(expr_array((n,)), expr_array((n, n)))


# --------------------------------------------------------------------------
# Christoffel symbols


def temporal_christoffel(h: TemporalMetric) -> Expr:
    """kappa^1_11 = (h^11 / 2) dh11/dt."""
    return mul(Fraction(1, 2), power(h.h11, -1), diff(h.h11, T))


def temporal_christoffel_first_kind(h: TemporalMetric) -> Expr:
    return mul(temporal_christoffel(h), h.h11)


def _det(m: np.ndarray) -> Expr:
    k = m.shape[0]
    if k == 1:
        return m[0, 0]
    if k == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    terms = []
    for j in range(k):
        if m[0, j].is_zero():
            continue
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        terms.append(mul((-1) ** j, m[0, j], _det(minor)))
    return add(*terms)


def determinant(phi: np.ndarray) -> Expr:
    if phi.shape[0] > 4:
        raise ValueError("closed-form inverse supported for n <= 4 only")
    return _det(phi)


def inverse_matrix(m: np.ndarray) -> np.ndarray:
    """Adjugate over determinant, for square expression matrices up to 4x4."""
    m = as_expr_array(m)
    k = m.shape[0]
    if k > 4:
        raise ValueError("closed-form inverse supported for n <= 4 only")
    inv_det = power(_det(m), -1)
    if k == 1:
        return expr_array((1, 1), lambda i, j: inv_det)

    def cof(i, j):
        minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
        return mul((-1) ** (i + j), _det(minor))

    return expr_array((k, k), lambda i, j: mul(cof(j, i), inv_det))


def inverse_spatial_metric(phi: SpatialMetric) -> np.ndarray:
    return inverse_matrix(phi.phi)


def spatial_christoffel(phi: SpatialMetric) -> DTensor:
    """gamma^i_jk = (phi^im / 2)(d_k phi_jm + d_j phi_km - d_m phi_jk)."""
    n = phi.n
    g = phi.phi
    ginv = inverse_spatial_metric(phi)
    first = expr_array(
        (n, n, n),
        lambda m, j, k: diff(g[j, m], X(k)) + diff(g[k, m], X(j)) - diff(g[j, k], X(m)),
    )
    half = Fraction(1, 2)
    return DTensor.build(
        (SU, SL, SL),
        n,
        lambda i, j, k: add(*(mul(half, ginv[i, m], first[m, j, k]) for m in range(n))),
    )


def spatial_riemann(phi: SpatialMetric, gamma: DTensor | None = None) -> DTensor:
    """r^l_ijk = d_k g^l_ij - d_j g^l_ik + g^r_ij g^l_rk - g^r_ik g^l_rj.

    Antisymmetric in (j, k); the Ricci tensor is ``sum_l r[l, i, j, l]``.
    """
    n = phi.n
    g = (gamma or spatial_christoffel(phi)).components

    def comp(l, i, j, k):
        terms = [diff(g[l, i, j], X(k)), -diff(g[l, i, k], X(j))]
        for r in range(n):
            terms.append(g[r, i, j] * g[l, r, k])
            terms.append(-(g[r, i, k] * g[l, r, j]))
        return add(*terms)

    return DTensor.build((SU, SL, SL, SL), n, comp)


# --------------------------------------------------------------------------
# nonlinear connections


def canonical_nlc(h: TemporalMetric, phi: SpatialMetric) -> NonlinearConnection:
    n = phi.n
    kappa = temporal_christoffel(h)
    gamma = spatial_christoffel(phi).components
    y = y_vars(n)
    M = expr_array((n,), lambda j: -(kappa * y[j]))
    N = expr_array((n, n), lambda j, i: add(*(gamma[j, i, m] * y[m] for m in range(n))))
    return NonlinearConnection(M, N)


def nlc_from_semispray(H: Sequence, G: Sequence) -> NonlinearConnection:
    """M^(j) = 2 H^(j), N^(j)_k = dG^(j)/dy_1^k."""
    H = [as_expr(e) for e in H]
    G = [as_expr(e) for e in G]
    n = len(H)
    if len(G) != n:
        raise ValueError("H and G must have the same length")
    M = expr_array((n,), lambda j: 2 * H[j])
    N = expr_array((n, n), lambda j, k: diff(G[j], Y(k)))
    return NonlinearConnection(M, N)


@dataclass(frozen=True)
class CoordinateChange:
    """A change t~ = t~(t), x~ = x~(x) with caller-supplied inverses.

    ``t_new``/``x_new`` are written in the old coordinates; ``t_old``/``x_old``
    express the old coordinates through the new ones, reusing the names
    ``t`` and ``x1..xn`` for the new chart.
    """

    t_new: Expr
    t_old: Expr
    x_new: tuple
    x_old: tuple

    def __post_init__(self):
        for name in ("t_new", "t_old"):
            object.__setattr__(self, name, as_expr(getattr(self, name)))
        object.__setattr__(self, "x_new", tuple(as_expr(e) for e in self.x_new))
        object.__setattr__(self, "x_old", tuple(as_expr(e) for e in self.x_old))
        if len(self.x_new) != len(self.x_old):
            raise ValueError("x_new and x_old must have the same length")

    @property
    def n(self) -> int:
        return len(self.x_new)

    def y_new(self) -> list:
        """y~^k = (dx~^k/dx^j)(dt/dt~) y^j in old coordinates."""
        n = self.n
        ratio = power(diff(self.t_new, T), -1)
        y = y_vars(n)
        return [add(*(diff(self.x_new[k], X(j)) * ratio * y[j] for j in range(n))) for k in range(n)]

    def old_in_new(self) -> dict:
        """Substitution expressing old (t, x, y) through the new chart."""
        n = self.n
        ratio_inv = power(diff(self.t_old, T), -1)
        y = y_vars(n)
        mapping = {T: self.t_old}
        for i in range(n):
            mapping[X(i)] = self.x_old[i]
            mapping[Y(i)] = add(*(diff(self.x_old[i], X(m)) * ratio_inv * y[m] for m in range(n)))
        return mapping

    def new_in_old(self) -> dict:
        mapping = {T: self.t_new}
        yn = self.y_new()
        for i in range(self.n):
            mapping[X(i)] = self.x_new[i]
            mapping[Y(i)] = yn[i]
        return mapping


def nlc_transform(gamma: NonlinearConnection, change: CoordinateChange) -> NonlinearConnection:
    """Components of ``gamma`` in the new chart, as functions of the new coordinates."""
    n = gamma.n
    if change.n != n:
        raise ValueError("coordinate change dimension differs from the connection")
    dtn = simplify(diff(change.t_new, T))
    if dtn.is_zero():
        raise ValueError("time change is not invertible (dt~/dt = 0)")
    ratio = power(dtn, -1)
    jac = expr_array((n, n), lambda k, j: diff(change.x_new[k], X(j)))
    to_old = {T: change.t_new, **{X(i): change.x_new[i] for i in range(n)}}
    inv_jac = expr_array((n, n), lambda i, l: substitute(diff(change.x_old[i], X(l)), to_old))
    yt = change.y_new()
    M, N = gamma.M, gamma.N

    def m_new(k):
        terms = [M[j] * ratio * ratio * jac[k, j] for j in range(n)]
        terms.append(-(ratio * diff(yt[k], T)))
        return add(*terms)

    def n_new(k, l):
        terms = [N[j, i] * ratio * inv_jac[i, l] * jac[k, j] for i in range(n) for j in range(n)]
        terms += [-(inv_jac[i, l] * diff(yt[k], X(i))) for i in range(n)]
        return add(*terms)

    back = change.old_in_new()
    return NonlinearConnection(
        expr_array((n,), lambda k: substitute(m_new(k), back)),
        expr_array((n, n), lambda k, l: substitute(n_new(k, l), back)),
    )


def pullback_metrics(h: TemporalMetric, phi: SpatialMetric, change: CoordinateChange):
    """Metrics (h~, phi~) in the new chart."""
    n = phi.n
    back = change.old_in_new()
    dt_dtn = diff(change.t_old, T)
    h_new = substitute(h.h11, back) * dt_dtn * dt_dtn
    dx = expr_array((n, n), lambda i, k: diff(change.x_old[i], X(k)))
    g = expr_array((n, n), lambda i, j: substitute(phi.phi[i, j], back))
    phi_new = expr_array(
        (n, n),
        lambda k, l: add(*(g[i, j] * dx[i, k] * dx[j, l] for i in range(n) for j in range(n))),
    )
    return TemporalMetric(simplify(h_new)), SpatialMetric(phi_new)


# --------------------------------------------------------------------------
# adapted frame


class AdaptedFrame:
    """Adapted basis (d/dt, d/dx^i, d/dy^i) and dual cobasis (dt, dx^i, dy^i)."""

    def __init__(self, gamma: NonlinearConnection):
        self.gamma = gamma
        self.n = gamma.n
        self.coords = [T] + [X(i) for i in range(self.n)] + [Y(i) for i in range(self.n)]
        self.size = 2 * self.n + 1
        self._frame = self._frame_matrix()
        self._coframe = self._coframe_matrix()

    # frame-index helpers
    def time(self) -> int:
        return 0

    def space(self, i: int) -> int:
        return 1 + i

    def fiber(self, i: int) -> int:
        return 1 + self.n + i

    def _frame_matrix(self) -> np.ndarray:
        """Row A: coordinate components of frame field X_A."""
        n, M, N = self.n, self.gamma.M, self.gamma.N
        F = expr_array((self.size, self.size))
        F[0, 0] = ONE
        for j in range(n):
            F[0, 1 + n + j] = -M[j]
        for i in range(n):
            F[1 + i, 1 + i] = ONE
            for j in range(n):
                F[1 + i, 1 + n + j] = -N[j, i]
            F[1 + n + i, 1 + n + i] = ONE
        return F

    def _coframe_matrix(self) -> np.ndarray:
        """Row a: coordinate components of coframe form (dt, dx^i, delta y^i)."""
        n, M, N = self.n, self.gamma.M, self.gamma.N
        W = expr_array((self.size, self.size))
        W[0, 0] = ONE
        for i in range(n):
            W[1 + i, 1 + i] = ONE
            W[1 + n + i, 1 + n + i] = ONE
            W[1 + n + i, 0] = M[i]
            for j in range(n):
                W[1 + n + i, 1 + j] = N[i, j]
        return W

    @property
    def frame(self) -> np.ndarray:
        return self._frame

    @property
    def coframe(self) -> np.ndarray:
        return self._coframe

    def pairing(self, a: int, b: int) -> Expr:
        """<coframe_a, frame_b>, simplified."""
        return simplify(add(*(self._coframe[a, c] * self._frame[b, c] for c in range(self.size))))

    def delta_t(self, f) -> Expr:
        return self.apply(0, f)

    def delta_x(self, i: int, f) -> Expr:
        return self.apply(1 + i, f)

    def d_y(self, i: int, f) -> Expr:
        return diff(as_expr(f), Y(i))

    def apply(self, A: int, f) -> Expr:
        """Frame field X_A acting on a function."""
        f = as_expr(f)
        row = self._frame[A]
        return add(*(row[c] * diff(f, self.coords[c]) for c in range(self.size) if not row[c].is_zero()))

    def apply_coordinate_field(self, v: np.ndarray, f) -> Expr:
        f = as_expr(f)
        return add(*(v[c] * diff(f, self.coords[c]) for c in range(self.size) if not v[c].is_zero()))

    def to_adapted(self, v: np.ndarray) -> np.ndarray:
        """Adapted components of a vector field given in coordinate components."""
        W = self._coframe
        return expr_array(
            (self.size,),
            lambda a: add(*(W[a, c] * v[c] for c in range(self.size) if not W[a, c].is_zero())),
        )

    def to_coordinates(self, v: np.ndarray) -> np.ndarray:
        F = self._frame
        return expr_array(
            (self.size,),
            lambda c: add(*(v[A] * F[A, c] for A in range(self.size) if not F[A, c].is_zero())),
        )


def adapted_frame(gamma: NonlinearConnection) -> AdaptedFrame:
    return AdaptedFrame(gamma)


def coordinate_bracket(frame: AdaptedFrame, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """[U, V]^c = U(V^c) - V(U^c) in coordinate components."""
    return expr_array(
        (frame.size,),
        lambda c: frame.apply_coordinate_field(u, v[c]) - frame.apply_coordinate_field(v, u[c]),
    )


def frame_bracket(gamma: NonlinearConnection | AdaptedFrame, A: int, B: int) -> np.ndarray:
    """Lie bracket [X_A, X_B] expanded in the adapted basis."""
    frame = gamma if isinstance(gamma, AdaptedFrame) else AdaptedFrame(gamma)
    F = frame.frame
    return frame.to_adapted(coordinate_bracket(frame, F[A], F[B]))


def frame_brackets(frame: AdaptedFrame) -> np.ndarray:
    """All brackets: ``out[A, B, D]`` is the X_D component of [X_A, X_B]."""
    s = frame.size
    out = expr_array((s, s, s))
    for A in range(s):
        for B in range(A + 1, s):
            br = frame_bracket(frame, A, B)
            for D in range(s):
                out[A, B, D] = br[D]
                out[B, A, D] = -br[D]
    return out
