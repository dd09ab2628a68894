"""Gamma-linear connections on J^1(R, M) and their covariant derivatives.

Component arrays (0-based, upper index first, then lower indices in the
order they are written):

=========  ==========================  =========
field      component                   shape
=========  ==========================  =========
``Gbar``   Gbar^1_11                   scalar
``G``      G^k_{i1}        -> [k, i]    (n, n)
``GV``     G^(k)(1)_(1)(i)1 -> [k, i]   (n, n)
``Lbar``   Lbar^1_{1j}     -> [j]       (n,)
``L``      L^k_{ij}        -> [k, i, j] (n, n, n)
``LV``     L^(k)(1)_(1)(i)j             (n, n, n)
``Cbar``   Cbar^1(1)_1(j)  -> [j]       (n,)
``C``      C^k(1)_i(j)     -> [k, i, j] (n, n, n)
``CV``     C^(k)(1)(1)_(1)(i)(j)        (n, n, n)
=========  ==========================  =========
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction
import numpy as np

from .geometry import (
    AdaptedFrame,
    NonlinearConnection,
    SpatialMetric,
    TemporalMetric,
    canonical_nlc,
    delta,
    spatial_christoffel,
    temporal_christoffel,
)
from .symexpr import ZERO, Expr, add, as_expr, const, evaluate_batch, mul, simplify, t_var, x_vars, y_vars
from .tensors import FL, FU, SL, TL, DTensor, IndexSlot, as_expr_array, expr_array
from .verify import ResidualTensor, SamplingPlan, VerificationReport, verify


class CartanSymmetryError(ValueError):
    """L or C fails the lower-index symmetry required for Cartan type."""

    def __init__(self, family: str, triple: tuple):
        k, i, j = triple
        super().__init__(f"{family}^{k}_{i}{j} != {family}^{k}_{j}{i}: Cartan symmetry violated at ({k},{i},{j})")
        self.family = family
        self.triple = triple


@dataclass(frozen=True)
class HNormalData:
    """The four effective components (kappa, G, L, C) of an h-normal connection."""

    h: TemporalMetric
    G: np.ndarray
    L: np.ndarray
    C: np.ndarray
    kappa: Expr = None

    def __post_init__(self):
        object.__setattr__(self, "G", as_expr_array(self.G))
        object.__setattr__(self, "L", as_expr_array(self.L))
        object.__setattr__(self, "C", as_expr_array(self.C))
        if self.kappa is None:
            object.__setattr__(self, "kappa", temporal_christoffel(self.h))
        n = self.G.shape[0]
        if self.G.shape != (n, n) or self.L.shape != (n, n, n) or self.C.shape != (n, n, n):
            raise ValueError("h-normal data arrays have inconsistent shapes")

    @property
    def n(self) -> int:
        return self.G.shape[0]


@dataclass(frozen=True, eq=False)
class GammaConnection:
    nlc: NonlinearConnection
    Gbar: Expr
    G: np.ndarray
    GV: np.ndarray
    Lbar: np.ndarray
    L: np.ndarray
    LV: np.ndarray
    Cbar: np.ndarray
    C: np.ndarray
    CV: np.ndarray
    hnormal: HNormalData | None = None
    cartan: bool = False

    def __post_init__(self):
        n = self.nlc.n
        object.__setattr__(self, "Gbar", as_expr(self.Gbar))
        shapes = {"G": (n, n), "GV": (n, n), "Lbar": (n,), "L": (n, n, n), "LV": (n, n, n),
                  "Cbar": (n,), "C": (n, n, n), "CV": (n, n, n)}
        for name, shape in shapes.items():
            arr = as_expr_array(getattr(self, name))
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.nlc.n

    @functools.cached_property
    def frame(self) -> AdaptedFrame:
        return AdaptedFrame(self.nlc)

    @property
    def is_h_normal(self) -> bool:
        return self.hnormal is not None

    @classmethod
    def zero(cls, nlc: NonlinearConnection) -> "GammaConnection":
        n = nlc.n
        return cls(nlc, ZERO, expr_array((n, n)), expr_array((n, n)), expr_array((n,)),
                   expr_array((n, n, n)), expr_array((n, n, n)), expr_array((n,)),
                   expr_array((n, n, n)), expr_array((n, n, n)))

    def replace(self, **changes) -> "GammaConnection":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return GammaConnection(**fields)


def _probe_asymmetry(arr: np.ndarray, n: int, probes: int = 20, seed: int = 0):
    """First (k, i, j) with arr[k,i,j] != arr[k,j,i], or None."""
    pending = []
    for k, i, j in itertools.product(range(n), repeat=3):
        if i < j:
            d = simplify(arr[k, i, j] - arr[k, j, i])
            if not d.is_zero():
                pending.append(((k, i, j), d))
    if not pending:
        return None
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(probes, 2 * n + 1))
    vals, bad, _ = evaluate_batch([d for _, d in pending], pts[:, 0], pts[:, 1 : 1 + n].T, pts[:, 1 + n :].T)
    for (triple, _), row in zip(pending, vals):
        good = row[~bad]
        if good.size == 0 or np.max(np.abs(good)) > 1e-12:
            return triple
    return None


def make_h_normal(data: HNormalData, nlc: NonlinearConnection, cartan: bool = False) -> GammaConnection:
    """Fill all nine families from (kappa, G, L, C)."""
    n = data.n
    if nlc.n != n:
        raise ValueError("connection data and nonlinear connection differ in dimension")
    if cartan:
        for fam, arr in (("L", data.L), ("C", data.C)):
            bad = _probe_asymmetry(arr, n)
            if bad is not None:
                raise CartanSymmetryError(fam, tuple(v + 1 for v in bad))
    kappa = data.kappa
    GV = expr_array((n, n), lambda k, i: data.G[k, i] - delta(k, i) * kappa)
    return GammaConnection(
        nlc,
        kappa,
        data.G,
        GV,
        expr_array((n,)),
        data.L,
        data.L.copy(),
        expr_array((n,)),
        data.C,
        data.C.copy(),
        hnormal=data,
        cartan=cartan,
    )


def make_h_normal_cartan(data: HNormalData, nlc: NonlinearConnection) -> GammaConnection:
    return make_h_normal(data, nlc, cartan=True)


def berwald(h: TemporalMetric, phi: SpatialMetric) -> GammaConnection:
    """The Berwald connection (kappa, 0, gamma, 0) over the canonical nonlinear connection."""
    n = phi.n
    gamma = spatial_christoffel(phi).components
    data = HNormalData(h, expr_array((n, n)), gamma, expr_array((n, n, n)))
    return make_h_normal(data, canonical_nlc(h, phi), cartan=True)


# --------------------------------------------------------------------------
# covariant derivatives

TEMPORAL, SPATIAL, VERTICAL = "temporal", "spatial", "vertical"
_NEW_SLOT = {TEMPORAL: TL, SPATIAL: SL, VERTICAL: FL}


def _coefficients(conn: GammaConnection, direction: str):
    if direction == TEMPORAL:
        return (lambda p: conn.Gbar), (lambda a, r, p: conn.G[a, r]), (lambda a, r, p: conn.GV[a, r])
    if direction == SPATIAL:
        return (lambda p: conn.Lbar[p]), (lambda a, r, p: conn.L[a, r, p]), (lambda a, r, p: conn.LV[a, r, p])
    if direction == VERTICAL:
        return (lambda p: conn.Cbar[p]), (lambda a, r, p: conn.C[a, r, p]), (lambda a, r, p: conn.CV[a, r, p])
    raise ValueError(f"unknown direction {direction!r}")


def _frame_derivative(conn: GammaConnection, direction: str):
    fr = conn.frame
    if direction == TEMPORAL:
        return lambda p, f: fr.delta_t(f)
    if direction == SPATIAL:
        return fr.delta_x
    return fr.d_y


def cov_deriv(D: DTensor, conn: GammaConnection, direction: str) -> DTensor:
    """Covariant derivative along the temporal, spatial or vertical directions.

    One correction per slot: upper slots add ``D^{..r..} coef^a_r``, lower
    slots subtract ``D_{..r..} coef^r_a``; time slots use the barred
    coefficient.  The derivative index is appended as the last slot.
    """
    n = D.n
    if conn.n != n:
        raise ValueError("dimension mismatch between d-tensor and connection")
    tcoef, scoef, fcoef = _coefficients(conn, direction)
    deriv = _frame_derivative(conn, direction)
    new_slot = _NEW_SLOT[direction]
    sig = D.signature + (new_slot,)
    comps = D.components

    def comp(*idx):
        base, p = idx[:-1], idx[-1]
        terms = [deriv(p, comps[base])]
        for s, slot in enumerate(D.signature):
            fam = slot.family
            if fam == "T":
                c = tcoef(p)
                if c.is_zero():
                    continue
                terms.append(comps[base] * c if slot.upper else -(comps[base] * c))
                continue
            coef = scoef if fam == "S" else fcoef
            a = base[s]
            for r in range(n):
                other = base[:s] + (r,) + base[s + 1 :]
                v = comps[other]
                if v.is_zero():
                    continue
                if slot.upper:
                    c = coef(a, r, p)
                    if not c.is_zero():
                        terms.append(v * c)
                else:
                    c = coef(r, a, p)
                    if not c.is_zero():
                        terms.append(-(v * c))
        return add(*terms)

    return DTensor.build(sig, n, comp)


def h_normalization(h: TemporalMetric, n: int) -> DTensor:
    """J^(i)_(1)1j = h11 delta^i_j, slots (FiberUpper, TimeLower, SpaceLower)."""
    return DTensor.build((FU, TL, SL), n, lambda i, _, j: h.h11 * delta(i, j))


def h_normal_residuals(conn: GammaConnection, h: TemporalMetric) -> list:
    """The four defining conditions as residuals (Gbar = kappa, Lbar = 0, Cbar = 0, nabla J = 0)."""
    n = conn.n
    kappa = temporal_christoffel(h)
    J = h_normalization(h, n)
    zeros = lambda shape: expr_array(shape)  # noqa: E731
    out = [
        ResidualTensor("hnormal-Gbar", (), as_expr_array([conn.Gbar]), as_expr_array([kappa]), "h-normal"),
        ResidualTensor("hnormal-Lbar", (SL,), conn.Lbar, zeros((n,)), "h-normal"),
        ResidualTensor("hnormal-Cbar", (FL,), conn.Cbar, zeros((n,)), "h-normal"),
    ]
    for direction, tag in ((TEMPORAL, "t"), (SPATIAL, "x"), (VERTICAL, "y")):
        dJ = cov_deriv(J, conn, direction)
        out.append(ResidualTensor(f"hnormal-nablaJ-{tag}", dJ.signature, dJ.components, zeros(dJ.shape), "h-normal"))
    return out


def check_h_normal(conn: GammaConnection, h: TemporalMetric, plan: SamplingPlan) -> VerificationReport:
    return verify(h_normal_residuals(conn, h), plan, conn.n, guards=[h.h11])


def h_normal_relation_residuals(conn: GammaConnection) -> list:
    """The six derived relations of an h-normal connection, as residuals."""
    n = conn.n
    data = conn.hnormal
    if data is None:
        raise ValueError("connection carries no h-normal data")
    kappa = data.kappa
    return [
        ResidualTensor("rel-Gbar", (), as_expr_array([conn.Gbar]), as_expr_array([kappa]), "h-normal"),
        ResidualTensor("rel-Lbar", (SL,), conn.Lbar, expr_array((n,)), "h-normal"),
        ResidualTensor("rel-Cbar", (FL,), conn.Cbar, expr_array((n,)), "h-normal"),
        ResidualTensor("rel-GV", (FU, FL), conn.GV,
                       expr_array((n, n), lambda k, i: conn.G[k, i] - delta(k, i) * kappa), "h-normal"),
        ResidualTensor("rel-LV", (FU, FL, SL), conn.LV, conn.L, "h-normal"),
        ResidualTensor("rel-CV", (FU, FL, FL), conn.CV, conn.C, "h-normal"),
    ]


# --------------------------------------------------------------------------
# random test data


def random_poly(rng: np.random.Generator, n: int, degree: int = 2, density: float = 0.5,
                coords: str = "txy") -> Expr:
    """Random polynomial with rational coefficients in [-2, 2] (quarter steps)."""
    variables = []
    if "t" in coords:
        variables.append(t_var())
    if "x" in coords:
        variables.extend(x_vars(n))
    if "y" in coords:
        variables.extend(y_vars(n))
    terms = []
    for d in range(degree + 1):
        for mono in itertools.combinations_with_replacement(variables, d):
            if rng.random() >= density:
                continue
            c = Fraction(int(rng.integers(-8, 9)), 4)
            if c != 0:
                terms.append(mul(const(c), *mono))
    return add(*terms)


def random_temporal_metric(rng: np.random.Generator) -> TemporalMetric:
    """h11 = a + b t^2 with a in [1/2, 2], b in [0, 2]; positive everywhere."""
    a = Fraction(int(rng.integers(2, 9)), 4)
    b = Fraction(int(rng.integers(0, 9)), 4)
    t = t_var()
    return TemporalMetric(a + b * t * t)


def random_nlc(rng: np.random.Generator, n: int, density: float = 0.5) -> NonlinearConnection:
    return NonlinearConnection(
        expr_array((n,), lambda j: random_poly(rng, n, density=density)),
        expr_array((n, n), lambda j, i: random_poly(rng, n, density=density)),
    )


def random_symmetric(rng: np.random.Generator, n: int, density: float = 0.5) -> np.ndarray:
    arr = expr_array((n, n, n))
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                arr[k, i, j] = arr[k, j, i] = random_poly(rng, n, density=density)
    return arr


def random_cartan(seed: int, n: int = 2, density: float = 0.5) -> tuple:
    """A random h-normal Cartan-type connection; returns (connection, h)."""
    rng = np.random.default_rng(seed)
    h = random_temporal_metric(rng)
    nlc = random_nlc(rng, n, density)
    G = expr_array((n, n), lambda k, i: random_poly(rng, n, density=density))
    L = random_symmetric(rng, n, density)
    C = random_symmetric(rng, n, density)
    return make_h_normal_cartan(HNormalData(h, G, L, C), nlc), h


def random_d_vector(rng: np.random.Generator, slot: IndexSlot, n: int, density: float = 0.5) -> DTensor:
    return DTensor.build((slot,), n, lambda *_: random_poly(rng, n, density=density))


def random_gamma_connection(seed: int, n: int = 2, density: float = 0.3) -> GammaConnection:
    """A random Gamma-linear connection with all nine families independent (not h-normal)."""
    rng = np.random.default_rng(seed)
    poly = lambda *_: random_poly(rng, n, density=density)  # noqa: E731
    return GammaConnection(
        random_nlc(rng, n, density),
        poly(),
        expr_array((n, n), poly),
        expr_array((n, n), poly),
        expr_array((n,), poly),
        expr_array((n, n, n), poly),
        expr_array((n, n, n), poly),
        expr_array((n,), poly),
        expr_array((n, n, n), poly),
        expr_array((n, n, n), poly),
    )
