"""Torsion and curvature d-tensors of h-normal connections.

``torsion_table``/``curvature_table`` evaluate the closed forms specific to
h-normal connections.  ``torsion_oracle``/``curvature_oracle`` start from the
definitions

    T(X_A, X_B)     = nabla_A X_B - nabla_B X_A - [X_A, X_B]      = T^D_{BA} X_D
    R(X_A, X_B) X_C = nabla_A nabla_B X_C - nabla_B nabla_A X_C
                      - nabla_[X_A, X_B] X_C                      = R^D_{CBA} X_D

on the adapted frame of an arbitrary Gamma-linear connection, with brackets
computed in coordinates.  Full frame arrays are indexed ``T[D, B, A]`` and
``R[D, C, B, A]`` (frame index 0 = time, 1..n = space, n+1..2n = fibre).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dconnect import SPATIAL, TEMPORAL, GammaConnection, cov_deriv
from .geometry import AdaptedFrame, NonlinearConnection, Y, delta, frame_brackets, spatial_riemann
from .symexpr import ZERO, add, diff, y_vars
from .tensors import FL, FU, SL, SU, TL, DTensor, expr_array
from .verify import ResidualTensor

TORSION_FAMILIES = ("T1", "R1", "T", "R", "P1", "Ph", "Pv", "S")
CURVATURE_FAMILIES = ("R1", "R", "P1", "P", "S")

TORSION_SIGNATURES = {
    "T1": (SU, TL, SL),  # T^r_{1j}
    "R1": (FU, TL, SL),  # R^(r)_(1)1j
    "T": (SU, SL, SL),  # T^r_ij
    "R": (FU, SL, SL),  # R^(r)_(1)ij
    "P1": (FU, TL, FL),  # P^(r)(1)_(1)1(j)
    "Ph": (SU, SL, FL),  # P^r(1)_i(j)
    "Pv": (FU, SL, FL),  # P^(r)(1)_(1)i(j)
    "S": (FU, FL, FL),  # S^(r)(1)(1)_(1)(i)(j)
}

CURVATURE_SIGNATURES = {
    "R1": (SU, SL, TL, SL),  # R^l_{i1k}
    "R": (SU, SL, SL, SL),  # R^l_ijk
    "P1": (SU, SL, TL, FL),  # P^l_{i1(k)}
    "P": (SU, SL, SL, FL),  # P^l_{ij(k)}
    "S": (SU, SL, FL, FL),  # S^l_{i(j)(k)}
}


@dataclass(frozen=True)
class TorsionTable:
    T1: DTensor
    R1: DTensor
    T: DTensor
    R: DTensor
    P1: DTensor
    Ph: DTensor
    Pv: DTensor
    S: DTensor

    def items(self):
        return [(name, getattr(self, name)) for name in TORSION_FAMILIES]


@dataclass(frozen=True)
class CurvatureTable:
    R1: DTensor
    R: DTensor
    P1: DTensor
    P: DTensor
    S: DTensor

    def items(self):
        return [(name, getattr(self, name)) for name in CURVATURE_FAMILIES]


def _require_h_normal(conn: GammaConnection):
    if not conn.is_h_normal:
        raise ValueError("closed-form tables need an h-normal connection")


def c_tensor(conn: GammaConnection) -> DTensor:
    """C^l(1)_i(k) as a d-tensor with slots (SpaceUpper, SpaceLower, FiberLower)."""
    return DTensor(CURVATURE_SIGNATURES["S"][:1] + (SL, FL), conn.C, conn.n)


def torsion_table(conn: GammaConnection) -> TorsionTable:
    _require_h_normal(conn)
    n = conn.n
    fr = conn.frame
    M, N = conn.nlc.M, conn.nlc.N
    G, L, C = conn.G, conn.L, conn.C
    kappa = conn.hnormal.kappa
    sig = TORSION_SIGNATURES
    return TorsionTable(
        T1=DTensor.build(sig["T1"], n, lambda r, _, j: -G[r, j]),
        R1=DTensor.build(sig["R1"], n, lambda r, _, j: fr.delta_x(j, M[r]) - fr.delta_t(N[r, j])),
        T=DTensor.build(sig["T"], n, lambda r, i, j: L[r, i, j] - L[r, j, i]),
        R=DTensor.build(sig["R"], n, lambda r, i, j: fr.delta_x(j, N[r, i]) - fr.delta_x(i, N[r, j])),
        P1=DTensor.build(
            sig["P1"], n, lambda r, _, j: diff(M[r], Y(j)) - G[r, j] + delta(r, j) * kappa
        ),
        Ph=DTensor.build(sig["Ph"], n, lambda r, i, j: C[r, i, j]),
        Pv=DTensor.build(sig["Pv"], n, lambda r, i, j: diff(N[r, i], Y(j)) - L[r, j, i]),
        S=DTensor.build(sig["S"], n, lambda r, i, j: C[r, i, j] - C[r, j, i]),
    )


def curvature_table(conn: GammaConnection, torsion: TorsionTable | None = None) -> CurvatureTable:
    _require_h_normal(conn)
    n = conn.n
    fr = conn.frame
    G, L, C = conn.G, conn.L, conn.C
    tt = torsion or torsion_table(conn)
    R1t, Rt, P1t, Pvt = tt.R1.components, tt.R.components, tt.P1.components, tt.Pv.components
    Cd = c_tensor(conn)
    C_t = cov_deriv(Cd, conn, TEMPORAL).components  # [l, i, k, 0]
    C_x = cov_deriv(Cd, conn, SPATIAL).components  # [l, i, k, j]
    rs = range(n)
    sig = CURVATURE_SIGNATURES

    def r1(l, i, _, k):
        return add(
            fr.delta_x(k, G[l, i]),
            -fr.delta_t(L[l, i, k]),
            *(G[r, i] * L[l, r, k] for r in rs),
            *(-(L[r, i, k] * G[l, r]) for r in rs),
            *(C[l, i, r] * R1t[r, 0, k] for r in rs),
        )

    def rr(l, i, j, k):
        return add(
            fr.delta_x(k, L[l, i, j]),
            -fr.delta_x(j, L[l, i, k]),
            *(L[r, i, j] * L[l, r, k] for r in rs),
            *(-(L[r, i, k] * L[l, r, j]) for r in rs),
            *(C[l, i, r] * Rt[r, j, k] for r in rs),
        )

    def p1(l, i, _, k):
        return add(diff(G[l, i], Y(k)), -C_t[l, i, k, 0], *(C[l, i, r] * P1t[r, 0, k] for r in rs))

    def pp(l, i, j, k):
        return add(diff(L[l, i, j], Y(k)), -C_x[l, i, k, j], *(C[l, i, r] * Pvt[r, j, k] for r in rs))

    def ss(l, i, j, k):
        return add(
            diff(C[l, i, j], Y(k)),
            -diff(C[l, i, k], Y(j)),
            *(C[r, i, j] * C[l, r, k] for r in rs),
            *(-(C[r, i, k] * C[l, r, j]) for r in rs),
        )

    return CurvatureTable(
        R1=DTensor.build(sig["R1"], n, r1),
        R=DTensor.build(sig["R"], n, rr),
        P1=DTensor.build(sig["P1"], n, p1),
        P=DTensor.build(sig["P"], n, pp),
        S=DTensor.build(sig["S"], n, ss),
    )


# --------------------------------------------------------------------------
# definition-based oracles


def connection_coefficients(conn: GammaConnection) -> np.ndarray:
    """``Gam[F, G, C]``: X_F component of nabla_{X_C} X_G, from the nine families."""
    n = conn.n
    s = 2 * n + 1
    Gam = expr_array((s, s, s))
    dirs = [("t", 0)] + [("x", p) for p in range(n)] + [("y", p) for p in range(n)]
    for Cidx, (kind, p) in enumerate(dirs):
        if kind == "t":
            bar, S, V = conn.Gbar, conn.G, conn.GV
            sc = lambda k, i: S[k, i]  # noqa: E731
            vc = lambda k, i: V[k, i]  # noqa: E731
        elif kind == "x":
            bar, S, V = conn.Lbar[p], conn.L, conn.LV
            sc = lambda k, i, S=S, p=p: S[k, i, p]  # noqa: E731
            vc = lambda k, i, V=V, p=p: V[k, i, p]  # noqa: E731
        else:
            bar, S, V = conn.Cbar[p], conn.C, conn.CV
            sc = lambda k, i, S=S, p=p: S[k, i, p]  # noqa: E731
            vc = lambda k, i, V=V, p=p: V[k, i, p]  # noqa: E731
        Gam[0, 0, Cidx] = bar
        for i in range(n):
            for k in range(n):
                Gam[1 + k, 1 + i, Cidx] = sc(k, i)
                Gam[1 + n + k, 1 + n + i, Cidx] = vc(k, i)
    return Gam


@dataclass
class FrameData:
    """Frame, connection coefficients and brackets shared by the oracles."""

    frame: AdaptedFrame
    Gam: np.ndarray
    brackets: np.ndarray

    @property
    def size(self) -> int:
        return self.frame.size

    @classmethod
    def of(cls, conn: GammaConnection, nlc: NonlinearConnection | None = None) -> "FrameData":
        frame = conn.frame if nlc is None or nlc is conn.nlc else AdaptedFrame(nlc)
        return cls(frame, connection_coefficients(conn), frame_brackets(frame))


def full_torsion_oracle(conn: GammaConnection, nlc: NonlinearConnection | None = None,
                        fd: FrameData | None = None) -> np.ndarray:
    fd = fd or FrameData.of(conn, nlc)
    s, Gam, br = fd.size, fd.Gam, fd.brackets
    # T[D, B, A] = (nabla_A X_B - nabla_B X_A - [X_A, X_B])^D
    return expr_array((s, s, s), lambda D, B, A: Gam[D, B, A] - Gam[D, A, B] - br[A, B, D])


def full_curvature_oracle(conn: GammaConnection, nlc: NonlinearConnection | None = None,
                          fd: FrameData | None = None) -> np.ndarray:
    fd = fd or FrameData.of(conn, nlc)
    s, Gam, br, fr = fd.size, fd.Gam, fd.brackets, fd.frame
    R = expr_array((s, s, s, s))

    def nabla_nabla(A, B, Cc, F):
        # X_F component of nabla_A (nabla_B X_C)
        return add(fr.apply(A, Gam[F, Cc, B]), *(Gam[G, Cc, B] * Gam[F, G, A] for G in range(s)))

    for A in range(s):
        for B in range(A + 1, s):
            for Cc in range(s):
                for F in range(s):
                    v = add(
                        nabla_nabla(A, B, Cc, F),
                        -nabla_nabla(B, A, Cc, F),
                        *(-(br[A, B, E] * Gam[F, Cc, E]) for E in range(s)),
                    )
                    R[F, Cc, B, A] = v
                    R[F, Cc, A, B] = -v
    return R


def _table_slices(n: int):
    """(family, D-offset, C/B-offsets) placement helpers for frame arrays."""
    return 0, 1, 1 + n


def torsion_from_full(T: np.ndarray, n: int) -> TorsionTable:
    """Organise a full frame torsion array into the eight-family layout."""
    _, s0, f0 = _table_slices(n)
    sig = TORSION_SIGNATURES
    return TorsionTable(
        T1=DTensor.build(sig["T1"], n, lambda r, _, j: T[s0 + r, 0, s0 + j]),
        R1=DTensor.build(sig["R1"], n, lambda r, _, j: T[f0 + r, 0, s0 + j]),
        T=DTensor.build(sig["T"], n, lambda r, i, j: T[s0 + r, s0 + i, s0 + j]),
        R=DTensor.build(sig["R"], n, lambda r, i, j: T[f0 + r, s0 + i, s0 + j]),
        P1=DTensor.build(sig["P1"], n, lambda r, _, j: T[f0 + r, 0, f0 + j]),
        Ph=DTensor.build(sig["Ph"], n, lambda r, i, j: T[s0 + r, s0 + i, f0 + j]),
        Pv=DTensor.build(sig["Pv"], n, lambda r, i, j: T[f0 + r, s0 + i, f0 + j]),
        S=DTensor.build(sig["S"], n, lambda r, i, j: T[f0 + r, f0 + i, f0 + j]),
    )


def curvature_from_full(R: np.ndarray, n: int, block: str = "h") -> CurvatureTable:
    """Five-family layout from a full curvature array; ``block`` picks the
    spatial ("h") or fibre ("v") copy of the (D, C) indices."""
    _, s0, f0 = _table_slices(n)
    o = s0 if block == "h" else f0
    sig = CURVATURE_SIGNATURES
    return CurvatureTable(
        R1=DTensor.build(sig["R1"], n, lambda l, i, _, k: R[o + l, o + i, 0, s0 + k]),
        R=DTensor.build(sig["R"], n, lambda l, i, j, k: R[o + l, o + i, s0 + j, s0 + k]),
        P1=DTensor.build(sig["P1"], n, lambda l, i, _, k: R[o + l, o + i, 0, f0 + k]),
        P=DTensor.build(sig["P"], n, lambda l, i, j, k: R[o + l, o + i, s0 + j, f0 + k]),
        S=DTensor.build(sig["S"], n, lambda l, i, j, k: R[o + l, o + i, f0 + j, f0 + k]),
    )


def torsion_to_full(tt: TorsionTable, n: int) -> np.ndarray:
    """Full frame torsion of an h-normal connection assembled from its table."""
    s = 2 * n + 1
    _, s0, f0 = _table_slices(n)
    T = expr_array((s, s, s))

    def put(D, B, A, v, antisym=True):
        T[D, B, A] = v
        if antisym:
            T[D, A, B] = -v

    for r in range(n):
        for j in range(n):
            put(s0 + r, 0, s0 + j, tt.T1[r, 0, j])
            put(f0 + r, 0, s0 + j, tt.R1[r, 0, j])
            put(f0 + r, 0, f0 + j, tt.P1[r, 0, j])
            for i in range(n):
                put(s0 + r, s0 + i, s0 + j, tt.T[r, i, j], antisym=False)
                put(f0 + r, s0 + i, s0 + j, tt.R[r, i, j], antisym=False)
                put(s0 + r, s0 + i, f0 + j, tt.Ph[r, i, j])
                put(f0 + r, s0 + i, f0 + j, tt.Pv[r, i, j])
                put(f0 + r, f0 + i, f0 + j, tt.S[r, i, j], antisym=False)
    return T


def curvature_to_full(ct: CurvatureTable, n: int) -> np.ndarray:
    """Full frame curvature assembled from the five families (both blocks)."""
    s = 2 * n + 1
    _, s0, f0 = _table_slices(n)
    R = expr_array((s, s, s, s))
    for o in (s0, f0):
        for l in range(n):
            for i in range(n):
                for k in range(n):
                    for B, A, v in (
                        (0, s0 + k, ct.R1[l, i, 0, k]),
                        (0, f0 + k, ct.P1[l, i, 0, k]),
                    ):
                        R[o + l, o + i, B, A] = v
                        R[o + l, o + i, A, B] = -v
                    for j in range(n):
                        R[o + l, o + i, s0 + j, s0 + k] = ct.R[l, i, j, k]
                        R[o + l, o + i, f0 + j, f0 + k] = ct.S[l, i, j, k]
                        R[o + l, o + i, s0 + j, f0 + k] = ct.P[l, i, j, k]
                        R[o + l, o + i, f0 + k, s0 + j] = -ct.P[l, i, j, k]
    return R


def torsion_oracle(conn: GammaConnection, nlc: NonlinearConnection | None = None) -> TorsionTable:
    return torsion_from_full(full_torsion_oracle(conn, nlc), conn.n)


def curvature_oracle(conn: GammaConnection, nlc: NonlinearConnection | None = None) -> CurvatureTable:
    return curvature_from_full(full_curvature_oracle(conn, nlc), conn.n)


def oracle_comparison(conn: GammaConnection, fd: FrameData | None = None) -> list:
    """Residuals: closed-form tables against the oracles, family by family,
    plus the complete frame arrays (zero blocks and the vertical copies)."""
    n = conn.n
    fd = fd or FrameData.of(conn)
    tt = torsion_table(conn)
    ct = curvature_table(conn, tt)
    Tfull = full_torsion_oracle(conn, fd=fd)
    Rfull = full_curvature_oracle(conn, fd=fd)
    to = torsion_from_full(Tfull, n)
    out = []
    for (name, a), (_, b) in zip(tt.items(), to.items()):
        out.append(ResidualTensor(f"torsion-{name}", a.signature, a.components, b.components, "oracle"))
    for block in ("h", "v"):
        co = curvature_from_full(Rfull, n, block)
        for (name, a), (_, b) in zip(ct.items(), co.items()):
            tag = name if block == "h" else f"{name}-vert"
            out.append(ResidualTensor(f"curvature-{tag}", a.signature, a.components, b.components, "oracle"))
    out.append(ResidualTensor("torsion-full", (), torsion_to_full(tt, n), Tfull, "oracle"))
    out.append(ResidualTensor("curvature-full", (), curvature_to_full(ct, n), Rfull, "oracle"))
    return out


def zero_check(arr: np.ndarray) -> bool:
    return all(e is ZERO or e.is_zero() for e in arr.flat)


def berwald_expected_residuals(conn: GammaConnection, phi) -> list:
    """Berwald tables against their expected values: every family vanishes
    except R^(k)_(1)ij = r^k_mij y^m and R^l_ijk = r^l_ijk."""
    n = conn.n
    rr = spatial_riemann(phi).components
    ys = y_vars(n)
    tt = torsion_table(conn)
    ct = curvature_table(conn, tt)
    out = []
    for name, a in tt.items():
        if name == "R":
            want = expr_array(a.shape, lambda k, i, j: add(*(rr[k, m, i, j] * ys[m] for m in range(n))))
        else:
            want = expr_array(a.shape)
        out.append(ResidualTensor(f"berwald-torsion-{name}", a.signature, a.components, want, "berwald"))
    for name, a in ct.items():
        want = rr if name == "R" else expr_array(a.shape)
        out.append(ResidualTensor(f"berwald-curvature-{name}", a.signature, a.components, want, "berwald"))
    return out
