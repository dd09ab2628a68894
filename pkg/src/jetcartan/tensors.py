"""Dense d-tensor containers: object arrays of expressions with typed slots."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .symexpr import ZERO, Expr, as_expr, simplify


class IndexSlot(enum.Enum):
    TimeUpper = "T^"
    TimeLower = "T_"
    SpaceUpper = "S^"
    SpaceLower = "S_"
    FiberUpper = "F^"
    FiberLower = "F_"

    @property
    def upper(self) -> bool:
        return self.value.endswith("^")

    @property
    def family(self) -> str:
        return self.value[0]

    def extent(self, n: int) -> int:
        return 1 if self.family == "T" else n


TU, TL = IndexSlot.TimeUpper, IndexSlot.TimeLower
SU, SL = IndexSlot.SpaceUpper, IndexSlot.SpaceLower
FU, FL = IndexSlot.FiberUpper, IndexSlot.FiberLower


def expr_array(shape, fill: Callable | None = None) -> np.ndarray:
    """Object array of expressions; ``fill(*index)`` supplies each entry."""
    arr = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        arr[idx] = ZERO if fill is None else as_expr(fill(*idx))
    return arr


def as_expr_array(values, shape=None) -> np.ndarray:
    src = np.asarray(values, dtype=object)
    if shape is not None:
        src = src.reshape(shape)
    out = np.empty(src.shape, dtype=object)
    for idx in np.ndindex(*src.shape):
        out[idx] = as_expr(src[idx])
    return out


def simplify_array(arr: np.ndarray) -> np.ndarray:
    return expr_array(arr.shape, lambda *i: simplify(arr[i]))


def is_zero_array(arr: np.ndarray) -> bool:
    return all(e.is_zero() for e in arr.flat)


@dataclass(frozen=True)
class DTensor:
    """A d-tensor: one expression per component, slots in array-axis order."""

    signature: tuple
    components: np.ndarray
    n: int

    def __post_init__(self):
        sig = tuple(self.signature)
        object.__setattr__(self, "signature", sig)
        expected = tuple(s.extent(self.n) for s in sig)
        if self.components.shape != expected:
            raise ValueError(f"component shape {self.components.shape} does not match signature extents {expected}")

    @classmethod
    def build(cls, signature: Sequence[IndexSlot], n: int, fill: Callable | None = None) -> "DTensor":
        shape = tuple(s.extent(n) for s in signature)
        return cls(tuple(signature), expr_array(shape, fill), n)

    @property
    def shape(self) -> tuple:
        return self.components.shape

    def __getitem__(self, idx):
        return self.components[idx]

    def map(self, fn: Callable[[Expr], Expr]) -> "DTensor":
        c = self.components
        return DTensor(self.signature, expr_array(c.shape, lambda *i: fn(c[i])), self.n)

    def __add__(self, other: "DTensor") -> "DTensor":
        self._check_compatible(other)
        a, b = self.components, other.components
        return DTensor(self.signature, expr_array(a.shape, lambda *i: a[i] + b[i]), self.n)

    def __sub__(self, other: "DTensor") -> "DTensor":
        self._check_compatible(other)
        a, b = self.components, other.components
        return DTensor(self.signature, expr_array(a.shape, lambda *i: a[i] - b[i]), self.n)

    def scale(self, factor) -> "DTensor":
        return self.map(lambda e: e * factor)

    def tensor(self, other: "DTensor") -> "DTensor":
        """Outer product, slots of ``self`` first."""
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        a, b = self.components, other.components
        ka = a.ndim
        return DTensor(
            self.signature + other.signature,
            expr_array(a.shape + b.shape, lambda *i: a[i[:ka]] * b[i[ka:]]),
            self.n,
        )

    def _check_compatible(self, other: "DTensor"):
        if self.signature != other.signature or self.n != other.n:
            raise ValueError("d-tensors with different signatures")
