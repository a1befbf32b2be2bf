"""Dyadic partitions of the real line and step functions on their cells.

The partition at resolution k >= 1 consists of the half-open intervals

    A_{k,j} = ((j-1)/2^k, j/2^k],     j in Z,

which are disjoint, cover R, and refine as k grows (each cell of level k is
the union of two cells of level k+1).  Resolution k = 0 denotes the trivial
one-cell partition {R}.

Cell membership is decided with *exact* scaled-integer arithmetic: x lies in
cell ceil(x * 2^k), with the boundary case x * 2^k integral mapping to that
integer (right-closed convention).  This matters because atom semantics at
cell edges feed directly into measure queries downstream; floating rounding
in the scaling step would silently move boundary points across cells.

A `PiecewiseDyadicFn` is a sparse, immutable step function: a map from cell
index to value, a default for unmapped cells, and the resolution.  Its total
variation on a window (-i, i] is a finite sum of adjacent-cell differences,
which is also the supremum-over-grids definition of variation for such step
functions (jumps at the window's open left edge do not count; jumps at
interior cell boundaries do).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

# Largest magnitude at which consecutive floats are still < 1 apart, so that
# ceil() on the scaled coordinate is unambiguous.
_MAX_EXACT = float(1 << 53)


@dataclass(frozen=True)
class DyadicCell:
    """Cell A_{k,j} = ((j-1)/2^k, j/2^k]; k = 0 is the whole line."""

    k: int
    j: int

    def bounds(self) -> tuple[float, float]:
        if self.k == 0:
            return (-math.inf, math.inf)
        w = math.ldexp(1.0, -self.k)
        return ((self.j - 1) * w, self.j * w)

    def parent(self) -> "DyadicCell":
        if self.k == 0:
            raise ValueError("the whole-line cell has no parent")
        if self.k == 1:
            return DyadicCell(0, 0)
        # child j of level k sits inside cell ceil(j/2) of level k-1
        return DyadicCell(self.k - 1, -((-self.j) // 2))


def cell_of(x: float, k: int) -> DyadicCell:
    """Return the unique resolution-k cell containing x.

    Exact on boundaries at every resolution: x is decomposed into its
    integer mantissa and exponent, so x * 2^k is computed as an exact
    integer shift and ceil() never sees a rounded value.  Boundary points
    (x * 2^k integral) map to that integer: right-closed convention.

    Raises OverflowError when the cell index would exceed a 256-bit range
    (far beyond any usable partition depth).
    """
    if k < 0:
        raise ValueError(f"resolution must be >= 0, got {k}")
    if k == 0:
        return DyadicCell(0, 0)
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"cannot locate {x!r} in a dyadic cell")
    if x == 0.0:
        return DyadicCell(k, 0)
    m, e = math.frexp(x)  # x = m * 2^e with 0.5 <= |m| < 1
    mant = int(m * _MAX_EXACT)  # exact: |m| * 2^53 is an integer-valued float
    shift = e - 53 + k
    if shift >= 0:
        j = mant << shift
    else:
        # ceil(mant / 2^(-shift)); >> floors for either sign, so negate twice
        j = -((-mant) >> (-shift))
    if j.bit_length() > 256:
        raise OverflowError(
            f"cell index at resolution {k} exceeds the supported integer range"
        )
    return DyadicCell(k, j)


def cell_index(x: float, k: int) -> int:
    """Index j of the resolution-k cell containing x (k >= 1)."""
    return cell_of(x, k).j


@dataclass(frozen=True)
class PiecewiseDyadicFn:
    """Sparse step function, constant on the cells of one dyadic partition.

    `values` maps cell index -> value; unmapped cells take `default`.
    Instances are value types: nothing mutates them after construction, so
    they are safe to share across threads.
    """

    k: int
    values: Mapping[int, float] = field(default_factory=dict)
    default: float = 0.0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("resolution must be >= 0")
        if self.k == 0 and any(j != 0 for j in self.values):
            raise ValueError("the one-cell partition only has index 0")

    def __call__(self, x: float) -> float:
        return self.value_at_cell(cell_of(x, self.k).j)

    def value_at_cell(self, j: int) -> float:
        return self.values.get(j, self.default)

    def eval_many(self, xs) -> "object":
        import numpy as np

        xs = np.asarray(xs, dtype=float)
        out = np.full(xs.shape, self.default, dtype=float)
        flat = out.ravel()
        if self.k == 0:
            flat[:] = self.values.get(0, self.default)
            return out
        if self.k <= 40:
            # ldexp is an exact exponent shift and ceil is exact on floats
            idx = np.ceil(np.ldexp(xs, self.k)).astype(np.int64).ravel()
            for i, j in enumerate(idx):
                v = self.values.get(int(j))
                if v is not None:
                    flat[i] = v
        else:
            for i, x in enumerate(xs.ravel()):
                v = self.values.get(cell_of(float(x), self.k).j)
                if v is not None:
                    flat[i] = v
        return out

    def support_cells(self) -> list[int]:
        """Mapped cell indices in increasing order."""
        return sorted(self.values)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "default": self.default,
            "cells": [[j, float(v)] for j, v in sorted(self.values.items())],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseDyadicFn":
        return cls(
            k=int(d["k"]),
            values={int(j): float(v) for j, v in d["cells"]},
            default=float(d["default"]),
        )


def total_variation_window(f: PiecewiseDyadicFn, i: int) -> float:
    """Total variation of f on the window (-i, i].

    Equals the sum of |f(A_{k,j}) - f(A_{k,j+1})| over adjacent cell pairs
    with both cells inside the window, i.e. j ranging over
    [-i*2^k + 1, i*2^k - 1].  The jump *into* the window at -i is excluded
    (grid points in the supremum definition are strictly greater than the
    left endpoint); jumps at interior boundaries, including transitions
    to/from unmapped default cells, are included.

    The sum is a correctly-rounded fsum of the nonzero adjacent
    differences, so it depends only on the multiset of cell values, never
    on accumulation order.
    """
    if i < 1:
        raise ValueError("window radius must be >= 1")
    if f.k == 0:
        return 0.0
    span = i << f.k  # i * 2^k
    lo, hi = -span + 1, span  # cells of the window
    terms = _window_jump_terms(f.values, f.default, lo, hi)
    return math.fsum(terms)


def _window_jump_terms(
    values: Mapping[int, float], default: float, lo: int, hi: int
) -> list[float]:
    """Nonzero |adjacent difference| terms for pairs (j, j+1), lo <= j < hi.

    Only pairs touching a mapped cell can differ from |default - default| = 0,
    so the walk visits mapped indices rather than the whole window.
    """
    terms: list[float] = []
    for j in sorted(values):
        if j < lo or j > hi:
            continue
        v = values[j]
        if j - 1 >= lo:
            left = values.get(j - 1, default)
            if left != v:
                terms.append(abs(v - left))
        if j + 1 <= hi and (j + 1) not in values:
            if values[j] != default:
                terms.append(abs(v - default))
    return terms


@dataclass(frozen=True)
class VariationBudget:
    """Non-decreasing bound alpha(i) on variation over windows (-i, i].

    Three closed forms cover the use cases: a constant (monotone bounded
    targets admit alpha = 2M), an affine map alpha(i) = slope*i + intercept
    (Lipschitz targets with constant C admit slope 2C and any positive
    intercept), and an explicit table (last entry extends to all larger i).
    """

    kind: str
    constant: float = 0.0
    slope: float = 0.0
    intercept: float = 0.0
    table: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "constant":
            if not self.constant > 0:
                raise ValueError("constant budget must be positive")
        elif self.kind == "affine":
            if self.slope < 0 or self.intercept < 0 or self.slope + self.intercept <= 0:
                raise ValueError("affine budget must be nonnegative and positive at i=1")
        elif self.kind == "table":
            if not self.table or any(v <= 0 for v in self.table):
                raise ValueError("table budget must be positive")
            if any(b < a for a, b in zip(self.table, self.table[1:])):
                raise ValueError("budget must be non-decreasing")
        else:
            raise ValueError(f"unknown budget kind {self.kind!r}")

    def alpha(self, i: int) -> float:
        if i < 1:
            raise ValueError("budget is defined on positive integers")
        if self.kind == "constant":
            return self.constant
        if self.kind == "affine":
            return self.slope * i + self.intercept
        return self.table[min(i, len(self.table)) - 1]

    @classmethod
    def const(cls, c: float) -> "VariationBudget":
        return cls(kind="constant", constant=float(c))

    @classmethod
    def affine(cls, slope: float, intercept: float) -> "VariationBudget":
        return cls(kind="affine", slope=float(slope), intercept=float(intercept))

    @classmethod
    def from_table(cls, values) -> "VariationBudget":
        return cls(kind="table", table=tuple(float(v) for v in values))

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "c": self.constant}
        if self.kind == "affine":
            return {"kind": "affine", "slope": self.slope, "intercept": self.intercept}
        return {"kind": "table", "values": list(self.table)}

    @classmethod
    def from_dict(cls, d: dict) -> "VariationBudget":
        kind = d["kind"]
        if kind == "constant":
            return cls.const(d["c"])
        if kind == "affine":
            return cls.affine(d["slope"], d["intercept"])
        if kind == "table":
            return cls.from_table(d["values"])
        raise ValueError(f"unknown budget kind {kind!r}")
