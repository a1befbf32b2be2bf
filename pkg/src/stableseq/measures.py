"""Exact measure arithmetic over half-open intervals and sup-discrepancies.

The interval class used everywhere is

    A = (a, b]   or   A = (-inf, b],   a < b real,

with right-closed semantics: an atom sitting exactly at b belongs to A, one
at a does not.  Distribution models are finite mixtures of point masses and
constant-density segments, which makes every interval probability, CDF value
and left limit exactly computable, and lets the supremum over the whole
interval class of |empirical - model| be evaluated in closed form:

with D(t) = F_hat(t) - F(t) (both right-continuous), the deviation on (a, b]
is D(b) - D(a), so the supremum over the class equals max - min of D over
the closure of its range.  D is piecewise linear between the breakpoints of
either CDF, hence the extrema sit at breakpoint right-values and left
limits, plus the value 0 carried by a -> -inf / b beyond the data.  No
epsilon-perturbation is involved; suprema that are approached but not
attained are captured by the left limits.

The same candidate-scan applies to the y-weighted empirical measure against
any target exposing a cumulative function, its left limits, and its
breakpoints (see `sup_weighted_discrepancy`); the weighted "CDFs" need not
reach equal totals, so the constant tail value is included via the largest
breakpoint.

A separate, weaker statistic is the Levy metric between the empirical CDF
and the model CDF (`levy_distance`).  It metrizes pointwise CDF convergence
at continuity points, which the interval supremum does not: a sequence can
creep up on an atom so that every CDF value converges pointwise while the
interval supremum stays at 1 forever.  The stability diagnostic reports
both, plus per-atom deviations, and flags exactly that divergence pattern.
"""
from __future__ import annotations

import csv
import io
import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "IntervalA",
    "DistributionModel",
    "SampleSequence",
    "interval_prob",
    "empirical_mass",
    "empirical_weighted_mass",
    "sup_interval_discrepancy",
    "sup_weighted_discrepancy",
    "cramer_distance",
    "levy_distance",
    "stability_diagnostic",
    "StabilityReport",
    "read_sequence_csv",
    "write_sequence_csv",
    "sequence_csv_bytes",
]


@dataclass(frozen=True)
class IntervalA:
    """Half-open interval (a, b]; a = -inf gives the left-unbounded kind."""

    a: float
    b: float

    def __post_init__(self):
        if math.isnan(self.a) or math.isnan(self.b):
            raise ValueError("interval endpoints must not be NaN")
        if not self.a < self.b:
            raise ValueError(f"need a < b, got ({self.a}, {self.b}]")
        if math.isinf(self.b):
            raise ValueError("right endpoint must be finite")

    @classmethod
    def left_unbounded(cls, b: float) -> "IntervalA":
        return cls(-math.inf, b)

    @property
    def left_unbounded_kind(self) -> bool:
        return math.isinf(self.a)

    def contains(self, x: float) -> bool:
        return self.a < x <= self.b


class ModelError(ValueError):
    """A distribution model violates its construction invariants."""


_MASS_TOL = 1e-12


@dataclass(frozen=True)
class DistributionModel:
    """Probability distribution = finite atoms + piecewise-constant density.

    atoms: ((location, mass), ...) with distinct locations, masses in (0, 1].
    segments: ((a, b, density), ...) disjoint, sorted, a < b, density >= 0.
    Total mass must be 1 within 1e-12.

    The restriction to constant densities is deliberate: it covers every
    distribution the estimation and adversary experiments need (uniform
    laws, point masses, finite mixtures) while keeping interval
    probabilities, CDF left limits and inverse-CDF sampling exact.
    """

    atoms: tuple[tuple[float, float], ...] = ()
    segments: tuple[tuple[float, float, float], ...] = ()

    # derived arrays, filled in __post_init__
    _atom_locs: np.ndarray = field(repr=False, compare=False, default=None)
    _atom_mass: np.ndarray = field(repr=False, compare=False, default=None)
    _atom_cum: np.ndarray = field(repr=False, compare=False, default=None)
    _seg_a: np.ndarray = field(repr=False, compare=False, default=None)
    _seg_b: np.ndarray = field(repr=False, compare=False, default=None)
    _seg_d: np.ndarray = field(repr=False, compare=False, default=None)
    _seg_cum: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        atoms = tuple(sorted((float(u), float(m)) for u, m in self.atoms))
        segs = tuple(
            sorted((float(a), float(b), float(d)) for a, b, d in self.segments)
        )
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "segments", segs)

        locs = [u for u, _ in atoms]
        if len(set(locs)) != len(locs):
            raise ModelError("atom locations must be distinct")
        if any(m <= 0 for _, m in atoms):
            raise ModelError("atom masses must be positive")
        for a, b, d in segs:
            if not a < b:
                raise ModelError(f"segment needs a < b, got ({a}, {b}]")
            if d < 0:
                raise ModelError("densities must be nonnegative")
        for (_, b0, _), (a1, _, _) in zip(segs, segs[1:]):
            if a1 < b0:
                raise ModelError("segments must be disjoint")
        total = math.fsum([m for _, m in atoms] + [d * (b - a) for a, b, d in segs])
        if abs(total - 1.0) > _MASS_TOL:
            raise ModelError(f"total mass is {total!r}, must be 1 within {_MASS_TOL}")

        object.__setattr__(self, "_atom_locs", np.array(locs, dtype=float))
        object.__setattr__(self, "_atom_mass", np.array([m for _, m in atoms], dtype=float))
        object.__setattr__(self, "_atom_cum", np.concatenate([[0.0], np.cumsum(self._atom_mass)]))
        object.__setattr__(self, "_seg_a", np.array([a for a, _, _ in segs], dtype=float))
        object.__setattr__(self, "_seg_b", np.array([b for _, b, _ in segs], dtype=float))
        object.__setattr__(self, "_seg_d", np.array([d for _, _, d in segs], dtype=float))
        seg_mass = self._seg_d * (self._seg_b - self._seg_a)
        object.__setattr__(self, "_seg_cum", np.concatenate([[0.0], np.cumsum(seg_mass)]))

    # -- constructors ---------------------------------------------------------
    @classmethod
    def uniform(cls, a: float = 0.0, b: float = 1.0) -> "DistributionModel":
        return cls(segments=(((a, b, 1.0 / (b - a))),))

    @classmethod
    def point_mass(cls, loc: float) -> "DistributionModel":
        return cls(atoms=((loc, 1.0),))

    @classmethod
    def atomic(cls, locs_masses: Iterable[tuple[float, float]]) -> "DistributionModel":
        return cls(atoms=tuple(locs_masses))

    # -- CDF machinery --------------------------------------------------------
    def cdf(self, t) -> np.ndarray | float:
        """mu(-inf, t], vectorized; exact up to float rounding."""
        scalar = np.ndim(t) == 0
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = self._atom_cum[np.searchsorted(self._atom_locs, t_arr, side="right")]
        out = out + self._continuous_cdf(t_arr)
        return float(out[0]) if scalar else out

    def cdf_left(self, t) -> np.ndarray | float:
        """mu(-inf, t), the left limit of the CDF."""
        scalar = np.ndim(t) == 0
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = self._atom_cum[np.searchsorted(self._atom_locs, t_arr, side="left")]
        out = out + self._continuous_cdf(t_arr)
        return float(out[0]) if scalar else out

    def _continuous_cdf(self, t: np.ndarray) -> np.ndarray:
        if len(self._seg_a) == 0:
            return np.zeros_like(t)
        idx = np.searchsorted(self._seg_b, t, side="left")
        out = self._seg_cum[np.minimum(idx, len(self._seg_a))].copy()
        inside = idx < len(self._seg_a)
        if np.any(inside):
            ii = idx[inside]
            part = np.maximum(0.0, np.minimum(t[inside], self._seg_b[ii]) - self._seg_a[ii])
            out[inside] += self._seg_d[ii] * part
        return out

    def atom_mass(self, t: float) -> float:
        """mu({t})."""
        i = bisect_left(self.atoms, (t,))
        if i < len(self.atoms) and self.atoms[i][0] == t:
            return self.atoms[i][1]
        return 0.0

    def breakpoints(self) -> np.ndarray:
        """All CDF breakpoints: atom locations and segment endpoints."""
        pts = list(self._atom_locs)
        for a, b, _ in self.segments:
            pts.extend((a, b))
        return np.array(sorted(set(pts)), dtype=float)

    def inverse_cdf(self, u) -> np.ndarray:
        """Quantile transform; maps Uniform(0,1) draws to mu-distributed points.

        The mixture pieces (atoms and segments) are walked in location
        order, which is exactly the CDF's own order, so the transform is the
        generalized inverse of `cdf`.
        """
        pieces: list[tuple[float, float, float, float]] = []  # (cum0, mass, a, slope-or-atom)
        cum = 0.0
        ai = si = 0
        rows = []
        while ai < len(self.atoms) or si < len(self.segments):
            next_atom = self.atoms[ai][0] if ai < len(self.atoms) else math.inf
            next_seg = self.segments[si][0] if si < len(self.segments) else math.inf
            if next_atom <= next_seg:
                loc, m = self.atoms[ai]
                rows.append(("atom", cum, m, loc, 0.0))
                cum += m
                ai += 1
            else:
                a, b, d = self.segments[si]
                m = d * (b - a)
                rows.append(("seg", cum, m, a, d))
                cum += m
                si += 1
        starts = np.array([r[1] for r in rows])
        u_arr = np.atleast_1d(np.asarray(u, dtype=float))
        idx = np.clip(np.searchsorted(starts, u_arr, side="right") - 1, 0, len(rows) - 1)
        out = np.empty_like(u_arr)
        for i, r in enumerate(rows):
            sel = idx == i
            if not np.any(sel):
                continue
            kind, cum0, m, a, d = r
            if kind == "atom" or m == 0 or d == 0:
                out[sel] = a
            else:
                out[sel] = a + (u_arr[sel] - cum0) / d
        return out

    def support_radius(self) -> float:
        """Smallest R with all mass inside [-R, R]."""
        pts = self.breakpoints()
        return float(np.abs(pts).max()) if len(pts) else 0.0

    # -- serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "atoms": [[u, m] for u, m in self.atoms],
            "segments": [[a, b, d] for a, b, d in self.segments],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionModel":
        return cls(
            atoms=tuple((u, m) for u, m in d.get("atoms", [])),
            segments=tuple((a, b, dd) for a, b, dd in d.get("segments", [])),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "DistributionModel":
        return cls.from_dict(json.loads(s))


def interval_prob(model: DistributionModel, A: IntervalA) -> float:
    """mu(A) with right-closed semantics; empty overlap returns 0."""
    hi = model.cdf(A.b)
    lo = 0.0 if A.left_unbounded_kind else model.cdf(A.a)
    return max(0.0, hi - lo)


def _compensated_cumsum(y: np.ndarray) -> np.ndarray:
    """Prefix sums with chunked exact correction.

    Within 4096-element chunks an ordinary cumsum is used; chunk offsets are
    fsum-exact, so accumulated error stays O(chunk * eps) regardless of n.
    Only engaged above 10^6 elements; below that, plain cumsum error is
    already far under the discrepancy scales of interest.
    """
    n = len(y)
    if n <= 1_000_000:
        return np.cumsum(y)
    out = np.empty(n, dtype=float)
    chunk = 4096
    offset = 0.0
    parts: list[float] = []
    for s in range(0, n, chunk):
        e = min(s + chunk, n)
        out[s:e] = np.cumsum(y[s:e]) + offset
        parts.append(math.fsum(y[s:e].tolist()))
        offset = math.fsum(parts)
    return out


@dataclass(frozen=True)
class SampleSequence:
    """An observed finite prefix (x_i, y_i), i = 1..n, insertion order kept.

    The sorted view (stable argsort by x) and the prefix sums of y in sorted
    order support O(log n) interval queries for both the plain and the
    y-weighted empirical measures.  Ties in x keep insertion order in the
    sorted view; every query is by x-value range, so the tie order never
    changes an answer.

    Instances are immutable after construction; all query methods are pure.
    """

    x: np.ndarray
    y: np.ndarray
    sorted_index: np.ndarray = field(repr=False, compare=False, default=None)
    x_sorted: np.ndarray = field(repr=False, compare=False, default=None)
    y_cumsum_sorted: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "sorted_index", order)
        object.__setattr__(self, "x_sorted", x[order])
        cs = np.concatenate([[0.0], _compensated_cumsum(y[order])])
        object.__setattr__(self, "y_cumsum_sorted", cs)

    def __len__(self) -> int:
        return len(self.x)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "SampleSequence":
        pairs = list(pairs)
        return cls(
            np.array([p[0] for p in pairs], dtype=float),
            np.array([p[1] for p in pairs], dtype=float),
        )

    def prefix(self, m: int) -> "SampleSequence":
        if not 0 <= m <= len(self):
            raise ValueError(f"prefix length {m} out of range")
        return SampleSequence(self.x[:m].copy(), self.y[:m].copy())

    # -- counting -------------------------------------------------------------
    def count_le(self, t) -> np.ndarray | int:
        return np.searchsorted(self.x_sorted, t, side="right")

    def count_lt(self, t) -> np.ndarray | int:
        return np.searchsorted(self.x_sorted, t, side="left")

    def empirical_cdf(self, t) -> np.ndarray | float:
        return self.count_le(t) / len(self)

    def weighted_cdf(self, t) -> np.ndarray | float:
        """(1/n) * sum of y_i over x_i <= t."""
        return self.y_cumsum_sorted[self.count_le(t)] / len(self)

    def atom_frequency(self, u: float) -> float:
        """Empirical mass of the single point {u}."""
        return float(self.count_le(u) - self.count_lt(u)) / len(self)

    def atom_weighted(self, u: float) -> float:
        """(1/n) * sum of y_i over x_i == u."""
        lo, hi = int(self.count_lt(u)), int(self.count_le(u))
        return float(self.y_cumsum_sorted[hi] - self.y_cumsum_sorted[lo]) / len(self)


def empirical_mass(seq: SampleSequence, A: IntervalA) -> float:
    """Fraction of samples inside A; exact count over n."""
    if len(seq) < 1:
        raise ValueError("need at least one sample")
    hi = int(seq.count_le(A.b))
    lo = 0 if A.left_unbounded_kind else int(seq.count_le(A.a))
    return (hi - lo) / len(seq)


def empirical_weighted_mass(seq: SampleSequence, A: IntervalA) -> float:
    """(1/n) * sum of y_i over x_i in A, via prefix-sum differences."""
    if len(seq) < 1:
        raise ValueError("need at least one sample")
    hi = int(seq.count_le(A.b))
    lo = 0 if A.left_unbounded_kind else int(seq.count_le(A.a))
    return float(seq.y_cumsum_sorted[hi] - seq.y_cumsum_sorted[lo]) / len(seq)


def _scan_extrema(right_vals: np.ndarray, left_vals: np.ndarray) -> float:
    hi = max(float(right_vals.max()), float(left_vals.max()), 0.0)
    lo = min(float(right_vals.min()), float(left_vals.min()), 0.0)
    return hi - lo


def sup_interval_discrepancy(seq: SampleSequence, model: DistributionModel) -> float:
    """sup over all (a, b] and (-inf, b] of |empirical mass - mu|.

    Evaluates D = F_hat - F at every breakpoint of either CDF, both the
    right value and the left limit, and returns max - min against the
    baseline 0 (the value of D at +/-inf, where both CDFs agree).  This is
    the exact supremum: D is piecewise linear between the candidates.
    """
    if len(seq) < 1:
        raise ValueError("need at least one sample")
    n = len(seq)
    cand = np.concatenate([seq.x_sorted, model.breakpoints()])
    d_right = seq.count_le(cand) / n - model.cdf(cand)
    d_left = seq.count_lt(cand) / n - model.cdf_left(cand)
    return _scan_extrema(d_right, d_left)


def sup_weighted_discrepancy(seq: SampleSequence, target) -> float:
    """sup over the interval class of |y-weighted empirical mass - target|.

    `target` must expose cumulative(t), cumulative_left(t) (vectorized) and
    breakpoints().  The scan mirrors `sup_interval_discrepancy`, with one
    extra candidate beyond the largest breakpoint: the weighted curves need
    not meet at +inf, and the constant tail value is attained by any finite
    b past the data and target support.
    """
    if len(seq) < 1:
        raise ValueError("need at least one sample")
    n = len(seq)
    bks = np.asarray(target.breakpoints(), dtype=float)
    tail_anchor = max(
        float(seq.x_sorted[-1]),
        float(bks.max()) if len(bks) else -math.inf,
    ) + 1.0
    cand = np.concatenate([seq.x_sorted, bks, [tail_anchor]])
    g_hat_right = seq.y_cumsum_sorted[seq.count_le(cand)] / n
    g_hat_left = seq.y_cumsum_sorted[seq.count_lt(cand)] / n
    d_right = g_hat_right - np.asarray(target.cumulative(cand), dtype=float)
    d_left = g_hat_left - np.asarray(target.cumulative_left(cand), dtype=float)
    return _scan_extrema(d_right, d_left)


def cramer_distance(seq: SampleSequence, model: DistributionModel) -> float:
    """Squared L2 distance between the empirical and model CDFs over the line.

    integral of (F_hat - F)^2 dt, exact: both CDFs are piecewise linear
    between the union of their breakpoints (F_hat is a step function), so
    each piece contributes (d0^2 + d0*d1 + d1^2)/3 * len with d0, d1 the
    deviations at the piece ends (right value at the left end, left limit
    at the right end).  The integrand vanishes outside the joint support.

    Like the Levy metric, this goes to 0 under pointwise CDF convergence
    plus tightness -- in particular on sequences that creep up on an atom
    without sampling it -- while the interval-class supremum does not.
    """
    if len(seq) < 1:
        raise ValueError("need at least one sample")
    n = len(seq)
    pts = np.unique(np.concatenate([seq.x_sorted, model.breakpoints()]))
    if len(pts) < 2:
        return 0.0
    a = pts[:-1]
    b = pts[1:]
    f_hat = seq.count_le(a) / n  # constant on each open piece
    d0 = f_hat - model.cdf(a)
    d1 = f_hat - model.cdf_left(b)
    pieces = (d0 * d0 + d0 * d1 + d1 * d1) / 3.0 * (b - a)
    return float(math.fsum(pieces.tolist()))


def levy_distance(seq: SampleSequence, model: DistributionModel) -> float:
    """Levy metric between the empirical CDF and the model CDF.

    Smallest eps with F(t - eps) - eps <= F_hat(t) <= F(t + eps) + eps for
    all t.  Between sample jumps F_hat is flat and F is non-decreasing, so
    feasibility of one eps reduces to checks at the sample points (right
    values for the upper envelope, left limits for the lower), found by
    bisection to absolute precision 1e-12.

    This metrizes pointwise CDF convergence at continuity points -- a
    strictly weaker statistic than the interval supremum, and exactly the
    gap the stability diagnostic needs to expose: mass creeping toward an
    atom without ever hitting it drives the Levy distance to 0 while the
    interval supremum stays at 1.
    """
    if len(seq) < 1:
        raise ValueError("need at least one sample")
    n = len(seq)
    ts = np.unique(seq.x_sorted)
    f_right = seq.count_le(ts) / n
    f_left = seq.count_lt(ts) / n

    def feasible(eps: float) -> bool:
        over = f_right - model.cdf(ts + eps)
        if float(over.max()) > eps + 1e-15:
            return False
        under = np.asarray(model.cdf_left(ts - eps), dtype=float) - f_left
        return float(under.max()) <= eps + 1e-15

    lo, hi = 0.0, 1.0
    if feasible(0.0):
        return 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12:
            break
    return hi


# -- stability diagnostic -----------------------------------------------------

@dataclass(frozen=True)
class StabilityCheckpoint:
    n: int
    interval_discrepancy: float
    weighted_discrepancy: float
    cdf_cramer: float
    cdf_levy: float
    atom_deviations: dict[float, float]
    weighted_atom_deviations: dict[float, float]


FLAG_NAME = "NON-STABLE-EVIDENCE"


@dataclass(frozen=True)
class StabilityReport:
    checkpoints: tuple[StabilityCheckpoint, ...]
    flag: bool
    flag_reason: str

    @property
    def flag_name(self) -> str:
        return FLAG_NAME if self.flag else ""

    def to_dict(self) -> dict:
        return {
            "checkpoints": [
                {
                    "n": c.n,
                    "interval_discrepancy": c.interval_discrepancy,
                    "weighted_discrepancy": c.weighted_discrepancy,
                    "cdf_cramer": c.cdf_cramer,
                    "cdf_levy": c.cdf_levy,
                    "atom_deviations": {repr(u): d for u, d in sorted(c.atom_deviations.items())},
                    "weighted_atom_deviations": {
                        repr(u): d for u, d in sorted(c.weighted_atom_deviations.items())
                    },
                }
                for c in self.checkpoints
            ],
            "flag": self.flag,
            "flag_name": self.flag_name,
            "flag_reason": self.flag_reason,
        }


# Flag thresholds: an atom deviation counts as "stuck" if at the last
# checkpoint it is at least ATOM_FLOOR and has not dropped below
# STUCK_FRACTION of its first value, while the CDF-level statistic (the
# Cramer distance) has fallen to at most CDF_DROP of its first value.
_ATOM_FLOOR = 0.05
_STUCK_FRACTION = 0.75
_CDF_DROP = 0.75


def stability_diagnostic(
    seq: SampleSequence,
    model: DistributionModel,
    target,
    checkpoints: Sequence[int],
) -> StabilityReport:
    """Track convergence evidence along increasing prefix sizes.

    Per checkpoint m: the exact interval-class discrepancies (plain and
    y-weighted), the Levy distance of the empirical CDF to the model CDF,
    and per-atom deviations |mu_hat_m({u}) - mu({u})| and
    |nu_hat_m({u}) - nu({u})| for every atom u of the model.

    The flag fires on the divergence pattern where the CDF part converges
    (Levy distance drops) while some atom's plain deviation stays put --
    evidence that the sequence approaches the atom's location without
    sampling it, so interval-class convergence cannot hold.
    """
    checkpoints = [int(m) for m in checkpoints]
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    if checkpoints and checkpoints[-1] > len(seq):
        raise ValueError("checkpoints must not exceed the sequence length")
    atoms = [u for u, _ in model.atoms]
    rows: list[StabilityCheckpoint] = []
    for m in checkpoints:
        pre = seq.prefix(m)
        adev = {u: abs(pre.atom_frequency(u) - model.atom_mass(u)) for u in atoms}
        wdev = {
            u: abs(pre.atom_weighted(u) - float(target.point_mass(u))) for u in atoms
        }
        rows.append(
            StabilityCheckpoint(
                n=m,
                interval_discrepancy=sup_interval_discrepancy(pre, model),
                weighted_discrepancy=sup_weighted_discrepancy(pre, target),
                cdf_cramer=cramer_distance(pre, model),
                cdf_levy=levy_distance(pre, model),
                atom_deviations=adev,
                weighted_atom_deviations=wdev,
            )
        )
    flag, reason = False, ""
    if len(rows) >= 2 and atoms:
        first, last = rows[0], rows[-1]
        cdf_converging = last.cdf_cramer <= _CDF_DROP * first.cdf_cramer
        if cdf_converging:
            for u in atoms:
                d0, d1 = first.atom_deviations[u], last.atom_deviations[u]
                if d1 >= _ATOM_FLOOR and d1 >= _STUCK_FRACTION * d0:
                    flag = True
                    reason = (
                        f"CDF-level discrepancy converges ({first.cdf_cramer:.4g} -> "
                        f"{last.cdf_cramer:.4g}) but the deviation at atom {u!r} "
                        f"is stuck at {d1:.4g}"
                    )
                    break
    return StabilityReport(tuple(rows), flag, reason)


# -- sequence file format -----------------------------------------------------

def sequence_csv_bytes(seq: SampleSequence) -> bytes:
    """Canonical CSV encoding: header i,x,y; repr floats (round-trip exact)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "x", "y"])
    for i, (x, y) in enumerate(zip(seq.x, seq.y), start=1):
        w.writerow([i, repr(float(x)), repr(float(y))])
    return buf.getvalue().encode("utf-8")


def write_sequence_csv(seq: SampleSequence, path) -> None:
    with open(path, "wb") as fh:
        fh.write(sequence_csv_bytes(seq))


def read_sequence_csv(path) -> SampleSequence:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [h.strip() for h in header] != ["i", "x", "y"]:
            raise ValueError(f"unexpected sequence CSV header: {header}")
        xs, ys = [], []
        for row in r:
            if not row:
                continue
            xs.append(float(row[1]))
            ys.append(float(row[2]))
    return SampleSequence(np.array(xs), np.array(ys))
