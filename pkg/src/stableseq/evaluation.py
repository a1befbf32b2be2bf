"""L2(mu) error functionals and consistency-curve experiments.

Two routes to the same integral, kept deliberately separate:

  * `l2_error_exact` integrates (est - m)^2 against mu in closed form over
    the common refinement of the estimate's dyadic cells, the regression
    curve's pieces, and the distribution's segments, plus exact atom terms.
    No quadrature error enters acceptance thresholds.

  * `l2_error_quadrature` treats both functions as black boxes: composite
    midpoint rule per segment, weighted by the segment density, with a
    doubled-resolution Richardson check.  Disagreement beyond relative 1e-3
    is reported as NOT-CONVERGED alongside both values rather than raised.

`consistency_curve` streams a generated sequence through the estimator once
and records the exact error of the fixed-sample estimate at each
checkpoint; it is the workhorse behind the convergence experiments.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .estimator import EstimatorState, kappa_index
from .measures import DistributionModel, SampleSequence
from .partitions import PiecewiseDyadicFn, VariationBudget
from .regression import RegressionModel

__all__ = [
    "l2_error_exact",
    "l2_error_quadrature",
    "QuadratureResult",
    "consistency_curve",
    "ErrorCurve",
    "error_curve_csv_bytes",
]


def _segment_cuts(
    a: float, b: float, est: PiecewiseDyadicFn, m: RegressionModel
) -> np.ndarray:
    cuts = {a, b}
    if est.k > 0:
        w = math.ldexp(1.0, -est.k)
        j0 = math.floor(a / w) + 1
        j1 = math.ceil(b / w) - 1
        if j1 - j0 > 20_000_000:
            raise ValueError("estimate resolution too fine for exact integration")
        if j1 >= j0:
            cuts.update((np.arange(j0, j1 + 1, dtype=float) * w).tolist())
    cuts.update(float(t) for t in m.breakpoints_in(a, b))
    return np.array(sorted(cuts), dtype=float)


def l2_error_exact(
    est: PiecewiseDyadicFn, m: RegressionModel, mu: DistributionModel
) -> float:
    """Exact integral of (est - m)^2 d(mu).

    Requires m to be one of the exactly integrable regression kinds; pass
    black-box callables to `l2_error_quadrature` instead.
    """
    if not isinstance(est, PiecewiseDyadicFn):
        raise TypeError("est must be a dyadic step function for the exact route")
    if not isinstance(m, RegressionModel):
        raise TypeError("m must be an exactly integrable regression model")
    terms: list[float] = []
    for a, b, d in mu.segments:
        if d == 0.0:
            continue
        cuts = _segment_cuts(a, b, est, m)
        for lo, hi in zip(cuts, cuts[1:]):
            mid = 0.5 * (lo + hi)
            e = est.value_at_cell(_cell_idx(mid, est.k)) if est.k > 0 else est.value_at_cell(0)
            c, s = m.linear_piece_at(mid)
            p = e - c
            # integral of (p - s t)^2 over (lo, hi]
            val = (
                p * p * (hi - lo)
                - p * s * (hi * hi - lo * lo)
                + s * s * (hi * hi * hi - lo * lo * lo) / 3.0
            )
            terms.append(d * val)
    for u, mass in mu.atoms:
        diff = float(est(u)) - float(m.eval(u))
        terms.append(mass * diff * diff)
    return math.fsum(terms)


def _cell_idx(x: float, k: int) -> int:
    from .partitions import cell_of

    return cell_of(x, k).j


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    converged: bool
    coarse: float
    fine: float

    def __float__(self) -> float:
        return self.value


def l2_error_quadrature(
    est: Callable, m: Callable, mu: DistributionModel, cells: int = 1 << 16
) -> QuadratureResult:
    """Composite midpoint quadrature of (est - m)^2 d(mu) for black boxes.

    `cells` must be a power of two >= 2^10: that many midpoints are placed
    per segment, the rule is repeated at double resolution, and the two
    estimates must agree within relative 1e-3; otherwise the result is
    flagged NOT-CONVERGED (converged=False) with both values attached.
    Atom contributions are exact in both.
    """
    if cells < 1 << 10 or cells & (cells - 1):
        raise ValueError("cells must be a power of two >= 2^10")

    def evaluate(f, xs: np.ndarray) -> np.ndarray:
        if isinstance(f, PiecewiseDyadicFn):
            return np.asarray(f.eval_many(xs), dtype=float)
        if isinstance(f, RegressionModel):
            return np.atleast_1d(np.asarray(f.eval(xs), dtype=float))
        return np.atleast_1d(np.asarray(f(xs), dtype=float))

    def rule(n_cells: int) -> float:
        parts: list[float] = []
        for a, b, d in mu.segments:
            if d == 0.0:
                continue
            h = (b - a) / n_cells
            mids = a + h * (np.arange(n_cells) + 0.5)
            diff = evaluate(est, mids) - evaluate(m, mids)
            parts.append(d * h * float(np.sum(diff * diff)))
        for u, mass in mu.atoms:
            de = float(evaluate(est, np.array([u]))[0]) - float(
                evaluate(m, np.array([u]))[0]
            )
            parts.append(mass * de * de)
        return math.fsum(parts)

    coarse = rule(cells)
    fine = rule(cells * 2)
    tol = 1e-3 * max(abs(fine), 1e-300)
    converged = abs(fine - coarse) <= tol or (coarse == 0.0 and fine == 0.0)
    return QuadratureResult(value=fine, converged=converged, coarse=coarse, fine=fine)


@dataclass(frozen=True)
class ErrorCurve:
    """Exact-error trajectory of the fixed-sample estimate at checkpoints."""

    rows: tuple[tuple[int, int, float], ...]  # (n, kappa, error)
    metadata: dict = field(default_factory=dict)
    stalled_at: int | None = None

    def final_error(self) -> float:
        return self.rows[-1][2]

    def to_metadata_json(self) -> str:
        meta = dict(self.metadata)
        meta["stalled_at"] = self.stalled_at
        return json.dumps(meta, sort_keys=True)


def error_curve_csv_bytes(curve: ErrorCurve) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "kappa", "error"])
    for n, kappa, err in curve.rows:
        w.writerow([n, kappa, repr(float(err))])
    return buf.getvalue().encode("utf-8")


def consistency_curve(
    seq: SampleSequence,
    m: RegressionModel,
    mu: DistributionModel,
    budget: VariationBudget,
    checkpoints: Sequence[int],
    stall_patience: int | None = None,
    membership_windows: int = 4,
    metadata: dict | None = None,
) -> ErrorCurve:
    """Stream seq through the estimator; exact L2(mu) error at checkpoints.

    Declared budget membership (V(m:-i,i) < alpha(i)) is advisory: a
    violation is recorded in the metadata rather than raised, because the
    stopping-time search can still settle whenever the projected variation
    stays under 4*alpha.  If `stall_patience` is set and the open search
    exceeds it, the curve is truncated at the last completed checkpoint and
    `stalled_at` records the sample count where patience ran out.
    """
    checkpoints = sorted(int(c) for c in checkpoints)
    if not checkpoints or checkpoints[-1] > len(seq):
        raise ValueError("checkpoints must be nonempty and within the sequence")
    meta = dict(metadata or {})
    meta["budget"] = budget.to_dict()
    meta["declared_membership_ok"] = m.fits_budget(budget, membership_windows)
    state = EstimatorState(budget)
    rows: list[tuple[int, int, float]] = []
    stalled_at = None
    next_cp = 0
    for i in range(len(seq)):
        state.ingest(float(seq.x[i]), float(seq.y[i]))
        n = i + 1
        if stall_patience is not None and state.open_search_age() > stall_patience:
            stalled_at = n
            break
        while next_cp < len(checkpoints) and checkpoints[next_cp] == n:
            est = state.estimate_at(n)
            err = l2_error_exact(est, m, mu)
            rows.append((n, kappa_index(state.tau, n), err))
            next_cp += 1
        if next_cp >= len(checkpoints):
            break
    return ErrorCurve(tuple(rows), meta, stalled_at)
