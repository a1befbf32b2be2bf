"""Adaptive histogram regression from a single data stream.

The estimator consumes pairs (x_i, y_i) in order and never revisits a
decision.  At resolution k it maintains per-cell counts and y-sums over the
dyadic partition; the cell estimate is the ratio y-sum/count with the
convention 0/0 = 0.  Resolutions are unlocked sequentially through stopping
times:

    tau_0 = 1,
    tau_k = first n > tau_{k-1} with  V(est_{k,n} : -i, i) < 4 * alpha(i)
            for every window 1 <= i <= k,

where est_{k,n} is the resolution-k histogram built from the first n pairs
and alpha is the known variation budget.  The estimate frozen at tau_k uses
exactly that prefix; the fixed-sample-size estimate for n is the deepest
frozen one affordable with n samples.

Exactness discipline.  The strict inequality against 4 * alpha(i) is a
contract: ties fail, and a re-run from scratch must reproduce the same tau
sequence bit for bit.  Per-sample incremental window sums cannot deliver
that (float accumulation drifts), so they serve only as a conservative
prefilter: whenever the drift-padded incremental sums pass, the decision is
confirmed by `variation_check` on a snapshot -- the same public fsum-based
function a from-scratch audit calls.  fsum is correctly rounded, hence
order-independent, and per-cell y-sums accumulate in arrival order both
here and in `histogram_estimate`, so all three paths (streaming, batch
reference, certificate replay) see identical floats.

Statistics at a freshly unlocked resolution are rebuilt by one pass over
the retained prefix; the estimator keeps the whole prefix and is not
constant-memory by design (correctness over space at desk scale).

Single-writer: ingestion is strictly sequential.  Frozen estimates are
immutable snapshots and may be read concurrently.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from .measures import SampleSequence
from .partitions import PiecewiseDyadicFn, VariationBudget, cell_of, total_variation_window

__all__ = [
    "HistogramEstimate",
    "histogram_estimate",
    "variation_check",
    "EstimatorState",
    "batch_tau_search",
    "kappa_index",
    "fixed_sample_estimate",
    "checkpoint_to_dict",
    "checkpoint_from_dict",
    "verify_checkpoint",
]

_RESYNC_EVERY = 8192


@dataclass(frozen=True)
class HistogramEstimate:
    """A histogram estimate together with its provenance (k, n used)."""

    fn: PiecewiseDyadicFn
    k: int
    n: int


def _accumulate_cells(xs, ys, k: int, n: int) -> dict[int, list]:
    """Per-cell [count, ysum] from the first n pairs, in arrival order."""
    cells: dict[int, list] = {}
    for i in range(n):
        j = cell_of(float(xs[i]), k).j
        c = cells.get(j)
        if c is None:
            cells[j] = [1, float(ys[i])]
        else:
            c[0] += 1
            c[1] += float(ys[i])
    return cells


def _cells_to_fn(cells: dict[int, list], k: int) -> PiecewiseDyadicFn:
    return PiecewiseDyadicFn(k, {j: c[1] / c[0] for j, c in cells.items()}, 0.0)


def histogram_estimate(seq: SampleSequence, k: int, n: int) -> HistogramEstimate:
    """Resolution-k histogram from the first n pairs; empty cells are 0."""
    if not 1 <= n <= len(seq):
        raise ValueError(f"need 1 <= n <= {len(seq)}, got {n}")
    cells = _accumulate_cells(seq.x, seq.y, k, n)
    return HistogramEstimate(_cells_to_fn(cells, k), k, n)


def variation_check(fn: PiecewiseDyadicFn, budget: VariationBudget) -> bool:
    """Strictly below 4*alpha on every window up to the function's resolution.

    Ties (exact equality with 4*alpha(i)) fail.
    """
    for i in range(1, fn.k + 1):
        if not total_variation_window(fn, i) < 4.0 * budget.alpha(i):
            return False
    return True


def kappa_index(tau: list[int], n: int) -> int:
    """Largest k with tau[k] <= n (tau[0] = 1, so any n >= 1 is covered)."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    return bisect_right(tau, n) - 1


class EstimatorState:
    """Streaming estimator state: stopping times, frozen estimates, search.

    The state after ingesting a prefix is a pure function of the prefix and
    the budget.  `ingest` returns the newly frozen resolution when a
    stopping time is recorded, else None.
    """

    def __init__(self, budget: VariationBudget):
        self.budget = budget
        self.xs: list[float] = []
        self.ys: list[float] = []
        self.tau: list[int] = []
        self.frozen: list[PiecewiseDyadicFn] = []
        self._k = 0  # resolution currently searched (0 = waiting for first pair)
        self._cells: dict[int, list] = {}
        self._diffs: dict[int, float] = {}
        self._bucket: dict[int, float] = {}
        self._alpha4: list[float] = []  # 4*alpha(i), i = 1.._k
        self._since_sync = 0

    # -- public views -----------------------------------------------------------
    @property
    def consumed(self) -> int:
        return len(self.xs)

    @property
    def search_resolution(self) -> int:
        return self._k

    def kappa(self, n: int | None = None) -> int:
        return kappa_index(self.tau, self.consumed if n is None else n)

    def estimate_at(self, n: int | None = None) -> PiecewiseDyadicFn:
        """Fixed-sample estimate: deepest frozen resolution with tau_k <= n."""
        n = self.consumed if n is None else n
        if n > self.consumed:
            raise ValueError(f"only {self.consumed} pairs ingested, asked for {n}")
        return self.frozen[kappa_index(self.tau, n)]

    def open_search_age(self) -> int:
        """Samples consumed since the last freeze (0 before the first pair)."""
        if not self.tau:
            return 0
        return self.consumed - self.tau[-1]

    # -- ingestion ----------------------------------------------------------------
    def ingest(self, x: float, y: float) -> int | None:
        x = float(x)
        y = float(y)
        self.xs.append(x)
        self.ys.append(y)
        n = len(self.xs)
        if n == 1:
            self.tau.append(1)
            self.frozen.append(PiecewiseDyadicFn(0, {0: y}, 0.0))
            self._advance_resolution()
            return 0
        self._add_sample(x, y)
        if self._prefilter_passes():
            fn = _cells_to_fn(self._cells, self._k)
            if variation_check(fn, self.budget):
                self.tau.append(n)
                self.frozen.append(fn)
                k_frozen = self._k
                self._advance_resolution()
                return k_frozen
            self._resync()
        self._since_sync += 1
        if self._since_sync >= _RESYNC_EVERY:
            self._resync()
        return None

    def ingest_many(self, xs, ys) -> list[tuple[int, int]]:
        """Ingest a batch; returns [(frozen resolution, tau)] events."""
        events = []
        for x, y in zip(xs, ys):
            k = self.ingest(x, y)
            if k is not None:
                events.append((k, self.tau[-1]))
        return events

    def ingest_sequence(self, seq: SampleSequence) -> list[tuple[int, int]]:
        return self.ingest_many(seq.x, seq.y)

    # -- internals ------------------------------------------------------------------
    def _advance_resolution(self) -> None:
        self._k += 1
        self._alpha4 = [4.0 * self.budget.alpha(i) for i in range(1, self._k + 1)]
        self._cells = _accumulate_cells(self.xs, self.ys, self._k, len(self.xs))
        self._rebuild_diffs()

    def _rebuild_diffs(self) -> None:
        self._diffs = {}
        values = self._cells
        for j in sorted(values):
            v = values[j][1] / values[j][0]
            left = values.get(j - 1)
            if left is not None:
                lv = left[1] / left[0]
                if lv != v:
                    self._diffs[j - 1] = abs(v - lv)
            elif v != 0.0:
                self._diffs[j - 1] = abs(v)
            if (j + 1) not in values and v != 0.0:
                self._diffs[j] = abs(v)
        self._resync()

    def _imin(self, pair: int) -> int:
        """Smallest window radius whose interior contains boundary `pair`."""
        need = max(pair + 1, 1 - pair)
        return max(1, -((-need) >> self._k))

    def _cell_value(self, j: int) -> float:
        c = self._cells.get(j)
        return c[1] / c[0] if c is not None else 0.0

    def _refresh_pair(self, pair: int) -> None:
        new = abs(self._cell_value(pair) - self._cell_value(pair + 1))
        old = self._diffs.get(pair, 0.0)
        if new == old:
            return
        if new != 0.0:
            self._diffs[pair] = new
        else:
            self._diffs.pop(pair, None)
        m = self._imin(pair)
        self._bucket[m] = self._bucket.get(m, 0.0) + (new - old)

    def _add_sample(self, x: float, y: float) -> None:
        j = cell_of(x, self._k).j
        c = self._cells.get(j)
        if c is None:
            self._cells[j] = [1, y]
        else:
            c[0] += 1
            c[1] += y
        self._refresh_pair(j - 1)
        self._refresh_pair(j)

    def _prefilter_passes(self) -> bool:
        acc = 0.0
        bucket = self._bucket
        for i in range(1, self._k + 1):
            acc += bucket.get(i, 0.0)
            lim = self._alpha4[i - 1]
            if not acc < lim + 1e-9 + 1e-12 * (abs(acc) + lim):
                return False
        return True

    def _resync(self) -> None:
        bucket: dict[int, float] = {}
        for pair, d in self._diffs.items():
            m = self._imin(pair)
            bucket[m] = bucket.get(m, 0.0) + d
        self._bucket = bucket
        self._since_sync = 0

    # -- serialization ----------------------------------------------------------------
    def checkpoint(self) -> dict:
        return checkpoint_to_dict(self)


def fixed_sample_estimate(state: EstimatorState, n: int) -> PiecewiseDyadicFn:
    """Module-level alias for the fixed-sample-size estimate."""
    return state.estimate_at(n)


def batch_tau_search(
    xs, ys, budget: VariationBudget, n_max: int | None = None
) -> tuple[list[int], list[PiecewiseDyadicFn]]:
    """Reference stopping-time search, recomputed per step from first principles.

    Used to cross-check the streaming bookkeeping: at every n the candidate
    histogram is materialized and `variation_check` runs fresh.  O(n * cells)
    per step; meant for audits at moderate n, not production streaming.
    """
    n_total = len(xs) if n_max is None else min(n_max, len(xs))
    if n_total < 1:
        raise ValueError("need at least one pair")
    tau = [1]
    frozen = [PiecewiseDyadicFn(0, {0: float(ys[0])}, 0.0)]
    k = 1
    cells = _accumulate_cells(xs, ys, k, 1)
    for n in range(2, n_total + 1):
        j = cell_of(float(xs[n - 1]), k).j
        c = cells.get(j)
        if c is None:
            cells[j] = [1, float(ys[n - 1])]
        else:
            c[0] += 1
            c[1] += float(ys[n - 1])
        fn = _cells_to_fn(cells, k)
        if variation_check(fn, budget):
            tau.append(n)
            frozen.append(fn)
            k += 1
            cells = _accumulate_cells(xs, ys, k, n)
    return tau, frozen


# -- checkpoint file format ---------------------------------------------------

def checkpoint_to_dict(state: EstimatorState) -> dict:
    return {
        "budget": state.budget.to_dict(),
        "consumed": state.consumed,
        "tau": list(state.tau),
        "frozen": [fn.to_dict() for fn in state.frozen],
    }


def checkpoint_from_dict(d: dict) -> dict:
    """Parse a checkpoint into structured pieces (budget, tau, frozen fns)."""
    return {
        "budget": VariationBudget.from_dict(d["budget"]),
        "consumed": int(d["consumed"]),
        "tau": [int(t) for t in d["tau"]],
        "frozen": [PiecewiseDyadicFn.from_dict(f) for f in d["frozen"]],
    }


def verify_checkpoint(seq: SampleSequence, chk: dict) -> list[tuple[str, bool, str]]:
    """Replay a checkpoint against its sequence and re-validate everything.

    Checks, per recorded stopping time: the frozen estimate equals the
    histogram recomputed from scratch on that prefix (exact float equality),
    and the strict variation bound holds on recomputation.  Finally, a full
    streaming re-run must reproduce the tau sequence.
    """
    parsed = checkpoint_from_dict(chk)
    budget, tau, frozen = parsed["budget"], parsed["tau"], parsed["frozen"]
    results: list[tuple[str, bool, str]] = []
    ok_mono = all(b > a for a, b in zip(tau, tau[1:])) and (not tau or tau[0] == 1)
    results.append(("tau-strictly-increasing-from-1", ok_mono, f"tau={tau[:8]}..."))
    for k, (t, fn) in enumerate(zip(tau, frozen)):
        if k == 0:
            expect = PiecewiseDyadicFn(0, {0: float(seq.y[0])}, 0.0)
            same = dict(fn.values) == dict(expect.values) and fn.k == 0
            results.append(("frozen[0]-is-first-y", same, f"tau_0={t}"))
            continue
        rebuilt = histogram_estimate(seq, k, t).fn
        same = (
            rebuilt.k == fn.k
            and rebuilt.default == fn.default
            and dict(rebuilt.values) == dict(fn.values)
        )
        results.append((f"frozen[{k}]-matches-recomputation", same, f"tau_{k}={t}"))
        results.append(
            (
                f"frozen[{k}]-variation-bound",
                variation_check(rebuilt, budget),
                f"tau_{k}={t}",
            )
        )
    replay = EstimatorState(budget)
    n_replay = min(parsed["consumed"], len(seq))
    replay.ingest_many(seq.x[:n_replay], seq.y[:n_replay])
    results.append(
        (
            "streaming-replay-reproduces-tau",
            replay.tau == tau,
            f"replayed tau={replay.tau[:8]}...",
        )
    )
    return results
