"""Discrete-event simulator of the two-class preemptive M/M/1.

Every index policy reduces to a three-level priority structure
Q0 > Q2 > Q1 with overtake age alpha: class-1 jobs older than alpha sit
in Q0, all class-2 jobs in Q2, young class-1 jobs in Q1; FCFS within
each level, preemptive-resume service. Because the class-1 index is
non-decreasing, promotions happen in arrival order and each queue is a
contiguous window of per-class job indices, so the event loop needs only
a handful of integer cursors.

Runs are deterministic functions of their inputs. The per-run seed feeds
four independent substreams (class-i interarrival gaps and service
requirements) so that pre-drawn arrays can be regrown without changing
their common prefix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .cost import HoldingCost
from .policy import PolicySpec, SystemParams, overtake_age

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step; the documented 64-bit mix primitive."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix64(*values: int) -> int:
    """Fold integers into one 64-bit seed by chained splitmix64 steps."""
    state = 0
    for v in values:
        state = splitmix64((state ^ (int(v) & MASK64)) & MASK64)
    return state


@dataclass(frozen=True)
class SimOptions:
    horizon_events: int = 1_000_000
    warmup_events: int = 100_000
    seed: int = 0
    record_tails: bool = True

    def __post_init__(self):
        if not self.horizon_events > self.warmup_events >= 0:
            raise ValueError("need horizon_events > warmup_events >= 0")


@dataclass
class SimResult:
    t1_samples: np.ndarray
    t2_samples: np.ndarray
    q0_sojourns: np.ndarray
    total_cost: float
    busy_time: float
    horizon: float
    seed: int
    records: np.ndarray | None = field(default=None, repr=False)


def _overtake_loop(alpha, arr1, rem1, arr2, rem2, horizon, dep1, dep2):
    n1t = arr1.shape[0]
    n2t = arr2.shape[0]
    i1 = 0
    i2 = 0
    done1 = 0
    done2 = 0
    promoted = 0
    ndep = 0
    t = 0.0
    busy = 0.0
    INF = np.inf
    status = 0
    while ndep < horizon:
        if (i1 >= n1t and n1t > 0) or (i2 >= n2t and n2t > 0):
            status = 1  # pre-drawn arrival stream exhausted
            break
        # priority Q0 > Q2 > Q1; class-1 head is always job done1
        if done1 < promoted:
            scls = 1
            comp = t + rem1[done1]
        elif done2 < i2:
            scls = 2
            comp = t + rem2[done2]
        elif done1 < i1:
            scls = 1
            comp = t + rem1[done1]
        else:
            scls = 0
            comp = INF
        na1 = arr1[i1] if i1 < n1t else INF
        na2 = arr2[i2] if i2 < n2t else INF
        if promoted < i1 and alpha < INF:
            promo = arr1[promoted] + alpha
        else:
            promo = INF
        # tie order: completion, class-1 arrival, class-2 arrival, promotion
        if comp <= na1 and comp <= na2 and comp <= promo:
            ev = 0
            tn = comp
        elif na1 <= na2 and na1 <= promo:
            ev = 1
            tn = na1
        elif na2 <= promo:
            ev = 2
            tn = na2
        else:
            ev = 3
            tn = promo
        if tn == INF:
            status = 1
            break
        if scls == 1:
            rem1[done1] -= tn - t
            busy += tn - t
        elif scls == 2:
            rem2[done2] -= tn - t
            busy += tn - t
        t = tn
        if ev == 0:
            if scls == 1:
                dep1[done1] = t
                done1 += 1
                if promoted < done1:
                    promoted = done1
            else:
                dep2[done2] = t
                done2 += 1
            ndep += 1
        elif ev == 1:
            i1 += 1
            if alpha == 0.0:
                promoted = i1
        elif ev == 2:
            i2 += 1
        else:
            promoted += 1
    return done1, done2, promoted, busy, status


try:
    from numba import njit

    _overtake_loop = njit(cache=True)(_overtake_loop)
except ImportError:  # pragma: no cover - numba is a declared dependency
    pass


def _draw_streams(params: SystemParams, seed: int, n1: int, n2: int):
    """Arrival times and service requirements from four substreams."""
    def stream(k):
        return np.random.Generator(np.random.PCG64(mix64(seed, k)))

    if params.lambda1 > 0 and n1 > 0:
        arr1 = np.cumsum(stream(0).exponential(1.0 / params.lambda1, n1))
    else:
        arr1 = np.empty(0)
    work1 = stream(1).exponential(1.0 / params.mu1, arr1.shape[0])
    if params.lambda2 > 0 and n2 > 0:
        arr2 = np.cumsum(stream(2).exponential(1.0 / params.lambda2, n2))
    else:
        arr2 = np.empty(0)
    work2 = stream(3).exponential(1.0 / params.mu2, arr2.shape[0])
    return arr1, work1, arr2, work2


def _stream_sizes(params: SystemParams, horizon: int, scale: float):
    lam = params.lambda1 + params.lambda2
    if lam == 0:
        raise ValueError("no arrivals: both arrival rates are zero")
    sizes = []
    for lam_i in (params.lambda1, params.lambda2):
        frac = lam_i / lam
        mean = horizon * frac
        sizes.append(int(scale * (mean + 6.0 * math.sqrt(mean + 1.0) + 100.0)))
    return sizes


def _run_fcfs(arr1, work1, arr2, work2, horizon):
    """Single global FIFO, run-to-completion."""
    arr = np.concatenate([arr1, arr2])
    work = np.concatenate([work1, work2])
    cls = np.concatenate([np.ones(len(arr1), dtype=np.int8),
                          np.full(len(arr2), 2, dtype=np.int8)])
    order = np.argsort(arr, kind="stable")
    arr, work, cls = arr[order], work[order], cls[order]
    if len(arr) < horizon:
        raise RuntimeError("FCFS stream undersized")
    arr, work, cls = arr[:horizon], work[:horizon], cls[:horizon]
    # dep[k] = max(dep[k-1], arr[k]) + work[k]
    cum = np.cumsum(work)
    start = np.maximum.accumulate(arr - np.concatenate([[0.0], cum[:-1]]))
    dep = cum + start
    busy = float(np.sum(work))
    return arr, dep, cls, busy


def simulate(params: SystemParams, p: PolicySpec, c1: HoldingCost, c2: float,
             opts: SimOptions) -> SimResult:
    """Simulate opts.horizon_events departures under policy p.

    Jobs departing during the first opts.warmup_events departures are
    discarded, as are jobs still in system at the end; total cost is
    accounted per departed job as cumulative(c_i, T).
    """
    horizon = opts.horizon_events
    if p.kind == "fcfs":
        scale = 1.3  # FIFO needs `horizon` arrivals outright
        while True:
            n1, n2 = _stream_sizes(params, horizon, scale)
            arr1, work1, arr2, work2 = _draw_streams(params, opts.seed, n1, n2)
            if len(arr1) + len(arr2) >= horizon:
                try:
                    arr, dep, cls, busy = _run_fcfs(arr1, work1, arr2, work2,
                                                    horizon)
                    break
                except RuntimeError:
                    pass
            scale *= 1.5
        a1, d1 = arr[cls == 1], dep[cls == 1]
        a2, d2 = arr[cls == 2], dep[cls == 2]
        promo1 = np.full(len(a1), np.nan)
    else:
        alpha = overtake_age(p, params, c1, c2).value()
        scale = 1.0
        while True:
            n1, n2 = _stream_sizes(params, horizon, scale)
            arr1, work1, arr2, work2 = _draw_streams(params, opts.seed, n1, n2)
            dep1 = np.full(arr1.shape[0], np.nan)
            dep2 = np.full(arr2.shape[0], np.nan)
            done1, done2, promoted, busy, status = _overtake_loop(
                alpha, arr1, work1.copy(), arr2, work2.copy(), horizon,
                dep1, dep2)
            if status == 0:
                break
            scale *= 1.5
        a1, d1 = arr1[:done1], dep1[:done1]
        a2, d2 = arr2[:done2], dep2[:done2]
        # a job entered the top level iff it was still present at age
        # alpha; promotions happen exactly at arrival + alpha
        promo1 = np.where(d1 - a1 > alpha, a1 + alpha, np.nan)

    all_dep = np.sort(np.concatenate([d1, d2]))
    t_end = all_dep[-1]
    t_w = all_dep[opts.warmup_events - 1] if opts.warmup_events > 0 else 0.0
    keep1 = d1 > t_w
    keep2 = d2 > t_w
    t1 = (d1 - a1)[keep1]
    t2 = (d2 - a2)[keep2]
    pk = promo1[keep1]
    q0 = (d1[keep1] - pk)[~np.isnan(pk)]
    total_cost = float(np.sum(c1.cumulative(t1)) + c2 * np.sum(t2))

    records = None
    if opts.record_tails:
        n = keep1.sum() + keep2.sum()
        records = np.empty(n, dtype=[("class_id", np.int8),
                                     ("arrival", float),
                                     ("departure", float),
                                     ("promotion", float)])
        records["class_id"] = np.concatenate(
            [np.ones(keep1.sum(), np.int8), np.full(keep2.sum(), 2, np.int8)])
        records["arrival"] = np.concatenate([a1[keep1], a2[keep2]])
        records["departure"] = np.concatenate([d1[keep1], d2[keep2]])
        records["promotion"] = np.concatenate(
            [pk, np.full(keep2.sum(), np.nan)])

    return SimResult(t1_samples=t1, t2_samples=t2, q0_sojourns=q0,
                     total_cost=total_cost, busy_time=float(busy),
                     horizon=float(t_end - t_w), seed=opts.seed,
                     records=records)


def time_avg_cost(res: SimResult, c1: HoldingCost, c2: float) -> float:
    """Time-average holding cost from per-job accounting."""
    if len(res.t1_samples) + len(res.t2_samples) == 0:
        raise ValueError("empty simulation result")
    total = float(np.sum(c1.cumulative(res.t1_samples))
                  + c2 * np.sum(res.t2_samples))
    return total / res.horizon


def empirical_tail(samples, ts):
    """Empirical survival #{s > t}/n at each t."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty sample set")
    s = np.sort(samples)
    ts = np.asarray(ts, dtype=float)
    return 1.0 - np.searchsorted(s, ts, side="right") / s.size


def write_csv(res: SimResult, path):
    """Dump per-job records as class,arrival,departure,promotion."""
    if res.records is None:
        raise ValueError("run was simulated with record_tails=False")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "arrival", "departure", "promotion"])
        for row in res.records:
            promo = "" if math.isnan(row["promotion"]) else repr(float(row["promotion"]))
            w.writerow([int(row["class_id"]), repr(float(row["arrival"])),
                        repr(float(row["departure"])), promo])
