"""Bounded-ratio experiments for the decay theorems and the sublevel lemma.

Every check produces VerificationRecord rows (lhs, rhs, ratio) over a grid
of directions and frequencies and a RatioSummary with the supremum and a
log-log trend.  "Bounded" is operationalised as trend <= threshold; the
constants themselves are non-effective and only reported.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import geometry as geo
from .oscint import body_pieces, carved_transform, closed_transform, mu_hat
from .quadrature import HALF_PI
from .surface import ClosedBody, ConvexPatch, disk_union

# sweeps use panels of one full phase turn; see the decisions ledger
SWEEP_PANEL_PHASE = 2 * np.pi
ENVELOPE_WINDOW = 0.5  # decades
EST_ZERO_FACTOR = 10.0


@dataclass(frozen=True)
class VerificationRecord:
    theorem: str
    v: tuple
    t: float
    lhs: float
    rhs: float
    ratio: float
    est_error: float = 0.0

    @classmethod
    def make(cls, theorem, v, t, lhs, rhs, est_error=0.0):
        lhs, rhs = float(lhs), float(rhs)
        if lhs < 0 or rhs < 0:
            raise ValueError("lhs and rhs must be nonnegative")
        ratio = lhs / rhs if rhs > 0 else 0.0
        return cls(theorem, tuple(float(c) for c in v), float(t), lhs, rhs, ratio,
                   float(est_error))

    def row(self):
        return [self.theorem, *[repr(c) for c in self.v], repr(self.t), repr(self.lhs),
                repr(self.rhs), repr(self.ratio), repr(self.est_error)]


@dataclass
class RatioSummary:
    records: list
    sup_ratio: float
    sup_location: tuple
    trend: float
    extra: dict = field(default_factory=dict)

    def passes(self, trend_limit=0.05):
        return math.isfinite(self.sup_ratio) and self.trend <= trend_limit

    def per_t_sup(self):
        return sup_by_t(self.records)

    def to_json(self):
        return {
            "theorem": self.records[0].theorem if self.records else None,
            "n_records": len(self.records),
            "sup_ratio": self.sup_ratio,
            "sup_location": {"v": list(self.sup_location[0]), "t": self.sup_location[1]},
            "trend": self.trend,
            **{k: v for k, v in self.extra.items() if not isinstance(v, np.ndarray)},
        }


# ---------------------------------------------------------------------------
# grids and summaries
# ---------------------------------------------------------------------------

def direction_grid(n: int, count: int | None = None) -> np.ndarray:
    """Directions with v_{n+1} >= 0: uniform half-circle angles or a Fibonacci hemisphere."""
    if n == 1:
        count = count or 256
        th = np.pi * np.arange(count) / (count - 1) if count > 1 else np.array([0.5 * np.pi])
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    if n == 2:
        count = count or 512
        k = np.arange(count)
        z = (k + 0.5) / count
        ang = k * np.pi * (3.0 - math.sqrt(5.0))
        rho = np.sqrt(1.0 - z * z)
        return np.stack([rho * np.cos(ang), rho * np.sin(ang), z], axis=-1)
    raise ValueError("only n = 1, 2 are supported")


def frequency_grid(t_min: float, t_max: float, per_decade: int) -> np.ndarray:
    if not 0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max")
    return geo.geometric_grid(t_min, t_max, per_decade)


def sup_by_t(records):
    """(t values, sup of ratio over directions at each t), sorted by t."""
    best = {}
    for r in records:
        best[r.t] = max(best.get(r.t, 0.0), r.ratio)
    ts = np.array(sorted(best))
    return ts, np.array([best[t] for t in ts])


def envelope_trend(ts, values, window=ENVELOPE_WINDOW):
    """Slope of log(envelope) vs log t.

    The envelope at t is the largest value within +-window/2 decades, which
    removes zeros of oscillating transforms before taking logs.
    """
    ts = np.asarray(ts, float)
    values = np.asarray(values, float)
    keep = values > 0
    ts, values = ts[keep], values[keep]
    if ts.size < 2:
        return 0.0
    lt = np.log10(ts)
    env = np.array([values[np.abs(lt - x) <= 0.5 * window + 1e-12].max() for x in lt])
    slope = np.polyfit(lt, np.log10(env), 1)[0]
    return float(slope)


def summarize(records, **extra) -> RatioSummary:
    if not records:
        raise ValueError("no records")
    i = int(np.argmax([r.ratio for r in records]))
    ts, sups = sup_by_t(records)
    return RatioSummary(list(records), records[i].ratio, (records[i].v, records[i].t),
                        envelope_trend(ts, sups), dict(extra))


def grid_stability(coarse: RatioSummary, fine: RatioSummary) -> float:
    """Relative increase of sup_ratio when the frequency grid is refined."""
    if coarse.sup_ratio == 0:
        return 0.0 if fine.sup_ratio == 0 else math.inf
    return fine.sup_ratio / coarse.sup_ratio - 1.0


def subset(summary: RatioSummary, ts) -> RatioSummary:
    """Summary restricted to the records at frequencies ``ts``."""
    keep = set(float(t) for t in ts)
    return summarize([r for r in summary.records if r.t in keep], **summary.extra)


def write_records_csv(records, path, n=None):
    n = n if n is not None else (len(records[0].v) - 1 if records else 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theorem", *[f"v{i + 1}" for i in range(n + 1)], "t", "lhs", "rhs",
                    "ratio", "est_error"])
        for r in records:
            w.writerow(r.row())


def _record(theorem, v, t, lhs, rhs, est):
    # rhs = 0 is only legitimate when lhs sits at the error level
    if rhs <= 0 and lhs > EST_ZERO_FACTOR * max(est, 1e-15):
        raise ArithmeticError(f"{theorem}: zero rhs with lhs={lhs:g} at t={t:g}")
    return VerificationRecord.make(theorem, v, t, lhs, rhs, est)


# ---------------------------------------------------------------------------
# theorem checks
# ---------------------------------------------------------------------------

def _grid(patch_n, directions, ts):
    dirs = direction_grid(patch_n) if directions is None else np.asarray(directions, float)
    if ts is None:
        t_max = 1e5 if patch_n == 1 else 1e4
        ts = frequency_grid(10.0, t_max, 24)
    return dirs, np.asarray(ts, float)


def check_thm11(patch: ConvexPatch, directions=None, ts=None, *,
                panel_phase=SWEEP_PANEL_PHASE, theorem="thm11") -> RatioSummary:
    """|mu_hat(t v)| against the anchored slab of width 1/t."""
    if patch.carving:
        raise ValueError("the anchored-slab check takes an uncarved patch")
    dirs, ts = _grid(patch.n, directions, ts)
    records = []
    for v in dirs:
        sup = geo.support_min(patch, v)
        rhs = geo.anchored_measures(patch, v, 1.0 / ts, support=sup)
        for t, m in zip(ts, rhs):
            r = mu_hat(patch, t * v, panel_phase=panel_phase, support=sup)
            records.append(_record(theorem, v, t, abs(r.value), m, r.est_error))
    return summarize(records)


def dyadic_profile(patch, v, ts, support=None):
    """(head, tail) of the dyadic right-hand side for every t, one slab pass."""
    sup = support or geo.support_min(patch, v)
    span = geo.support_max(patch, v) - sup.s
    jmax = [geo.default_jmax(patch, v, t, sup) if span > 0 else 1 for t in ts]
    widths = np.concatenate([geo.dyadic_widths(t, j) for t, j in zip(ts, jmax)])
    uniq, inv = np.unique(widths, return_inverse=True)
    cum = geo.anchored_measures(patch, v, uniq, support=sup)[inv]
    out = []
    k = 0
    for j in jmax:
        out.append(geo.dyadic_from_cumulative(cum[k:k + j + 1]))
        k += j + 1
    return out


def check_thm12(patch: ConvexPatch, directions=None, ts=None, *,
                panel_phase=SWEEP_PANEL_PHASE) -> RatioSummary:
    """|I(t v)| for the carved integral against head + dyadic tail.

    Slabs are measured on the uncarved surface.
    """
    dirs, ts = _grid(patch.n, directions, ts)
    plain = patch.with_carving(())
    records = []
    for v in dirs:
        sup = geo.support_min(plain, v)
        prof = dyadic_profile(plain, v, ts, sup)
        for t, (head, tail) in zip(ts, prof):
            r = carved_transform(patch, t * v, panel_phase=panel_phase, support=sup)
            records.append(_record("thm12", v, t, abs(r.value), head + tail, r.est_error))
    return summarize(records)


def _transform_fn(obj, panel_phase, weight=None):
    if isinstance(obj, ClosedBody):
        pieces = body_pieces(obj, weight)
        return obj.n, lambda lam: closed_transform(obj, weight, lam, pieces=pieces,
                                                   panel_phase=panel_phase)
    if isinstance(obj, ConvexPatch):
        return obj.n, lambda lam: carved_transform(obj, lam, panel_phase=panel_phase)
    raise TypeError("expected a ClosedBody or ConvexPatch")


def check_uniform_decay(obj, alpha: float, directions=None, ts=None, *,
                        panel_phase=SWEEP_PANEL_PHASE, theorem=None) -> RatioSummary:
    """|transform(t v)| * t^alpha over the grid; sup_ratio estimates C'."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    n, fn = _transform_fn(obj, panel_phase)
    if theorem is None:
        theorem = "thm14p1" if isinstance(obj, ClosedBody) else "thm13"
    dirs, ts = _grid(n, directions, ts)
    records = []
    for v in dirs:
        for t in ts:
            r = fn(t * v)
            records.append(_record(theorem, v, t, abs(r.value), t ** (-alpha), r.est_error))
    return summarize(records, alpha=alpha)


def rescale_uniform(summary: RatioSummary, alpha: float) -> RatioSummary:
    """Same transform values against t^-alpha for a different alpha."""
    recs = [VerificationRecord.make(r.theorem, r.v, r.t, r.lhs, r.t ** (-alpha), r.est_error)
            for r in summary.records]
    extra = dict(summary.extra, alpha=alpha)
    return summarize(recs, **extra)


class SegmentMeasure:
    """Lebesgue measure on [0, 1] pushed forward by y -> y (the lemma's toy case)."""

    n = 0

    def support(self, v):
        return 0.0, 1.0

    def slabs(self, v, lows, highs):
        lows, highs = np.asarray(lows, float), np.asarray(highs, float)
        return np.maximum(np.minimum(highs, 1.0) - np.maximum(lows, 0.0), 0.0)

    def transform(self, lam):
        t = float(np.atleast_1d(lam)[0])
        if t == 0:
            return 1.0 + 0j
        return complex((np.exp(-1j * t) - 1.0) / (-1j * t))


class BodyMeasure:
    """Boundary measure of a closed body exposing the lemma's interface."""

    def __init__(self, body: ClosedBody, panel_phase=HALF_PI):
        self.body = body
        self.n = body.n
        self._slabs = {}
        self._pieces = body_pieces(body)
        self.panel_phase = panel_phase

    def support(self, v):
        return self.body.support(np.asarray(v, float))

    def slabs(self, v, lows, highs):
        key = tuple(np.asarray(v, float))
        if key not in self._slabs:
            self._slabs[key] = geo.BodySlabs(self.body, np.asarray(v, float))
        return self._slabs[key].measures(lows, highs)

    def transform(self, lam):
        return closed_transform(self.body, None, lam, pieces=self._pieces,
                                panel_phase=self.panel_phase).value


def check_lemma15(measure, v, A: float | None, delta: float, eps_grid: Sequence[float], *,
                  ts=None, interior=8) -> RatioSummary:
    """Sublevel (slab) measures of width 2 eps against A eps^delta.

    ``measure`` is a ClosedBody or any object with ``support``, ``slabs`` and
    ``transform``.  The decay premise |transform(t v)| <= A t^-delta is
    checked on ``ts`` first; A defaults to the measured envelope constant.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if isinstance(measure, ClosedBody):
        measure = BodyMeasure(measure)
    v = np.asarray(v, float)
    if ts is None:
        ts = frequency_grid(10.0, 1e4, 8)
    decay = np.array([abs(measure.transform(t * v)) * t ** delta for t in ts])
    premise_c = float(decay.max())
    if A is None:
        A = premise_c
    premise_ok = bool(premise_c <= A * (1 + 1e-9))
    smin, smax = measure.support(v)
    heights = np.concatenate([[smin, smax], np.linspace(smin, smax, interior + 2)[1:-1]])
    records = []
    per_eps = []
    for eps in eps_grid:
        lhs = measure.slabs(v, heights - eps, heights + eps)
        rhs = A * eps ** delta
        recs = [VerificationRecord.make("lemma15", v, 1.0 / eps, m, rhs) for m in lhs]
        records.extend(recs)
        per_eps.append(max(r.ratio for r in recs))
    eps_arr = np.asarray(eps_grid, float)
    per_eps = np.asarray(per_eps)
    low = eps_arr <= eps_arr.min() * 100 * (1 + 1e-9)
    spread_low = _spread(per_eps[low])
    summary = summarize(records, A=A, delta=delta, premise_ok=premise_ok,
                        premise_constant=premise_c, spread_low=spread_low,
                        spread_all=_spread(per_eps), per_eps=per_eps)
    return summary


def _spread(vals):
    vals = np.asarray(vals, float)
    mid = 0.5 * (vals.max() + vals.min())
    return float((vals.max() - vals.min()) / (2 * mid)) if mid > 0 else 0.0


def check_eq31(body: ClosedBody, directions=None, ts=None, *,
               panel_phase=SWEEP_PANEL_PHASE) -> RatioSummary:
    """Planar curves: |nu_hat(t v)| against ln(2+t) times both tangent slabs."""
    if body.dim != 2:
        raise ValueError("the two-tangent-slab check is for closed curves in the plane")
    dirs, ts = _grid(1, directions, ts)
    pieces = body_pieces(body)
    records, free = [], []
    for v in dirs:
        slabs = geo.BodySlabs(body, v)
        smin, smax = body.support(v)
        lower = slabs.measures(np.full(ts.shape, smin), smin + 1.0 / ts)
        upper = slabs.measures(smax - 1.0 / ts, np.full(ts.shape, smax))
        for t, lo_m, up_m in zip(ts, lower, upper):
            r = closed_transform(body, None, t * v, pieces=pieces, panel_phase=panel_phase)
            lhs = abs(r.value)
            records.append(_record("eq31", v, t, lhs, math.log(2 + t) * (lo_m + up_m),
                                   r.est_error))
            free.append(_record("eq31_nolog", v, t, lhs, lo_m + up_m, r.est_error))
    nolog = summarize(free)
    return summarize(records, log_free_sup=nolog.sup_ratio, log_free_trend=nolog.trend)


def union_body(bodies) -> ClosedBody:
    """Accept a union body or a list of disk bodies (equal radii)."""
    if isinstance(bodies, ClosedBody):
        return bodies
    bodies = list(bodies)
    radii = {b.params.get("radius") for b in bodies}
    if len(radii) != 1 or any(b.name != "disk" for b in bodies):
        raise ValueError("union example takes disks of one radius")
    centers = [tuple(b.params.get("center", (0.0, 0.0))) for b in bodies]
    return disk_union(centers, radii.pop())


def check_union_example(bodies, alpha: float = 0.5, directions=None, ts=None, *,
                        panel_phase=SWEEP_PANEL_PHASE) -> RatioSummary:
    """Boundary of a union of disks: sum of carved arc transforms times t^alpha."""
    body = union_body(bodies)
    return check_uniform_decay(body, alpha, directions, ts, panel_phase=panel_phase,
                               theorem="union")
