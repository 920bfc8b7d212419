"""Lattice points in dilated convex bodies and the discrepancy exponent.

Counts are exact: rows of integer leading coordinates are enumerated and
the last coordinate's integer range on each row comes from the body's
rational section bounds, so no floating point enters the count.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import geometry as geo
from .surface import ClosedBody

__all__ = [
    "LatticeProfile",
    "brute_force_count",
    "compare_to_theorem",
    "count_points",
    "default_ks",
    "discrepancy_profile",
    "envelope_points",
    "predicted_exponent",
    "slab_alpha",
]

ENVELOPE_WINDOW = 0.5  # decades
PASS_SLACK = 0.03


def _check_k(k):
    if isinstance(k, (bool, np.bool_)):
        raise TypeError("dilation must be a number")
    if not k > 0:
        raise ValueError("dilation k must be positive")
    return k if isinstance(k, Fraction) else (int(k) if float(k).is_integer() else Fraction(str(k)))


def _lead_rows(n, bound):
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    if n == 1:
        return axis[:, None]
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _row_union_count(sections):
    """Integer points in the union of at most two intervals per row."""
    if len(sections) == 1:
        lo, hi = sections[0]
        return np.maximum(np.asarray(hi) - np.asarray(lo) + 1, 0)
    if len(sections) != 2:
        raise ValueError("at most two sections per row are supported")
    (lo1, hi1), (lo2, hi2) = ((np.asarray(a), np.asarray(b)) for a, b in sections)
    c1 = np.maximum(hi1 - lo1 + 1, 0)
    c2 = np.maximum(hi2 - lo2 + 1, 0)
    both = (c1 > 0) & (c2 > 0)
    overlap = np.maximum(np.minimum(hi1, hi2) - np.maximum(lo1, lo2) + 1, 0)
    return c1 + c2 - np.where(both, overlap, 0)


def count_points(body: ClosedBody, k) -> int:
    """Number of integer points on or inside k * body."""
    if body.lattice is None:
        raise ValueError(f"body {body.name!r} has no exact section bounds")
    k = _check_k(k)
    lat = body.lattice
    rows = _lead_rows(body.n, lat.lead_bound(k))
    # chunk the 3D case to bound memory
    total = 0
    step = 1 << 18
    for i in range(0, rows.shape[0], step):
        counts = _row_union_count(lat.sections(k, rows[i:i + step]))
        total += int(np.sum(counts.astype(object) if counts.dtype == object else counts))
    return total


def brute_force_count(body: ClosedBody, k) -> int:
    """Enumeration oracle over the bounding box of k * body (small k only)."""
    if body.lattice is None:
        raise ValueError(f"body {body.name!r} has no exact membership test")
    k = _check_k(k)
    kf = float(k)
    ranges = []
    for e in np.eye(body.dim):
        lo, hi = body.support(e)
        ranges.append(range(math.floor(kf * lo) - 1, math.ceil(kf * hi) + 2))
    pts = np.array(list(product(*ranges)), dtype=np.int64)
    return int(np.sum(body.lattice.member(k, pts)))


def default_ks(dim: int, count: int = 200) -> np.ndarray:
    """Log-spaced distinct integer dilations: [10, 5000] in the plane, [5, 300] in space."""
    lo, hi = (10, 5000) if dim == 2 else (5, 300)
    return np.unique(np.round(np.logspace(math.log10(lo), math.log10(hi), count)).astype(int))


def envelope_points(ks, values, window=ENVELOPE_WINDOW):
    """Local maxima of ``values`` over sliding log-windows of ``window`` decades.

    Each window [k, k * 10^window] contributes its argmax; repeated argmaxes
    are kept once, so the points trace the upper envelope.
    """
    ks = np.asarray(ks, float)
    values = np.abs(np.asarray(values, float))
    lk = np.log10(ks)
    picks = set()
    for x in lk:
        if x + window > lk[-1] + 1e-12:
            break
        sel = np.flatnonzero((lk >= x - 1e-12) & (lk <= x + window + 1e-12))
        picks.add(int(sel[np.argmax(values[sel])]))
    idx = np.array(sorted(picks), dtype=int)
    idx = idx[values[idx] > 0]
    return ks[idx], values[idx]


@dataclass
class LatticeProfile:
    body: ClosedBody
    rows: list
    fitted_exponent: float
    envelope: tuple = field(default_factory=tuple)

    @property
    def k(self):
        return np.array([r[0] for r in self.rows])

    @property
    def disc(self):
        return np.array([r[3] for r in self.rows])

    def sign_changes(self) -> int:
        s = np.sign(self.disc)
        s = s[s != 0]
        return int(np.sum(s[1:] != s[:-1]))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "N", "main", "disc"])
            for k, N, main, disc in self.rows:
                w.writerow([k, N, repr(main), repr(disc)])


def discrepancy_profile(body: ClosedBody, ks) -> LatticeProfile:
    """Counts, main terms and discrepancies over ``ks`` with the envelope exponent."""
    ks = [_check_k(k) for k in ks]
    if len(ks) < 2 or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("ks must be increasing with at least two values")
    if not body.volume or not math.isfinite(body.volume):
        raise ValueError(f"body {body.name!r} has no known volume")
    rows = []
    prev = -1
    for k in ks:
        N = count_points(body, k)
        if N < prev:
            raise ArithmeticError("lattice count decreased with k")
        prev = N
        main = float(k) ** body.dim * body.volume
        rows.append((k, N, main, N - main))
    ek, ev = envelope_points([float(r[0]) for r in rows], [r[3] for r in rows])
    if ek.size < 2:
        raise ValueError("ks span too short for an envelope fit")
    slope = float(np.polyfit(np.log10(ek), np.log10(ev), 1)[0])
    return LatticeProfile(body, rows, slope, (tuple(ek), tuple(ev)))


def predicted_exponent(n: int, alpha: float) -> float:
    """Discrepancy exponent n - alpha / (n + 1 - alpha) from decay rate alpha."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return n - alpha / (n + 1 - alpha)


def compare_to_theorem(profile: LatticeProfile, alpha: float, slack: float = PASS_SLACK) -> dict:
    predicted = predicted_exponent(profile.body.n, alpha)
    empirical = profile.fitted_exponent
    return {
        "body": profile.body.name,
        "alpha": float(alpha),
        "predicted": predicted,
        "empirical": empirical,
        "slack": slack,
        "pass": bool(empirical <= predicted + slack),
    }


def slab_alpha(body: ClosedBody, directions, ts) -> geo.DecayProfile:
    """Uniform slab exponent: power-law fit of sup_v a(v, t) over the t-grid."""
    ts = np.asarray(ts, float)
    sup = np.zeros(ts.size)
    for v in np.asarray(directions, float):
        sup = np.maximum(sup, geo.max_slab_profile(body, v, ts))
    return geo.fit_power_law(zip(ts, sup))
