"""Shared quadrature engine.

Panel-limited Gauss-Legendre for oscillatory integrands, a vectorised
Gauss-Kronrod (7/15) adaptive driver for smooth outer integrals, and the
ray-segment kernel used by the polar-frame transforms.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

HALF_PI = 0.5 * np.pi

# evaluation caps per call
MAX_EVALS_1D = 10**8
MAX_EVALS_2D = 2 * 10**8


@dataclass(frozen=True)
class OscillatoryResult:
    value: complex
    est_error: float
    evals: int
    exhausted: bool = False

    def __abs__(self):
        return abs(self.value)

    def as_row(self):
        return (self.value.real, self.value.imag, self.est_error, self.evals)


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


# QUADPACK qk15 abscissae/weights; odd-indexed abscissae are the Gauss-7 nodes.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_g = np.zeros(15)
_g[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])
GAUSS7_IN_KRONROD = _g


def panel_nodes(edges_a, edges_b, order=16):
    """Nodes and weights for panels [a_i, b_i]; arrays of shape (P, order)."""
    x, w = gauss_legendre(order)
    a = np.asarray(edges_a, dtype=float)[:, None]
    b = np.asarray(edges_b, dtype=float)[:, None]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gauss_kronrod_adaptive(fun, a, b, abs_tol, rel_tol=0.0, *, max_intervals=4000,
                           initial=1):
    """Adaptive G7/K15 on [a, b] for a vectorised real or complex ``fun``.

    ``fun`` receives a 1D array of abscissae and returns values of shape
    ``(len(x),)`` or ``(len(x), m)``; every open subinterval of a sweep is
    evaluated in one call.  For vector output the error test uses component
    0 (the others ride along).  Returns (integral, error_estimate, n_evals).
    """
    span = b - a
    edges = np.linspace(a, b, initial + 1)
    act_a, act_b = edges[:-1], edges[1:]
    done_a, done_v, done_e = [], [], []
    evals = 0
    n_done = 0
    while act_a.size:
        mid = 0.5 * (act_a + act_b)
        half = 0.5 * (act_b - act_a)
        xs = mid[:, None] + half[:, None] * KRONROD_NODES
        vals = np.asarray(fun(xs.ravel()))
        vals = vals.reshape(xs.shape + vals.shape[1:])
        evals += xs.size
        wk = KRONROD_WEIGHTS.reshape((1, 15) + (1,) * (vals.ndim - 2))
        wg = GAUSS7_IN_KRONROD.reshape(wk.shape)
        hs = half.reshape((-1,) + (1,) * (vals.ndim - 2))
        k15 = (vals * wk).sum(axis=1) * hs
        g7 = (vals * wg).sum(axis=1) * hs
        lead = k15 if k15.ndim == 1 else k15[:, 0]
        err = np.abs(lead - (g7 if g7.ndim == 1 else g7[:, 0]))
        total = sum(np.sum(v if v.ndim == 1 else v[:, 0]) for v in done_v) + np.sum(lead)
        target = max(abs_tol, rel_tol * abs(total))
        bad = (err > target * (2 * half) / span) & (half > span * 1e-13)
        if n_done + act_a.size > max_intervals:
            bad[:] = False
        ok = ~bad
        done_a.append(act_a[ok])
        done_v.append(k15[ok])
        done_e.append(err[ok])
        n_done += int(ok.sum())
        act_a = np.concatenate([act_a[bad], mid[bad]])
        act_b = np.concatenate([mid[bad], act_b[bad]])
    # fixed-order reduction keeps the sum independent of refinement history
    order = np.argsort(np.concatenate(done_a), kind="stable")
    total = np.concatenate(done_v)[order].sum(axis=0)
    total_err = float(np.concatenate(done_e)[order].sum())
    return total, total_err, evals


def _uniform_panels(a, b, width):
    count = max(1, int(np.ceil((b - a) / width)))
    e = np.linspace(a, b, count + 1)
    return e[:-1], e[1:]


def oscillatory_integrate(integrand: Callable, domain, freq_scale: float,
                          tol: float = 1e-10, *, order: int = 16,
                          panel_phase: float = HALF_PI,
                          max_evals: int | None = None) -> OscillatoryResult:
    """Panel-adaptive Gauss-Legendre for an oscillatory integrand.

    ``domain`` is a sequence of ``(a, b)`` intervals or a :class:`Disk`.
    Panels are sized so that ``freq_scale * width <= panel_phase``; the value
    comes from those panels and ``est_error`` from comparing against panels
    of twice the width (one Richardson halving step).  If the estimate exceeds
    ``tol`` the panels are halved again until the evaluation cap is hit.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if freq_scale < 0:
        raise ValueError("freq_scale must be nonnegative")
    is_disk = isinstance(domain, Disk)
    if max_evals is None:
        max_evals = MAX_EVALS_2D if is_disk else MAX_EVALS_1D
    phase = panel_phase
    evals = 0
    while True:
        width = phase / freq_scale if freq_scale > 0 else np.inf
        if is_disk:
            fine, coarse, n = _disk_pass(integrand, domain, width, order)
        else:
            fine, coarse, n = _interval_pass(integrand, domain, width, order)
        evals += n
        err = abs(fine - coarse)
        if err <= tol:
            return OscillatoryResult(complex(fine), float(err), evals)
        if evals * 3 > max_evals:
            return OscillatoryResult(complex(fine), float(err), evals, exhausted=True)
        phase *= 0.5


def _interval_pass(integrand, intervals, width, order):
    fine = 0.0
    coarse = 0.0
    n = 0
    for a, b in intervals:
        if b <= a:
            continue
        span = b - a
        w2 = min(2 * width, span)
        ca, cb = _uniform_panels(a, b, w2)
        mid = 0.5 * (ca + cb)
        fa = np.concatenate([ca, mid])
        fb = np.concatenate([mid, cb])
        order_idx = np.argsort(fa, kind="stable")
        fa, fb = fa[order_idx], fb[order_idx]
        xc, wc = panel_nodes(ca, cb, order)
        xf, wf = panel_nodes(fa, fb, order)
        coarse = coarse + np.sum(wc * integrand(xc))
        fine = fine + np.sum(wf * integrand(xf))
        n += xc.size + xf.size
    return fine, coarse, n


def _disk_pass(integrand, disk, width, order):
    cx, cy = disk.center
    R = disk.radius
    results = []
    n = 0
    for w_r in (2 * width, width):
        ra, rb = _uniform_panels(0.0, R, min(w_r, R))
        ang_w = min(w_r / R, 2 * np.pi)
        ta, tb = _uniform_panels(0.0, 2 * np.pi, ang_w)
        r, wr = panel_nodes(ra, rb, order)
        th, wt = panel_nodes(ta, tb, order)
        r, wr = r.ravel(), wr.ravel()
        th, wt = th.ravel(), wt.ravel()
        X = cx + r[:, None] * np.cos(th)[None, :]
        Y = cy + r[:, None] * np.sin(th)[None, :]
        vals = integrand(np.stack([X, Y], axis=-1))
        results.append(np.sum((wr * r)[:, None] * wt[None, :] * vals))
        n += X.size
    return results[1], results[0], n


# ---------------------------------------------------------------------------
# ray segments
# ---------------------------------------------------------------------------

def segment_panels(seg_a, seg_b, slope_b, t, panel_phase, min_panels, phase_along):
    """Phase-adapted panel edges for monotone-phase segments.

    Segment k runs over r in [seg_a[k], seg_b[k]] with nondecreasing phase
    g; ``phase_along(seg_ids, r)`` evaluates g for the given segment ids and
    radii and ``slope_b`` bounds dg/dr on each segment.  Returns
    (panel_a, panel_b, panel_seg) for panels whose phase increment
    ``t * dg`` is about ``panel_phase``, with at least ``min_panels``
    uniform panels per segment.
    """
    nseg = seg_a.size
    if nseg == 0:
        empty = np.zeros(0)
        return empty, empty, np.zeros(0, dtype=np.int64)
    length = seg_b - seg_a
    tot_phase = t * np.abs(slope_b) * length
    nsamp = np.ceil(tot_phase / (0.5 * panel_phase)).astype(np.int64) + 2
    nsamp = np.maximum(nsamp, min_panels + 1)
    offs = np.concatenate([[0], np.cumsum(nsamp)])
    seg_id = np.repeat(np.arange(nseg), nsamp)
    local = np.arange(offs[-1]) - offs[seg_id]
    rs = seg_a[seg_id] + (local / (nsamp[seg_id] - 1)) * length[seg_id]
    gs = phase_along(seg_id, rs)
    gs = t * (gs - gs[offs[:-1]][seg_id]) / panel_phase
    gs = np.maximum(gs, 0.0)
    gmax = np.maximum.reduceat(gs, offs[:-1])
    shift = np.concatenate([[0.0], np.cumsum(gmax + 2.0)])[:-1]
    key = np.maximum.accumulate(gs + shift[seg_id])
    nlev = np.floor(gmax).astype(np.int64)
    lev_seg = np.repeat(np.arange(nseg), nlev)
    lev_offs = np.concatenate([[0], np.cumsum(nlev)])
    lev_val = (np.arange(lev_offs[-1]) - lev_offs[lev_seg] + 1).astype(float)
    lev_r = np.interp(lev_val + shift[lev_seg], key, rs)
    m = min_panels + 1
    uni_seg = np.repeat(np.arange(nseg), m)
    uni_loc = np.tile(np.arange(m), nseg)
    uni_r = seg_a[uni_seg] + length[uni_seg] * (uni_loc / min_panels)
    all_seg = np.concatenate([lev_seg, uni_seg])
    all_r = np.clip(np.concatenate([lev_r, uni_r]), seg_a[all_seg], seg_b[all_seg])
    order = np.lexsort((all_r, all_seg))
    all_seg, all_r = all_seg[order], all_r[order]
    same = all_seg[1:] == all_seg[:-1]
    pa, pb, ps = all_r[:-1][same], all_r[1:][same], all_seg[:-1][same]
    keep = pb - pa > 1e-14 * np.maximum(1.0, np.abs(pb))
    return pa[keep], pb[keep], ps[keep]


def coarse_from_fine(pa, pb, ps):
    """Merge consecutive fine panels pairwise within each segment."""
    n = pa.size
    if n == 0:
        return pa, pb, ps
    start = np.ones(n, dtype=bool)
    start[1:] = ps[1:] != ps[:-1]
    grp_start_idx = np.flatnonzero(start)
    pos = np.arange(n) - np.repeat(grp_start_idx, np.diff(np.append(grp_start_idx, n)))
    head = pos % 2 == 0
    idx = np.flatnonzero(head)
    # partner is the next panel in the same segment, if any
    nxt = idx + 1
    has = (nxt < n)
    has[has] &= ps[nxt[has]] == ps[idx[has]]
    ca = pa[idx]
    cb = np.where(has, pb[np.minimum(nxt, n - 1)], pb[idx])
    return ca, cb, ps[idx]
