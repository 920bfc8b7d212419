"""Oscillatory integrals: the graph transform, its carved variant and
transforms of closed surfaces assembled from patches.

Both dimensions run through one polar kernel.  Rays leave the support
minimiser x0, along which the phase P(x).w is nondecreasing, so radial
panels can be placed at equal phase increments.  At n = 1 there are two
rays; at n = 2 the ray angle is integrated with adaptive Gauss-Kronrod.
"""
from __future__ import annotations

import math

import numpy as np

from .geometry import SupportResult, _support_min, _component_index, _component_patches
from .quadrature import (
    HALF_PI,
    MAX_EVALS_1D,
    MAX_EVALS_2D,
    Disk,
    OscillatoryResult,
    coarse_from_fine,
    gauss_kronrod_adaptive,
    oscillatory_integrate,
    panel_nodes,
    segment_panels,
)
from .surface import ClosedBody, ConvexPatch, partition_cutoff

__all__ = [
    "Disk",
    "OscillatoryResult",
    "carved_transform",
    "closed_transform",
    "cutoff_mass",
    "mu_hat",
    "oscillatory_integrate",
    "polar_plan",
    "body_pieces",
]

ABS_TOL = 1e-8
REL_TOL = 1e-4
MIN_PANELS = 4
RAY_CHUNK_NODES = 1_500_000
CARVE_SAMPLES = 64
ANGULAR_INTERVALS = 4


def mu_hat(patch: ConvexPatch, lam, *, panel_phase: float = HALF_PI, support=None,
           abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL) -> OscillatoryResult:
    """Transform of phi dx lifted to the graph: int exp(-i lam.P(x)) phi(x) dx."""
    if patch.carving:
        raise ValueError("patch has carving functions; use carved_transform")
    return _transform(patch, lam, False, panel_phase, support, abs_tol, rel_tol)


def carved_transform(patch: ConvexPatch, lam, *, panel_phase: float = HALF_PI,
                     support=None, abs_tol: float = ABS_TOL,
                     rel_tol: float = REL_TOL) -> OscillatoryResult:
    """As :func:`mu_hat` over the set where every carving function is negative."""
    return _transform(patch, lam, bool(patch.carving), panel_phase, support, abs_tol, rel_tol)


def cutoff_mass(patch: ConvexPatch) -> float:
    """int |phi| over the (carved) domain; the transform at lambda = 0."""
    lam = np.zeros(patch.n + 1)
    return abs(_transform(patch, lam, bool(patch.carving), HALF_PI, None, 1e-13, 1e-12).value)


def body_pieces(body: ClosedBody, weight=None):
    """(motion, patch) pairs whose cutoffs carry the partition, area and weight."""
    out = []
    for i, (motion, patch) in enumerate(body.patches):
        eff = partition_cutoff(_component_patches(body, i), _component_index(body, i),
                               weight=weight, area=True)
        out.append((motion, patch.with_cutoff(eff)))
    return out


def closed_transform(body: ClosedBody, weight, lam, *, panel_phase: float = HALF_PI,
                     pieces=None, abs_tol: float = ABS_TOL,
                     rel_tol: float = REL_TOL) -> OscillatoryResult:
    """Transform of weight * surface measure on the boundary of ``body``.

    ``weight`` is a function of global boundary points or None for 1.
    """
    if not body.patches:
        raise ValueError(f"body {body.name!r} has no boundary patches")
    lam = np.asarray(lam, dtype=float)
    pieces = pieces or body_pieces(body, weight)
    k = len(pieces)
    value = 0j
    est = 0.0
    evals = 0
    exhausted = False
    for motion, patch in pieces:
        loc = motion.local_direction(lam)
        res = _transform(patch, loc, bool(patch.carving), panel_phase, None,
                         abs_tol / k, rel_tol)
        shift = complex(np.exp(-1j * float(lam @ motion.translation)))
        value += shift * res.value
        est += res.est_error
        evals += res.evals
        exhausted |= res.exhausted
    return OscillatoryResult(value, est, evals, exhausted)


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------

def _transform(patch, lam, carve, panel_phase, support, abs_tol, rel_tol):
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (patch.n + 1,):
        raise ValueError(f"lambda must have {patch.n + 1} components")
    t = float(np.linalg.norm(lam))
    if t == 0.0:
        w = np.zeros(patch.n + 1)
        w[-1] = 1.0
    else:
        w = lam / t
    if w[-1] < 0:
        # real cutoff: the transform at -lambda is the conjugate
        r = _transform(patch, -lam, carve, panel_phase, None, abs_tol, rel_tol)
        return OscillatoryResult(r.value.conjugate(), r.est_error, r.evals, r.exhausted)
    sup = support if support is not None else _support_min(patch, w)
    cap = MAX_EVALS_1D if patch.n == 1 else MAX_EVALS_2D
    if carve and _empty_carving(patch):
        return OscillatoryResult(0j, 0.0, 0)
    pieces = polar_plan(patch, w, sup) if carve else [(1.0, sup, None, False)]
    if not pieces:
        return OscillatoryResult(0j, 0.0, 0)
    tol = abs_tol / len(pieces)
    pp = panel_phase
    evals = 0
    while True:
        val, est = 0j, 0.0
        for sign, centre, angles, cut in pieces:
            v, e, n = _pass(patch, w, t, centre, cut, pp, tol, rel_tol, angles)
            val += sign * np.exp(-1j * t * centre.s) * v
            est += e
            evals += n
        done = est <= max(abs_tol, rel_tol * abs(val))
        if done or t == 0.0 or evals * 3 > cap:
            return OscillatoryResult(complex(val), float(est), evals,
                                     exhausted=not done and t > 0)
        pp *= 0.5


def polar_plan(patch, w, sup):
    """Signed polar pieces whose sum is the carved integral.

    Each piece is (sign, centre, angular range or None, carve flag).  Rays
    from a centre minimising the phase over the piece are monotone.  With a
    single active affine cut a.x + b < 0, the pieces are the full disk minus
    the cut-off half (or the kept half alone when x0 lies outside it), both
    fanned from the phase minimiser on the cut line; their rays end on the
    rim where the cutoff vanishes, so the angular integrands stay smooth.
    Other carvings fall back to per-ray segments from x0.
    """
    if patch.n != 2:
        return [(1.0, sup, None, True)]
    active = [g for g in patch.carving if not _never_active(patch, g)]
    if not active:
        return [(1.0, sup, None, False)]
    cut = _affine(patch, active[0]) if len(active) == 1 else None
    if cut is None:
        return [(1.0, sup, None, True)]
    a, b = cut
    x0 = sup.x0
    inside = float(a @ x0 + b) <= 0.0
    # centre on the line for the half that does not contain x0
    side = 1.0 if inside else -1.0
    centre = _line_min(patch, w, a, b)
    if centre is None:
        return [(1.0, sup, None, False)] if inside else []
    normal = side * a / np.linalg.norm(a)
    mid = math.atan2(normal[1], normal[0])
    s_c = float(patch.phase(centre[None, :], w)[0])
    half = (SupportResult(s_c, centre, True), (mid - HALF_PI, mid + HALF_PI, 2), False)
    if inside:
        return [(1.0, sup, None, False), (-1.0, *half)]
    return [(1.0, *half)]


def _disk_grid(patch, m=257):
    r0 = patch.r0
    g = np.linspace(-r0, r0, m)
    X, Y = np.meshgrid(g, g, indexing="ij")
    xs = np.stack([X.ravel(), Y.ravel()], axis=-1)
    return xs[np.sum(xs**2, axis=-1) < r0 * r0]


def _never_active(patch, g):
    return bool(np.all(np.asarray(g(_disk_grid(patch)), float) < 0))


def _affine(patch, g):
    """(a, b) when g(x) = a.x + b on the patch disk, else None."""
    h = 0.5 * patch.r0
    pts = np.array([[0.0, 0.0], [h, 0.0], [0.0, h]])
    v = np.asarray(g(pts), float)
    b = v[0]
    a = np.array([v[1] - b, v[2] - b]) / h
    if not np.any(a):
        return None
    xs = _disk_grid(patch, 33)
    vals = np.asarray(g(xs), float)
    scale = 1.0 + np.max(np.abs(vals))
    if np.max(np.abs(vals - (xs @ a + b))) > 1e-12 * scale:
        return None
    return a, float(b)


def _line_min(patch, w, a, b):
    """Minimiser of the phase over the chord {a.x + b = 0} of the disk."""
    na = np.linalg.norm(a)
    p0 = -b * a / (na * na)
    d = np.array([-a[1], a[0]]) / na
    rem = patch.r0**2 - p0 @ p0
    if rem <= 0:
        return None
    sm = math.sqrt(rem) * (1 - 1e-14)
    lo, hi = -sm, sm

    def slope(sig):
        x = p0 + sig * d
        return float(patch.phase_grad(x[None, :], w)[0] @ d)
    if slope(lo) >= 0:
        return p0 + lo * d
    if slope(hi) <= 0:
        return p0 + hi * d
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * sm:
            break
    return p0 + 0.5 * (lo + hi) * d


def _empty_carving(patch):
    r0 = patch.r0
    if patch.n == 1:
        xs = np.linspace(-r0, r0, 4097)[:, None]
    else:
        xs = _disk_grid(patch)
    return bool(np.all(patch.carving_max(xs) >= 0))


def _pass(patch, w, t, sup: SupportResult, carve, pp, abs_tol, rel_tol, angles=None):
    x0 = sup.x0
    r0 = patch.r0
    if patch.n == 1:
        om = np.array([[1.0], [-1.0]])
        fine, coarse, n = _rays(patch, w, t, sup, om, carve, pp)
        val = fine.sum()
        return val, abs(val - coarse.sum()), n

    periodic = np.linalg.norm(x0) < r0 * (1 - 1e-12)
    if angles is not None:
        a, b, initial = angles
    elif periodic:
        a, b, initial = 0.0, 2 * np.pi, ANGULAR_INTERVALS
    else:
        inward = math.atan2(-x0[1], -x0[0])
        a, b, initial = inward - HALF_PI, inward + HALF_PI, max(ANGULAR_INTERVALS // 2, 1)
    count = [0]

    def fun(theta):
        om = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        fine, coarse, n = _rays(patch, w, t, sup, om, carve, pp)
        count[0] += n
        return np.stack([fine, coarse], axis=-1)

    tot, gk_err, _ = gauss_kronrod_adaptive(fun, a, b, 0.25 * abs_tol, 0.25 * rel_tol,
                                            initial=initial)
    val = tot[0]
    return val, abs(tot[0] - tot[1]) + gk_err, count[0]


def _ray_lengths(x0, om, r0):
    xo = om @ x0
    disc = xo * xo - x0 @ x0 + r0 * r0
    L = -xo + np.sqrt(np.maximum(disc, 0.0))
    return np.maximum(L, 0.0) * (1 - 1e-14)


def _segments(patch, x0, om, L, carve):
    """(ray index, r_start, r_end) of the pieces of each ray inside the domain."""
    K = om.shape[0]
    if not carve:
        keep = L > 0
        idx = np.flatnonzero(keep)
        return idx, np.zeros(idx.size), L[idx]
    m = CARVE_SAMPLES
    rs = L[:, None] * np.linspace(0.0, 1.0, m + 1)
    X = x0 + rs[..., None] * om[:, None, :]
    neg = patch.carving_max(X) < 0
    neg &= (L > 0)[:, None]

    def refine(rows, j, rising):
        # bisection for the sign change between samples j and j+1
        lo, hi = rs[rows, j], rs[rows, j + 1]
        for _ in range(52):
            mid = 0.5 * (lo + hi)
            val = patch.carving_max(x0 + mid[:, None] * om[rows]) < 0
            # rising: outside at lo, inside at hi
            go_hi = val if rising else ~val
            hi = np.where(go_hi, mid, hi)
            lo = np.where(go_hi, lo, mid)
        return 0.5 * (lo + hi)

    enter = ~neg[:, :-1] & neg[:, 1:]
    leave = neg[:, :-1] & ~neg[:, 1:]
    er, ej = np.nonzero(enter)
    lr, lj = np.nonzero(leave)
    s_ray = np.concatenate([np.flatnonzero(neg[:, 0]), er])
    s_r = np.concatenate([np.zeros(int(neg[:, 0].sum())), refine(er, ej, True)])
    e_ray = np.concatenate([lr, np.flatnonzero(neg[:, -1])])
    e_r = np.concatenate([refine(lr, lj, False), L[neg[:, -1]]])
    so = np.lexsort((s_r, s_ray))
    eo = np.lexsort((e_r, e_ray))
    s_ray, s_r, e_r = s_ray[so], s_r[so], e_r[eo]
    keep = e_r > s_r
    return s_ray[keep], s_r[keep], e_r[keep]


def _rays(patch, w, t, sup, om, carve, pp):
    """Fine and coarse radial integrals for every ray direction in ``om``."""
    x0, s = sup.x0, sup.s
    K = om.shape[0]
    L = _ray_lengths(x0, om, patch.r0)
    seg_ray, sa, sb = _segments(patch, x0, om, L, carve)
    fine = np.zeros(K, dtype=complex)
    coarse = np.zeros(K, dtype=complex)
    if seg_ray.size == 0:
        return fine, coarse, 0
    polar = patch.n == 2

    def g_along(ids, r):
        X = x0 + r[:, None] * om[seg_ray[ids]]
        return patch.phase(X, w) - s

    xb = x0 + sb[:, None] * om[seg_ray]
    slope = np.maximum(np.sum(patch.phase_grad(xb, w) * om[seg_ray], axis=-1), 0.0)
    pa, pb, ps = segment_panels(sa, sb, slope, t, pp, MIN_PANELS, g_along)
    ca, cb, cs = coarse_from_fine(pa, pb, ps)
    n = 0
    for a_, b_, s_, out in ((pa, pb, ps, fine), (ca, cb, cs, coarse)):
        n += _panel_sums(patch, w, t, s, x0, om, seg_ray, a_, b_, s_, polar, out)
    return fine, coarse, n


def _panel_sums(patch, w, t, s, x0, om, seg_ray, pa, pb, ps, polar, out):
    order = 16
    step = max(1, RAY_CHUNK_NODES // order)
    ray = seg_ray[ps]
    K = out.size
    for i in range(0, pa.size, step):
        r, wr = panel_nodes(pa[i:i + step], pb[i:i + step], order)
        d = om[ray[i:i + step]]
        X = x0 + r[..., None] * d[:, None, :]
        g = patch.phase(X, w) - s
        dens = patch.phi(X) * wr
        if polar:
            dens = dens * r
        tg = t * g
        re = np.einsum("ij,ij->i", dens, np.cos(tg))
        im = -np.einsum("ij,ij->i", dens, np.sin(tg))
        rr = ray[i:i + step]
        out += np.bincount(rr, re, minlength=K) + 1j * np.bincount(rr, im, minlength=K)
    return pa.size * order
