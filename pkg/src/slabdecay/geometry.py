"""Non-oscillatory side: support minima, slab measures, dyadic sums, maximal
slabs and power-law fits."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_legendre
from .surface import ClosedBody, ConvexPatch, Direction, _area, partition_cutoff

GRID_CELLS = 64
SUPPORT_TOL = 1e-10


@dataclass(frozen=True)
class SupportResult:
    s: float
    x0: np.ndarray
    at_boundary: bool


@dataclass(frozen=True)
class DecayProfile:
    samples: tuple
    alpha: float
    c: float
    residual: float

    @property
    def t(self):
        return np.array([p[0] for p in self.samples])

    @property
    def values(self):
        return np.array([p[1] for p in self.samples])

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,value\n")
            for t, val in self.samples:
                fh.write(f"{t!r},{val!r}\n")


def as_direction(v, dim=None) -> np.ndarray:
    """Validate a direction (unit, last component >= 0) and return it as an array."""
    if isinstance(v, Direction):
        v = v.v
    else:
        v = Direction(np.asarray(v, dtype=float)).v
    if dim is not None and v.size != dim:
        raise ValueError(f"direction must live in R^{dim}")
    return v


# ---------------------------------------------------------------------------
# support minimum
# ---------------------------------------------------------------------------

def support_min(patch: ConvexPatch, v) -> SupportResult:
    """Minimum of P(x).v over the closed disk |x| <= r0 and an argmin."""
    v = np.asarray(v.v if isinstance(v, Direction) else v, dtype=float)
    if v[-1] < 0:
        raise ValueError("support_min needs v_{n+1} >= 0")
    return _support_min(patch, v)


def _support_min(patch, w):
    if patch.n == 1:
        x0 = _argmin_1d(patch, w)
        x0 = np.array([x0])
    else:
        x0 = _argmin_2d(patch, w)
    s = float(patch.phase(x0[None, :], w)[0])
    at_b = bool(np.linalg.norm(x0) >= patch.r0 - 1e-8)
    return SupportResult(s, x0, at_b)


def _argmin_1d(patch, w):
    r0 = patch.r0
    xs = np.linspace(-r0, r0, GRID_CELLS + 1)
    h = patch.phase(xs[:, None], w)
    i = int(np.argmin(h))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, GRID_CELLS)]

    def dh(x):
        return float(patch.phase_grad(np.array([[x]]), w)[0, 0])
    # the derivative of a convex phase is nondecreasing: bisect on its sign
    if dh(lo) >= 0:
        return lo
    if dh(hi) <= 0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if dh(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _argmin_2d(patch, w):
    r0 = patch.r0
    g = np.linspace(-r0, r0, GRID_CELLS + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    pts = pts[np.sum(pts**2, axis=-1) <= r0 * r0]
    h = patch.phase(pts, w)
    x = pts[int(np.argmin(h))].copy()

    cand = [_newton_2d(patch, w, x), _boundary_min_2d(patch, w)]
    vals = [float(patch.phase(c[None, :], w)[0]) for c in cand]
    return cand[int(np.argmin(vals))]


def _newton_2d(patch, w, x, iters=200):
    r0 = patch.r0

    def hval(p):
        return float(patch.phase(p[None, :], w)[0])

    def grad(p):
        return patch.phase_grad(p[None, :], w)[0]

    hx = hval(x)
    for _ in range(iters):
        gx = grad(x)
        eps = 1e-6 * max(r0, 1e-3)
        H = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = eps
            H[:, j] = (grad(x + e) - grad(x - e)) / (2 * eps)
        H = 0.5 * (H + H.T)
        mu = 1e-12 + 1e-10 * np.abs(H).max()
        try:
            d = -np.linalg.solve(H + mu * np.eye(2), gx)
        except np.linalg.LinAlgError:
            d = -gx
        if gx @ d >= 0:
            d = -gx
        step = 1.0
        improved = False
        for _ in range(60):
            xn = x + step * d
            nr = np.linalg.norm(xn)
            if nr > r0:
                xn = xn * (r0 / nr)
            hn = hval(xn)
            if hn <= hx - 1e-4 * step * abs(gx @ d) or (hn < hx and step < 1e-6):
                improved = True
                break
            step *= 0.5
        if not improved or np.linalg.norm(xn - x) < 1e-15 * max(1.0, r0):
            if improved:
                x, hx = xn, hn
            break
        x, hx = xn, hn
    return x


def _boundary_min_2d(patch, w, n=256):
    r0 = patch.r0
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)

    def h(theta):
        theta = np.atleast_1d(theta)
        p = r0 * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return patch.phase(p, w)
    vals = h(th)
    i = int(np.argmin(vals))
    a, b = th[i] - 2 * np.pi / n, th[i] + 2 * np.pi / n
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = h(c)[0], h(d)[0]
    for _ in range(80):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = h(c)[0]
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = h(d)[0]
    tm = 0.5 * (a + b)
    return r0 * np.array([math.cos(tm), math.sin(tm)])


def support_max(patch: ConvexPatch, v) -> float:
    """max of P(x).v over the closed disk (attained on the boundary)."""
    w = np.asarray(v.v if isinstance(v, Direction) else v, dtype=float)
    r0 = patch.r0
    if patch.n == 1:
        return float(np.max(patch.phase(np.array([[-r0], [r0]]), w)))
    neg = -w
    # max of a convex function on the disk = -min of -h over the circle
    p = _boundary_min_2d_generic(lambda pts: -patch.phase(pts, w), r0)
    return float(patch.phase(p[None, :], w)[0])


def _boundary_min_2d_generic(fun, r0, n=1024):
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    pts = r0 * np.stack([np.cos(th), np.sin(th)], axis=-1)
    vals = fun(pts)
    i = int(np.argmin(vals))
    a, b = th[i] - 2 * np.pi / n, th[i] + 2 * np.pi / n
    for _ in range(60):
        m1 = a + (b - a) / 3
        m2 = b - (b - a) / 3
        p1 = r0 * np.array([[math.cos(m1), math.sin(m1)]])
        p2 = r0 * np.array([[math.cos(m2), math.sin(m2)]])
        if fun(p1)[0] < fun(p2)[0]:
            b = m2
        else:
            a = m1
    tm = 0.5 * (a + b)
    return r0 * np.array([math.cos(tm), math.sin(tm)])


# ---------------------------------------------------------------------------
# slab measures
# ---------------------------------------------------------------------------

def _sup_below(fun, a, b, level, iters=64):
    """sup{x in [a, b]: fun(x) <= level} for fun nondecreasing (vectorised).

    Returns a where fun(a) > level.
    """
    a = np.broadcast_to(np.asarray(a, float), np.shape(level)).copy()
    b = np.broadcast_to(np.asarray(b, float), np.shape(level)).copy()
    fa = fun(a)
    fb = fun(b)
    lo, hi = a.copy(), b.copy()
    active = (fa <= level) & (fb > level)
    for _ in range(iters):
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        below = fm <= level
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
    out = np.where(fb <= level, b, np.where(fa > level, a, 0.5 * (lo + hi)))
    return out


def _gl_integrate_1d(fun, a, b, panels=4, order=16):
    """Composite Gauss-Legendre of fun over [a_i, b_i] for arrays a, b."""
    x, w = gauss_legendre(order)
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    tot = np.zeros(a.shape)
    edges = a[..., None] + (b - a)[..., None] * np.linspace(0, 1, panels + 1)
    for k in range(panels):
        pa, pb = edges[..., k], edges[..., k + 1]
        half = 0.5 * (pb - pa)
        nodes = pa[..., None] + half[..., None] * (x + 1)
        tot = tot + np.sum(fun(nodes) * w, axis=-1) * half
    return tot


def _carved_intervals_1d(patch, samples=512):
    """Subintervals of [-r0, r0] where every carving function is negative."""
    r0 = patch.r0
    if not patch.carving:
        return [(-r0, r0)]
    xs = np.linspace(-r0, r0, samples + 1)
    G = patch.carving_max(xs[:, None])
    neg = G < 0
    out = []
    i = 0
    while i <= samples:
        if not neg[i]:
            i += 1
            continue
        j = i
        while j + 1 <= samples and neg[j + 1]:
            j += 1
        a = -r0 if i == 0 else _root(lambda x: patch.carving_max(np.array([[x]]))[0], xs[i - 1], xs[i])
        b = r0 if j == samples else _root(lambda x: patch.carving_max(np.array([[x]]))[0], xs[j], xs[j + 1])
        out.append((a, b))
        i = j + 1
    return out


def _root(fun, a, b, iters=80):
    fa = fun(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = fun(m)
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
        if b - a <= 1e-15 * max(1.0, abs(a)):
            break
    return 0.5 * (a + b)


def _slab_1d(patch, w, lows, highs, weight=None, support=None, carve=True):
    r0 = patch.r0
    sup = support or _support_min(patch, w)
    x0 = float(sup.x0[0])

    def h_right(x):
        return patch.phase(np.asarray(x)[..., None], w)

    def h_left(y):
        return patch.phase(-np.asarray(y)[..., None], w)

    def density(x):
        val = _area(patch, x[..., None])
        if weight is not None:
            val = val * weight(x[..., None])
        return val

    total = np.zeros(np.shape(lows))
    ivs = _carved_intervals_1d(patch) if (carve and patch.carving) else [(-r0, r0)]
    # right branch: h nondecreasing on [x0, r0]
    c_hi = _sup_below(h_right, x0, r0, highs)
    c_lo = _sup_below(h_right, x0, r0, lows)
    # left branch in y = -x: h(-y) nondecreasing on [-x0, r0]
    d_hi = _sup_below(h_left, -x0, r0, highs)
    d_lo = _sup_below(h_left, -x0, r0, lows)
    lo_r, hi_r = np.where(h_right(np.full_like(c_lo, x0)) >= lows, x0, c_lo), c_hi
    lo_l, hi_l = -d_hi, np.where(h_left(np.full_like(d_lo, -x0)) >= lows, x0, -d_lo)
    empty_r = h_right(np.full_like(c_hi, x0)) > highs
    for a, b in ivs:
        for pa, pb, emp in ((lo_r, hi_r, empty_r), (lo_l, hi_l, empty_r)):
            ia = np.clip(pa, a, b)
            ib = np.clip(pb, a, b)
            ok = (ib > ia) & ~emp
            if not ok.any():
                continue
            vals = _gl_integrate_1d(density, np.where(ok, ia, 0.0), np.where(ok, ib, 0.0))
            total = total + np.where(ok, vals, 0.0)
    return total


class RayTable:
    """Phase and cumulative measure tabulated along rays from an argmin.

    Used for n = 2: for each angle theta the ray x0 + r omega(theta) stays in
    the disk for r <= L(theta), the excess phase g(r) = P.w - s is
    nondecreasing, and C(r) = int_0^r rho * density d rho.
    """

    def __init__(self, patch, w, x0, s, n_theta, weight=None, n_rad=400, theta=None):
        r0 = patch.r0
        if theta is None:
            th, self.periodic = _initial_angles(x0, r0, n_theta)
        else:
            th = np.asarray(theta, float)
            self.periodic = bool(np.linalg.norm(x0) < r0 * (1 - 1e-12))
        self.theta = th
        self.tw = _trapezoid_weights(th, self.periodic)
        om = np.stack([np.cos(th), np.sin(th)], axis=-1)
        xo = x0 @ om.T
        L = -xo + np.sqrt(np.maximum(xo * xo - x0 @ x0 + r0 * r0, 0.0))
        L = np.maximum(L, 0.0) * (1 - 1e-13)
        # log spacing resolves thin anchored slabs, uniform spacing interior bands
        rho = np.unique(np.concatenate([[0.0], np.logspace(-9, 0, n_rad // 2),
                                        np.linspace(0.0, 1.0, n_rad + 1)]))
        R = L[:, None] * rho[None, :]
        P = x0 + R[..., None] * om[:, None, :]
        g = patch.phase(P, w) - s
        g = np.maximum(np.maximum.accumulate(g, axis=1), 0.0)
        g[:, 0] = 0.0
        # cumulative radial measure, 4-point Gauss per sub-interval
        xg, wg = gauss_legendre(4)
        ra, rb = R[:, :-1], R[:, 1:]
        half = 0.5 * (rb - ra)
        nodes = ra[..., None] + half[..., None] * (xg + 1)
        Pn = x0 + nodes[..., None] * om[:, None, None, :]
        dens = _area(patch, Pn)
        if weight is not None:
            dens = dens * weight(Pn)
        inc = np.sum(nodes * dens * wg, axis=-1) * half
        C = np.concatenate([np.zeros((len(th), 1)), np.cumsum(inc, axis=1)], axis=1)
        self.R, self.g, self.C, self.L = R, g, C, L

    def radius_at(self, level):
        """sup{r: g(r) <= level} for every ray; ``level`` has shape (m,)."""
        level = np.asarray(level, float)
        g, R = self.g, self.R
        nr = g.shape[1]
        M = level.size
        rows = np.repeat(np.arange(g.shape[0]), M)
        lev = np.tile(level, g.shape[0])
        lo = np.zeros(rows.size, dtype=np.int64)
        hi = np.full(rows.size, nr - 1, dtype=np.int64)
        # last index with g <= level (g[:,0] = 0 <= level always)
        full = g[rows, -1] <= lev
        for _ in range(int(math.ceil(math.log2(nr))) + 1):
            mid = (lo + hi + 1) // 2
            ok = g[rows, mid] <= lev
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid - 1)
        k = np.minimum(lo, nr - 2)
        g0, g1 = g[rows, k], g[rows, k + 1]
        r0_, r1_ = R[rows, k], R[rows, k + 1]
        c0, c1 = self.C[rows, k], self.C[rows, k + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            use_log = (g0 > 0) & (r0_ > 0) & (g1 > g0) & (lev > 0)
            fr_log = (np.log(lev) - np.log(g0)) / (np.log(g1) - np.log(g0))
            r_log = np.exp(np.log(r0_) + fr_log * (np.log(r1_) - np.log(r0_)))
            fr_lin = np.where(g1 > g0, (lev - g0) / (g1 - g0), 1.0)
            r_lin = r0_ + fr_lin * (r1_ - r0_)
            r = np.where(use_log, r_log, r_lin)
            r = np.clip(r, r0_, r1_)
            c_ok = (c0 > 0) & (c1 > c0) & (r0_ > 0) & (r > 0)
            fc = (np.log(r) - np.log(r0_)) / (np.log(r1_) - np.log(r0_))
            c_log = np.exp(np.log(c0) + fc * (np.log(c1) - np.log(c0)))
            c_lin = c0 + np.where(r1_ > r0_, (r - r0_) / (r1_ - r0_), 0.0) * (c1 - c0)
            c = np.where(c_ok, c_log, c_lin)
        r = np.where(full, R[rows, -1], r)
        c = np.where(full, self.C[rows, -1], c)
        return r.reshape(g.shape[0], M), c.reshape(g.shape[0], M)

    def per_ray(self, lows, highs):
        """Per-ray radial measures (rays x levels) for levels relative to s."""
        lows = np.maximum(np.asarray(lows, float), 0.0)
        highs = np.asarray(highs, float)
        _, c_hi = self.radius_at(np.maximum(highs, 0.0))
        _, c_lo = self.radius_at(lows)
        out = np.where(highs >= 0, c_hi - np.where(lows > 0, c_lo, 0.0), 0.0)
        return np.maximum(out, 0.0)

    def measures(self, lows, highs):
        """Slab measures for level pairs relative to s (trapezoid in theta)."""
        return self.tw @ self.per_ray(lows, highs)


def _initial_angles(x0, r0, n_theta):
    periodic = bool(np.linalg.norm(x0) < r0 * (1 - 1e-12))
    # thin slabs near the disk edge have angular features of size ~sqrt(width),
    # so nodes are clustered geometrically around the critical angles
    cl = np.logspace(-9, 0, max(n_theta // 4, 8))
    if periodic:
        th = 2 * np.pi * np.arange(n_theta) / n_theta
        if np.linalg.norm(x0) > 0.9 * r0:
            out = math.atan2(x0[1], x0[0])
            th = np.concatenate([th, (out + cl) % (2 * np.pi), (out - cl) % (2 * np.pi)])
        th = np.unique(th)
    else:
        inward = math.atan2(-x0[1], -x0[0])
        psi = np.unique(np.concatenate([np.linspace(0.0, np.pi, n_theta + 1),
                                        0.5 * np.pi * cl, np.pi - 0.5 * np.pi * cl]))
        th = inward - 0.5 * np.pi + psi
    return th, periodic


def _trapezoid_weights(th, periodic):
    if periodic:
        gaps = np.diff(np.append(th, th[0] + 2 * np.pi))
        return 0.5 * (gaps + np.roll(gaps, 1))
    gaps = np.diff(th)
    w = np.zeros(th.size)
    w[:-1] += 0.5 * gaps
    w[1:] += 0.5 * gaps
    return w


def _slab_2d(patch, w, lows, highs, weight=None, support=None, rtol=1e-3,
             n_theta=64, max_rounds=20):
    """Angular trapezoid with local midpoint refinement, all levels at once."""
    sup = support or _support_min(patch, w)
    lv = np.asarray(lows, float) - sup.s
    hv = np.asarray(highs, float) - sup.s

    def values(th):
        return RayTable(patch, w, sup.x0, sup.s, 0, weight, n_rad=200, theta=th).per_ray(lv, hv)

    th, periodic = _initial_angles(sup.x0, patch.r0, n_theta)
    span = 2 * np.pi if periodic else np.pi
    V = values(th)
    cand = np.arange(th.size if periodic else th.size - 1)
    for _ in range(max_rounds):
        if cand.size == 0:
            break
        K = th.size
        a = th[cand]
        nxt = (cand + 1) % K
        b = np.where(nxt == 0, th[0] + 2 * np.pi, th[nxt]) if periodic else th[cand + 1]
        h = b - a
        keep = h > 1e-12
        cand, a, b, h, nxt = cand[keep], a[keep], b[keep], h[keep], nxt[keep]
        if cand.size == 0:
            break
        mid = 0.5 * (a + b)
        Vm = values(mid)
        Va, Vb = V[cand], V[nxt]
        err = np.abs(0.25 * h[:, None] * (2 * Vm - Va - Vb))
        total = _trapezoid_weights(th, periodic) @ V
        tol = rtol * np.abs(total)[None, :] * (h / span)[:, None] + 1e-16
        bad = np.any(err > tol, axis=1)
        if periodic:
            mid = np.mod(mid, 2 * np.pi)
        th = np.concatenate([th, mid])
        V = np.concatenate([V, Vm])
        order = np.argsort(th, kind="stable")
        th, V = th[order], V[order]
        pos = np.searchsorted(th, mid[bad])
        K = th.size
        left = pos - 1 if not periodic else (pos - 1) % K
        cand = np.unique(np.concatenate([left[left >= 0], pos]))
        if not periodic:
            cand = cand[cand < K - 1]
    return _trapezoid_weights(th, periodic) @ V


def patch_slab_measures(patch: ConvexPatch, w, lows, highs, weight=None, support=None):
    """Vectorised measure of {x : lo <= P(x).w <= hi} for any direction w.

    Directions with a negative last component are handled by reflecting the
    slab, since P.w is then concave.
    """
    w = np.asarray(w, float)
    lows = np.atleast_1d(np.asarray(lows, float))
    highs = np.atleast_1d(np.asarray(highs, float))
    if w[-1] < 0:
        w, lows, highs = -w, -highs, -lows
        support = None
    if patch.n == 1:
        return _slab_1d(patch, w, lows, highs, weight, support)
    return _slab_2d(patch, w, lows, highs, weight, support)


def slab_measure(patch: ConvexPatch, v, lo: float, hi: float) -> float:
    """Surface measure of the patch (over the closed disk) with lo <= P.v <= hi."""
    if lo > hi:
        raise ValueError("slab needs lo <= hi")
    w = as_direction(v, patch.n + 1)
    return float(patch_slab_measures(patch, w, [lo], [hi])[0])


def anchored_measures(patch: ConvexPatch, v, widths, support=None) -> np.ndarray:
    """m({s(v) <= P.v <= s(v) + w}) for every width w."""
    w = as_direction(v, patch.n + 1)
    sup = support or _support_min(patch, w)
    widths = np.asarray(widths, float)
    return patch_slab_measures(patch, w, np.full(widths.shape, sup.s), sup.s + widths,
                               support=sup)


def patch_area(patch: ConvexPatch) -> float:
    w = np.zeros(patch.n + 1)
    w[-1] = 1.0
    return float(patch_slab_measures(patch, w, [-1.0], [np.inf])[0])


def default_jmax(patch, v, t, support=None):
    w = as_direction(v, patch.n + 1)
    sup = support or _support_min(patch, w)
    span = support_max(patch, w) - sup.s
    if span <= 0:
        return 1
    return max(1, int(math.ceil(math.log2(max(t * span, 1.0)))) + 1)


def dyadic_widths(t, j_max):
    return np.array([2.0**j / t for j in range(0, j_max + 1)])


def dyadic_rhs(patch: ConvexPatch, v, t: float, j_max: int | None = None, support=None):
    """(head, tail): the anchored slab of width 1/t and the weighted dyadic shells."""
    if t <= 0:
        raise ValueError("t must be positive")
    w = as_direction(v, patch.n + 1)
    sup = support or _support_min(patch, w)
    if j_max is None:
        j_max = default_jmax(patch, w, t, sup)
    cum = anchored_measures(patch, w, dyadic_widths(t, j_max), support=sup)
    return dyadic_from_cumulative(cum)


def dyadic_from_cumulative(cum):
    """Split anchored measures at widths 2^j/t, j = 0..J, into (head, tail)."""
    cum = np.asarray(cum, float)
    head = float(cum[0])
    shells = np.maximum(np.diff(cum), 0.0)
    j = np.arange(1, cum.size)
    tail = float(np.sum(2.0 ** (-j) * shells))
    return head, tail


# ---------------------------------------------------------------------------
# closed bodies
# ---------------------------------------------------------------------------

class BodySlabs:
    """Slab measures of a closed body's boundary in a fixed direction v."""

    n_theta = 256

    def __init__(self, body: ClosedBody, v):
        self._tables = {}
        if not body.patches:
            raise ValueError(f"body {body.name!r} has no boundary patches")
        self.body = body
        self.v = np.asarray(v, float)
        self.items = []
        for i, (motion, patch) in enumerate(body.patches):
            w = motion.local_direction(self.v)
            off = float(motion.translation @ self.v)
            weight = partition_cutoff(_component_patches(body, i), _component_index(body, i),
                                      area=False)
            flip = w[-1] < 0
            wp = -w if flip else w
            sup = _support_min(patch, wp)
            self.items.append((patch, w, off, weight, flip, sup))

    def measures(self, lows, highs):
        lows = np.atleast_1d(np.asarray(lows, float))
        highs = np.atleast_1d(np.asarray(highs, float))
        tot = np.zeros(lows.shape)
        for idx, (patch, w, off, weight, flip, sup) in enumerate(self.items):
            lo, hi = lows - off, highs - off
            if flip:
                wp, lo, hi = -w, -hi, -lo
            else:
                wp = w
            if patch.n == 1:
                tot = tot + _slab_1d(patch, wp, lo, hi, weight, sup)
            else:
                tab = self._tables.get(idx)
                if tab is None:
                    tab = RayTable(patch, wp, sup.x0, sup.s, self.n_theta, weight)
                    self._tables[idx] = tab
                tot = tot + tab.measures(lo - sup.s, hi - sup.s)
        return tot

    def total(self):
        return float(self.measures([-np.inf], [np.inf])[0])


def _component_patches(body, i):
    if not body.components:
        return body.patches
    k = 0
    for comp in body.components:
        if i < k + len(comp):
            return comp
        k += len(comp)
    raise IndexError(i)


def _component_index(body, i):
    if not body.components:
        return i
    k = 0
    for comp in body.components:
        if i < k + len(comp):
            return i - k
        k += len(comp)
    raise IndexError(i)


def body_slab_measure(body: ClosedBody, v, lo, hi) -> float:
    v = np.asarray(v.v if isinstance(v, Direction) else v, float)
    return float(BodySlabs(body, v).measures([lo], [hi])[0])


def max_slab(body: ClosedBody, v, t: float, n_positions=256, slabs=None) -> float:
    """Largest boundary measure of a slab of width 1/t perpendicular to v."""
    if t <= 0:
        raise ValueError("t must be positive")
    v = np.asarray(v.v if isinstance(v, Direction) else v, float)
    v = v / np.linalg.norm(v)
    slabs = slabs or BodySlabs(body, v)
    smin, smax = body.support(v)
    width = 1.0 / t
    if width >= smax - smin:
        return slabs.total()
    pos = np.concatenate([np.linspace(smin, smax - width, n_positions), [smin, smax - width]])
    pos = np.unique(pos)
    vals = slabs.measures(pos, pos + width)
    i = int(np.argmax(vals))
    best = float(vals[i])
    # local golden-section refinement around the best sample
    a = pos[max(i - 1, 0)]
    b = pos[min(i + 1, pos.size - 1)]
    if b > a:
        invphi = (math.sqrt(5) - 1) / 2

        def m(s):
            return float(slabs.measures([s], [s + width])[0])
        c, d = b - invphi * (b - a), a + invphi * (b - a)
        fc, fd = m(c), m(d)
        for _ in range(30):
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = m(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = m(d)
        best = max(best, fc, fd)
    return best


def max_slab_profile(body: ClosedBody, v, ts) -> np.ndarray:
    v = np.asarray(v.v if isinstance(v, Direction) else v, float)
    slabs = BodySlabs(body, v / np.linalg.norm(v))
    return np.array([max_slab(body, v, t, slabs=slabs) for t in ts])


# ---------------------------------------------------------------------------
# power-law fits
# ---------------------------------------------------------------------------

def fit_power_law(samples) -> DecayProfile:
    """Least-squares fit of value ~ c t^-alpha on log-log axes.

    ``c`` absorbs the largest log-deviation so that every sample lies under
    the envelope ``c t^-alpha``.
    """
    samples = [(float(t), float(val)) for t, val in samples]
    if len(samples) < 5:
        raise ValueError("need at least 5 samples")
    t = np.array([p[0] for p in samples])
    y = np.array([p[1] for p in samples])
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("frequencies must be positive and strictly increasing")
    if np.any(y <= 0):
        raise ValueError("values must be positive")
    if math.log10(t[-1] / t[0]) < 2 - 1e-12:
        raise ValueError("frequencies must span at least two decades")
    lt, ly = np.log(t), np.log(y)
    slope, intercept = np.polyfit(lt, ly, 1)
    resid = float(np.max(np.abs(ly - (intercept + slope * lt))))
    return DecayProfile(tuple(samples), float(-slope), float(math.exp(intercept + resid)), resid)


def geometric_grid(t_min, t_max, per_decade):
    """Geometric grid with ``per_decade`` points per decade, endpoints included."""
    n = int(round(per_decade * math.log10(t_max / t_min)))
    return np.logspace(math.log10(t_min), math.log10(t_max), n + 1)
