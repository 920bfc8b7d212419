"""Convex graph patches, closed convex bodies and the example catalog.

A patch is the graph of a convex C^2 function ``f`` over the disk
``|x| <= r0`` in R^n (n = 1 or 2) with ``f(0) = 0`` and ``grad f(0) = 0``,
localised by a cutoff ``phi`` and optionally carved by functions ``g_i``
(the patch keeps only ``{g_i(x) < 0 for all i}``).  Points are arrays with a
trailing axis of length n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gamma

Evaluator = Callable[[np.ndarray], np.ndarray]


class DomainError(ValueError):
    """A point outside the closed patch domain."""


class CatalogError(ValueError):
    """Unknown catalog name or invalid catalog parameters."""


def as_points(x, n):
    """Coerce ``x`` to an array of points with trailing axis ``n``."""
    x = np.asarray(x, dtype=float)
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != n:
        raise ValueError(f"expected points in R^{n}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class ConvexPatch:
    n: int
    r0: float
    f: Evaluator
    grad: Evaluator
    phi: Evaluator
    carving: tuple = ()
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def with_cutoff(self, phi: Evaluator) -> "ConvexPatch":
        return replace(self, phi=phi)

    def with_carving(self, carving: Sequence[Evaluator]) -> "ConvexPatch":
        return replace(self, carving=tuple(carving))

    def carving_max(self, x):
        """max_i g_i(x); the carved domain is where this is negative."""
        vals = [np.asarray(g(x), dtype=float) for g in self.carving]
        return np.maximum.reduce(vals) if len(vals) > 1 else vals[0]

    def phase(self, x, w):
        """P(x) . w for points x and a vector w in R^{n+1}."""
        return x @ w[:-1] + w[-1] * self.f(x)

    def phase_grad(self, x, w):
        return w[:-1] + w[-1] * self.grad(x)


def bump(r0: float) -> Evaluator:
    """The standard cutoff (1 - |x|^2 / r0^2)^3 on the open disk, 0 outside."""
    def phi(x):
        q = 1.0 - _norm2(x) / (r0 * r0)
        return np.where(q > 0.0, q, 0.0) ** 3
    return phi


@dataclass(frozen=True)
class Direction:
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")
        if v[-1] < 0:
            raise ValueError("direction must have nonnegative last component")
        object.__setattr__(self, "v", v)

    @classmethod
    def normalized(cls, v):
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        if v[-1] < 0:
            v = -v
        return cls(v)


def _check_domain(patch, x):
    r = np.sqrt(np.sum(x * x, axis=-1))
    if np.any(r > patch.r0 * (1 + 1e-12)):
        raise DomainError(f"point outside the closed disk of radius {patch.r0}")


def surface_point(patch: ConvexPatch, x) -> np.ndarray:
    """The graph point (x, f(x))."""
    x = as_points(x, patch.n)
    _check_domain(patch, x)
    return np.concatenate([x, patch.f(x)[..., None]], axis=-1)


def area_element(patch: ConvexPatch, x) -> np.ndarray:
    """sqrt(1 + |grad f(x)|^2)."""
    x = as_points(x, patch.n)
    _check_domain(patch, x)
    return _area(patch, x)


def _area(patch, x):
    g = patch.grad(x)
    return np.sqrt(1.0 + np.sum(g * g, axis=-1))


# ---------------------------------------------------------------------------
# catalog patches
# ---------------------------------------------------------------------------

def _norm2(x):
    return np.einsum("...i,...i->...", x, x)


def _power(p, n, r0):
    if p < 2 or p % 2:
        raise CatalogError("power patch needs an even exponent p >= 2")
    half = p // 2

    def f(x):
        return _norm2(x) ** half if half != 1 else _norm2(x)

    def grad(x):
        return (p * _norm2(x) ** (half - 1))[..., None] * x
    return f, grad


def _anisotropic():
    def f(x):
        return x[..., 0] ** 2 + x[..., 1] ** 4

    def grad(x):
        return np.stack([2 * x[..., 0], 4 * x[..., 1] ** 3], axis=-1)
    return f, grad


def _cone(height):
    # cone x1^2 + x2^2 = x3^2 in the frame tangent along the ruling through
    # (height, 0, height): f(u) = u2^2 / (2 sqrt2 height + 2 u1)
    d0 = 2.0 * math.sqrt(2.0) * height

    def f(x):
        return x[..., 1] ** 2 / (d0 + 2.0 * x[..., 0])

    def grad(x):
        den = d0 + 2.0 * x[..., 0]
        return np.stack([-2.0 * x[..., 1] ** 2 / den**2, 2.0 * x[..., 1] / den], axis=-1)
    return f, grad


def _round_cap(radius):
    def f(x):
        return radius - np.sqrt(radius * radius - _norm2(x))

    def grad(x):
        return x / np.sqrt(radius * radius - _norm2(x))[..., None]
    return f, grad


def _ipow(y, k):
    """y**k for a small integer k by repeated squaring (much cheaper than pow)."""
    out = None
    base = y
    while k:
        if k & 1:
            out = base if out is None else out * base
        k >>= 1
        if k:
            base = base * base
    return np.ones_like(y) if out is None else out


def _root(z, p):
    # p-th root; nested square roots when p is a power of two
    if p & (p - 1) == 0:
        while p > 1:
            z = np.sqrt(z)
            p //= 2
        return z
    return z ** (1.0 / p)


def _super_cap(p):
    if p < 2 or p % 2:
        raise CatalogError("superellipse cap needs an even exponent p >= 2")

    def f(x):
        y = x[..., 0]
        return 1.0 - _root(1.0 - _ipow(y, p), p)

    def grad(x):
        y = x[..., 0]
        ypm1 = _ipow(y, p - 1)
        r = _root(1.0 - ypm1 * y, p)
        return (ypm1 * r / (1.0 - ypm1 * y))[..., None]
    return f, grad


def _ellipse_cap(semi_along, semi_across):
    # boundary of x^2/A^2 + y^2/B^2 = 1 near (A, 0) as a graph over y
    def f(x):
        u = x[..., 0]
        return semi_along - semi_along * np.sqrt(1.0 - (u / semi_across) ** 2)

    def grad(x):
        u = x[..., 0]
        s = np.sqrt(1.0 - (u / semi_across) ** 2)
        return (semi_along * u / (semi_across**2 * s))[..., None]
    return f, grad


CATALOG_PATCHES = ("power", "paraboloid", "anisotropic", "cone_patch", "circle_cap",
                   "sphere_cap", "superellipse_cap")


def make_catalog_patch(name: str, params: Optional[dict] = None, **kw) -> ConvexPatch:
    """Build a named catalog patch with the standard cutoff.

    Recognised names: power (p, n), paraboloid, anisotropic, cone_patch
    (height), circle_cap / sphere_cap (radius), superellipse_cap (p).
    Every patch accepts ``r0``.
    """
    params = dict(params or {}, **kw)
    params.pop("name", None)
    if name == "power":
        p = int(params.get("p", 2))
        n = int(params.get("n", 1))
        r0 = float(params.get("r0", 1.0))
        f, grad = _power(p, n, r0)
        rec = {"p": p, "n": n, "r0": r0}
    elif name == "paraboloid":
        n, r0 = 2, float(params.get("r0", 1.0))
        f, grad = _power(2, 2, r0)
        rec = {"r0": r0}
    elif name == "anisotropic":
        n, r0 = 2, float(params.get("r0", 1.0))
        f, grad = _anisotropic()
        rec = {"r0": r0}
    elif name == "cone_patch":
        height = float(params.get("height", 1.5))
        n, r0 = 2, float(params.get("r0", 0.5))
        if not 0 < r0 < math.sqrt(2.0) * height:
            raise CatalogError("cone patch radius must stay off the apex")
        f, grad = _cone(height)
        rec = {"height": height, "r0": r0}
    elif name in ("circle_cap", "sphere_cap"):
        radius = float(params.get("radius", 1.0))
        r0 = float(params.get("r0", 0.5 * radius))
        if not 0 < r0 < radius:
            raise CatalogError("cap radius r0 must be below the sphere radius")
        n = 1 if name == "circle_cap" else 2
        f, grad = _round_cap(radius)
        rec = {"radius": radius, "r0": r0}
    elif name == "superellipse_cap":
        p = int(params.get("p", 4))
        r0 = float(params.get("r0", 0.5))
        if not 0 < r0 < 1:
            raise CatalogError("superellipse cap needs 0 < r0 < 1")
        n = 1
        f, grad = _super_cap(p)
        rec = {"p": p, "r0": r0}
    else:
        raise CatalogError(f"unknown catalog patch {name!r}")
    return ConvexPatch(n=n, r0=r0, f=f, grad=grad, phi=bump(r0), name=name, params=rec)


def cone_embedding(height: float = 1.5):
    """Rigid motion placing the cone_patch frame on the cone x1^2+x2^2 = x3^2."""
    s = 1.0 / math.sqrt(2.0)
    R = np.array([[s, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, s]])
    return Motion(R, np.array([height, 0.0, height]))


def noop_carving() -> tuple:
    """A pair of carving functions whose joint negativity set is everything."""
    def g1(x):
        return -np.ones(x.shape[:-1])

    def g2(x):
        return -g1(x) - 2.0
    return (g1, g2)


def literal_paired_carving(g1: Evaluator) -> tuple:
    """(g1, -g1 + 1), whose joint negativity set is always empty."""
    return (g1, lambda x: -g1(x) + 1.0)


def halfspace_carving(axis: int = 0, sign: float = 1.0) -> tuple:
    """Keep {sign * x_axis < 0}."""
    return (lambda x: sign * x[..., axis],)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    entries: list

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.entries)

    def __getitem__(self, name):
        for key, ok, slack in self.entries:
            if key == name:
                return ok, slack
        raise KeyError(name)


def _sample_disk(rng, n, r0, count):
    if n == 1:
        return rng.uniform(-r0, r0, size=(count, 1))
    r = r0 * np.sqrt(rng.uniform(0, 1, count))
    th = rng.uniform(0, 2 * np.pi, count)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


def validate_patch(patch: ConvexPatch, samples: int = 1000, seed: int = 0) -> ValidationReport:
    """Statistically check the standing hypotheses on a patch."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    rng = np.random.default_rng(seed)
    n, r0 = patch.n, patch.r0
    zero = np.zeros((1, n))
    entries = []
    f0 = float(abs(patch.f(zero)[0]))
    entries.append(("f(0)=0", f0 <= 1e-12, f0))
    g0 = float(np.linalg.norm(patch.grad(zero)[0]))
    entries.append(("grad f(0)=0", g0 <= 1e-12, g0))

    xs = _sample_disk(rng, n, r0, samples)
    ys = _sample_disk(rng, n, r0, samples)
    mid = patch.f(0.5 * (xs + ys)) - 0.5 * (patch.f(xs) + patch.f(ys))
    worst = float(mid.max())
    entries.append(("midpoint convexity", worst <= 1e-10, worst))

    if n == 1:
        ring = np.array([[-r0], [r0]])
    else:
        th = np.linspace(0, 2 * np.pi, samples, endpoint=False)
        ring = r0 * np.stack([np.cos(th), np.sin(th)], axis=-1)
    outside = np.concatenate([ring, 1.05 * ring])
    cut = float(np.max(np.abs(patch.phi(outside))))
    entries.append(("cutoff support", cut <= 1e-12, cut))

    pts = 0.98 * xs
    h = 1e-6
    fd = np.empty_like(pts)
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        fd[:, j] = (patch.f(pts + e) - patch.f(pts - e)) / (2 * h)
    g = patch.grad(pts)
    rel = float(np.max(np.abs(fd - g) / np.maximum(1.0, np.abs(g))))
    entries.append(("gradient consistency", rel <= 1e-6, rel))
    return ValidationReport(entries)


# ---------------------------------------------------------------------------
# closed bodies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Motion:
    """Rigid motion q = translation + rotation @ p (proper rotation)."""
    rotation: np.ndarray
    translation: np.ndarray

    def to_global(self, p):
        return self.translation + p @ self.rotation.T

    def to_local(self, q):
        return (q - self.translation) @ self.rotation

    def local_direction(self, lam):
        return self.rotation.T @ lam


def frame_for_normal(inward: np.ndarray) -> np.ndarray:
    """Proper rotation whose last column is ``inward``."""
    d = inward.size
    N = inward / np.linalg.norm(inward)
    if d == 2:
        return np.array([[N[1], N[0]], [-N[0], N[1]]])
    # complete N to an orthonormal basis
    a = np.eye(3)[np.argmin(np.abs(N))]
    e1 = a - (a @ N) * N
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(N, e1)
    R = np.stack([e1, e2, N], axis=1)
    if np.linalg.det(R) < 0:
        R[:, [0, 1]] = R[:, [1, 0]]
    return R


@dataclass(frozen=True)
class ClosedBody:
    name: str
    dim: int
    patches: tuple
    volume: float
    support: Callable
    contains: Callable
    lattice: Optional["LatticeData"] = None
    components: tuple = ()
    is_union: bool = False
    params: dict = field(default_factory=dict)
    perimeter: Optional[float] = None

    @property
    def n(self):
        return self.dim - 1

    def partition(self, q):
        """Normalised cutoff weights of every patch at boundary points q.

        Returns an array of shape (..., n_patches).  For union bodies the
        partition is taken within each component circle.
        """
        return _partition(self.patches, q)

    def sample_boundary(self, count, rng):
        """Random points on S (image of random patch-domain points)."""
        pts = []
        k = len(self.patches)
        which = rng.integers(0, k, size=count)
        for i, (motion, patch) in enumerate(self.patches):
            m = int(np.sum(which == i))
            if m == 0:
                continue
            x = _sample_disk(rng, patch.n, patch.r0, m)
            p = np.concatenate([x, patch.f(x)[..., None]], axis=-1)
            pts.append(motion.to_global(p))
        return np.concatenate(pts)


ON_PATCH_TOL = 1e-9


def _on_patch(motion, patch, q, tol=ON_PATCH_TOL):
    p = motion.to_local(q)
    x = p[..., :-1]
    inside = np.sum(x * x, axis=-1) < patch.r0**2
    xs = np.where(inside[..., None], x, 0.0)
    on = inside & (np.abs(p[..., -1] - patch.f(xs)) <= tol * max(1.0, patch.r0))
    return on, xs


def _bump_at(motion, patch, q):
    """patch.phi at the local coordinates of q where q lies on the patch, else 0.

    q is a flat (m, d) array; f and phi are only evaluated inside the disk.
    """
    p = motion.to_local(q)
    x = p[:, :-1]
    out = np.zeros(q.shape[0])
    inside = np.flatnonzero(np.einsum("ij,ij->i", x, x) < patch.r0**2)
    if inside.size:
        xi = x[inside]
        on = np.abs(p[inside, -1] - patch.f(xi)) <= ON_PATCH_TOL * max(1.0, patch.r0)
        out[inside] = np.where(on, patch.phi(xi), 0.0)
    return out


def _partition(patches, q):
    q = np.asarray(q, dtype=float)
    flat = q.reshape(-1, q.shape[-1])
    w = np.stack([_bump_at(m, p, flat) for m, p in patches], axis=-1)
    w = w / np.sum(w, axis=-1, keepdims=True)
    return w.reshape(q.shape[:-1] + (len(patches),))


def partition_cutoff(patches, index, weight=None, area=True) -> Evaluator:
    """Effective cutoff of patch ``index``: weight * area * normalised bump."""
    motion, patch = patches[index]

    def phi(x):
        own = patch.phi(x)
        out = np.zeros_like(own)
        live = own > 0
        if not live.any():
            return out
        xl = x[live]
        p = np.concatenate([xl, patch.f(xl)[..., None]], axis=-1)
        q = motion.to_global(p)
        mine = own[live]
        tot = mine.copy()
        for j, (mj, pj) in enumerate(patches):
            if j != index:
                tot += _bump_at(mj, pj, q)
        val = mine / tot
        if area:
            val = val * _area(patch, xl)
        if weight is not None:
            val = val * weight(q)
        out[live] = val
        return out
    return phi


@dataclass(frozen=True)
class LatticeData:
    """Exact lattice-count hooks for a body dilated by k.

    ``lead_bound(k)`` bounds |leading coordinates|; ``sections(k, lead)``
    returns a list of integer (lo, hi) array pairs for the last coordinate
    given integer leading coordinates of shape (m, n) (one pair for convex
    bodies, one per disk for unions); ``member(k, pts)`` is the exact
    membership test used by brute-force enumeration.
    """
    lead_bound: Callable
    sections: Callable
    member: Callable


# exact integer helpers ------------------------------------------------------

def _isqrt_floor(m):
    """Elementwise floor(sqrt(m)) for nonnegative integer arrays."""
    m = np.asarray(m)
    if m.dtype == object:
        return np.array([math.isqrt(int(v)) for v in m.ravel()], dtype=object).reshape(m.shape)
    s = np.floor(np.sqrt(m.astype(float))).astype(np.int64)
    for _ in range(2):
        s = np.where(s * s > m, s - 1, s)
        s = np.where((s + 1) * (s + 1) <= m, s + 1, s)
    return s


def _iroot_floor(m, p):
    m = np.asarray(m)
    if m.dtype == object:
        out = []
        for v in m.ravel():
            v = int(v)
            r = int(round(v ** (1.0 / p)))
            while r**p > v:
                r -= 1
            while (r + 1) ** p <= v:
                r += 1
            out.append(r)
        return np.array(out, dtype=object).reshape(m.shape)
    r = np.floor(m.astype(float) ** (1.0 / p)).astype(np.int64)
    for _ in range(3):
        r = np.where(r**p > m, r - 1, r)
        r = np.where((r + 1) ** p <= m, r + 1, r)
    return r


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(str(x))


_INT64_SAFE = 2**61


def _int_array(values):
    vals = [int(v) for v in values]
    if vals and max(abs(v) for v in vals) >= _INT64_SAFE:
        return np.array(vals, dtype=object)
    return np.array(vals, dtype=np.int64)


def _quadric_section(k, lead, coef, radius2):
    """Rows of sum_i coef_i x_i^2 + y^2 <= k^2 radius2 (all exact rationals)."""
    k = _frac(k)
    T = k * k * radius2
    den = T.denominator
    for c in coef:
        den = den * c.denominator // math.gcd(den, c.denominator)
    A = int(T * den)
    C = [int(c * den) for c in coef]
    lead = np.asarray(lead, dtype=np.int64)
    big = A * den >= _INT64_SAFE
    if big:
        lead = lead.astype(object)
    rest = A - sum(ci * lead[:, i] ** 2 for i, ci in enumerate(C))
    ok = rest >= 0
    restc = np.where(ok, rest, 0)
    hi = _isqrt_floor(restc * den) // den
    hi = np.where(ok, hi, -1)
    return -hi, hi


def _power_section(k, lead, p):
    k = _frac(k)
    B = k.denominator
    A = k.numerator
    lead = np.asarray(lead, dtype=np.int64)
    tot = A**p
    if tot >= _INT64_SAFE // 4:
        lead = lead.astype(object)
    rest = tot - sum(np.abs(B * lead[:, i]) ** p for i in range(lead.shape[1]))
    ok = rest >= 0
    # |B y|^p <= rest  <=>  |y| <= floor(root(rest)) // B
    hi = _iroot_floor(np.where(ok, rest, 0), p) // B
    hi = np.where(ok, hi, -1)
    return -hi, hi


def _disk_lattice(radius, center=(0, 0)):
    R = _frac(radius)
    cx, cy = (_frac(c) for c in center)
    if cy != 0:
        raise CatalogError("lattice disks must be centred on the x-axis")

    def lead_bound(k):
        k = _frac(k)
        return int(math.floor(k * (abs(cx) + R))) + 1

    def section(k, lead):
        k = _frac(k)
        x = np.asarray(lead, dtype=np.int64)[:, 0]
        # (x - k cx)^2 + y^2 <= (k R)^2 ; x - k cx is rational
        kc = k * cx
        den = kc.denominator
        num = np.asarray(x, dtype=object) * den - kc.numerator
        T = (k * R) ** 2
        D = T.denominator * den * den
        A = T.numerator * den * den
        rest = np.array([A - T.denominator * int(v) ** 2 for v in num], dtype=object)
        ok = rest >= 0
        # y^2 <= rest / (T.denominator den^2) = rest / D
        hi = np.array([math.isqrt(int(r) * D) // D if o else -1 for r, o in zip(rest, ok)],
                      dtype=np.int64)
        return -hi, hi

    def member(k, pts):
        k = _frac(k)
        out = []
        for x, y in np.asarray(pts, dtype=np.int64).tolist():
            out.append((x - k * cx) ** 2 + y * y <= (k * R) ** 2)
        return np.array(out, dtype=bool)
    return lead_bound, section, member


def _disk_section_fast(radius):
    R = _frac(radius)

    def sections(k, lead):
        return [_quadric_section(k, lead, [Fraction(1)], R * R)]
    return sections


def _round_body_patches(dim, radius, center, r0_frac=0.9):
    f_r0 = r0_frac * radius
    patches = []
    if dim == 2:
        normals = [np.array(v, float) for v in ((1, 0), (0, 1), (-1, 0), (0, -1))]
        base = make_catalog_patch("circle_cap", radius=radius, r0=f_r0)
    else:
        normals = [np.array(v, float) / math.sqrt(3.0)
                   for v in ((1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1),
                             (-1, 1, 1), (-1, 1, -1), (-1, -1, 1), (-1, -1, -1))]
        base = make_catalog_patch("sphere_cap", radius=radius, r0=f_r0)
    for N in normals:
        R = frame_for_normal(-N)
        patches.append((Motion(R, np.asarray(center, float) + radius * N), base))
    return tuple(patches)


def _graph_patches_2d(specs):
    """specs: list of (outward normal, base point, patch)."""
    out = []
    for N, base, patch in specs:
        N = np.asarray(N, float)
        out.append((Motion(frame_for_normal(-N), np.asarray(base, float)), patch))
    return tuple(out)


def _cap_patch(f, grad, r0, name, params):
    return ConvexPatch(n=1, r0=r0, f=f, grad=grad, phi=bump(r0), name=name, params=params)


CATALOG_BODIES = ("disk", "ellipse", "superellipse", "ball", "superellipsoid",
                  "two_disk_union", "square")


def make_closed_body(name: str, params: Optional[dict] = None, **kw) -> ClosedBody:
    """Build a named closed body.

    disk (radius), ellipse (a, b), superellipse (p), ball (radius),
    superellipsoid (p), two_disk_union (radius, distance) and the lattice-only
    control square (half side 1).
    """
    params = dict(params or {}, **kw)
    params.pop("name", None)
    if name == "disk":
        R = float(params.get("radius", 1.0))
        cen = tuple(float(c) for c in params.get("center", (0.0, 0.0)))
        cvec = np.array(cen)
        patches = _round_body_patches(2, R, cen)
        exact_c = tuple(params.get("center", (0, 0)))
        lattice = None
        if cen[1] == 0.0:
            lb, _, member = _disk_lattice(params.get("radius", 1), exact_c)
            if cen == (0.0, 0.0):
                sec = _disk_section_fast(params.get("radius", 1))
            else:
                sec = _union_lattice_single(params.get("radius", 1), exact_c)
            lattice = LatticeData(lb, sec, member)
        return ClosedBody(
            name, 2, patches, math.pi * R * R,
            support=lambda v: (float(cvec @ v) - R * np.linalg.norm(v),
                               float(cvec @ v) + R * np.linalg.norm(v)),
            contains=lambda q: np.sum((np.asarray(q) - cvec) ** 2, axis=-1) <= R * R,
            lattice=lattice, params={"radius": R, "center": list(cen)},
            perimeter=2 * math.pi * R)
    if name == "ellipse":
        a = float(params.get("a", 2.0))
        b = float(params.get("b", 0.5))
        fa, ga = _ellipse_cap(a, b)
        fb, gb = _ellipse_cap(b, a)
        pa = _cap_patch(fa, ga, 0.9 * b, "ellipse_cap", {"along": a, "across": b})
        pb = _cap_patch(fb, gb, 0.9 * a, "ellipse_cap", {"along": b, "across": a})
        patches = _graph_patches_2d([((1, 0), (a, 0), pa), ((0, 1), (0, b), pb),
                                     ((-1, 0), (-a, 0), pa), ((0, -1), (0, -b), pb)])
        A2, B2 = _frac(params.get("a", 2.0)) ** 2, _frac(params.get("b", 0.5)) ** 2

        def section(k, lead):
            # x^2/a^2 + y^2/b^2 <= k^2  <=>  (b^2/a^2) x^2 + y^2 <= k^2 b^2
            return [_quadric_section(k, lead, [B2 / A2], B2)]

        def member(k, pts):
            k = _frac(k)
            return np.array([Fraction(x * x) / A2 + Fraction(y * y) / B2 <= k * k
                             for x, y in np.asarray(pts).tolist()], dtype=bool)
        from scipy.special import ellipe
        perim = 4 * a * ellipe(1 - (b / a) ** 2) if a >= b else 4 * b * ellipe(1 - (a / b) ** 2)
        return ClosedBody(
            name, 2, patches, math.pi * a * b,
            support=lambda v: (-math.hypot(a * v[0], b * v[1]), math.hypot(a * v[0], b * v[1])),
            contains=lambda q: (np.asarray(q)[..., 0] / a) ** 2 + (np.asarray(q)[..., 1] / b) ** 2 <= 1,
            lattice=LatticeData(lambda k: int(math.floor(float(k) * a)) + 1, section, member),
            params={"a": a, "b": b}, perimeter=perim)
    if name == "superellipse":
        p = int(params.get("p", 4))
        if p < 2 or p % 2:
            raise CatalogError("superellipse needs an even exponent p >= 2")
        f, g = _super_cap(p)
        cap = _cap_patch(f, g, 0.95, "superellipse_cap", {"p": p, "r0": 0.95})
        patches = _graph_patches_2d([((1, 0), (1, 0), cap), ((0, 1), (0, 1), cap),
                                     ((-1, 0), (-1, 0), cap), ((0, -1), (0, -1), cap)])
        q = p / (p - 1.0)
        vol = 4 * gamma(1 + 1 / p) ** 2 / gamma(1 + 2 / p)
        return ClosedBody(
            name, 2, patches, float(vol),
            support=lambda v: (-np.sum(np.abs(v) ** q) ** (1 / q), np.sum(np.abs(v) ** q) ** (1 / q)),
            contains=lambda x: np.sum(np.abs(np.asarray(x)) ** p, axis=-1) <= 1,
            lattice=_power_lattice(p, 2), params={"p": p})
    if name == "ball":
        R = float(params.get("radius", 1.0))
        patches = _round_body_patches(3, R, (0.0, 0.0, 0.0))
        Rf = _frac(params.get("radius", 1))

        def section(k, lead):
            return [_quadric_section(k, lead, [Fraction(1), Fraction(1)], Rf * Rf)]

        def member(k, pts):
            k = _frac(k)
            return np.array([Fraction(sum(c * c for c in pt)) <= (k * Rf) ** 2
                             for pt in np.asarray(pts).tolist()], dtype=bool)
        return ClosedBody(
            name, 3, patches, 4 * math.pi * R**3 / 3,
            support=lambda v: (-R * np.linalg.norm(v), R * np.linalg.norm(v)),
            contains=lambda x: np.sum(np.asarray(x) ** 2, axis=-1) <= R * R,
            lattice=LatticeData(lambda k: int(math.floor(float(k) * R)) + 1, section, member),
            params={"radius": R}, perimeter=4 * math.pi * R * R)
    if name == "superellipsoid":
        p = int(params.get("p", 4))
        if p < 2 or p % 2:
            raise CatalogError("superellipsoid needs an even exponent p >= 2")
        q = p / (p - 1.0)
        vol = 8 * gamma(1 + 1 / p) ** 3 / gamma(1 + 3 / p)
        return ClosedBody(
            name, 3, (), float(vol),
            support=lambda v: (-np.sum(np.abs(v) ** q) ** (1 / q), np.sum(np.abs(v) ** q) ** (1 / q)),
            contains=lambda x: np.sum(np.abs(np.asarray(x)) ** p, axis=-1) <= 1,
            lattice=_power_lattice(p, 3), params={"p": p})
    if name == "square":
        def section(k, lead):
            m = int(math.floor(_frac(k)))
            lead = np.asarray(lead)
            hi = np.where(np.all(np.abs(lead) <= m, axis=-1), m, -1)
            return [(-hi, hi)]

        def member(k, pts):
            return np.all(np.abs(np.asarray(pts)) <= _frac(k), axis=-1)
        return ClosedBody(
            name, 2, (), 4.0,
            support=lambda v: (-np.sum(np.abs(v)), np.sum(np.abs(v))),
            contains=lambda x: np.all(np.abs(np.asarray(x)) <= 1, axis=-1),
            lattice=LatticeData(lambda k: int(math.floor(float(k))) + 1, section, member),
            params={})
    if name == "two_disk_union":
        R = float(params.get("radius", 1.0))
        d = float(params.get("distance", 1.0))
        return disk_union([(0.0, 0.0), (d, 0.0)], R, exact=(params.get("radius", 1),
                                                            params.get("distance", 1)))
    raise CatalogError(f"unknown catalog body {name!r}")


def _power_lattice(p, dim):
    def section(k, lead):
        return [_power_section(k, lead, p)]

    def member(k, pts):
        k = _frac(k)
        return np.array([sum(Fraction(abs(c)) ** p for c in pt) <= k**p
                         for pt in np.asarray(pts).tolist()], dtype=bool)
    return LatticeData(lambda k: int(math.floor(float(k))) + 1, section, member)


def disk_union(centers, radius=1.0, exact=None) -> ClosedBody:
    """Boundary of a union of equal disks, carved into exposed arcs.

    Coincident disks are merged.  Each circle keeps its four caps; a cap is
    carved by ``1 - |q - c_j|^2 / R^2`` for every other centre so that only
    the part outside the other disks survives.
    """
    uniq = []
    for c in centers:
        c = tuple(float(v) for v in c)
        if not any(np.allclose(c, u, atol=1e-14) for u in uniq):
            uniq.append(c)
    R = float(radius)
    comps = []
    patches = []
    for i, c in enumerate(uniq):
        others = [np.asarray(o) for j, o in enumerate(uniq) if j != i]
        own = _round_body_patches(2, R, c)
        comps.append(own)
        for motion, patch in own:
            carving = []
            for o in others:
                carving.append(_carve_outside(motion, patch, o, R))
            patches.append((motion, patch.with_carving(carving)))
    lens_total = 0.0
    if len(uniq) == 2:
        dist = math.dist(uniq[0], uniq[1])
        if dist < 2 * R:
            lens_total = 2 * R * R * math.acos(dist / (2 * R)) - 0.5 * dist * math.sqrt(4 * R * R - dist * dist)
    elif len(uniq) > 2:
        lens_total = float("nan")
    vol = len(uniq) * math.pi * R * R - lens_total
    cs = np.array(uniq)

    def support(v):
        v = np.asarray(v)
        proj = cs @ v
        nv = R * np.linalg.norm(v)
        return float(proj.min() - nv), float(proj.max() + nv)

    def contains(q):
        q = np.asarray(q)
        return np.any(np.sum((q[..., None, :] - cs) ** 2, axis=-1) <= R * R, axis=-1)

    lattice = None
    if exact is not None and len(uniq) <= 2 and all(abs(c[1]) == 0 for c in uniq):
        xs = [Fraction(0)] if len(uniq) == 1 else [Fraction(0), _frac(exact[1])]
        lattice = _union_lattice(xs, _frac(exact[0]))
    return ClosedBody("two_disk_union", 2, tuple(patches), vol, support, contains,
                      lattice=lattice, components=tuple(comps), is_union=True,
                      params={"radius": R, "centers": [list(c) for c in uniq]})


def _carve_outside(motion, patch, other_center, R):
    def g(x):
        p = np.concatenate([x, patch.f(x)[..., None]], axis=-1)
        q = motion.to_global(p)
        return 1.0 - np.sum((q - other_center) ** 2, axis=-1) / (R * R)
    return g


def _union_lattice_single(radius, center):
    _, section, _ = _disk_lattice(radius, center)
    return lambda k, lead: [section(k, lead)]


def _union_lattice(xcenters, R):
    parts = [_disk_lattice(R, (c, 0)) for c in xcenters]

    def lead_bound(k):
        return max(p[0](k) for p in parts)

    def sections(k, lead):
        return [p[1](k, lead) for p in parts]

    def member(k, pts):
        return np.any([p[2](k, pts) for p in parts], axis=0)
    return LatticeData(lead_bound, sections, member)


def boundary_samples_ok(body: ClosedBody, count=1000, seed=0):
    """Worst deviation of the partition-of-unity sum from 1 on sampled points."""
    rng = np.random.default_rng(seed)
    q = body.sample_boundary(count, rng)
    w = body.partition(q)
    return float(np.max(np.abs(w.sum(axis=-1) - 1.0)))
