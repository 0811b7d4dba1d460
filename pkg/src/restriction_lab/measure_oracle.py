"""Volumes and surface areas behind the estimates: exact, Monte Carlo, quadrature.

Three kinds of measures are computed here:

* hit-or-miss Monte Carlo volumes of arbitrary bounded regions (the oracle
  against which every closed form is cross-checked),
* exact volumes of thickened-sphere intersections via one-dimensional
  slicing (the integrands are piecewise quadratic, so Simpson evaluation on
  the pieces is exact up to rounding),
* surface areas of focus-centered patches of revolution quadrics cut by a
  thickened plane, by Gauss-Legendre quadrature in the axial variable with
  the analytic arc length in the rotation angle.

Every "<<" smallness hypothesis is concretized as a factor-of-4 (or /8)
inequality; the absolute constants hiding in the bounds are calibrated once
and frozen in the fixtures file.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, Region, check_sign, _as_vec

_MC_SUBSTREAMS = 16


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class MeasureEstimate:
    """A volume or area value with its sampling error.

    stderr is zero exactly when the method is exact.
    """

    value: float
    stderr: float
    n_samples: int
    method: str  # "exact" | "mc" | "quadrature"

    def __post_init__(self):
        if self.value < 0:
            raise MeasureError("measure must be nonnegative")
        if (self.method == "exact") != (self.stderr == 0.0):
            raise MeasureError("stderr must be 0 iff method is exact")

    def agrees_with(self, other, k=3.0):
        """Two-sided k-sigma agreement using the combined stderr."""
        s = math.hypot(self.stderr, other.stderr)
        return abs(self.value - other.value) <= k * s


@dataclass(frozen=True)
class QuadricSurface:
    """Surface of revolution of an ellipse or hyperbola about the x-axis.

    ``focus_sign`` selects which focus hosts the query ball: the focus at
    (focus_sign * c, 0, 0) with c = sqrt(a^2 - b^2) for the ellipsoid and
    c = sqrt(a^2 + b^2) for the hyperboloid (where it also selects the
    sheet facing that focus).
    """

    kind: str  # "ellipsoid" | "hyperboloid_sheet"
    a: float
    b: float
    focus_sign: int = 1

    def __post_init__(self):
        if self.kind not in ("ellipsoid", "hyperboloid_sheet"):
            raise MeasureError(f"unknown quadric kind {self.kind!r}")
        if not (self.a >= self.b > 0):
            raise MeasureError("need a >= b > 0")
        check_sign(self.focus_sign)

    @property
    def focal_distance(self):
        if self.kind == "ellipsoid":
            return math.sqrt(self.a ** 2 - self.b ** 2)
        return math.sqrt(self.a ** 2 + self.b ** 2)

    @property
    def min_focus_distance(self):
        """Distance from the hosting focus to the surface: a -/+ c ~ b^2/a."""
        if self.kind == "ellipsoid":
            return self.a - self.focal_distance
        return self.focal_distance - self.a

    def profile(self, x):
        """Radius f(x) of the revolution profile."""
        x = np.asarray(x, dtype=float)
        if self.kind == "ellipsoid":
            return (self.b / self.a) * np.sqrt(np.maximum(0.0, self.a ** 2 - x ** 2))
        return (self.b / self.a) * np.sqrt(np.maximum(0.0, x ** 2 - self.a ** 2))

    def measure_factor(self, x):
        """f(x) sqrt(1 + f'(x)^2) in closed form."""
        x = np.asarray(x, dtype=float)
        if self.kind == "ellipsoid":
            inner = self.a ** 2 - x ** 2 + (self.b ** 2 / self.a ** 2) * x ** 2
        else:
            inner = x ** 2 - self.a ** 2 + (self.b ** 2 / self.a ** 2) * x ** 2
        return (self.b / self.a) * np.sqrt(np.maximum(0.0, inner))


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------

def mc_volume(region, n, seed=0):
    """Unbiased hit-or-miss volume estimate over the region's bounding box.

    Samples are drawn in 16 seeded substreams derived from (seed, worker id)
    and merged by summation, so the result is identical however the streams
    are scheduled.
    """
    if n < 1000:
        raise MeasureError("mc_volume needs n >= 1000")
    box = region.bbox()
    if box is None:
        raise MeasureError(f"region '{region.kind}' is unbounded")
    lo, hi = box
    span = hi - lo
    box_vol = float(np.prod(span))
    if box_vol == 0.0:
        return MeasureEstimate(0.0, 0.0, int(n), "exact")

    streams = np.random.SeedSequence([int(seed), 0xAB]).spawn(_MC_SUBSTREAMS)
    counts = np.full(_MC_SUBSTREAMS, n // _MC_SUBSTREAMS, dtype=int)
    counts[: n % _MC_SUBSTREAMS] += 1
    hits = 0
    for ss, cnt in zip(streams, counts):
        rng = np.random.default_rng(ss)
        done = 0
        while done < cnt:
            m = min(cnt - done, 500_000)
            pts = lo + rng.random((m, len(lo))) * span
            hits += int(np.count_nonzero(region.mask(pts)))
            done += m
    p = hits / n
    value = p * box_vol
    stderr = box_vol * math.sqrt(max(p * (1.0 - p), 0.0) / n)
    if stderr == 0.0 and 0 < hits < n:
        stderr = box_vol / n
    if stderr == 0.0:
        stderr = box_vol / n  # degenerate all-in / all-out draws
    return MeasureEstimate(value, stderr, int(n), "mc")


# --------------------------------------------------------------------------
# Exact shell volumes by axial slicing
# --------------------------------------------------------------------------

def slab_sphere_volume(rho, eps, a, b):
    """Exact volume of the shell S_eps(rho) cut to the slab a < xi^1 < b.

    Equals 4*pi*rho*eps*(b-a) when [a, b] sits inside [-(rho-eps), rho-eps].
    """
    if not (0 < eps <= rho / 4):
        raise MeasureError("need 0 < eps <= rho/4")
    if not a < b:
        raise MeasureError("need a < b")
    lo = max(a, -(rho + eps))
    hi = min(b, rho + eps)
    if lo >= hi:
        return MeasureEstimate(0.0, 0.0, 0, "exact")

    rin = rho - eps

    def antideriv_outer(x):
        # integral of pi*((rho+eps)^2 - x^2)
        return math.pi * ((rho + eps) ** 2 * x - x ** 3 / 3.0)

    def antideriv_inner(x):
        # integral of pi*((rho-eps)^2 - x^2)
        return math.pi * (rin ** 2 * x - x ** 3 / 3.0)

    pieces = sorted({lo, hi, max(lo, min(hi, -rin)), max(lo, min(hi, rin))})
    total = 0.0
    for x0, x1 in zip(pieces[:-1], pieces[1:]):
        if x1 <= x0:
            continue
        total += antideriv_outer(x1) - antideriv_outer(x0)
        mid = 0.5 * (x0 + x1)
        if abs(mid) < rin:  # inner sphere present on this piece
            total -= antideriv_inner(x1) - antideriv_inner(x0)
    return MeasureEstimate(max(total, 0.0), 0.0, 0, "exact")


def _linear_root(c0_minus_d0, c1_minus_d1):
    """Root of (c0 - d0) + (c1 - d1) x = 0, or None."""
    if c1_minus_d1 == 0.0:
        return None
    return -c0_minus_d0 / c1_minus_d1


def sphere_sphere_volume(r, delta, R, Delta, xi0):
    """Exact volume of S_delta(r) intersected with the shifted shell S_Delta(R).

    Reduces to one axial integral of ring-overlap areas; the integrand is
    piecewise quadratic with explicitly computable breakpoints, so Simpson
    evaluation per piece is exact.  Also returns the transversality bound
    r*R*delta*Delta/|xi0|.
    """
    if not (0 < delta <= r / 4):
        raise MeasureError("need 0 < delta <= r/4")
    if not (0 < Delta <= R / 4):
        raise MeasureError("need 0 < Delta <= R/4")
    xi0 = _as_vec(xi0, 3, "xi0")
    s = float(np.linalg.norm(xi0))
    if s == 0.0:
        raise MeasureError("concentric shells excluded: xi0 must be nonzero")

    # tops/bottoms of the squared ring radius at axial position x
    def T1(x):
        return (r + delta) ** 2 - x ** 2

    def B1(x):
        return (r - delta) ** 2 - x ** 2

    def T2(x):
        return (R + Delta) ** 2 - (x - s) ** 2

    def B2(x):
        return (R - Delta) ** 2 - (x - s) ** 2

    lo = max(-(r + delta), s - (R + Delta))
    hi = min(r + delta, s + (R + Delta))
    bound = r * R * delta * Delta / s
    if lo >= hi:
        return MeasureEstimate(0.0, 0.0, 0, "exact"), bound

    pts = {lo, hi}
    for v in (
        r + delta, -(r + delta), r - delta, -(r - delta),
        s + (R + Delta), s - (R + Delta), s + (R - Delta), s - (R - Delta),
    ):
        pts.add(v)
    # pairwise crossings: all differences are linear in x (x^2 cancels)
    # T1-T2, B1-B2, T1-B2, T2-B1
    for (c0, c1) in (
        ((r + delta) ** 2 - (R + Delta) ** 2 + s ** 2, -2 * s),
        ((r - delta) ** 2 - (R - Delta) ** 2 + s ** 2, -2 * s),
        ((r + delta) ** 2 - (R - Delta) ** 2 + s ** 2, -2 * s),
        ((R + Delta) ** 2 - s ** 2 - (r - delta) ** 2, 2 * s),
    ):
        root = _linear_root(c0, c1)
        if root is not None:
            pts.add(root)
    bps = sorted(p for p in pts if lo <= p <= hi)

    def area(x):
        x = np.asarray(x, dtype=float)
        top = np.minimum(T1(x), T2(x))
        bot = np.maximum(np.maximum(B1(x), B2(x)), 0.0)
        return math.pi * np.maximum(top - bot, 0.0)

    total = 0.0
    for x0, x1 in zip(bps[:-1], bps[1:]):
        if x1 - x0 <= 0:
            continue
        f0, fm, f1 = area(np.array([x0, 0.5 * (x0 + x1), x1]))
        total += (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1)
    return MeasureEstimate(float(total), 0.0, 0, "exact"), bound


def proof_route_upper_bound(r, delta, R, Delta, xi0):
    """Upper bound for the shell intersection via the axial-window reduction.

    Membership forces xi^1 into a window of width 2(r*delta + R*Delta)/|xi0|;
    the smaller-product shell restricted to that window bounds the volume.
    """
    xi0 = _as_vec(xi0, 3, "xi0")
    s = float(np.linalg.norm(xi0))
    if s == 0.0:
        raise MeasureError("xi0 must be nonzero")
    mid = (s ** 2 + r ** 2 - R ** 2 + delta ** 2 - Delta ** 2) / (2 * s)
    half = (r * delta + R * Delta) / s
    if r * delta <= R * Delta:
        rho, eps, shift = r, delta, 0.0
    else:
        rho, eps, shift = R, Delta, s
    est = slab_sphere_volume(rho, eps, mid - half - shift, mid + half - shift)
    return est.value


# --------------------------------------------------------------------------
# Cone intersections (Monte Carlo)
# --------------------------------------------------------------------------

def _box_intersection(box1, box2):
    lo = np.maximum(box1[0], box2[0])
    hi = np.minimum(box1[1], box2[1])
    if np.any(lo >= hi):
        return None
    return lo, hi


class _TwoSetIntersection(Region):
    """A ThickCone-style set intersected with the reflection of another about X0/2."""

    kind = "cone_pair_intersection"
    dim = 4

    def __init__(self, region_a, region_b, X0):
        self.a = region_a
        self.b = region_b
        self.X0 = np.asarray(X0, dtype=float)

    def mask(self, pts):
        pts = np.asarray(pts, dtype=float)
        m = self.a.mask(pts)
        if m.any():
            m[m] &= self.b.mask(self.X0 - pts[m])
        return m

    def bbox(self):
        ba = self.a.bbox()
        bb = self.b.bbox()
        if ba is None or bb is None:
            return None
        refl = (self.X0 - bb[1], self.X0 - bb[0])
        return _box_intersection(ba, refl)


def cone_cone_volume(spec1, spec2, X0, n=200_000, seed=0):
    """MC volume of a thickened-cone pair interaction set and its bounds.

    spec_j = (sign, N, L).  The set is the first cone intersected with the
    reflection of the second about X0/2; the bounds map reports the
    equal-parameter bound N^2 L^2, the mixed bound N1^2 L1 L2, and the
    thick-regime fallback N1^3 min(L1, L2).
    """
    from .geometry import ThickCone

    s1, N1, L1 = spec1
    s2, N2, L2 = spec2
    cone1 = ThickCone(check_sign(s1), float(N1), float(L1))
    cone2 = ThickCone(check_sign(s2), float(N2), float(L2))
    X0 = _as_vec(X0, 4, "X0")
    inter = _TwoSetIntersection(cone1, cone2, X0)
    bounds = {
        "equal_cone_N2L2": (min(N1, N2) ** 2) * L1 * L2 if (N1 == N2) else math.nan,
        "mixed_N1sq_L1L2": N1 ** 2 * L1 * L2,
        "thick_N1cu_Lmin": N1 ** 3 * min(L1, L2),
    }
    if inter.bbox() is None:
        return MeasureEstimate(0.0, 0.0, 0, "exact"), bounds
    return mc_volume(inter, n, seed), bounds


def cone_ball_constant(N, L, r, center, n=200_000, seed=0, X0=None):
    """MC volume of the ball-truncated cone interaction set, with bound r*N*L^2.

    The set is A cap (X0 - A) with A the thickened cone over the annulus
    intersected with R x B(center, r).  When X0 is not given, a canonical
    probe family around the doubled ball center (with tau offsets spanning
    the cone thickness) is scanned and the largest volume is returned.
    """
    from .geometry import Ball, Intersect, ThickCone

    if not (0 < r <= N / 8):
        raise MeasureError("need 0 < r <= N/8")
    center = _as_vec(center, 3, "center")
    a_set = Intersect([ThickCone(1, float(N), float(L)),
                       Ball(center, float(r))])
    bound = r * N * L * L

    cnorm = float(np.linalg.norm(center))
    if cnorm == 0.0:
        raise MeasureError("ball center must be nonzero (annulus interaction)")
    xi_star = center if (N / 2 < cnorm <= N) else center * (0.75 * N / cnorm)

    if X0 is not None:
        probes = [np.asarray(X0, dtype=float)]
    else:
        base = 2.0 * float(np.linalg.norm(xi_star))
        probes = [np.concatenate(([base + t], 2.0 * xi_star))
                  for t in (-L, -L / 2, 0.0, L / 2, L)]
    best = MeasureEstimate(0.0, 0.0, 0, "exact")
    for i, p in enumerate(probes):
        inter = _TwoSetIntersection(a_set, a_set, p)
        if inter.bbox() is None:
            continue
        est = mc_volume(inter, n, seed + i)
        if est.value > best.value:
            best = est
    return best, bound


# --------------------------------------------------------------------------
# Quadric surface areas
# --------------------------------------------------------------------------

def _quad_roots(a2, a1, a0):
    """Real roots of a2 x^2 + a1 x + a0, handling degenerate degrees."""
    if a2 == 0.0:
        if a1 == 0.0:
            return []
        return [-a0 / a1]
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0.0:
        return []
    sq = math.sqrt(disc)
    return sorted([(-a1 - sq) / (2 * a2), (-a1 + sq) / (2 * a2)])


def _ball_window(surface, R):
    """x-interval of the surface inside the ball of radius R at the focus."""
    a, b = surface.a, surface.b
    c = surface.focal_distance
    s = surface.focus_sign
    if surface.kind == "ellipsoid":
        # (x - s c)^2 + (b^2/a^2)(a^2 - x^2) <= R^2
        a2 = 1.0 - b * b / (a * a)
        a1 = -2.0 * s * c
        a0 = c * c + b * b - R * R
        dom = (-a, a)
    else:
        # (x - s c)^2 + (b^2/a^2)(x^2 - a^2) <= R^2
        a2 = 1.0 + b * b / (a * a)
        a1 = -2.0 * s * c
        a0 = c * c - b * b - R * R
        dom = (a, math.inf) if s > 0 else (-math.inf, -a)
    roots = _quad_roots(a2, a1, a0)
    if a2 == 0.0 and a1 == 0.0:
        window = (-math.inf, math.inf) if a0 <= 0.0 else None
    elif len(roots) == 2:
        window = (roots[0], roots[1])
    elif len(roots) == 1:
        window = (roots[0], math.inf) if a1 < 0 else (-math.inf, roots[0])
    else:
        window = None if a2 > 0 or a0 > 0 else (-math.inf, math.inf)
    if window is None:
        return None
    lo, hi = max(window[0], dom[0]), min(window[1], dom[1])
    if lo >= hi:
        return None
    return lo, hi


def _profile_line_roots(surface, p, q):
    """Roots of f(x)^2 - (p x + q)^2 = 0 (arc opening/closing points)."""
    a, b = surface.a, surface.b
    if surface.kind == "ellipsoid":
        # (b^2/a^2)(a^2 - x^2) - (px+q)^2
        a2 = -(b * b / (a * a)) - p * p
        a1 = -2.0 * p * q
        a0 = b * b - q * q
    else:
        a2 = (b * b / (a * a)) - p * p
        a1 = -2.0 * p * q
        a0 = -b * b - q * q
    return _quad_roots(a2, a1, a0)


def quadric_area(surface, R, plane, n_quad=64):
    """Area of the quadric patch inside the focus ball and a thickened plane.

    plane = (p, q, delta): the slab between y = p x + q and its parallel
    translate at plane-to-plane distance delta.  Returns the quadrature
    estimate and the transversality bound R*delta.  Outside the calibrated
    parameter regime the value is still computed; use quadric_regime to
    test Eq-regime membership.
    """
    p, q, delta = (float(v) for v in plane)
    if delta <= 0:
        raise MeasureError("plane thickness must be positive")
    if R <= 0:
        raise MeasureError("ball radius must be positive")
    window = _ball_window(surface, R)
    bound = R * delta
    if window is None:
        return MeasureEstimate(0.0, 0.0, 0, "exact"), bound

    lift = delta * math.sqrt(1.0 + p * p)  # delta / cos(beta)

    def g(x):
        return p * x + q

    def h(x):
        return p * x + q + lift

    def arc(x):
        f = surface.profile(x)
        out = np.zeros_like(f)
        pos = f > 0
        fp = f[pos]
        hi = np.clip(h(x[pos]) / fp, -1.0, 1.0)
        lo = np.clip(g(x[pos]) / fp, -1.0, 1.0)
        out[pos] = 2.0 * (np.arcsin(hi) - np.arcsin(lo))
        return out

    def integrand(x):
        return surface.measure_factor(x) * arc(x)

    kink_pts = set(_profile_line_roots(surface, p, q))
    kink_pts |= set(_profile_line_roots(surface, p, q + lift))
    bps = {window[0], window[1]}
    bps |= {v for v in kink_pts if window[0] < v < window[1]}
    if surface.kind == "ellipsoid":
        for v in (-surface.a, surface.a):
            if window[0] < v < window[1]:
                bps.add(v)
    bps = sorted(bps)

    def run(order):
        nodes, weights = np.polynomial.legendre.leggauss(order)

        def gl(lo, hi, fn):
            half = 0.5 * (hi - lo)
            x = lo + half * (nodes + 1.0)
            return half * float(np.sum(weights * fn(x)))

        total = 0.0
        for x0, x1 in zip(bps[:-1], bps[1:]):
            if x1 - x0 <= 1e-300:
                continue
            mid = 0.5 * (x0 + x1)
            if integrand(np.array([mid]))[0] <= 0.0:
                continue
            kink0 = any(abs(x0 - v) < 1e-12 * max(1.0, abs(v)) for v in kink_pts)
            kink1 = any(abs(x1 - v) < 1e-12 * max(1.0, abs(v)) for v in kink_pts)
            # desingularize sqrt-type arc openings with x = endpoint -/+ u^2
            if kink0 and kink1:
                um = math.sqrt(mid - x0)
                total += gl(0.0, um, lambda u: integrand(x0 + u * u) * 2.0 * u)
                um = math.sqrt(x1 - mid)
                total += gl(0.0, um, lambda u: integrand(x1 - u * u) * 2.0 * u)
            elif kink0:
                um = math.sqrt(x1 - x0)
                total += gl(0.0, um, lambda u: integrand(x0 + u * u) * 2.0 * u)
            elif kink1:
                um = math.sqrt(x1 - x0)
                total += gl(0.0, um, lambda u: integrand(x1 - u * u) * 2.0 * u)
            else:
                total += gl(x0, x1, integrand)
        return max(total, 0.0)

    value = run(n_quad)
    coarse = run(max(4, n_quad // 2))
    if value == 0.0 and coarse == 0.0:
        return MeasureEstimate(0.0, 0.0, 0, "exact"), bound
    stderr = max(abs(value - coarse), 1e-12 * value)
    return MeasureEstimate(value, stderr, 0, "quadrature"), bound


def quadric_regime(surface, R, c1=1.0, c2=1.0):
    """Regime flag for the area bound: needs c1*b^2/a <= R <= c2*a."""
    lo = c1 * surface.b ** 2 / surface.a
    hi = c2 * surface.a
    return "in_range" if lo <= R <= hi else "out_of_range"


def tangent_plane_witness(surface, R):
    """The asymptotic-cone tangent slab showing the area bound fails for R >> a.

    For a hyperboloid sheet, returns (p, q, delta) with the slab leaning on
    the tangent plane of the asymptotic cone from the surface side and
    delta = a*b/R (comparable to the cone-to-patch distance).
    """
    if surface.kind != "hyperboloid_sheet":
        raise MeasureError("tangent witness is a hyperboloid configuration")
    a, b = surface.a, surface.b
    delta = a * b / R
    slope = b / a if surface.focus_sign < 0 else -b / a
    p = -slope  # tangent to the cone branch over the hosting sheet
    q = -delta * math.sqrt(1.0 + p * p)
    return (p, q, delta)


# --------------------------------------------------------------------------
# Sweep output
# --------------------------------------------------------------------------

SWEEP_FIELDS = ("op", "params", "value", "stderr", "bound", "ratio")


def append_sweep_rows(path, rows):
    """Append measure-sweep records to a CSV with the documented schema.

    Each row is (op, params, value, stderr, bound, ratio); params is a
    semicolon-joined key=value string.
    """
    new = not os.path.exists(path)
    with open(path, "a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(SWEEP_FIELDS)
        for row in rows:
            w.writerow(row)


def sweep_row(op, params, value, stderr, bound):
    ratio = value / bound if bound > 0 else math.nan
    pstr = ";".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                    for k, v in params.items())
    return (op, pstr, f"{value:.10g}", f"{stderr:.4g}", f"{bound:.10g}",
            f"{ratio:.6g}")
