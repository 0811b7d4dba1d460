"""Frequency-space geometry: angles, signed cone weights, and tagged regions.

Conventions used throughout the package:

* A spatial frequency ``xi`` is a length-3 vector; a spacetime frequency
  ``X = (tau, xi)`` is a length-4 vector laid out as ``(tau, x, y, z)``.
* A sign is the integer ``+1`` or ``-1``.
* All regions answer membership deterministically.  Boundaries are closed
  (``<=``) except the inner edge of dyadic annuli, which is open
  (``N/2 < |xi| <= N``).  The zero spatial frequency is excluded from every
  cone and angular-sector membership.
* 3-d regions constrain the spatial frequency only; 4-d regions constrain
  ``(tau, xi)``.  Mixing them inside ``Intersect``/``Union`` lifts the 3-d
  members to ``R x A`` (tau unconstrained), matching how spatial Fourier
  multipliers act on spacetime functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

PLUS = 1
MINUS = -1
SIGNS = (PLUS, MINUS)

_UNIT_TOL = 1e-6


class GeometryError(ValueError):
    """Domain or usage error in a geometric operation."""


def _as_vec(v, length, name="vector"):
    a = np.asarray(v, dtype=float)
    if a.shape != (length,):
        raise GeometryError(f"{name} must have shape ({length},), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise GeometryError(f"{name} must be finite")
    return a


def unit_vector(v, name="omega"):
    """Validate and renormalize a direction vector.

    Accepts vectors whose norm differs from 1 by less than 1e-6 and
    renormalizes them; anything farther from the sphere is rejected.
    """
    a = _as_vec(v, 3, name)
    n = float(np.linalg.norm(a))
    if abs(n - 1.0) >= _UNIT_TOL:
        raise GeometryError(f"{name} must be a unit vector (|{name}| = {n:.8g})")
    return a / n


def check_sign(s, name="sign"):
    if s not in SIGNS:
        raise GeometryError(f"{name} must be +1 or -1, got {s!r}")
    return int(s)


def split_spacetime(X):
    """Split a spacetime point into (tau, xi)."""
    a = _as_vec(X, 4, "spacetime point")
    return float(a[0]), a[1:]


def spacetime(tau, xi):
    """Assemble a spacetime point (tau, xi) as a length-4 array."""
    xi = _as_vec(xi, 3, "xi")
    return np.concatenate(([float(tau)], xi))


# --------------------------------------------------------------------------
# Angles and weights
# --------------------------------------------------------------------------

def angle(a, b):
    """Angle in [0, pi] between nonzero 3-vectors.

    Computed as atan2(|a x b|, a . b), which is accurate near both 0 and pi
    (a clamped arccos of the normalized dot product loses ~8 digits near the
    antipodal configuration).
    """
    a = _as_vec(a, 3, "a")
    b = _as_vec(b, 3, "b")
    if not np.any(a) or not np.any(b):
        raise GeometryError("angle requires nonzero vectors")
    cross = np.linalg.norm(np.cross(a, b))
    return math.atan2(cross, float(np.dot(a, b)))


def angles_to(points, direction):
    """Vectorized angle between each row of `points` (n,3) and `direction`."""
    pts = np.asarray(points, dtype=float)
    d = np.asarray(direction, dtype=float)
    dots = pts @ d
    cross = np.cross(pts, d[None, :])
    return np.arctan2(np.linalg.norm(cross, axis=-1), dots)


def angles_between(a, b):
    """Vectorized angle between matching rows of (n,3) arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dots = np.sum(a * b, axis=-1)
    cross = np.cross(a, b)
    return np.arctan2(np.linalg.norm(cross, axis=-1), dots)


def hyperbolic_weight(X, sign):
    """Distance-to-cone weight -tau +/- |xi| of a spacetime point."""
    tau, xi = split_spacetime(X)
    s = check_sign(sign)
    return -tau + s * float(np.linalg.norm(xi))


def hyperbolic_weights(pts4, sign):
    """Vectorized hyperbolic weight over rows of a (n,4) array."""
    pts = np.asarray(pts4, dtype=float)
    return -pts[:, 0] + sign * np.linalg.norm(pts[:, 1:], axis=1)


def elliptic_weight(X):
    """|xi| of a spacetime point."""
    _, xi = split_spacetime(X)
    return float(np.linalg.norm(xi))


def angle_identity_defect(a, b, which):
    """Left side and quadratic comparator of the two norm/angle identities.

    For ``which == "sum"`` returns ``(|a|+|b|-|a+b|, min(|a|,|b|) theta^2)``;
    for ``which == "difference"`` returns
    ``(|a-b| - ||a|-|b||, |a||b| theta^2 / |a-b|)``.  The two entries are
    comparable with absolute constants; the calibrated window lives in the
    fixtures file.
    """
    a = _as_vec(a, 3, "a")
    b = _as_vec(b, 3, "b")
    if not np.any(a) or not np.any(b):
        raise GeometryError("angle_identity_defect requires nonzero vectors")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    th = angle(a, b)
    if which == "sum":
        lhs = na + nb - float(np.linalg.norm(a + b))
        comparator = min(na, nb) * th * th
    elif which == "difference":
        nd = float(np.linalg.norm(a - b))
        if nd == 0.0:
            raise GeometryError("difference identity requires a != b")
        lhs = nd - abs(na - nb)
        comparator = na * nb * th * th / nd
    else:
        raise GeometryError(f"which must be 'sum' or 'difference', got {which!r}")
    return lhs, comparator


def disk_contains_projected_rectangle(beta, theta, probe, x=None):
    """Evaluate the disk-vs-projected-rectangle containment pair.

    A spherical disk of radius ``theta`` is centered at
    ``omega1 = (cos beta, 0, sin beta)``.  A subset of the upper hemisphere
    is carved out by conditions on the (xi1, xi2) projection: a rectangle
    when ``beta >= theta``, a half-plane strip when the disk dips below the
    equator (``beta < theta``).  Returns ``(in_rectangle_set, in_disk)`` for
    the probe; the geometric containment claim is that the first implies
    the second.

    ``x`` is the free half-width parameter of the rectangle construction,
    valid in (0, sin theta]; the default is sin(theta)/sqrt(2) in the
    rectangle case, and the canonical equator crossing in the strip case.
    """
    if not (0.0 < beta <= math.pi / 2):
        raise GeometryError("beta must lie in (0, pi/2]")
    if not (0.0 < theta <= math.pi / 2):
        raise GeometryError("theta must lie in (0, pi/2]")
    p = unit_vector(probe, "probe")
    omega1 = np.array([math.cos(beta), 0.0, math.sin(beta)])
    in_disk = angle(p, omega1) <= theta

    dipping = beta < theta
    if dipping:
        x_val = math.sqrt(max(0.0, 1.0 - math.cos(theta) ** 2 / math.cos(beta) ** 2))
    else:
        x_val = float(x) if x is not None else math.sin(theta) / math.sqrt(2.0)
        if not (0.0 < x_val <= math.sin(theta)):
            raise GeometryError("x must lie in (0, sin theta]")
    y_val = math.sin(beta) * math.sqrt(max(0.0, math.sin(theta) ** 2 - x_val ** 2))
    center1 = math.cos(beta) * math.cos(theta)

    upper = p[2] > 0.0
    in_unit_disk = p[0] ** 2 + p[1] ** 2 < 1.0
    if dipping:
        in_rect = p[0] >= center1 - y_val and abs(p[1]) <= x_val
    else:
        in_rect = abs(p[0] - center1) <= y_val and abs(p[1]) <= x_val
    return bool(upper and in_unit_disk and in_rect), bool(in_disk)


# --------------------------------------------------------------------------
# Regions
# --------------------------------------------------------------------------

_REGION_KINDS: dict[str, type] = {}


def _register(cls):
    _REGION_KINDS[cls.kind] = cls
    return cls


class Region:
    """Base class for tagged frequency-space sets."""

    kind: str = "abstract"
    dim: int = 0

    # -- membership ---------------------------------------------------

    def mask(self, pts):
        """Boolean membership for an (n, dim) array of points."""
        raise NotImplementedError

    def contains(self, point):
        """Exact membership predicate for a single point.

        The point dimension must match the region dimension (3 for spatial
        regions, 4 for spacetime regions).
        """
        p = np.asarray(point, dtype=float)
        if p.shape != (self.dim,):
            raise GeometryError(
                f"dimension mismatch: region '{self.kind}' is {self.dim}-d, "
                f"point has shape {p.shape}"
            )
        return bool(self.mask(p[None, :])[0])

    def mask_spacetime(self, pts4):
        """Membership of (n,4) spacetime points, applying 3-d regions to xi."""
        pts4 = np.asarray(pts4, dtype=float)
        if self.dim == 3:
            return self.mask(pts4[:, 1:4])
        return self.mask(pts4)

    # -- extent ---------------------------------------------------------

    def bbox(self):
        """Axis-aligned bounding box as (lo, hi) arrays, or None if unbounded."""
        raise NotImplementedError

    @property
    def bounded(self):
        return self.bbox() is not None

    # -- serialization ----------------------------------------------------

    def to_dict(self):
        raise NotImplementedError

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_dict(d):
        kind = d.get("kind")
        if kind not in _REGION_KINDS:
            raise GeometryError(f"unknown region kind {kind!r}")
        return _REGION_KINDS[kind]._from_dict(d)

    @staticmethod
    def from_json(s):
        return Region.from_dict(json.loads(s))

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


def _interval_to_json(lo, hi):
    return [None if math.isinf(lo) else lo, None if math.isinf(hi) else hi]


def _interval_from_json(pair):
    lo = -math.inf if pair[0] is None else float(pair[0])
    hi = math.inf if pair[1] is None else float(pair[1])
    return lo, hi


@_register
@dataclass(frozen=True, eq=False)
class Ball(Region):
    center: np.ndarray
    radius: float
    kind = "ball"
    dim = 3

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec(self.center, 3, "center"))
        if self.radius <= 0:
            raise GeometryError("ball radius must be positive")

    def mask(self, pts):
        d = np.asarray(pts, dtype=float) - self.center
        return np.einsum("ij,ij->i", d, d) <= self.radius ** 2

    def bbox(self):
        r = self.radius
        return self.center - r, self.center + r

    def to_dict(self):
        return {"kind": self.kind, "center": list(self.center), "radius": self.radius}

    @classmethod
    def _from_dict(cls, d):
        return cls(np.array(d["center"], dtype=float), float(d["radius"]))


@_register
@dataclass(frozen=True, eq=False)
class Annulus(Region):
    """Dyadic spatial annulus N/2 < |xi| <= N."""

    N: float
    kind = "annulus"
    dim = 3

    def __post_init__(self):
        if self.N <= 0:
            raise GeometryError("annulus N must be positive")

    def mask(self, pts):
        r2 = np.einsum("ij,ij->i", pts, pts)
        return (r2 > (self.N / 2) ** 2) & (r2 <= self.N ** 2)

    def bbox(self):
        n = self.N
        return -n * np.ones(3), n * np.ones(3)

    def to_dict(self):
        return {"kind": self.kind, "N": self.N}

    @classmethod
    def _from_dict(cls, d):
        return cls(float(d["N"]))


@_register
@dataclass(frozen=True, eq=False)
class ThickSphere(Region):
    """Thickened sphere r - delta <= |xi| <= r + delta."""

    r: float
    delta: float
    kind = "thick_sphere"
    dim = 3

    def __post_init__(self):
        if self.r <= 0 or self.delta <= 0:
            raise GeometryError("thick sphere needs r, delta > 0")

    def mask(self, pts):
        rr = np.linalg.norm(np.asarray(pts, dtype=float), axis=1)
        return (rr >= self.r - self.delta) & (rr <= self.r + self.delta)

    def bbox(self):
        m = self.r + self.delta
        return -m * np.ones(3), m * np.ones(3)

    def to_dict(self):
        return {"kind": self.kind, "r": self.r, "delta": self.delta}

    @classmethod
    def _from_dict(cls, d):
        return cls(float(d["r"]), float(d["delta"]))


@_register
@dataclass(frozen=True, eq=False)
class ThickCone(Region):
    """Thickened truncated cone: |-tau + sign*|xi|| <= L, N/2 < |xi| <= N."""

    sign: int
    N: float
    L: float
    kind = "thick_cone"
    dim = 4

    def __post_init__(self):
        check_sign(self.sign)
        if self.N <= 0 or self.L <= 0:
            raise GeometryError("thick cone needs N, L > 0")

    def mask(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts[:, 1:], axis=1)
        ann = (r > self.N / 2) & (r <= self.N)
        return ann & (np.abs(-pts[:, 0] + self.sign * r) <= self.L)

    def bbox(self):
        n, l = self.N, self.L
        lo_sp = -n * np.ones(3)
        hi_sp = n * np.ones(3)
        if self.sign == PLUS:
            tlo, thi = n / 2 - l, n + l
        else:
            tlo, thi = -n - l, -n / 2 + l
        return np.concatenate(([tlo], lo_sp)), np.concatenate(([thi], hi_sp))

    def to_dict(self):
        return {"kind": self.kind, "sign": self.sign, "N": self.N, "L": self.L}

    @classmethod
    def _from_dict(cls, d):
        return cls(int(d["sign"]), float(d["N"]), float(d["L"]))


def _cap_coordinate_range(omega, gamma, r_lo, r_hi):
    """Coordinate ranges of {r*v : r in [r_lo,r_hi], theta(v,omega) <= gamma}.

    Uses the support function of a geodesic cap: the extreme of e.v over the
    cap is cos(clamp(theta(e,omega) -/+ gamma)).
    """
    lo = np.empty(3)
    hi = np.empty(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        th = angle(e, omega) if np.any(omega) else 0.0
        smax = math.cos(max(0.0, th - gamma))
        smin = math.cos(min(math.pi, th + gamma))
        hi[i] = r_hi * smax if smax > 0 else r_lo * smax
        lo[i] = r_hi * smin if smin < 0 else r_lo * smin
    return lo, hi


@_register
@dataclass(frozen=True, eq=False)
class SectorCone(Region):
    """Angular sector of a thickened cone: theta(sign*xi, omega) <= gamma."""

    sign: int
    N: float
    L: float
    gamma: float
    omega: np.ndarray
    kind = "sector_cone"
    dim = 4

    def __post_init__(self):
        check_sign(self.sign)
        if self.N <= 0 or self.L <= 0:
            raise GeometryError("sector cone needs N, L > 0")
        if not (0 < self.gamma <= math.pi):
            raise GeometryError("sector cone needs gamma in (0, pi]")
        object.__setattr__(self, "omega", unit_vector(self.omega))

    def mask(self, pts):
        pts = np.asarray(pts, dtype=float)
        xi = pts[:, 1:]
        r = np.linalg.norm(xi, axis=1)
        ok = (r > self.N / 2) & (r <= self.N)
        ok &= np.abs(-pts[:, 0] + self.sign * r) <= self.L
        th = angles_to(self.sign * xi, self.omega)
        return ok & (th <= self.gamma) & (r > 0)

    def bbox(self):
        lo_sp, hi_sp = _cap_coordinate_range(
            self.sign * self.omega, self.gamma, self.N / 2, self.N
        )
        if self.sign == MINUS:
            lo_sp, hi_sp = -hi_sp, -lo_sp
        if self.sign == PLUS:
            tlo, thi = self.N / 2 - self.L, self.N + self.L
        else:
            tlo, thi = -self.N - self.L, -self.N / 2 + self.L
        return np.concatenate(([tlo], lo_sp)), np.concatenate(([thi], hi_sp))

    def to_dict(self):
        return {
            "kind": self.kind,
            "sign": self.sign,
            "N": self.N,
            "L": self.L,
            "gamma": self.gamma,
            "omega": list(self.omega),
        }

    @classmethod
    def _from_dict(cls, d):
        return cls(int(d["sign"]), float(d["N"]), float(d["L"]),
                   float(d["gamma"]), np.array(d["omega"], dtype=float))


@_register
@dataclass(frozen=True, eq=False)
class AngularSector(Region):
    """Spatial sector theta(xi, omega) <= gamma (zero frequency excluded)."""

    omega: np.ndarray
    gamma: float
    kind = "angular_sector"
    dim = 3

    def __post_init__(self):
        object.__setattr__(self, "omega", unit_vector(self.omega))
        if not (0 < self.gamma <= math.pi):
            raise GeometryError("angular sector needs gamma in (0, pi]")

    def mask(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts, axis=1)
        return (r > 0) & (angles_to(pts, self.omega) <= self.gamma)

    def bbox(self):
        return None

    def to_dict(self):
        return {"kind": self.kind, "omega": list(self.omega), "gamma": self.gamma}

    @classmethod
    def _from_dict(cls, d):
        return cls(np.array(d["omega"], dtype=float), float(d["gamma"]))


@_register
@dataclass(frozen=True, eq=False)
class Tube(Region):
    """Spacetime tube R x T_r(omega): spatial distance to the axis <= r."""

    r: float
    omega: np.ndarray
    kind = "tube"
    dim = 4

    def __post_init__(self):
        if self.r <= 0:
            raise GeometryError("tube radius must be positive")
        object.__setattr__(self, "omega", unit_vector(self.omega))

    def mask(self, pts):
        xi = np.asarray(pts, dtype=float)[:, 1:]
        along = xi @ self.omega
        perp2 = np.einsum("ij,ij->i", xi, xi) - along ** 2
        return perp2 <= self.r ** 2

    def bbox(self):
        return None

    def to_dict(self):
        return {"kind": self.kind, "r": self.r, "omega": list(self.omega)}

    @classmethod
    def _from_dict(cls, d):
        return cls(float(d["r"]), np.array(d["omega"], dtype=float))


@_register
@dataclass(frozen=True, eq=False)
class Slab(Region):
    """Spatial slab xi . omega in [lo, hi] (either end may be infinite)."""

    omega: np.ndarray
    lo: float
    hi: float
    kind = "slab"
    dim = 3

    def __post_init__(self):
        object.__setattr__(self, "omega", unit_vector(self.omega))
        if not self.lo < self.hi:
            raise GeometryError("slab interval must satisfy lo < hi")

    def mask(self, pts):
        s = np.asarray(pts, dtype=float) @ self.omega
        return (s >= self.lo) & (s <= self.hi)

    def bbox(self):
        return None

    def to_dict(self):
        return {"kind": self.kind, "omega": list(self.omega),
                "interval": _interval_to_json(self.lo, self.hi)}

    @classmethod
    def _from_dict(cls, d):
        lo, hi = _interval_from_json(d["interval"])
        return cls(np.array(d["omega"], dtype=float), lo, hi)


@_register
@dataclass(frozen=True, eq=False)
class NullHyperplane(Region):
    """Thickened null hyperplane |-tau + xi . omega| <= d."""

    d: float
    omega: np.ndarray
    kind = "null_hyperplane"
    dim = 4

    def __post_init__(self):
        if self.d <= 0:
            raise GeometryError("hyperplane thickness must be positive")
        object.__setattr__(self, "omega", unit_vector(self.omega))

    def mask(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.abs(-pts[:, 0] + pts[:, 1:] @ self.omega) <= self.d

    def bbox(self):
        return None

    def to_dict(self):
        return {"kind": self.kind, "d": self.d, "omega": list(self.omega)}

    @classmethod
    def _from_dict(cls, d):
        return cls(float(d["d"]), np.array(d["omega"], dtype=float))


@_register
@dataclass(frozen=True, eq=False)
class HalfSpaceCone(Region):
    """Spacetime set of xi at angle >= alpha from the plane orthogonal to omega.

    Membership: |xi . omega| >= |xi| sin(alpha), xi != 0; tau is free.
    """

    omega: np.ndarray
    alpha: float
    kind = "half_space_cone"
    dim = 4

    def __post_init__(self):
        object.__setattr__(self, "omega", unit_vector(self.omega))
        if not (0 < self.alpha <= math.pi / 2):
            raise GeometryError("alpha must lie in (0, pi/2]")

    def mask(self, pts):
        xi = np.asarray(pts, dtype=float)[:, 1:]
        r = np.linalg.norm(xi, axis=1)
        return (r > 0) & (np.abs(xi @ self.omega) >= r * math.sin(self.alpha))

    def bbox(self):
        return None

    def to_dict(self):
        return {"kind": self.kind, "omega": list(self.omega), "alpha": self.alpha}

    @classmethod
    def _from_dict(cls, d):
        return cls(np.array(d["omega"], dtype=float), float(d["alpha"]))


@_register
@dataclass(frozen=True, eq=False)
class TimesR(Region):
    """Lift of a spatial region to spacetime: R x A (tau unconstrained)."""

    inner: Region
    kind = "times_r"
    dim = 4

    def __post_init__(self):
        if self.inner.dim != 3:
            raise GeometryError("times_r lifts 3-d regions only")

    def mask(self, pts):
        return self.inner.mask(np.asarray(pts, dtype=float)[:, 1:])

    def bbox(self):
        b = self.inner.bbox()
        if b is None:
            return None
        return None  # tau unconstrained

    def spatial_bbox(self):
        return self.inner.bbox()

    def to_dict(self):
        return {"kind": self.kind, "inner": self.inner.to_dict()}

    @classmethod
    def _from_dict(cls, d):
        return cls(Region.from_dict(d["inner"]))


@_register
@dataclass(frozen=True, eq=False)
class Translate(Region):
    inner: Region
    offset: np.ndarray
    kind = "translate"

    def __post_init__(self):
        object.__setattr__(
            self, "offset", _as_vec(self.offset, self.inner.dim, "offset")
        )

    @property
    def dim(self):
        return self.inner.dim

    def mask(self, pts):
        return self.inner.mask(np.asarray(pts, dtype=float) - self.offset)

    def bbox(self):
        b = self.inner.bbox()
        if b is None:
            return None
        return b[0] + self.offset, b[1] + self.offset

    def to_dict(self):
        return {"kind": self.kind, "inner": self.inner.to_dict(),
                "offset": list(self.offset)}

    @classmethod
    def _from_dict(cls, d):
        return cls(Region.from_dict(d["inner"]), np.array(d["offset"], dtype=float))


@_register
@dataclass(frozen=True, eq=False)
class Reflect(Region):
    """Reflection of a region about the origin."""

    inner: Region
    kind = "reflect"

    @property
    def dim(self):
        return self.inner.dim

    def mask(self, pts):
        return self.inner.mask(-np.asarray(pts, dtype=float))

    def bbox(self):
        b = self.inner.bbox()
        if b is None:
            return None
        return -b[1], -b[0]

    def to_dict(self):
        return {"kind": self.kind, "inner": self.inner.to_dict()}

    @classmethod
    def _from_dict(cls, d):
        return cls(Region.from_dict(d["inner"]))


def _normalize_members(members):
    members = list(members)
    if not members:
        raise GeometryError("need at least one member region")
    dims = {m.dim for m in members}
    if dims == {3} or dims == {4}:
        return members, dims.pop()
    # mixed: lift the spatial members
    return [TimesR(m) if m.dim == 3 else m for m in members], 4


@_register
@dataclass(frozen=True, eq=False)
class Intersect(Region):
    members: tuple
    kind = "intersect"
    _dim: int = field(default=0, repr=False)

    def __init__(self, members):
        members, dim = _normalize_members(members)
        object.__setattr__(self, "members", tuple(members))
        object.__setattr__(self, "_dim", dim)

    @property
    def dim(self):
        return self._dim

    def mask(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.ones(len(pts), dtype=bool)
        for m in self.members:
            if not out.any():
                break
            out[out] &= m.mask(pts[out])
        return out

    def bbox(self):
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        hyperplanes = []
        for m in self.members:
            if isinstance(m, NullHyperplane):
                hyperplanes.append(m)
            b = m.bbox()
            if b is None and isinstance(m, TimesR):
                sb = m.spatial_bbox()
                if sb is not None:
                    lo[1:] = np.maximum(lo[1:], sb[0])
                    hi[1:] = np.minimum(hi[1:], sb[1])
                continue
            if b is None:
                continue
            lo = np.maximum(lo, b[0])
            hi = np.minimum(hi, b[1])
        # a null hyperplane bounds tau once the spatial box is finite
        for hp in hyperplanes:
            if np.all(np.isfinite(lo[1:])) and np.all(np.isfinite(hi[1:])):
                corners = np.array(
                    [[lo[i + 1], hi[i + 1]] for i in range(3)], dtype=float
                )
                vals = []
                for ix in range(2):
                    for iy in range(2):
                        for iz in range(2):
                            xi = np.array(
                                [corners[0][ix], corners[1][iy], corners[2][iz]]
                            )
                            vals.append(float(xi @ hp.omega))
                lo[0] = max(lo[0], min(vals) - hp.d)
                hi[0] = min(hi[0], max(vals) + hp.d)
        if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)):
            return None
        return lo, hi

    def to_dict(self):
        return {"kind": self.kind, "members": [m.to_dict() for m in self.members]}

    @classmethod
    def _from_dict(cls, d):
        return cls([Region.from_dict(m) for m in d["members"]])


@_register
@dataclass(frozen=True, eq=False)
class Union(Region):
    members: tuple
    kind = "union"
    _dim: int = field(default=0, repr=False)

    def __init__(self, members):
        members, dim = _normalize_members(members)
        object.__setattr__(self, "members", tuple(members))
        object.__setattr__(self, "_dim", dim)

    @property
    def dim(self):
        return self._dim

    def mask(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(len(pts), dtype=bool)
        for m in self.members:
            rest = ~out
            if not rest.any():
                break
            out[rest] |= m.mask(pts[rest])
        return out

    def bbox(self):
        boxes = [m.bbox() for m in self.members]
        if any(b is None for b in boxes):
            return None
        lo = np.min([b[0] for b in boxes], axis=0)
        hi = np.max([b[1] for b in boxes], axis=0)
        return lo, hi

    def to_dict(self):
        return {"kind": self.kind, "members": [m.to_dict() for m in self.members]}

    @classmethod
    def _from_dict(cls, d):
        return cls([Region.from_dict(m) for m in d["members"]])


def contains(region, point):
    """Membership predicate; the point dimension must match the region's."""
    return region.contains(point)


def slab(omega, lo, hi):
    """Convenience constructor for a finite spatial slab."""
    return Slab(np.asarray(omega, dtype=float), float(lo), float(hi))
