"""Maximal separated direction nets on the unit sphere and their combinatorics.

A net ``Omega(gamma)`` is a maximal gamma-separated subset of S^2: pairwise
angles are >= gamma and no further direction can be added.  These nets drive
every angular decomposition in the package: covering multiplicities, pair
decompositions at dyadic angular scales, and overlap counts of thickened
null hyperplanes indexed by net directions.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (
    GeometryError,
    angle,
    angles_to,
    check_sign,
    hyperbolic_weights,
    split_spacetime,
    unit_vector,
)

BUILDER_VERSION = "1"

# Greedy construction parameters: candidate density relative to gamma, and
# the consecutive-rejection count that certifies (empirical) maximality.
_CANDIDATES_PER_GAMMA2 = 50.0
_MAX_CANDIDATES = 4_000_000
_REJECTION_RUN = 100_000
_REFILL_BATCH = 8192


class NetError(ValueError):
    pass


def _chord(gamma):
    return 2.0 * math.sin(min(gamma, math.pi) / 2.0)


@dataclass(frozen=True, eq=False)
class SphereNet:
    """A maximal gamma-separated direction set with angular range queries."""

    gamma: float
    seed: int
    directions: np.ndarray  # (m, 3) unit vectors, insertion order

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "_tree", cKDTree(d))

    def __len__(self):
        return len(self.directions)

    def within_angle(self, direction, phi):
        """Indices of net directions at angle <= phi from `direction`."""
        v = unit_vector(direction, "direction")
        if phi >= math.pi:
            return np.arange(len(self.directions))
        idx = self._tree.query_ball_point(v, _chord(phi) * (1 + 1e-12))
        return np.asarray(sorted(idx), dtype=int)

    def nearest_angle(self, direction):
        """Smallest angle from `direction` to the net."""
        v = unit_vector(direction, "direction")
        dist, _ = self._tree.query(v)
        return 2.0 * math.asin(min(1.0, dist / 2.0))

    def nearest_angles(self, directions):
        """Vectorized nearest-net angle for (n,3) unit directions."""
        dist, _ = self._tree.query(np.asarray(directions, dtype=float))
        return 2.0 * np.arcsin(np.clip(dist / 2.0, 0.0, 1.0))

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "seed": self.seed,
            "builder_version": BUILDER_VERSION,
            "directions": [list(map(float, d)) for d in self.directions],
        }


@dataclass(frozen=True)
class SectorPair:
    """One term of an angular pair decomposition."""

    gamma: float
    omega1: np.ndarray
    omega2: np.ndarray


def _fibonacci_sphere(n):
    """Deterministic low-discrepancy point stream on S^2."""
    i = np.arange(n, dtype=float)
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    z = 1.0 - (2.0 * i + 1.0) / n
    theta = 2.0 * math.pi * i / phi
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([s * np.cos(theta), s * np.sin(theta), z])


class _CellHash:
    """Uniform-grid hash over the cube for chord-radius rejection tests."""

    def __init__(self, chord):
        self.cell = max(chord, 1e-9)
        self.chord2 = chord * chord
        self.table: dict[tuple, list] = {}
        self.points: list = []

    def _key(self, v):
        return (int(math.floor(v[0] / self.cell)),
                int(math.floor(v[1] / self.cell)),
                int(math.floor(v[2] / self.cell)))

    def conflicts(self, v):
        kx, ky, kz = self._key(v)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    pts = self.table.get((kx + dx, ky + dy, kz + dz))
                    if not pts:
                        continue
                    arr = np.asarray(pts)
                    d = arr - v
                    if np.any(np.einsum("ij,ij->i", d, d) < self.chord2):
                        return True
        return False

    def insert(self, v):
        self.table.setdefault(self._key(v), []).append(v)
        self.points.append(v)


def build_net(gamma, seed=0):
    """Construct a maximal gamma-separated direction set, deterministically.

    Greedy insertion over a Fibonacci-spiral candidate stream, followed by a
    seeded uniform refill that stops after a long run of consecutive
    rejections.  The result is reproducible given (gamma, seed).
    """
    if not (0.0 < gamma <= math.pi):
        raise NetError(f"gamma must lie in (0, pi], got {gamma}")
    if gamma == math.pi:
        d = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
        return SphereNet(gamma=gamma, seed=seed, directions=d)

    n_fib = int(min(_MAX_CANDIDATES, max(64, _CANDIDATES_PER_GAMMA2 / gamma ** 2)))
    if _CANDIDATES_PER_GAMMA2 / gamma ** 2 > _MAX_CANDIDATES:
        raise NetError(f"gamma={gamma:g} too small for desk-scale net construction")

    chord = _chord(gamma)
    grid = _CellHash(chord)

    def greedy_pass(points):
        # prefilter each chunk against the accepted set with one tree query,
        # then resolve intra-chunk conflicts sequentially via the cell hash
        chunk = 4096
        for start in range(0, len(points), chunk):
            block = points[start:start + chunk]
            if grid.points:
                tree = cKDTree(np.asarray(grid.points))
                counts = tree.query_ball_point(block, chord, return_length=True)
                block = block[counts == 0]
            for v in block:
                if not grid.conflicts(v):
                    grid.insert(v)

    greedy_pass(_fibonacci_sphere(n_fib))

    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    rejections = 0
    while rejections < _REJECTION_RUN:
        batch = rng.standard_normal((_REFILL_BATCH, 3))
        batch /= np.linalg.norm(batch, axis=1, keepdims=True)
        tree = cKDTree(np.asarray(grid.points))
        counts = tree.query_ball_point(batch, chord, return_length=True)
        clear = np.nonzero(counts == 0)[0]
        if len(clear) == 0:
            rejections += len(batch)
            continue
        # accept the first clear candidate, count the rejections before it,
        # and redraw (insertions can invalidate later batch members)
        first = int(clear[0])
        rejections += first
        grid.insert(batch[first])
        rejections = 0

    return SphereNet(gamma=gamma, seed=seed, directions=np.array(grid.points))


# --------------------------------------------------------------------------
# Disk cache
# --------------------------------------------------------------------------

def _cache_path(cache_dir, gamma, seed):
    tag = f"net_g{gamma:.12g}_s{seed}_v{BUILDER_VERSION}.json"
    return os.path.join(cache_dir, tag)


def load_or_build_net(gamma, seed=0, cache_dir=None):
    """build_net with an optional JSON disk cache keyed by (gamma, seed, version)."""
    if cache_dir is None:
        return build_net(gamma, seed)
    os.makedirs(cache_dir, exist_ok=True)
    path = _cache_path(cache_dir, gamma, seed)
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        if d.get("builder_version") == BUILDER_VERSION:
            return SphereNet(gamma=float(d["gamma"]), seed=int(d["seed"]),
                             directions=np.array(d["directions"], dtype=float))
    net = build_net(gamma, seed)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(net.to_dict(), fh)
    return net


class NetBank:
    """Memoized provider of nets at many angular scales (one seed)."""

    def __init__(self, seed=0, cache_dir=None):
        self.seed = seed
        self.cache_dir = cache_dir
        self._nets: dict[float, SphereNet] = {}

    def get(self, gamma):
        key = round(float(gamma), 14)
        if key not in self._nets:
            self._nets[key] = load_or_build_net(gamma, self.seed, self.cache_dir)
        return self._nets[key]


# --------------------------------------------------------------------------
# Covering and counting
# --------------------------------------------------------------------------

def covering_multiplicity(net, xi):
    """Number of net directions whose gamma-sector contains xi."""
    xi = np.asarray(xi, dtype=float)
    if not np.any(xi):
        raise NetError("xi must be nonzero")
    v = xi / np.linalg.norm(xi)
    return int(len(net.within_angle(v, net.gamma)))


def covering_multiplicities(net, xis):
    """Vectorized covering multiplicity over rows of (n,3)."""
    xis = np.asarray(xis, dtype=float)
    v = xis / np.linalg.norm(xis, axis=1, keepdims=True)
    counts = net._tree.query_ball_point(v, _chord(net.gamma) * (1 + 1e-12),
                                        return_length=True)
    return np.asarray(counts, dtype=int)


def count_within(net, omega, k):
    """Number of net directions at angle <= k*gamma from omega."""
    if k < 1:
        raise NetError("k must be a positive integer")
    return int(len(net.within_angle(omega, k * net.gamma)))


# --------------------------------------------------------------------------
# Pair decompositions
# --------------------------------------------------------------------------

_GAMMA_FLOOR = 2.0 ** -20


def separated_pair_decomposition(xi1, xi2, gamma_star, m, bank=None):
    """Decompose a transversal frequency pair into separated dyadic sectors.

    Returns the list of (gamma, omega1, omega2) with gamma a dyadic fraction
    of gamma_star, xi_j inside the gamma-sector of omega_j, and the sector
    centers separated by m*gamma <= theta(omega1, omega2) <= M*gamma where
    M = 2*(1 + (m+2)/gamma_star).  Nonempty for any transversal pair.
    """
    if not (0.0 < gamma_star <= 1.0):
        raise NetError("gamma_star must lie in (0, 1]")
    if m < 3:
        raise NetError("m must be an integer >= 3")
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    if not np.any(xi1) or not np.any(xi2):
        raise NetError("xi1, xi2 must be nonzero")
    th = angle(xi1, xi2)
    if th == 0.0:
        raise NetError("separated decomposition requires theta(xi1, xi2) > 0")
    bank = bank if bank is not None else _default_bank()
    M = 2.0 * (1.0 + (m + 2) / gamma_star)

    v1 = xi1 / np.linalg.norm(xi1)
    v2 = xi2 / np.linalg.norm(xi2)
    out = []
    gamma = gamma_star
    while gamma >= _GAMMA_FLOOR:
        # pairs require: th <= theta(w1,w2) + 2*gamma <= (M+2)*gamma
        # and theta(w1,w2) >= m*gamma requires th >= (m-2)*gamma
        if th >= (m - 2) * gamma and th <= (M + 2) * gamma:
            net = bank.get(gamma)
            i1 = net.within_angle(v1, gamma)
            i2 = net.within_angle(v2, gamma)
            if len(i1) and len(i2):
                w1 = net.directions[i1]
                w2 = net.directions[i2]
                dots = np.clip(w1 @ w2.T, -1.0, 1.0)
                ths = np.arccos(dots)
                keep = (ths >= m * gamma) & (ths <= M * gamma)
                for a, b in zip(*np.nonzero(keep)):
                    out.append(SectorPair(gamma, w1[a].copy(), w2[b].copy()))
        elif th > (M + 2) * gamma:
            break
        gamma /= 2.0
    return out


def near_pair_decomposition(xi1, xi2, gamma, k, bank=None):
    """Cover a close frequency pair by nearby net sectors at a single scale.

    Requires theta(xi1, xi2) <= k*gamma; returns all (omega1, omega2) in the
    gamma-net with xi_j in the gamma-sector of omega_j and
    theta(omega1, omega2) <= (k+2)*gamma.
    """
    if not (0.0 < gamma < 1.0):
        raise NetError("gamma must lie in (0, 1)")
    if k < 1:
        raise NetError("k must be a positive integer")
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    if not np.any(xi1) or not np.any(xi2):
        raise NetError("xi1, xi2 must be nonzero")
    th = angle(xi1, xi2)
    if th > k * gamma:
        raise NetError(f"theta(xi1, xi2)={th:.4g} exceeds k*gamma={k * gamma:.4g}")
    bank = bank if bank is not None else _default_bank()
    net = bank.get(gamma)
    v1 = xi1 / np.linalg.norm(xi1)
    v2 = xi2 / np.linalg.norm(xi2)
    i1 = net.within_angle(v1, gamma)
    i2 = net.within_angle(v2, gamma)
    out = []
    w1 = net.directions[i1]
    w2 = net.directions[i2]
    if len(i1) and len(i2):
        dots = np.clip(w1 @ w2.T, -1.0, 1.0)
        ths = np.arccos(dots)
        keep = ths <= (k + 2) * gamma
        for a, b in zip(*np.nonzero(keep)):
            out.append(SectorPair(gamma, w1[a].copy(), w2[b].copy()))
    return out


_BANK = None


def _default_bank():
    global _BANK
    if _BANK is None:
        _BANK = NetBank(seed=0)
    return _BANK


# --------------------------------------------------------------------------
# Hyperplane overlap
# --------------------------------------------------------------------------

def hyperplane_overlap_count(net, omega0, gamma_prime, d, N, X):
    """Count net directions near omega0 whose thickened null hyperplane holds X.

    Returns (count, bound) with bound = gamma'/gamma + d/(N gamma^2); the
    harness asserts count <= C * bound for the calibrated fixture C.  X must
    have |xi| within a factor 2 of N.
    """
    gamma = net.gamma
    if not (0.0 < gamma < gamma_prime < 1.0):
        raise NetError("need 0 < gamma < gamma_prime < 1")
    if d <= 0 or N <= 0:
        raise NetError("d, N must be positive")
    tau, xi = split_spacetime(X)
    r = float(np.linalg.norm(xi))
    if not (N / 2 <= r <= 2 * N):
        raise NetError(f"|xi|={r:g} not comparable to N={N:g}")
    idx = net.within_angle(omega0, gamma_prime)
    dirs = net.directions[idx]
    vals = np.abs(-tau + dirs @ xi)
    count = int(np.count_nonzero(vals <= d))
    bound = gamma_prime / gamma + d / (N * gamma * gamma)
    return count, bound


def sector_in_hyperplane_check(sign, N, L, gamma, omega, X, c=4.0):
    """Check the sector-to-hyperplane inclusion at thickness c*max(L, N gamma^2).

    Returns True unless X lies in the (sign, N, L, gamma, omega) cone sector
    but outside the thickened hyperplane; c is the calibrated fixture.
    """
    check_sign(sign)
    if not (0.0 < gamma < 1.0):
        raise NetError("gamma must lie in (0, 1)")
    omega = unit_vector(omega)
    tau, xi = split_spacetime(X)
    r = float(np.linalg.norm(xi))
    in_sector = (
        r > N / 2
        and r <= N
        and abs(-tau + sign * r) <= L
        and r > 0
        and angle(sign * xi, omega) <= gamma
    )
    if not in_sector:
        return True
    dthick = c * max(L, N * gamma * gamma)
    return abs(-tau + float(xi @ omega)) <= dthick


def hyperplane_membership(omega, d, pts4):
    """Vectorized |-tau + xi.omega| <= d over (n,4) points."""
    pts4 = np.asarray(pts4, dtype=float)
    return np.abs(-pts4[:, 0] + pts4[:, 1:] @ np.asarray(omega, dtype=float)) <= d
