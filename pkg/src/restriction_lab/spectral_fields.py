"""Sparse frequency-lattice fields, exact convolution products, and norms.

A field is a finite set of spacetime lattice points k in Z^{1+3} with
complex coefficients; the physical frequency of an entry is h*k for the
lattice spacing h.  Products are computed by exact sparse convolution (pair
enumeration with output binning) rather than a dense grid transform: the
supports of interest are thin shells, where sparsity wins by orders of
magnitude and there are no truncation artifacts.

All norms are discrete Plancherel sums, ||u|| = sqrt(h^4 sum |c|^2).  The
continuum statements being tested are scaling statements, so the lattice
constants (2 pi factors, Riemann-sum bias) cancel in every asserted ratio.

Binary serialization (`to_bytes`): little-endian throughout;
header = magic "RLSF" (4 bytes), version uint32, h float64,
n_entries uint64, n_runs uint64.  Then n_runs run records of
(ktau, kx, ky, kz_start) int32 and run length uint32 (20 bytes each),
where a run is a maximal block of entries consecutive in kz with a fixed
(ktau, kx, ky) prefix; then all coefficients as complex128 in run order.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, Region, check_sign

_DEFAULT_ENTRY_CAP = 2_000_000
_DEFAULT_PAIR_CAP = 10_000_000_000
_BLOCK_PAIRS = 4_000_000
_COMPACT_EVERY = 24

_MAGIC = b"RLSF"
_VERSION = 1


class FieldError(ValueError):
    pass


class ResourceError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# Symbols
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Symbol:
    """Weight inserted at each interacting frequency pair.

    kinds: "one", "theta12" (the interaction angle), "sqrt_theta12", and
    "theta12_small" (the angle, cut off above a threshold << 1).
    """

    kind: str
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in ("one", "theta12", "sqrt_theta12", "theta12_small"):
            raise FieldError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "theta12_small":
            if self.threshold is None or not (0.0 < self.threshold < 1.0):
                raise FieldError("theta12_small needs a threshold in (0, 1)")


ONE = Symbol("one")
THETA12 = Symbol("theta12")
SQRT_THETA12 = Symbol("sqrt_theta12")


def theta12_small(threshold=0.125):
    return Symbol("theta12_small", float(threshold))


# --------------------------------------------------------------------------
# Fields
# --------------------------------------------------------------------------

def _lex_order(ks):
    return np.lexsort((ks[:, 3], ks[:, 2], ks[:, 1], ks[:, 0]))


@dataclass(frozen=True, eq=False)
class SparseField:
    """Immutable sparse Fourier-side field on the lattice h * Z^{1+3}."""

    h: float
    ks: np.ndarray      # (n, 4) int64, lexicographically sorted
    coeffs: np.ndarray  # (n,) complex128

    def __post_init__(self):
        if self.h <= 0:
            raise FieldError("lattice spacing must be positive")
        ks = np.ascontiguousarray(np.asarray(self.ks, dtype=np.int64))
        cs = np.ascontiguousarray(np.asarray(self.coeffs, dtype=np.complex128))
        if ks.ndim != 2 or ks.shape[1] != 4 or len(cs) != len(ks):
            raise FieldError("ks must be (n,4) with matching coefficients")
        keep = cs != 0
        ks, cs = ks[keep], cs[keep]
        order = _lex_order(ks)
        ks, cs = ks[order], cs[order]
        ks.setflags(write=False)
        cs.setflags(write=False)
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "coeffs", cs)

    def __len__(self):
        return len(self.ks)

    @property
    def frequencies(self):
        """Physical spacetime frequencies h*k, shape (n, 4)."""
        return self.h * self.ks.astype(float)


def empty_field(h):
    return SparseField(h, np.empty((0, 4), dtype=np.int64),
                       np.empty(0, dtype=np.complex128))


def populate_region(region, h, mode="ones", seed=0, cap=_DEFAULT_ENTRY_CAP):
    """Characteristic or gaussian coefficients on the lattice points of a region.

    mode "ones" puts coefficient 1 on every lattice point inside the region;
    mode "gaussian" draws i.i.d. standard complex normals (unit E|c|^2) in
    deterministic lattice order from the given seed.
    """
    if region.dim != 4:
        raise FieldError("populate_region needs a spacetime (4-d) region")
    box = region.bbox()
    if box is None:
        raise FieldError(f"region '{region.kind}' is unbounded")
    if mode not in ("ones", "gaussian"):
        raise FieldError(f"unknown mode {mode!r}")
    lo, hi = box
    tol = 1e-9
    k_lo = np.ceil(lo / h - tol).astype(np.int64)
    k_hi = np.floor(hi / h + tol).astype(np.int64)
    sizes = np.maximum(k_hi - k_lo + 1, 0)
    total = int(np.prod(sizes.astype(object)))
    if total == 0:
        return empty_field(h)

    found = []
    chunk = 2_000_000
    count = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        ks = np.empty((len(idx), 4), dtype=np.int64)
        rem = idx
        for axis in range(3, -1, -1):
            ks[:, axis] = rem % sizes[axis] + k_lo[axis]
            rem = rem // sizes[axis]
        pts = h * ks.astype(float)
        mask = region.mask(pts)
        hits = ks[mask]
        count += len(hits)
        if count > cap:
            raise ResourceError(
                f"populate_region: entry count exceeds cap ({count} > {cap} "
                f"within the first {min(start + chunk, total)} of {total} "
                "bounding-box lattice points)"
            )
        if len(hits):
            found.append(hits)
    if not found:
        return empty_field(h)
    ks = np.concatenate(found)
    if mode == "ones":
        coeffs = np.ones(len(ks), dtype=np.complex128)
    else:
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xF1E1D]))
        coeffs = (rng.standard_normal(len(ks))
                  + 1j * rng.standard_normal(len(ks))) / math.sqrt(2.0)
    return SparseField(h, ks, coeffs)


def l2_norm(u):
    """Discrete Plancherel norm sqrt(h^4 sum |c|^2)."""
    return u.h ** 2 * math.sqrt(float(np.sum(np.abs(u.coeffs) ** 2)))


def project(u, region):
    """Restrict a field to the entries whose physical frequency lies in region.

    Spatial (3-d) regions are applied to the spatial frequency, matching the
    action of spatial Fourier multipliers on spacetime functions.
    """
    if len(u) == 0:
        return u
    mask = region.mask_spacetime(u.frequencies)
    return SparseField(u.h, u.ks[mask], u.coeffs[mask])


def conjugate_reflect(u):
    """Field with hat(v)(k) = conj(hat(u)(-k)): the transform of conj(u)."""
    return SparseField(u.h, -u.ks, np.conj(u.coeffs))


# --------------------------------------------------------------------------
# Exact sparse convolution
# --------------------------------------------------------------------------

def _pack_info(*key_arrays):
    """Shared linear packing of int 4-vectors into int64 scalars."""
    mins = np.min([k.min(axis=0) for k in key_arrays if len(k)], axis=0)
    maxs = np.max([k.max(axis=0) for k in key_arrays if len(k)], axis=0)
    dims = (maxs - mins + 1).astype(np.int64)
    strides = np.empty(4, dtype=np.int64)
    strides[3] = 1
    for i in (2, 1, 0):
        strides[i] = strides[i + 1] * dims[i + 1]
    if float(strides[0]) * float(dims[0]) > 2 ** 62:
        raise ResourceError("lattice index range too large to pack")
    return mins, strides


def _pack(ks, mins, strides):
    return (ks - mins) @ strides


def _unpack(keys, mins, strides):
    ks = np.empty((len(keys), 4), dtype=np.int64)
    rem = keys
    for i in range(4):
        ks[:, i] = rem // strides[i] + mins[i]
        rem = rem % strides[i]
    return ks


def _pair_weights(symbol, signs, xi1, r1, xi2, r2):
    """Angle-symbol weights for a block of pairs; zero kills the pair.

    xi1: (b,3) block of first-factor spatial frequencies, xi2: (m,3).
    Entries with zero spatial frequency get weight zero for every symbol
    (the interaction angle is undefined there).
    """
    nz = (r1[:, None] > 0) & (r2[None, :] > 0)
    if symbol.kind == "one":
        return nz.astype(float)
    s = float(signs[0] * signs[1])
    dots = s * (xi1 @ xi2.T)
    denom = r1[:, None] * r2[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(nz, dots / np.where(denom > 0, denom, 1.0), 1.0)
    theta = np.arccos(np.clip(cos, -1.0, 1.0))
    if symbol.kind == "theta12":
        w = theta
    elif symbol.kind == "sqrt_theta12":
        w = np.sqrt(theta)
    else:  # theta12_small
        w = np.where(theta <= symbol.threshold, theta, 0.0)
    return np.where(nz, w, 0.0)


def _reduce(keys, vals):
    uk, inv = np.unique(keys, return_inverse=True)
    sums = np.bincount(inv, weights=vals.real).astype(np.complex128)
    sums += 1j * np.bincount(inv, weights=vals.imag)
    return uk, sums


def bilinear_product(u1, u2, symbol=ONE, signs=(1, 1), output_region=None,
                     pair_cap=_DEFAULT_PAIR_CAP, progress=None):
    """Exact discrete convolution with an angle symbol at each pair.

    Output coefficient at k0 is h^4 * sum over k1+k2=k0 of
    w(k1, k2) * u1hat(k1) * u2hat(k2), with w determined by the symbol and
    the signs entering the interaction angle.  Pairs where either spatial
    frequency vanishes are skipped.  Entries with physical frequency outside
    output_region are dropped.
    """
    if u1.h != u2.h:
        raise FieldError(f"lattice spacing mismatch: {u1.h} vs {u2.h}")
    check_sign(signs[0]), check_sign(signs[1])
    h = u1.h
    n1, n2 = len(u1), len(u2)
    if n1 == 0 or n2 == 0:
        return empty_field(h)
    pairs = n1 * n2
    if pairs > pair_cap:
        raise ResourceError(f"pair count {pairs} exceeds cap {pair_cap}")

    lo = u1.ks.min(axis=0) + u2.ks.min(axis=0)
    hi = u1.ks.max(axis=0) + u2.ks.max(axis=0)
    mins, strides = _pack_info(np.vstack([lo, hi]))
    # pack is affine in k, so pack(k1 + k2) = pack(k1) + pack(k2) + pack(mins)
    pk1 = _pack(u1.ks, mins, strides)
    pk2 = _pack(u2.ks, mins, strides)
    base = int(mins @ strides)

    xi1 = h * u1.ks[:, 1:].astype(float)
    xi2 = h * u2.ks[:, 1:].astype(float)
    r1 = np.linalg.norm(xi1, axis=1)
    r2 = np.linalg.norm(xi2, axis=1)

    block = max(1, _BLOCK_PAIRS // n2)
    acc_keys, acc_vals = [], []
    n_chunks = 0
    done_pairs = 0
    for start in range(0, n1, block):
        stop = min(start + block, n1)
        w = _pair_weights(symbol, signs, xi1[start:stop], r1[start:stop], xi2, r2)
        vals = (u1.coeffs[start:stop, None] * u2.coeffs[None, :]) * w
        keys = pk1[start:stop, None] + pk2[None, :] + base
        keep = vals.reshape(-1) != 0
        uk, sums = _reduce(keys.reshape(-1)[keep], vals.reshape(-1)[keep])
        acc_keys.append(uk)
        acc_vals.append(sums)
        n_chunks += 1
        done_pairs += (stop - start) * n2
        if progress is not None:
            progress(done_pairs, pairs)
        if n_chunks % _COMPACT_EVERY == 0:
            uk, sums = _reduce(np.concatenate(acc_keys), np.concatenate(acc_vals))
            acc_keys, acc_vals = [uk], [sums]

    keys, vals = _reduce(np.concatenate(acc_keys), np.concatenate(acc_vals))
    vals = vals * h ** 4
    ks = _unpack(keys, mins, strides)
    out = SparseField(h, ks, vals)
    if output_region is not None:
        out = project(out, output_region)
    return out


def trilinear_form(u0, u1, u2):
    """The pairing h^8 sum over k1+k2=k0 of conj(u0hat(k0)) u1hat(k1) u2hat(k2).

    Computed by direct pair enumeration against the support of u0 (no field
    is materialized); agrees with <u1*u2, u0> under the discrete inner
    product h^4 sum v conj(w).
    """
    if not (u0.h == u1.h == u2.h):
        raise FieldError("lattice spacing mismatch")
    if len(u0) == 0 or len(u1) == 0 or len(u2) == 0:
        return 0.0 + 0.0j
    h = u0.h
    lo = np.minimum(u0.ks.min(axis=0), u1.ks.min(axis=0) + u2.ks.min(axis=0))
    hi = np.maximum(u0.ks.max(axis=0), u1.ks.max(axis=0) + u2.ks.max(axis=0))
    mins, strides = _pack_info(np.vstack([lo, hi]))
    pk0 = _pack(u0.ks, mins, strides)
    order0 = np.argsort(pk0, kind="stable")
    pk0s = pk0[order0]
    c0s = np.conj(u0.coeffs[order0])
    pk1 = _pack(u1.ks, mins, strides)
    pk2 = _pack(u2.ks, mins, strides)
    base = int(mins @ strides)  # pack(k1+k2) = pack(k1) + pack(k2) + base

    r1 = np.linalg.norm(u1.ks[:, 1:].astype(float), axis=1)
    r2 = np.linalg.norm(u2.ks[:, 1:].astype(float), axis=1)
    nz1 = r1 > 0
    nz2 = r2 > 0

    total = 0.0 + 0.0j
    block = max(1, _BLOCK_PAIRS // len(u2))
    for start in range(0, len(u1), block):
        stop = min(start + block, len(u1))
        keys = (pk1[start:stop, None] + pk2[None, :] + base).reshape(-1)
        vals = (u1.coeffs[start:stop, None] * u2.coeffs[None, :])
        vals = (vals * (nz1[start:stop, None] & nz2[None, :])).reshape(-1)
        pos = np.searchsorted(pk0s, keys)
        pos_clip = np.minimum(pos, len(pk0s) - 1)
        hit = pk0s[pos_clip] == keys
        if hit.any():
            total += np.sum(c0s[pos_clip[hit]] * vals[hit])
    return complex(total * h ** 8)


def inner_product(u, v):
    """Discrete inner product h^4 sum uhat conj(vhat) over the common support."""
    if u.h != v.h:
        raise FieldError("lattice spacing mismatch")
    if len(u) == 0 or len(v) == 0:
        return 0.0 + 0.0j
    lo = np.minimum(u.ks.min(axis=0), v.ks.min(axis=0))
    hi = np.maximum(u.ks.max(axis=0), v.ks.max(axis=0))
    mins, strides = _pack_info(np.vstack([lo, hi]))
    pu = _pack(u.ks, mins, strides)
    pv = _pack(v.ks, mins, strides)
    pos = np.searchsorted(pv, pu)
    pos_clip = np.minimum(pos, len(pv) - 1)
    hit = pv[pos_clip] == pu
    return complex(u.h ** 4 * np.sum(u.coeffs[hit] * np.conj(v.coeffs[pos_clip[hit]])))


# --------------------------------------------------------------------------
# Concentration norms
# --------------------------------------------------------------------------

def _tangent_frame(omega):
    a = np.array([1.0, 0.0, 0.0])
    if abs(float(omega @ a)) > 0.9:
        a = np.array([0.0, 1.0, 0.0])
    t1 = np.cross(omega, a)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(omega, t1)
    return t1, t2


def tube_sup_norm(u, N, r, net, refine=True):
    """Radial-concentration norm (N/r) sup over directions of the tube-restricted norm.

    The supremum is over the net directions plus a deterministic local
    refinement around the best one.  Returns (value, plain_norm); the plain
    norm never exceeds a fixture multiple of the value.
    """
    if r >= N:
        raise FieldError("tube norm needs r < N")
    plain = l2_norm(u)
    if len(u) == 0:
        return 0.0, 0.0
    xi = u.h * u.ks[:, 1:].astype(float)
    rr2 = np.einsum("ij,ij->i", xi, xi)
    ann = (rr2 > (N / 2) ** 2) & (rr2 <= N ** 2)
    w = np.abs(u.coeffs) ** 2 * ann

    def tube_mass(dirs):
        out = np.empty(len(dirs))
        for i, d in enumerate(dirs):
            along = xi @ d
            out[i] = float(np.sum(w * (rr2 - along ** 2 <= r * r)))
        return out

    dirs = net.directions
    sums = np.empty(len(dirs))
    chunk = 512
    for start in range(0, len(dirs), chunk):
        sums[start:start + chunk] = tube_mass(dirs[start:start + chunk])
    best_i = int(np.argmax(sums))
    best_dir = dirs[best_i].copy()
    best = sums[best_i]

    if refine:
        t1, t2 = _tangent_frame(best_dir)
        step = net.gamma / 2.0
        for _ in range(4):
            cand = []
            for (d1, d2) in ((1, 0), (-1, 0), (0, 1), (0, -1),
                             (1, 1), (1, -1), (-1, 1), (-1, -1)):
                v = best_dir + step * (d1 * t1 + d2 * t2)
                cand.append(v / np.linalg.norm(v))
            vals = tube_mass(np.array(cand))
            j = int(np.argmax(vals))
            if vals[j] > best:
                best = vals[j]
                best_dir = cand[j]
                t1, t2 = _tangent_frame(best_dir)
            else:
                step /= 2.0
    value = (N / r) * u.h ** 2 * math.sqrt(best)
    return value, plain


def slab_sup_norm(u, omega, slab_length):
    """Sup over lattice-aligned slab translates of the restricted norm.

    The slabs are xi . omega in [t, t + slab_length] with t running over
    multiples of the lattice spacing.
    """
    if slab_length <= 0:
        raise FieldError("slab length must be positive")
    if len(u) == 0:
        return 0.0
    omega = np.asarray(omega, dtype=float)
    raw = u.h * (u.ks[:, 1:].astype(float) @ omega)
    order = np.argsort(raw, kind="stable")
    proj = raw[order]
    w = (np.abs(u.coeffs) ** 2)[order]
    cw = np.concatenate([[0.0], np.cumsum(w)])
    h = u.h
    k_lo = math.floor((proj[0] - slab_length) / h)
    k_hi = math.ceil(proj[-1] / h)
    ts = h * np.arange(k_lo, k_hi + 1)
    left = np.searchsorted(proj, ts - 1e-12, side="left")
    right = np.searchsorted(proj, ts + slab_length + 1e-12, side="right")
    best = float(np.max(cw[right] - cw[left]))
    return h ** 2 * math.sqrt(best)


def windowed_max_norm(u, omega, window):
    """Max over window translates of the slab-restricted norm (same as
    slab_sup_norm; exposed under the output-side name)."""
    return slab_sup_norm(u, omega, window)


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def to_bytes(u):
    """Serialize to the run-length binary format (see module docstring)."""
    ks, cs = u.ks, u.coeffs
    n = len(ks)
    if n:
        same_prefix = np.all(ks[1:, :3] == ks[:-1, :3], axis=1)
        consecutive = ks[1:, 3] == ks[:-1, 3] + 1
        new_run = np.concatenate([[True], ~(same_prefix & consecutive)])
        starts = np.nonzero(new_run)[0]
        lengths = np.diff(np.concatenate([starts, [n]]))
    else:
        starts = np.empty(0, dtype=int)
        lengths = np.empty(0, dtype=int)
    out = [struct.pack("<4sId", _MAGIC, _VERSION, u.h),
           struct.pack("<QQ", n, len(starts))]
    runs = np.empty((len(starts), 5), dtype="<i4")
    if len(starts):
        runs[:, :4] = ks[starts]
        runs[:, 4] = lengths
    out.append(runs.tobytes())
    out.append(cs.astype("<c16").tobytes())
    return b"".join(out)


def from_bytes(data):
    magic, version, h = struct.unpack_from("<4sId", data, 0)
    if magic != _MAGIC or version != _VERSION:
        raise FieldError("unrecognized field serialization")
    n, n_runs = struct.unpack_from("<QQ", data, 16)
    off = 32
    runs = np.frombuffer(data, dtype="<i4", count=5 * n_runs, offset=off)
    runs = runs.reshape(n_runs, 5).astype(np.int64)
    off += 20 * n_runs
    cs = np.frombuffer(data, dtype="<c16", count=n, offset=off).astype(np.complex128)
    ks = np.empty((n, 4), dtype=np.int64)
    pos = 0
    for row in runs:
        ln = int(row[4])
        ks[pos:pos + ln, 0] = row[0]
        ks[pos:pos + ln, 1] = row[1]
        ks[pos:pos + ln, 2] = row[2]
        ks[pos:pos + ln, 3] = row[3] + np.arange(ln)
        pos += ln
    return SparseField(float(h), ks, cs)


def to_debug_json(u):
    """Human-readable JSON listing of all entries."""
    return json.dumps({
        "h": u.h,
        "entries": [[*map(int, k), float(c.real), float(c.imag)]
                    for k, c in zip(u.ks, u.coeffs)],
    })


def from_debug_json(s):
    d = json.loads(s)
    ent = np.array(d["entries"], dtype=float)
    if len(ent) == 0:
        return empty_field(float(d["h"]))
    ks = ent[:, :4].astype(np.int64)
    cs = ent[:, 4] + 1j * ent[:, 5]
    return SparseField(float(d["h"]), ks, cs)
