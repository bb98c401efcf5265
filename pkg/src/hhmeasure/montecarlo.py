"""Parallel simple-random-walk hitting estimators.

Every deterministic method in the package gets an independent Monte Carlo
cross-check from here.  Walks run in numba kernels, one RNG stream per chunk
of samples; the (seed, stream, schedule) triple fixes every walk, and tallies
reduce in stream order, so results are bit-identical no matter how many
threads execute the streams.

RNG: xoshiro256** seeded per stream from a splitmix64 chain offset by the
stream index.  Steps consume two bits each, 32 steps per 64-bit draw.

Absorbing-set geometry reaches the kernels in three pieces: an optional full
absorbing line at height 0 (everything at or below it absorbs, which is exact
for walks started above), a bitmap of decoration sites over a bounding box,
and an optional per-height threshold table for power-law profiles, so
membership stays O(1) per step even for infinite sets.  A timeout is an
outcome, never an error: its share is reported separately and is never folded
into the mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .lattice import HalfPlaneSet, Site, TruncatedSet

_NO_BARRIER = np.int64(2**62)


@dataclass(frozen=True)
class RngSpec:
    """Seed plus stream index; same pair, same walk sequence."""

    seed: int
    stream: int = 0


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n_samples: int
    timeout_fraction: float

    def within(self, value: float, sigmas: float = 3.0, floor: float = 0.0) -> bool:
        tol = max(sigmas * self.std_error, floor)
        return abs(self.mean - value) <= tol


@dataclass(frozen=True)
class WalkOutcome:
    site: Site | None
    prev: Site | None
    steps: int
    timed_out: bool


# ---------------------------------------------------------------------------
# kernels

@njit(cache=True, inline="always")
def _splitmix_next(z):
    z = z + np.uint64(0x9E3779B97F4A7C15)
    r = z
    r = (r ^ (r >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    r = (r ^ (r >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z, r ^ (r >> np.uint64(31))


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True, inline="always")
def _stream_state(seed, stream):
    z = np.uint64(seed) + np.uint64(stream) * np.uint64(0x9E3779B97F4A7C15)
    z, s0 = _splitmix_next(z)
    z, s1 = _splitmix_next(z)
    z, s2 = _splitmix_next(z)
    z, s3 = _splitmix_next(z)
    return s0, s1, s2, s3


@njit(cache=True, inline="always")
def _xoshiro_next(s0, s1, s2, s3):
    out = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    return out, s0, s1, s2, s3


@njit(cache=True, inline="always")
def _absorbed_at(x, y, line_mode, bitmap, bx, by, thresh, k0):
    if line_mode and y <= 0:
        return True
    h, w = bitmap.shape
    cx = x - bx
    cy = y - by
    if 0 <= cx < w and 0 <= cy < h and bitmap[cy, cx]:
        return True
    if thresh.size > 0 and 0 < y < thresh.size:
        ax = x if x >= 0 else -x
        if ax > k0 and ax >= thresh[y]:
            return True
    return False


@njit(cache=True)
def _walk(x0, y0, cap, s0, s1, s2, s3, line_mode, bitmap, bx, by, thresh, k0):
    """One walk to absorption.  Returns (x, y, px, py, steps, timed_out, state)."""
    x, y = x0, y0
    px, py = x0, y0
    bits = np.uint64(0)
    left = 0
    steps = np.int64(0)
    while steps < cap:
        if left == 0:
            bits, s0, s1, s2, s3 = _xoshiro_next(s0, s1, s2, s3)
            left = 32
        d = bits & np.uint64(3)
        bits >>= np.uint64(2)
        left -= 1
        px, py = x, y
        if d == np.uint64(0):
            x += 1
        elif d == np.uint64(1):
            x -= 1
        elif d == np.uint64(2):
            y += 1
        else:
            y -= 1
        steps += 1
        if _absorbed_at(x, y, line_mode, bitmap, bx, by, thresh, k0):
            return x, y, px, py, steps, False, s0, s1, s2, s3
    return x, y, px, py, steps, True, s0, s1, s2, s3


@njit(cache=True, parallel=True)
def _run_streams(counts, seed, x0, y0, cap, line_mode, bitmap, bx, by, thresh, k0,
                 barrier, tmode, tx, ty, tpx, tpy, starts, pick_t):
    """Tally target hits and timeouts per stream.

    starts: (k, 2) array of start sites; empty means fixed start (x0, y0),
    otherwise each walk picks one uniformly (rejection sampling, pick_t is the
    rejection threshold for the unbiased modulo draw).
    barrier: absorb additionally at y >= barrier (class "barrier").
    tmode: 0 site target, 1 barrier target, 2 directed-edge target.
    """
    n_streams = counts.shape[0]
    hits = np.zeros(n_streams, dtype=np.int64)
    tmo = np.zeros(n_streams, dtype=np.int64)
    for i in prange(n_streams):
        s0, s1, s2, s3 = _stream_state(seed, i)
        nloc = counts[i]
        h = np.int64(0)
        t = np.int64(0)
        for _ in range(nloc):
            sx, sy = x0, y0
            if starts.shape[0] > 0:
                while True:
                    r, s0, s1, s2, s3 = _xoshiro_next(s0, s1, s2, s3)
                    if r >= pick_t:
                        idx = r % np.uint64(starts.shape[0])
                        sx, sy = starts[idx, 0], starts[idx, 1]
                        break
            x, y, px, py, steps, timed_out = sx, sy, sx, sy, np.int64(0), True
            bits = np.uint64(0)
            left = 0
            while steps < cap:
                if left == 0:
                    bits, s0, s1, s2, s3 = _xoshiro_next(s0, s1, s2, s3)
                    left = 32
                d = bits & np.uint64(3)
                bits >>= np.uint64(2)
                left -= 1
                px, py = x, y
                if d == np.uint64(0):
                    x += 1
                elif d == np.uint64(1):
                    x -= 1
                elif d == np.uint64(2):
                    y += 1
                else:
                    y -= 1
                steps += 1
                if y >= barrier or _absorbed_at(x, y, line_mode, bitmap, bx, by, thresh, k0):
                    timed_out = False
                    break
            if timed_out:
                t += 1
            elif tmode == 1:
                if y >= barrier:
                    h += 1
            elif tmode == 0:
                if x == tx and y == ty:
                    h += 1
            else:
                if x == tx and y == ty and px == tpx and py == tpy:
                    h += 1
        hits[i] = h
        tmo[i] = t
    return hits, tmo


# ---------------------------------------------------------------------------
# set geometry -> kernel arguments

_EMPTY_BITMAP = np.zeros((1, 1), dtype=np.uint8)
_EMPTY_THRESH = np.zeros(0, dtype=np.int64)
_EMPTY_STARTS = np.zeros((0, 2), dtype=np.int64)

_PROFILE_TABLE_LEN = 1 << 16


def _profile_thresholds(alpha: float, k0: int) -> np.ndarray:
    """thresh[y] = least m with floor(m^alpha) >= y; absorb iff |x| >= thresh[y]."""
    out = np.full(_PROFILE_TABLE_LEN, np.int64(2**62), dtype=np.int64)
    for y in range(1, _PROFILE_TABLE_LEN):
        m = max(int(math.ceil(y ** (1.0 / alpha))) - 2, k0 + 1)
        while math.floor(m**alpha) < y:
            m += 1
        out[y] = m
    return out


_thresh_cache: dict = {}


def _kernel_geometry(S) -> tuple:
    """(line_mode, bitmap, bx, by, thresh, k0) for a set object."""
    if isinstance(S, TruncatedSet):
        sites = list(S.sites)
        line_mode = 0
    elif isinstance(S, HalfPlaneSet):
        line_mode = 1
        if S.profile_rule is not None:
            key = (S.growth.alpha, S.growth.k0)
            thr = _thresh_cache.get(key)
            if thr is None:
                thr = _profile_thresholds(S.growth.alpha, S.growth.k0)
                _thresh_cache[key] = thr
            return line_mode, _EMPTY_BITMAP, np.int64(0), np.int64(0), thr, np.int64(S.growth.k0)
        sites = list(S.decoration)
    else:
        sites = [Site(*s) for s in S]
        line_mode = 0
    if not sites:
        return line_mode, _EMPTY_BITMAP, np.int64(0), np.int64(0), _EMPTY_THRESH, np.int64(0)
    xs = [s[0] for s in sites]
    ys = [s[1] for s in sites]
    bx, by = min(xs), min(ys)
    bitmap = np.zeros((max(ys) - by + 1, max(xs) - bx + 1), dtype=np.uint8)
    for s in sites:
        bitmap[s[1] - by, s[0] - bx] = 1
    return line_mode, bitmap, np.int64(bx), np.int64(by), _EMPTY_THRESH, np.int64(0)


def _schedule(samples: int, streams: int) -> np.ndarray:
    """Fixed per-stream sample counts, independent of thread count."""
    if samples <= 0:
        raise ValueError("samples must be positive")
    streams = max(1, min(streams, samples))
    base, rem = divmod(samples, streams)
    return np.array([base + (1 if i < rem else 0) for i in range(streams)], dtype=np.int64)


def _binomial_estimate(hits: int, timeouts: int, samples: int) -> Estimate:
    """Binomial estimate over the completed walks.

    Timed-out walks contribute to timeout_fraction only; they are dropped from
    the mean rather than counted as misses, so a problem whose every completed
    walk hits the target reports mean 1 regardless of the cap.
    """
    done = samples - timeouts
    p = hits / done if done > 0 else 0.0
    se = math.sqrt(p * (1.0 - p) / done) if done > 0 else float("inf")
    return Estimate(mean=p, std_error=se, n_samples=samples, timeout_fraction=timeouts / samples)


def _reject_threshold(count: int) -> np.uint64:
    return np.uint64(((1 << 64) - count) % count)


DEFAULT_STREAMS = 64


# ---------------------------------------------------------------------------
# public operations

def sample_walk(start, S, step_cap: int, rng: RngSpec) -> WalkOutcome:
    """One walk from start until it hits S (or a full line at 0 for
    half-plane sets) or exhausts step_cap."""
    if step_cap <= 0:
        raise ValueError("step_cap must be positive")
    line_mode, bitmap, bx, by, thresh, k0 = _kernel_geometry(S)
    state = _stream_state(np.uint64(rng.seed % 2**64), np.uint64(rng.stream % 2**64))
    # boxed as Python ints; values past 2**63 would otherwise type as float
    s0, s1, s2, s3 = (np.uint64(v) for v in state)
    x, y, px, py, steps, timed_out, *_ = _walk(
        np.int64(start[0]), np.int64(start[1]), np.int64(step_cap),
        s0, s1, s2, s3, np.uint8(line_mode), bitmap, bx, by, thresh, k0,
    )
    if timed_out:
        return WalkOutcome(site=None, prev=None, steps=int(steps), timed_out=True)
    return WalkOutcome(site=Site(int(x), int(y)), prev=Site(int(px), int(py)),
                       steps=int(steps), timed_out=False)


def _run(S, start, target, samples, cap, seed, streams, barrier=None, starts=None):
    line_mode, bitmap, bx, by, thresh, k0 = _kernel_geometry(S)
    counts = _schedule(samples, streams)
    if target == "barrier":
        tmode, tx, ty, tpx, tpy = 1, 0, 0, 0, 0
    elif isinstance(target, tuple) and len(target) == 2 and isinstance(target[0], tuple):
        (sx, sy), (ppx, ppy) = target
        tmode, tx, ty, tpx, tpy = 2, sx, sy, ppx, ppy
    else:
        tmode, tx, ty, tpx, tpy = 0, target[0], target[1], 0, 0
    if starts is None:
        starts_arr, pick_t = _EMPTY_STARTS, np.uint64(1)
        x0, y0 = np.int64(start[0]), np.int64(start[1])
    else:
        starts_arr = np.asarray(starts, dtype=np.int64).reshape(-1, 2)
        pick_t = _reject_threshold(starts_arr.shape[0])
        x0, y0 = np.int64(0), np.int64(0)
    hits, tmo = _run_streams(
        counts, np.uint64(seed % 2**64), x0, y0, np.int64(cap),
        np.uint8(line_mode), bitmap, bx, by, thresh, k0,
        np.int64(barrier) if barrier is not None else _NO_BARRIER,
        np.int64(tmode), np.int64(tx), np.int64(ty), np.int64(tpx), np.int64(tpy),
        starts_arr, pick_t,
    )
    return _binomial_estimate(int(hits.sum()), int(tmo.sum()), int(counts.sum()))


def mc_hit(start, S, target, samples: int, cap: int | None = None,
           seed: int = 0, streams: int = DEFAULT_STREAMS, barrier: int | None = None) -> Estimate:
    """P(absorbed at target), walk from start, absorbed on S (plus the line
    for half-plane sets, plus an optional barrier row for gambler problems).

    target: a site, a directed edge ((site), (prev)), or "barrier".
    """
    if cap is None:
        scale = max(abs(int(start[0])), abs(int(start[1])),
                    abs(int(barrier)) if barrier is not None else 0, 10)
        cap = 64 * scale * scale
    return _run(S, start, target, samples, cap, seed, streams, barrier=barrier)


def mc_inharmonic(A, n: int, x, samples: int, cap: int | None = None,
                  seed: int = 0, streams: int = DEFAULT_STREAMS) -> Estimate:
    """pi*n*P_(0,n)(absorbed at x), absorbing on A plus the full line."""
    if cap is None:
        cap = 64 * n * n
    est = _run(A, Site(0, n), Site(*x), samples, cap, seed, streams)
    scale = math.pi * n
    return Estimate(mean=scale * est.mean, std_error=scale * est.std_error,
                    n_samples=est.n_samples, timeout_fraction=est.timeout_fraction)


def outer_circle(R: int) -> list:
    """Sites outside the closed disc of radius R with a neighbor inside."""
    out = []
    RR = R * R
    span = int(R) + 2
    for x in range(-span, span + 1):
        for y in range(-span, span + 1):
            if x * x + y * y <= RR:
                continue
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                if (x + dx) ** 2 + (y + dy) ** 2 <= RR:
                    out.append(Site(x, y))
                    break
    return out


def mc_hm_from_circle(S, R: int, x, samples: int, cap: int | None = None,
                      seed: int = 0, streams: int = DEFAULT_STREAMS) -> Estimate:
    """P(absorbed at x), walk started uniformly on the outer circle of radius
    R, absorbed on the finite set S."""
    sites = list(S.sites) if isinstance(S, TruncatedSet) else [Site(*s) for s in S]
    if not sites:
        raise ValueError("S must be a nonempty finite set")
    rmax = max(max(abs(s[0]), abs(s[1])) for s in sites)
    if 2 * rmax > R:
        raise ValueError("need S inside the disc of radius R/2")
    if cap is None:
        cap = 64 * R * R
    starts = outer_circle(R)
    return _run(sites, None, Site(*x), samples, cap, seed, streams, starts=starts)
