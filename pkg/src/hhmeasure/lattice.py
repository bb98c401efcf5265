"""Lattice geometry: sites, windows, half-plane sets, truncations, boundaries.

Everything downstream (solvers, Monte Carlo, measures) consumes these types.
All values are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

# Guards dense/sparse solver memory. A Window larger than this is refused.
MAX_WINDOW_SITES = 30_000_000

NEIGHBOR_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


class Site(NamedTuple):
    x1: int
    x2: int


def neighbors(s) -> list[Site]:
    x1, x2 = s
    return [Site(x1 + 1, x2), Site(x1 - 1, x2), Site(x1, x2 + 1), Site(x1, x2 - 1)]


class Window(NamedTuple):
    """Finite rectangle [x1_min, x1_max] x [x2_min, x2_max], inclusive."""

    x1_min: int
    x1_max: int
    x2_min: int
    x2_max: int

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x1_max - self.x1_min + 1, self.x2_max - self.x2_min + 1)

    @property
    def site_count(self) -> int:
        w, h = self.shape
        return w * h

    def contains(self, s) -> bool:
        x1, x2 = s
        return self.x1_min <= x1 <= self.x1_max and self.x2_min <= x2 <= self.x2_max

    def sites(self) -> Iterator[Site]:
        for x2 in range(self.x2_min, self.x2_max + 1):
            for x1 in range(self.x1_min, self.x1_max + 1):
                yield Site(x1, x2)

    def edge_sites(self, edge: str) -> list[Site]:
        """Sites of one named inner edge: 'up', 'down', 'left', 'right'."""
        if edge == "up":
            return [Site(x1, self.x2_max) for x1 in range(self.x1_min, self.x1_max + 1)]
        if edge == "down":
            return [Site(x1, self.x2_min) for x1 in range(self.x1_min, self.x1_max + 1)]
        if edge == "left":
            return [Site(self.x1_min, x2) for x2 in range(self.x2_min, self.x2_max + 1)]
        if edge == "right":
            return [Site(self.x1_max, x2) for x2 in range(self.x2_min, self.x2_max + 1)]
        raise ValueError(f"unknown edge {edge!r}")


def make_window(x1_min, x1_max, x2_min, x2_max) -> Window:
    if x1_min > x1_max or x2_min > x2_max:
        raise ValueError("degenerate window")
    w = Window(int(x1_min), int(x1_max), int(x2_min), int(x2_max))
    if w.site_count > MAX_WINDOW_SITES:
        raise ValueError(f"window of {w.site_count} sites exceeds budget {MAX_WINDOW_SITES}")
    return w


@dataclass(frozen=True)
class GrowthCertificate:
    """Sub-linear column growth: beyond |x1| > k0 column heights are <= |x1|^alpha."""

    alpha: float
    k0: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.k0 < 0:
            raise ValueError("k0 must be nonnegative")

    @property
    def alpha1(self) -> float:
        return (1.0 + self.alpha) / 2.0

    @property
    def alpha2(self) -> float:
        return (7.0 + self.alpha) / 8.0


DEFAULT_GROWTH = GrowthCertificate(alpha=0.5, k0=0)


@dataclass(frozen=True)
class HalfPlaneSet:
    """A set A in the upper half plane, always containing the full line L0.

    decoration: finite extra sites with x2 >= 1.
    profile: optional column rule; column k carries {k} x [1, profile_height(k)].
    """

    decoration: frozenset = frozenset()
    profile_rule: str | None = None
    growth: GrowthCertificate = DEFAULT_GROWTH

    def __post_init__(self):
        for s in self.decoration:
            if s[1] < 1:
                raise ValueError(f"decoration site {s} must have x2 >= 1")
        if self.profile_rule not in (None, "floor_pow"):
            raise ValueError(f"unknown profile rule {self.profile_rule!r}")

    def profile_height(self, k: int) -> int:
        if self.profile_rule is None:
            return 0
        # floor_pow: h(k) = floor(|k|^alpha) for |k| > k0, else 0
        if abs(k) <= self.growth.k0:
            return 0
        return int(math.floor(abs(k) ** self.growth.alpha))

    def contains(self, s) -> bool:
        x1, x2 = s
        if x2 == 0:
            return True
        if x2 < 0:
            return False
        if (x1, x2) in self.decoration:
            return True
        return x2 <= self.profile_height(x1)

    @property
    def is_finite_decoration(self) -> bool:
        return self.profile_rule is None

    def decoration_height(self) -> int:
        """Max height among decoration sites (0 for bare L0)."""
        return max((s[1] for s in self.decoration), default=0)

    def to_json(self) -> dict:
        if self.profile_rule is not None:
            return {
                "kind": "profile",
                "alpha": self.growth.alpha,
                "k0": self.growth.k0,
                "rule": self.profile_rule,
            }
        if self.decoration:
            sites = sorted([list(s) for s in self.decoration])
            return {"kind": "L0_plus", "sites": sites}
        return {"kind": "L0"}

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def set_from_json(obj) -> HalfPlaneSet:
    """Parse the set-spec schema: {"kind": "L0" | "L0_plus" | "profile", ...}."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    if kind == "L0":
        return HalfPlaneSet()
    if kind == "L0_plus":
        sites = frozenset(Site(int(p[0]), int(p[1])) for p in obj["sites"])
        return HalfPlaneSet(decoration=sites)
    if kind == "profile":
        growth = GrowthCertificate(alpha=float(obj["alpha"]), k0=int(obj["k0"]))
        rule = obj.get("rule", "floor_pow")
        return HalfPlaneSet(profile_rule=rule, growth=growth)
    raise ValueError(f"unknown set kind {kind!r}")


LINE = HalfPlaneSet()  # bare L0


def line_plus(*sites) -> HalfPlaneSet:
    return HalfPlaneSet(decoration=frozenset(Site(*s) for s in sites))


def column_set(x1: int, height: int) -> HalfPlaneSet:
    return HalfPlaneSet(decoration=frozenset(Site(x1, j) for j in range(1, height + 1)))


@dataclass(frozen=True)
class TruncatedSet:
    """A_n = A intersected with the vertical strip |x1| <= n; finite by construction."""

    parent: HalfPlaneSet
    n: int
    sites: tuple = field(default=())

    def site_set(self) -> frozenset:
        return frozenset(self.sites)


def truncate(A: HalfPlaneSet, n: int) -> TruncatedSet:
    if n < 1:
        raise ValueError("truncation width must be >= 1")
    sites = []
    for x1 in range(-n, n + 1):
        sites.append(Site(x1, 0))
        h = A.profile_height(x1)
        for x2 in range(1, h + 1):
            sites.append(Site(x1, x2))
    have = set(sites)
    for s in sorted(A.decoration):
        if abs(s[0]) <= n and s not in have:
            sites.append(Site(*s))
    if len(sites) > MAX_WINDOW_SITES:
        raise ValueError("truncated set exceeds site budget")
    return TruncatedSet(parent=A, n=n, sites=tuple(sites))


def d_n(n: int) -> list[Site]:
    """The line segment D_n = [-n, n] x {0}."""
    return [Site(x, 0) for x in range(-n, n + 1)]


def boundaries(S: Iterable, half_plane: bool = False):
    """Inner and outer vertex boundaries of a finite site set.

    half_plane=True restricts the ambient lattice to x2 >= 0.
    """
    S = set(Site(*s) for s in S)
    inner, outer = set(), set()
    for s in S:
        for v in neighbors(s):
            if half_plane and v.x2 < 0:
                continue
            if v not in S:
                inner.add(s)
                outer.add(v)
    return inner, outer


def accessible_skin(S: Iterable) -> set:
    """Sites of S adjacent to the unbounded component of the complement.

    Flood fill of the complement inside a 2-site-padded bounding box; complement
    cells on the pad frame are all connected to infinity.
    """
    S = set(Site(*s) for s in S)
    if not S:
        return set()
    xs = [s.x1 for s in S]
    ys = [s.x2 for s in S]
    lo1, hi1 = min(xs) - 2, max(xs) + 2
    lo2, hi2 = min(ys) - 2, max(ys) + 2
    start = Site(lo1, lo2)
    seen = {start}
    stack = [start]
    skin = set()
    while stack:
        v = stack.pop()
        for w in neighbors(v):
            if not (lo1 <= w.x1 <= hi1 and lo2 <= w.x2 <= hi2):
                continue
            if w in S:
                skin.add(w)
                continue
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return skin


def special_regions(n: int, growth: GrowthCertificate = DEFAULT_GROWTH, m: int | None = None) -> dict:
    """Named regions used by the asymptotic checks, all derived from (n, alpha).

    I: [-n,n] x [0,n].
    Box: [-n,n] x [0, floor(n^alpha1)].
    l: middle section of the upper inner edge of Box, half-width floor(n^alpha2).
    l_complement: the rest of that upper edge.
    F (needs m): the two columns {+-floor(m^(1/alpha))} x [0, inf), returned as
        the pair of x1 values.
    Box_hat (needs m): [-n,n] x [-m,0].
    """
    out: dict = {}
    out["I"] = make_window(-n, n, 0, n)
    bh = int(math.floor(n ** growth.alpha1))
    out["Box"] = make_window(-n, n, 0, bh)
    lw = int(math.floor(n ** growth.alpha2))
    lw = min(lw, n)
    top = bh
    out["l"] = [Site(x1, top) for x1 in range(-lw, lw + 1)]
    out["l_complement"] = [Site(x1, top) for x1 in range(-n, n + 1) if abs(x1) > lw]
    if m is not None:
        if m < 1:
            raise ValueError("m must be >= 1")
        fm = int(math.floor(m ** (1.0 / growth.alpha)))
        out["F"] = (-fm, fm)
        out["Box_hat"] = make_window(-n, n, -m, 0)
    return out


def edge_sets_of_box(w: Window) -> dict:
    """The four inner-boundary edges of a filled box window, with the corner
    convention used by the exit-class checks: corners at x2 = x2_max belong to
    the up edge, corners at x2 = x2_min to the down edge; left/right edges
    exclude all four corners."""
    up = [Site(x1, w.x2_max) for x1 in range(w.x1_min, w.x1_max + 1)]
    down = [Site(x1, w.x2_min) for x1 in range(w.x1_min, w.x1_max + 1)]
    left = [Site(w.x1_min, x2) for x2 in range(w.x2_min + 1, w.x2_max)]
    right = [Site(w.x1_max, x2) for x2 in range(w.x2_min + 1, w.x2_max)]
    return {"up": up, "down": down, "left": left, "right": right}
