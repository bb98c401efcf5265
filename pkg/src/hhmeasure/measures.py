"""Boundary measures of half-plane-plus-obstacle sets.

Quantities, for A = L0 union a decoration K above the line:

  stationary H-bar_A(x): the m-stationary edge measure at x in A, computed by
      two independent routes (truncated line sum of exact hitting
      probabilities; kick-started visits-Green solve with an exact leak
      closure).
  inharmonic H-tilde_{A,n}(x) = pi*n*P_(0,n)(absorbed at x).
  truncated n-scaled measure n*H_{A_n}(x): harmonic measure from infinity of
      the truncation A_n, via the equilibrium system.
  constants c (limit of n*H_{D_n}(0), D_n the plain segment) and C = 2/c.

The exact engine for finite decorations is a capacitor system on K in the
half-plane Green function G0: with M = [G0(k,k')], the vector
h(v) = M^{-1} G0(K, v) collects P_v(hit K at k before L0), and

    w_m(v) = min(v2, m) - sum_k h_k(v) min(k2, m)

is E_v[quarter visits to L_m before absorption].  Every leak of a finite
window admits an exact strong-Markov closure in these quantities, so window
truncation costs no accuracy for finite decorations; infinite profile sets
fall back to honest brackets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dirichlet as dr
from .extrapolate import Extrapolation, aitken, gaps_decreasing, max_tail_gap
from .lattice import (
    HalfPlaneSet,
    Site,
    TruncatedSet,
    Window,
    d_n,
    make_window,
    neighbors,
    truncate,
)
from .montecarlo import mc_hm_from_circle
from .potential import (
    FiniteHitting,
    PotentialKernel,
    g0_halfplane,
    g0_halfplane_array,
    get_kernel,
    hm_infinity,
)


@dataclass(frozen=True)
class MeasureValue:
    """One measured quantity with an enclosure and its method of record."""

    value: float
    lower: float
    upper: float
    method: str
    params: dict = field(default_factory=dict)
    std_error: float | None = None

    def __post_init__(self):
        if not (self.lower <= self.value <= self.upper):
            raise ValueError("bracket must contain the value")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def as_dict(self) -> dict:
        out = {
            "value": self.value,
            "lower": self.lower,
            "upper": self.upper,
            "method": self.method,
        }
        if self.std_error is not None:
            out["std_error"] = self.std_error
        out.update({f"param_{k}": v for k, v in sorted(self.params.items())})
        return out


def exact_value(value: float, method: str, **params) -> MeasureValue:
    return MeasureValue(value=value, lower=value, upper=value, method=method, params=params)


@dataclass
class ConvergenceSeries:
    indices: list
    values: list  # MeasureValue per index
    limit: Extrapolation | None
    cauchy_gap: float
    monotone: bool

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")

    @property
    def points(self) -> list:
        return [v.value for v in self.values]

    @classmethod
    def build(cls, indices, values, extrapolate: bool = True) -> "ConvergenceSeries":
        pts = [v.value for v in values]
        diffs = [b - a for a, b in zip(pts, pts[1:])]
        monotone = all(d > 0 for d in diffs) or all(d < 0 for d in diffs)
        limit = aitken(pts) if extrapolate and len(pts) >= 3 else None
        return cls(indices=list(indices), values=list(values), limit=limit,
                   cauchy_gap=max_tail_gap(pts), monotone=monotone)

    def is_cauchy(self, strict: bool = True) -> bool:
        return gaps_decreasing(self.points, strict=strict)


@dataclass(frozen=True)
class ScalingConstants:
    c: float
    C: float
    series: ConvergenceSeries

    def __post_init__(self):
        if not (self.c > 0):
            raise ValueError("c must be positive")
        if self.C * self.c != 2.0:
            raise ValueError("C must equal 2/c exactly")


# ---------------------------------------------------------------------------
# exact capacitor machinery

class DecoratedLine:
    """Exact hitting machinery for A = L0 union a finite decoration K."""

    def __init__(self, decoration, kernel: PotentialKernel | None = None):
        K = sorted(Site(*s) for s in decoration)
        if any(s.x2 < 1 for s in K):
            raise ValueError("decoration sites must lie strictly above the line")
        self.K = K
        k = len(K)
        if kernel is None:
            span = 4
            if k:
                xs = [s.x1 for s in K]
                ys = [s.x2 for s in K]
                span = (max(xs) - min(xs)) + 2 * max(ys) + 4
            kernel = get_kernel(max(64, span))
        self.kernel = kernel
        self._extent = max((max(abs(s.x1), s.x2) for s in K), default=0)
        self.index = {s: i for i, s in enumerate(K)}
        self._P = np.array(K, dtype=np.int64).reshape(k, 2)
        M = np.empty((k, k))
        for i, u in enumerate(K):
            M[i, :] = g0_halfplane_array(kernel, u, self._P[:, 0], self._P[:, 1])
        self._Minv = np.linalg.inv(M) if k else np.zeros((0, 0))
        self.max_height = max((s.x2 for s in K), default=0)
        self.min_m = self.max_height + 1

    def _reach(self, *sites) -> None:
        """Grow the kernel so every offset among sites, their reflections,
        and the decoration is inside the cache.  The capacitor matrix never
        needs this; only evaluation at distant points does."""
        m = self._extent
        for s in sites:
            m = max(m, abs(int(s[0])), abs(int(s[1])))
        if self.kernel.radius < 2 * m + 2:
            self.kernel = get_kernel(2 * m + 2)

    def h(self, v) -> np.ndarray:
        """P_v(first hit of A above the line lands on K, at each k)."""
        if not self.K:
            return np.zeros(0)
        v = Site(*v)
        self._reach(v)
        if v in self.index:
            out = np.zeros(len(self.K))
            out[self.index[v]] = 1.0
            return out
        if v.x2 <= 0:
            return np.zeros(len(self.K))
        g = g0_halfplane_array(self.kernel, v, self._P[:, 0], self._P[:, 1])
        return self._Minv @ g

    def w(self, v, m: int) -> float:
        """E_v[visits to L_m before hitting A or L0] / 4 (exact)."""
        v = Site(*v)
        if v.x2 <= 0 or v in self.index:
            return 0.0
        base = float(min(v.x2, m))
        if not self.K:
            return base
        mins = np.minimum(self._P[:, 1], m).astype(np.float64)
        return base - float(self.h(v) @ mins)

    def contains(self, s) -> bool:
        s = Site(*s)
        return s.x2 == 0 or s in self.index

    def hbar(self, x, m: int | None = None) -> float:
        """Stationary measure at x in A; independent of m >= decoration height."""
        if m is None:
            m = self.min_m
        x = Site(*x)
        if not self.contains(x):
            raise ValueError("x must belong to the decorated line")
        return sum(self.w(v, m) for v in neighbors(x) if v.x2 >= 1 and not self.contains(v))

    def hhat(self, y, m: int | None = None) -> float:
        """Outer stationary measure at y outside A: incoming-edge total."""
        if m is None:
            m = self.min_m
        y = Site(*y)
        if self.contains(y) or y.x2 < 1:
            raise ValueError("y must lie above the line and outside A")
        k = sum(1 for v in neighbors(y) if v.x2 >= 0 and self.contains(v))
        return k * self.w(y, m)

    def green(self, y, v) -> float:
        """Green function killed on A union L0."""
        self._reach(y, v)
        g = g0_halfplane(self.kernel, y, v)
        if not self.K:
            return g
        gv = g0_halfplane_array(self.kernel, v, self._P[:, 0], self._P[:, 1])
        return g - float(self.h(y) @ gv)

    def hit_prob(self, y, x) -> float:
        """Exact P_y(first hit of A at x), y above the line."""
        x = Site(*x)
        y = Site(*y)
        if y.x2 < 1:
            raise ValueError("start must lie above the line")
        if x in self.index:
            return float(self.h(y)[self.index[x]])
        if x.x2 != 0:
            raise ValueError("x must belong to the decorated line")
        above = Site(x.x1, 1)
        if above in self.index:
            return 0.0
        return self.green(y, above) / 4.0

    def inharmonic(self, x, n: int) -> float:
        return math.pi * n * self.hit_prob(Site(0, n), x)


_decorated_cache: dict = {}


def decorated(A, kernel: PotentialKernel | None = None) -> DecoratedLine:
    """DecoratedLine for a finite-decoration HalfPlaneSet (cached)."""
    if isinstance(A, DecoratedLine):
        return A
    if isinstance(A, HalfPlaneSet):
        if not A.is_finite_decoration:
            raise ValueError("profile sets have no finite capacitor system")
        key = A.decoration
    else:
        key = frozenset(Site(*s) for s in A)
    hit = _decorated_cache.get(key)
    if hit is None or (kernel is not None and hit.kernel is not kernel):
        hit = DecoratedLine(sorted(key), kernel=kernel)
        _decorated_cache[key] = hit
    return hit


def _decoration_of(A) -> frozenset:
    if isinstance(A, HalfPlaneSet):
        if not A.is_finite_decoration:
            raise ValueError("finite decoration required")
        return A.decoration
    return frozenset(Site(*s) for s in A)


# ---------------------------------------------------------------------------
# window construction shared by the solver routes

def _halfplane_problem(A, m: int, width: int, height: int) -> dr.AbsorbingProblem:
    """Absorbing problem for A = L0 + decoration inside [-width, width] x [0, height].

    The lower half-plane folds into the A class (exact: the line separates).
    """
    decor = _decoration_of(A)
    return dr.AbsorbingProblem(
        window=make_window(-width, width, 0, height),
        classes={"A": set(decor)},
        line_classes={"A": dr.below_class(0)},
    )


def _line_visit_targets(window: Window, m: int, decor) -> list:
    out = []
    for x1 in range(window.x1_min, window.x1_max + 1):
        s = Site(x1, m)
        if s not in decor:
            out.append(s)
    return out


def stationary_line_sum(A, x, m: int | None = None, W: int | None = None,
                        kernel: PotentialKernel | None = None) -> MeasureValue:
    """Truncated line sum over L_m, |z1| <= W, of exact hit probabilities.

    The omitted tail is reported in the bracket: its exact complement when the
    full stationary value is computable (finite decorations), never silently
    dropped.
    """
    dl = decorated(A, kernel)
    if m is None:
        m = max(4, dl.min_m)
    if m < dl.min_m:
        raise ValueError("m must clear the decoration")
    alpha1 = A.growth.alpha1 if isinstance(A, HalfPlaneSet) else 0.75
    if W is None:
        W = int(math.ceil(m ** (1.0 / alpha1)))
    x = Site(*x)
    partial = sum(dl.hit_prob(Site(j, m), x) for j in range(-W, W + 1))
    full = dl.hbar(x, m)
    tail = max(full - partial, 0.0)
    return MeasureValue(
        value=partial, lower=partial, upper=partial + tail,
        method="line-sum", params={"m": m, "W": W, "tail": tail},
    )


def stationary_visits_green(A, x, m: int | None = None,
                            kernel: PotentialKernel | None = None) -> MeasureValue:
    """H-bar via one kick-started solve: expected visits to L_m from x, with
    the window leak closed exactly by w_m."""
    dl = decorated(A, kernel)
    if m is None:
        m = max(4, dl.min_m)
    if m < dl.min_m:
        raise ValueError("m must clear the decoration")
    x = Site(*x)
    if not dl.contains(x):
        raise ValueError("x must belong to A")
    decor = _decoration_of(A)
    span = max((abs(s.x1) for s in decor), default=0)
    width = max(4 * m, span + 2 * m, 16)
    height = 2 * m + dl.max_height + 2
    problem = _halfplane_problem(A, m, width, height)
    sol = dr.kick_visits(x, problem)
    dist = sol.absorbed()
    targets = _line_visit_targets(problem.window, m, decor)
    inside = sol.visits(targets)
    closure = 4.0 * sum(mass * dl.w(z, m) for z, mass in dist.leak.items())
    value = inside + closure
    slop = max(sol.residual * 4.0 * m * len(targets), 0.0)
    return MeasureValue(
        value=value, lower=value - slop, upper=value + slop,
        method="visits-green",
        params={"m": m, "window_defect": dist.defect, "residual": sol.residual},
    )


def stationary_hm(A, x, m: int | None = None, W: int | None = None,
                  method: str = "visits-green",
                  kernel: PotentialKernel | None = None):
    """Stationary measure H-bar_A(x) by the requested route ("both" returns a
    dict with the two independent routes)."""
    if method == "visits-green":
        return stationary_visits_green(A, x, m, kernel)
    if method == "line-sum":
        return stationary_line_sum(A, x, m, W, kernel)
    if method == "both":
        return {
            "visits-green": stationary_visits_green(A, x, m, kernel),
            "line-sum": stationary_line_sum(A, x, m, W, kernel),
        }
    raise ValueError(f"unknown method {method!r}")


def stationary_hm_outer(A, y, m: int | None = None,
                        kernel: PotentialKernel | None = None) -> MeasureValue:
    """Outer stationary measure at y (sum of edge measures A -> y)."""
    dl = decorated(A, kernel)
    y = Site(*y)
    if dl.contains(y):
        raise ValueError("y must lie outside A")
    if y.x2 < 1:
        raise ValueError("y must lie above the line")
    val = dl.hhat(y, m)
    return exact_value(val, "visits-green", m=m if m is not None else dl.min_m)


def inharmonic(A, n: int, x, kernel: PotentialKernel | None = None,
               pad: int = 2) -> MeasureValue:
    """pi*n*P_(0,n)(first hit of A at x), via a window solve whose leak is
    closed exactly by the capacitor hitting formula."""
    dl = decorated(A, kernel)
    if n <= dl.max_height:
        raise ValueError("n must clear the decoration")
    x = Site(*x)
    if not dl.contains(x):
        raise ValueError("x must belong to A")
    width = n + pad + max((abs(s.x1) for s in _decoration_of(A)), default=0)
    problem = _halfplane_problem(A, n, width, n + pad)
    dist = dr.hit_distribution(Site(0, n), problem)
    win = dist.mass(x)
    closure = sum(mass * dl.hit_prob(z, x) for z, mass in dist.leak.items())
    p = win + closure
    scale = math.pi * n
    slop = scale * max(dist.residual, 0.0) * problem.window.site_count
    value = scale * p
    return MeasureValue(
        value=value, lower=value - slop, upper=value + slop,
        method="inharmonic",
        params={"n": n, "window_defect": dist.defect, "residual": dist.residual},
    )


def inharmonic_exact(A, n: int, x, kernel: PotentialKernel | None = None) -> float:
    """Closed-form route (no window): capacitor formula only."""
    return decorated(A, kernel).inharmonic(x, n)


# ---------------------------------------------------------------------------
# truncations and the scaling constants

def _truncated_sites(A, n: int):
    if isinstance(A, TruncatedSet):
        return list(A.sites)
    if isinstance(A, HalfPlaneSet):
        return list(truncate(A, n).sites)
    return [Site(*s) for s in A]


def truncated_hm(A, n: int, x, kernel: PotentialKernel | None = None) -> MeasureValue:
    """H_{A_n}(x): harmonic measure from infinity of the truncation, by the
    equilibrium solve on the accessible skin."""
    sites = _truncated_sites(A, n)
    eq = hm_infinity(sites, kernel=kernel)
    val = eq.mass(Site(*x))
    return MeasureValue(
        value=val, lower=val, upper=val, method="equilibrium",
        params={"n": n, "robin": eq.robin, "raw_sum": eq.raw_sum,
                "condition": eq.condition},
    )


def truncated_hm_mc(A, n: int, x, R: int | None = None, samples: int = 200_000,
                    seed: int = 0) -> MeasureValue:
    """MC cross-check of truncated_hm: walk from a circle of radius R."""
    sites = _truncated_sites(A, n)
    rmax = max(max(abs(s[0]), abs(s[1])) for s in sites)
    if R is None:
        R = max(2 * rmax + 10, 40)
    est = mc_hm_from_circle(sites, R, Site(*x), samples=samples, seed=seed)
    return MeasureValue(
        value=est.mean, lower=est.mean - 3 * est.std_error,
        upper=est.mean + 3 * est.std_error, method="mc-circle",
        params={"n": n, "R": R, "samples": samples, "seed": seed,
                "timeout_fraction": est.timeout_fraction},
        std_error=est.std_error,
    )


def edge_hm_L0(A, n: int, x, kernel: PotentialKernel | None = None,
               method: str = "directed-solve", eval_radius: int | None = None,
               eval_points: int = 48, samples: int = 200_000, seed: int = 0) -> MeasureValue:
    """From-above edge measure at x in L0 for the truncation A_n.

    directed-solve: P_y(absorbed at x arriving from above) = G_{A_n}(y,(x1,1))/4,
    averaged over a far circle of starts y; the spread across starts is the
    bracket.  mc-circle: previous-site tally of circle-started walks.
    """
    x = Site(*x)
    if x.x2 != 0:
        raise ValueError("edge version applies to sites on the line")
    sites = _truncated_sites(A, n)
    above = Site(x.x1, 1)
    if above in set(sites):
        return exact_value(0.0, "directed-solve", n=n)
    if method == "mc-circle":
        rmax = max(max(abs(s[0]), abs(s[1])) for s in sites)
        R = eval_radius if eval_radius is not None else max(2 * rmax + 10, 40)
        est = mc_hm_from_circle(sites, R, (tuple(x), tuple(above)), samples=samples, seed=seed)
        return MeasureValue(
            value=est.mean, lower=est.mean - 3 * est.std_error,
            upper=est.mean + 3 * est.std_error, method="mc-circle",
            params={"n": n, "R": R, "samples": samples, "seed": seed,
                    "timeout_fraction": est.timeout_fraction},
            std_error=est.std_error,
        )
    if method != "directed-solve":
        raise ValueError(f"unknown method {method!r}")
    fh = FiniteHitting(sites, kernel=kernel)
    rmax = max(max(abs(s[0]), abs(s[1])) for s in sites)
    R = eval_radius if eval_radius is not None else max(3 * rmax, 50)
    vals = []
    for k in range(eval_points):
        t = 2.0 * math.pi * (k + 0.5) / eval_points
        y = Site(int(round(R * math.cos(t))), int(round(R * math.sin(t))))
        vals.append(fh.green(y, above) / 4.0)
    vals = np.array(vals)
    mid = float(vals.mean())
    return MeasureValue(
        value=mid, lower=float(vals.min()), upper=float(vals.max()),
        method="directed-solve",
        params={"n": n, "eval_radius": R, "eval_points": eval_points},
    )


def constant_c(n_list=(25, 50, 100, 200, 400),
               kernel: PotentialKernel | None = None) -> ScalingConstants:
    """The segment constant c = lim n*H_{D_n}(0) and its partner C = 2/c."""
    if len(n_list) < 4:
        raise ValueError("need at least four truncation sizes")
    values = []
    for n in n_list:
        mv = truncated_hm(d_n(n), n, Site(0, 0), kernel=kernel)
        values.append(MeasureValue(
            value=n * mv.value, lower=n * mv.lower, upper=n * mv.upper,
            method=mv.method, params=mv.params,
        ))
    series = ConvergenceSeries.build(list(n_list), values)
    if not series.is_cauchy(strict=True):
        raise RuntimeError("n*H_{D_n}(0) series failed its Cauchy diagnostic")
    c = series.limit.limit
    return ScalingConstants(c=c, C=2.0 / c, series=series)


DEFAULT_C_SCHEDULE = (25, 50, 100, 200, 400)


def pairing_schedule_n(m: int, alpha: float) -> int:
    """Default n(m) schedule used when comparing H-tilde with line sums."""
    return int(math.floor(m ** (3.0 / (2.0 * alpha) - 0.5)))


def scaling_limit_report(A, x, n_list=(25, 50, 100, 200), tolerance: float = 0.10,
                         constants: ScalingConstants | None = None,
                         kernel: PotentialKernel | None = None) -> dict:
    """Convergence of C*n*H_{A_n}(x) to H-bar_A(x).

    For x above the line the site measure is used; for x on the line the
    directed (from-above) edge version, exactly as the limit statement
    requires there.
    """
    if constants is None:
        constants = constant_c(DEFAULT_C_SCHEDULE, kernel=kernel)
    x = Site(*x)
    edge_version = x.x2 == 0
    reference = decorated(A, kernel).hbar(x)
    entries = []
    for n in n_list:
        if edge_version:
            mv = edge_hm_L0(A, n, x, kernel=kernel)
        else:
            mv = truncated_hm(A, n, x, kernel=kernel)
        scaled = constants.C * n * mv.value
        gap = abs(scaled / reference - 1.0) if reference != 0 else float("inf")
        entries.append({
            "n": n, "raw": mv.value, "scaled": scaled, "rel_gap": gap,
            "method": mv.method,
        })
    gaps = [e["rel_gap"] for e in entries]
    ok = gaps[-1] <= tolerance and gaps[-1] < gaps[0]
    return {
        "reference": reference,
        "constants": constants,
        "entries": entries,
        "edge_version": edge_version,
        "pass": bool(ok),
        "tolerance": tolerance,
    }
