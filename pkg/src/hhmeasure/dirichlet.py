"""Finite-window Dirichlet solvers for simple random walk.

One symmetric linear solve per problem start yields the expected-visits
function u on the free sites; every readout (hitting masses, directed-edge
masses, expected visits, escape probabilities) is linear in u:

    absorbed mass at s      = (1/4) * sum of u over free neighbors of s
    directed mass (prev->s) = (1/4) * u(prev)
    visits to target set    = sum of u over targets

Mass stepping out of the window onto a non-absorbing site is the *defect*,
reported per entry site so callers can close it exactly (strong Markov) when
the outside world is analytically known.

Absorbing sets are given as named classes: finite site sets plus "line"
descriptors (full rows, centered segments) whose membership extends beyond the
window, so out-of-window steps are classified by membership, never geometry.

Fast paths: when the free region is a full rectangle the solve is a type-I
DST; a rectangle with up to a few dozen absorbing punctures uses the DST plus
a capacitance correction.  Everything else goes through sparse LU (or AMG for
large systems).  All paths finish with iterative refinement until the residual
contract holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import fft as sfft
from scipy import sparse
from scipy.sparse import linalg as spla

from .lattice import Site, Window, make_window, neighbors

RESIDUAL_TARGET = 1e-12
_PUNCTURE_LIMIT = 48
_SPLU_LIMIT = 250_000


def row_class(x2: int) -> tuple:
    """Absorbing descriptor: the full horizontal line at height x2."""
    return ("row", int(x2))


def segment_class(x2: int, half_width: int) -> tuple:
    """Absorbing descriptor: [-half_width, half_width] x {x2}."""
    return ("segment", int(x2), int(half_width))


def below_class(x2: int) -> tuple:
    """Absorbing descriptor: the closed lower half-plane {height <= x2}.

    A walk strictly below a full absorbing line must step onto that line
    before reaching anything above it, so when every other absorbing site and
    every readout sits above the line, folding the region below into the
    line's class is exact for class masses and leaves upper-arrival site
    masses untouched.
    """
    return ("below", int(x2))


def disc_out_class(radius: float) -> tuple:
    """Absorbing descriptor: sites at Euclidean distance >= radius from 0."""
    r = float(radius)
    return ("disc_out", r * r)


def _descr_contains(descr: tuple, x1, x2):
    kind = descr[0]
    if kind == "row":
        return x2 == descr[1]
    if kind == "segment":
        return (x2 == descr[1]) & (np.abs(x1) <= descr[2])
    if kind == "below":
        return x2 <= descr[1]
    if kind == "disc_out":
        return x1 * x1 + x2 * x2 >= descr[1]
    raise ValueError(f"unknown descriptor {descr!r}")


@dataclass
class AbsorbingProblem:
    """A window plus named absorbing classes.

    classes: name -> finite set of Sites (may lie outside the window).
    line_classes: name -> descriptor tuple (row_class / segment_class), whose
        membership is evaluable anywhere in the plane.
    A class name may appear in both mappings; masses merge.
    """

    window: Window
    classes: dict = field(default_factory=dict)
    line_classes: dict = field(default_factory=dict)
    residual_target: float = RESIDUAL_TARGET

    def class_names(self):
        return list(dict.fromkeys(list(self.classes) + list(self.line_classes)))

    def classify(self, s) -> str | None:
        """Class of an absorbing site, or None if s is free."""
        x1, x2 = s
        for name, descr in self.line_classes.items():
            if _descr_contains(descr, x1, x2):
                return name
        for name, sites in self.classes.items():
            if (x1, x2) in sites:
                return name
        return None


@dataclass
class HittingDistribution:
    masses: dict
    class_masses: dict
    defect: float
    leak: dict
    residual: float
    directed: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.class_masses.values()) + self.defect

    def mass(self, s) -> float:
        return self.masses.get(Site(*s), 0.0)


class _WindowSystem:
    """Geometry and factorization shared by all starts of one problem."""

    def __init__(self, problem: AbsorbingProblem):
        self.problem = problem
        w = problem.window
        W, H = w.shape
        x1 = np.arange(w.x1_min, w.x1_max + 1)
        x2 = np.arange(w.x2_min, w.x2_max + 1)
        X1 = np.broadcast_to(x1[None, :], (H, W))
        X2 = np.broadcast_to(x2[:, None], (H, W))
        absorbing = np.zeros((H, W), dtype=bool)
        for descr in problem.line_classes.values():
            absorbing |= _descr_contains(descr, X1, X2)
        for sites in problem.classes.values():
            for s in sites:
                if w.contains(s):
                    absorbing[s[1] - w.x2_min, s[0] - w.x1_min] = True
        self.free = ~absorbing
        self.nfree = int(self.free.sum())
        self._factor = None
        self._mode = None
        self._rect = self._detect_rectangle()

    def _detect_rectangle(self):
        """(r0, r1, c0, c1, punctures) if the free set is a rectangle with at
        most _PUNCTURE_LIMIT absorbing sites inside it, else None."""
        if self.nfree == 0:
            return None
        rows = np.flatnonzero(self.free.any(axis=1))
        cols = np.flatnonzero(self.free.any(axis=0))
        r0, r1, c0, c1 = int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])
        rect = self.free[r0 : r1 + 1, c0 : c1 + 1]
        missing = rect.size - int(rect.sum())
        if missing == 0:
            return (r0, r1, c0, c1, [])
        if missing <= _PUNCTURE_LIMIT:
            holes = np.argwhere(~rect)
            return (r0, r1, c0, c1, [(int(a) + r0, int(b) + c0) for a, b in holes])
        return None

    # -- DST rectangle machinery ------------------------------------------
    def _dst_solve_rect(self, b_grid):
        """(I - Q) u = b on the free bounding rectangle, u = 0 outside it."""
        r0, r1, c0, c1, _ = self._rect
        sub = b_grid[r0 : r1 + 1, c0 : c1 + 1]
        m1, m2 = sub.shape
        j1 = np.arange(1, m1 + 1)
        j2 = np.arange(1, m2 + 1)
        lam = 1.0 - (np.cos(np.pi * j1 / (m1 + 1))[:, None] + np.cos(np.pi * j2 / (m2 + 1))[None, :]) / 2.0
        coef = sfft.dstn(sub, type=1)
        out = sfft.idstn(coef / lam, type=1)
        u = np.zeros_like(b_grid)
        u[r0 : r1 + 1, c0 : c1 + 1] = out
        return u

    def _solve_rect(self, b_grid):
        r0, r1, c0, c1, holes = self._rect
        u = self._dst_solve_rect(b_grid)
        if holes:
            if self._factor is None:
                cols = []
                for (hr, hc) in holes:
                    e = np.zeros_like(b_grid)
                    e[hr, hc] = 1.0
                    cols.append(self._dst_solve_rect(e))
                gram = np.array([[col[hr, hc] for (hr, hc) in holes] for col in cols]).T
                self._factor = (cols, np.linalg.inv(gram))
                self._mode = "dst+cap"
            cols, gram_inv = self._factor
            vals = np.array([u[hr, hc] for (hr, hc) in holes])
            alpha = gram_inv @ vals
            for a, col in zip(alpha, cols):
                u -= a * col
            for (hr, hc) in holes:
                u[hr, hc] = 0.0
        u[~self.free] = 0.0
        return u

    # -- sparse general path ----------------------------------------------
    def _build_sparse(self):
        H, W = self.free.shape
        idx = -np.ones((H, W), dtype=np.int64)
        idx[self.free] = np.arange(self.nfree)
        rows, cols = [], []
        fr, fc = np.nonzero(self.free)
        for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            rr, cc = fr + dr, fc + dc
            ok = (rr >= 0) & (rr < H) & (cc >= 0) & (cc < W)
            sel = np.zeros_like(ok)
            sel[ok] = self.free[rr[ok], cc[ok]]
            rows.append(idx[fr[sel], fc[sel]])
            cols.append(idx[rr[sel], cc[sel]])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.full(rows.size, -0.25)
        A = sparse.coo_matrix((data, (rows, cols)), shape=(self.nfree, self.nfree))
        A = (sparse.identity(self.nfree, format="csr") + A.tocsr()).tocsc()
        return A

    def _solve_general(self, b_grid):
        if self._factor is None:
            A = self._build_sparse()
            if self.nfree <= _SPLU_LIMIT:
                self._factor = spla.splu(A)
                self._mode = "splu"
            else:
                try:
                    import pyamg

                    self._factor = pyamg.ruge_stuben_solver(A.tocsr())
                    self._mode = "amg"
                except ImportError:
                    self._factor = spla.splu(A)
                    self._mode = "splu"
        b = b_grid[self.free]
        if self._mode == "splu":
            x = self._factor.solve(b)
        else:
            x = self._factor.solve(b, tol=1e-12, maxiter=500, accel="cg")
        u = np.zeros_like(b_grid)
        u[self.free] = x
        return u

    def solve_once(self, b_grid):
        if self._rect is not None:
            return self._solve_rect(b_grid)
        return self._solve_general(b_grid)

    def solve(self, b_grid, residual_target):
        """Solve with iterative refinement until the residual target holds."""
        u = self.solve_once(b_grid)
        for _ in range(3):
            r = self.residual_grid(u, b_grid)
            res = float(np.abs(r[self.free]).max()) if self.nfree else 0.0
            if res <= residual_target:
                return u, res
            r[~self.free] = 0.0
            u = u + self.solve_once(r)
        r = self.residual_grid(u, b_grid)
        res = float(np.abs(r[self.free]).max()) if self.nfree else 0.0
        if res > residual_target:
            raise RuntimeError(f"solver residual {res:.3e} exceeds target {residual_target:.1e}")
        return u, res

    def residual_grid(self, u, b_grid):
        lap = np.zeros_like(u)
        lap[1:, :] += u[:-1, :]
        lap[:-1, :] += u[1:, :]
        lap[:, 1:] += u[:, :-1]
        lap[:, :-1] += u[:, 1:]
        r = b_grid - (u - 0.25 * lap)
        r[~self.free] = 0.0
        return r


_system_cache: dict = {}


def _system_for(problem: AbsorbingProblem) -> _WindowSystem:
    key = id(problem)
    sys_ = _system_cache.get(key)
    if sys_ is None or sys_.problem is not problem:
        sys_ = _WindowSystem(problem)
        _system_cache.clear()  # keep at most one factorization alive
        _system_cache[key] = sys_
    return sys_


@dataclass
class VisitsSolution:
    """Expected-visits function of one solve, plus absorbed-mass bookkeeping."""

    problem: AbsorbingProblem
    u: np.ndarray  # (H, W) grid of expected visits, 0 on absorbing sites
    free: np.ndarray
    direct: dict  # first-step (kick) masses: class -> mass, plus site/leak detail
    residual: float

    def u_at(self, s) -> float:
        w = self.problem.window
        if not w.contains(s):
            return 0.0
        return float(self.u[s[1] - w.x2_min, s[0] - w.x1_min])

    def visits(self, targets) -> float:
        return float(sum(self.u_at(t) for t in targets))

    def absorbed(self, with_directed=()) -> HittingDistribution:
        """Harvest absorbed masses, per-class totals, and per-site leak."""
        prob, w = self.problem, self.problem.window
        H, W = self.u.shape
        core = 0.25 * self.u
        pad = np.zeros((H + 2, W + 2))
        pad[2 : H + 2, 1 : W + 1] += core
        pad[0:H, 1 : W + 1] += core
        pad[1 : H + 1, 2 : W + 2] += core
        pad[1 : H + 1, 0:W] += core

        masses: dict = dict(self.direct.get("__site__", {}))
        class_masses = {name: self.direct.get(name, 0.0) for name in prob.class_names()}
        leak: dict = dict(self.direct.get("__leak_sites__", {}))

        inner = pad[1 : H + 1, 1 : W + 1]
        recv = (~self.free) & (inner != 0.0)
        for r, c in np.argwhere(recv):
            s = Site(w.x1_min + int(c), w.x2_min + int(r))
            m = float(inner[r, c])
            name = prob.classify(s)
            masses[s] = masses.get(s, 0.0) + m
            class_masses[name] = class_masses.get(name, 0.0) + m

        frame = pad.copy()
        frame[1 : H + 1, 1 : W + 1] = 0.0
        for r, c in np.argwhere(frame != 0.0):
            s = Site(w.x1_min + int(c) - 1, w.x2_min + int(r) - 1)
            m = float(frame[r, c])
            name = prob.classify(s)
            if name is None:
                leak[s] = leak.get(s, 0.0) + m
            else:
                masses[s] = masses.get(s, 0.0) + m
                class_masses[name] = class_masses.get(name, 0.0) + m

        directed = {}
        for (s, prev) in with_directed:
            directed[(Site(*s), Site(*prev))] = 0.25 * self.u_at(prev)
        return HittingDistribution(
            masses=masses,
            class_masses=class_masses,
            defect=float(sum(leak.values())),
            leak=leak,
            residual=self.residual,
            directed=directed,
        )


def _solve(problem: AbsorbingProblem, rhs, direct=None) -> VisitsSolution:
    sys_ = _system_for(problem)
    w = problem.window
    b = np.zeros(sys_.free.shape)
    for s, weight in rhs:
        r, c = s[1] - w.x2_min, s[0] - w.x1_min
        if not sys_.free[r, c]:
            raise ValueError(f"rhs site {tuple(s)} is absorbing")
        b[r, c] += weight
    u, res = sys_.solve(b, problem.residual_target)
    return VisitsSolution(problem=problem, u=u, free=sys_.free, direct=direct or {}, residual=res)


def visits_from(start, problem: AbsorbingProblem) -> VisitsSolution:
    """Expected-visits grid for the walk started at a free site."""
    start = Site(*start)
    if not problem.window.contains(start):
        raise ValueError("start outside window")
    if problem.classify(start) is not None:
        raise ValueError("start is absorbing; use kick_visits")
    return _solve(problem, [(start, 1.0)])


def kick_visits(x, problem: AbsorbingProblem) -> VisitsSolution:
    """Expected-visits grid for the walk started AT an absorbing site with the
    first step taken unconditionally (strictly positive hitting time)."""
    x = Site(*x)
    direct: dict = {}
    rhs = []
    site_detail: dict = {}
    leak_sites: dict = {}
    for v in neighbors(x):
        name = problem.classify(v)
        if name is not None:
            direct[name] = direct.get(name, 0.0) + 0.25
            site_detail[v] = site_detail.get(v, 0.0) + 0.25
        elif problem.window.contains(v):
            rhs.append((v, 0.25))
        else:
            leak_sites[v] = leak_sites.get(v, 0.0) + 0.25
    if site_detail:
        direct["__site__"] = site_detail
    if leak_sites:
        direct["__leak_sites__"] = leak_sites
    return _solve(problem, rhs, direct=direct)


def hit_distribution(start, problem: AbsorbingProblem, directed=()) -> HittingDistribution:
    """Absorption distribution of the walk started at a free site."""
    return visits_from(start, problem).absorbed(with_directed=directed)


def kick_start(x, problem: AbsorbingProblem, directed=()) -> HittingDistribution:
    """Absorption distribution of the kick-started walk from an absorbing site."""
    return kick_visits(x, problem).absorbed(with_directed=directed)


def expected_visits(x, targets, problem: AbsorbingProblem, visit_ceiling=None) -> dict:
    """Expected visits to the target set before absorption, with a bracket.

    The bracket's upper edge adds defect * visit_ceiling, a caller-supplied
    bound on the conditional future target visits of a leaked walker (callers
    with an exact closure should use the VisitsSolution directly instead).
    """
    x = Site(*x)
    if problem.classify(x) is not None:
        sol = kick_visits(x, problem)
    else:
        sol = visits_from(x, problem)
    dist = sol.absorbed()
    val = sol.visits(targets)
    hi = val if visit_ceiling is None else val + dist.defect * visit_ceiling
    return {"value": val, "lower": val, "upper": hi, "defect": dist.defect, "solution": sol}


def escape_probability(x, a_class: str, barrier_class: str, problem: AbsorbingProblem) -> dict:
    """P_x(hit the barrier class before the A class), bracketed by the defect."""
    x = Site(*x)
    if problem.classify(x) is not None:
        dist = kick_start(x, problem)
    else:
        dist = hit_distribution(x, problem)
    p = dist.class_masses.get(barrier_class, 0.0)
    return {"value": p, "lower": p, "upper": p + dist.defect, "defect": dist.defect}


def auto_pad(build, start_fn, target_defect=1e-8, pads=(4, 8, 16, 32)):
    """Run build(pad) -> problem, solve via start_fn(problem), doubling the
    padding until the defect meets the target or the schedule is exhausted."""
    last = None
    for pad in pads:
        problem = build(pad)
        dist = start_fn(problem)
        last = (problem, dist)
        if dist.defect <= target_defect:
            break
    return last


# ---------------------------------------------------------------------------
# box-exit distributions (reflection inequality oracle)

def _box_exit_system(n: int, rational: bool):
    """Transition structure for the walk in [-n,n] x [0,n] absorbed on the
    inner boundary ring, started at the origin.

    States: interior sites plus the start (0,0), which lies on the bottom ring.
    Down-steps from the start leave the box and count as bottom-edge absorption
    (the inequality under test never involves the bottom class).  Corners
    (+-n, n) belong to the up edge, (+-n, 0) to the bottom; sides exclude both.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    interior = [(i, j) for j in range(1, n) for i in range(-(n - 1), n)]
    states = {s: k for k, s in enumerate(interior)}
    start = (0, 0)
    start_idx = len(interior)
    states[start] = start_idx
    size = len(interior) + 1

    def edge_of(s):
        i, j = s
        if j == n:
            return "up"
        if j == 0:
            return "down"
        if i == -n:
            return "left"
        return "right"

    one = Fraction(1, 4) if rational else 0.25
    zero = Fraction(0) if rational else 0.0
    T = [[zero] * size for _ in range(size)]
    site_rows: dict = {}

    def absorb(v, k):
        row = site_rows.setdefault(v, {})
        row[k] = row.get(k, zero) + one

    for s, k in states.items():
        i, j = s
        for v in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if v in states and v != start:
                T[k][states[v]] += one
            elif v == start:
                absorb(start, k)
            elif abs(v[0]) <= n and 0 <= v[1] <= n:
                absorb(v, k)
            else:
                absorb(("below", 0), k)
    return states, start_idx, size, T, site_rows, edge_of


def _absorption_from(T, size, start_idx, site_rows, rational: bool):
    """Visits vector N solves (I - T)^T N = e_start; absorbed mass at exit
    site s is then sum_k site_rows[s][k] * N_k."""
    if rational:
        A = [[(Fraction(1) if i == j else Fraction(0)) - T[i][j] for j in range(size)] for i in range(size)]
        b = [Fraction(0)] * size
        b[start_idx] = Fraction(1)
        N = _gauss_transposed(A, b)
    else:
        A = np.eye(size) - np.array(T, dtype=np.float64)
        b = np.zeros(size)
        b[start_idx] = 1.0
        N = np.linalg.solve(A.T, b)
    out = {}
    for s, row in site_rows.items():
        total = Fraction(0) if rational else 0.0
        for k, p in row.items():
            total += p * N[k]
        out[s] = total
    return out


def _gauss_transposed(A, b):
    """Solve A^T x = b over Fractions by plain elimination."""
    n = len(b)
    M = [[A[j][i] for j in range(n)] + [b[i]] for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [v / pv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [vr - f * vc for vr, vc in zip(M[r], M[col])]
    return [M[i][n] for i in range(n)]


@dataclass
class RationalDistribution:
    per_site: dict
    edges: dict

    @property
    def total(self):
        return sum(self.edges.values())


def rational_exit(n: int, start=(0, 0)) -> RationalDistribution:
    """Exact-rational exit-class distribution over the four edges of the inner
    boundary ring of [-n,n] x [0,n], walk started at the origin."""
    if n > 8:
        raise ValueError("rational oracle limited to n <= 8")
    if tuple(start) != (0, 0):
        raise ValueError("only the origin start is supported")
    _, start_idx, size, T, site_rows, edge_of = _box_exit_system(n, rational=True)
    per_site = _absorption_from(T, size, start_idx, site_rows, rational=True)
    edges = {"up": Fraction(0), "down": Fraction(0), "left": Fraction(0), "right": Fraction(0)}
    for s, m in per_site.items():
        key = "down" if s[0] == "below" else edge_of(s)
        edges[key] += m
    return RationalDistribution(per_site=per_site, edges=edges)


def float_exit(n: int, start=(0, 0)) -> dict:
    """Float version of rational_exit for larger boxes (DST-backed solve)."""
    if tuple(start) != (0, 0):
        raise ValueError("only the origin start is supported")
    if n <= 8:
        _, start_idx, size, T, site_rows, edge_of = _box_exit_system(n, rational=False)
        per_site = _absorption_from(T, size, start_idx, site_rows, rational=False)
        edges = {"up": 0.0, "down": 0.0, "left": 0.0, "right": 0.0}
        for s, m in per_site.items():
            key = "down" if s[0] == "below" else edge_of(s)
            edges[key] += float(m)
        return edges
    ring: dict = {}
    for i in range(-n, n + 1):
        ring[(i, n)] = "up"
        ring[(i, 0)] = "down"
    for j in range(1, n):
        ring[(-n, j)] = "left"
        ring[(n, j)] = "right"
    classes: dict = {"up": set(), "down": set(), "left": set(), "right": set()}
    for s, e in ring.items():
        classes[e].add(Site(*s))
    prob = AbsorbingProblem(window=make_window(-n, n, 0, n), classes=classes)
    dist = kick_start(Site(0, 0), prob)
    edges = {e: dist.class_masses.get(e, 0.0) for e in classes}
    # the kick step down from the origin leaves the box: bottom by convention
    edges["down"] += dist.defect
    return edges
