"""Potential kernel a(x) of planar simple random walk and equilibrium measures.

a(x) = sum_k [P_0(S_k = 0) - P_0(S_k = x)] satisfies a(0) = 0, a(+-1,0) =
a(0,+-1) = 1, and mean-over-neighbors(a)(x) - a(x) = delta_0(x).  Asymptotics:
a(x) = (2/pi) ln||x|| + KAPPA + O(||x||^-2).

The cache is built by solving the lattice Poisson equation Delta a = 4*delta_0
on a square with boundary data from the asymptotic form, via a type-I discrete
sine transform.  Value recursions seeded at the origin are exponentially
unstable and are not used.

Harmonic measure from infinity of a finite set is computed from the
logarithmic-equilibrium linear system on the accessible skin; that identity is
validated in-repo against Monte Carlo from a large circle and against the
visit-count reversibility route (see tests), not taken on faith.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.integrate import quad
from scipy.special import gammaln

from .lattice import Site, accessible_skin, make_window

EULER_GAMMA = 0.5772156649015328606
# additive constant in a(x) = (2/pi) ln||x|| + KAPPA + O(||x||^-2)
KAPPA = (2.0 * EULER_GAMMA + np.log(8.0)) / np.pi

_CACHE_MAGIC = b"HHMKRN1\n"


def build_kernel_grid(radius: int) -> np.ndarray:
    """Dense a-values on [-R, R]^2 (index [i, j] = a(i - R, j - R)).

    Dirichlet data on the frame comes from the 2-term asymptotic; the interior
    solves the 5-point Poisson equation with source 4 at the origin.  The
    result is 8-fold symmetrized, then shifted so a(0) = 0, then scaled so
    a(1,0) == 1.0 exactly (that order keeps the last ulp of the normalization).
    """
    R = int(radius)
    if R < 4:
        raise ValueError("radius must be >= 4")
    M = 2 * R - 1  # interior points per axis
    idx = np.arange(-R, R + 1, dtype=np.float64)
    r2 = idx[:, None] ** 2 + idx[None, :] ** 2
    with np.errstate(divide="ignore"):
        asym = (1.0 / np.pi) * np.log(r2) + KAPPA  # (2/pi) ln r + KAPPA
    asym[R, R] = 0.0

    rhs = np.zeros((M, M))
    rhs[R - 1, R - 1] = 4.0
    # move known frame values to the right-hand side
    rhs[0, :] -= asym[0, 1 : 2 * R]
    rhs[-1, :] -= asym[2 * R, 1 : 2 * R]
    rhs[:, 0] -= asym[1 : 2 * R, 0]
    rhs[:, -1] -= asym[1 : 2 * R, 2 * R]

    j = np.arange(1, M + 1)
    lam = 2.0 * np.cos(np.pi * j / (M + 1)) - 2.0
    LAM = lam[:, None] + lam[None, :]
    coef = sfft.dstn(rhs, type=1)
    interior = sfft.idstn(coef / LAM, type=1)

    grid = asym
    grid[1 : 2 * R, 1 : 2 * R] = interior
    # 8-fold symmetrization, then pin a(0)=0 and a(1,0)=1
    grid = (grid + grid[::-1, :] + grid[:, ::-1] + grid[::-1, ::-1]) / 4.0
    grid = (grid + grid.T) / 2.0
    grid -= grid[R, R]
    grid /= grid[R + 1, R]
    return grid


@dataclass
class PotentialKernel:
    """Cached potential-kernel values on a square of the given radius."""

    radius: int
    grid: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, radius: int) -> "PotentialKernel":
        return cls(radius=int(radius), grid=build_kernel_grid(radius))

    def a(self, dx, dy=None) -> float:
        if dy is None:
            dx, dy = dx
        i, j = abs(int(dx)), abs(int(dy))
        if max(i, j) > self.radius:
            raise ValueError(f"offset ({dx},{dy}) outside cache radius {self.radius}")
        return float(self.grid[self.radius + i, self.radius + j])

    def a_array(self, dx, dy) -> np.ndarray:
        """Vectorized lookup; dx, dy broadcastable integer arrays."""
        i = np.abs(np.asarray(dx, dtype=np.int64))
        j = np.abs(np.asarray(dy, dtype=np.int64))
        if i.size and (i.max() > self.radius or j.max() > self.radius):
            raise ValueError("offsets outside cache radius")
        return self.grid[self.radius + i, self.radius + j]

    @property
    def c0(self) -> float:
        """Fitted additive constant of the (2/pi) ln||x|| asymptotic."""
        return fit_c0(self, radii=range(max(20, self.radius // 2), self.radius - 1, 5))["c0"]

    # cache file format: 8-byte magic, int64 radius, then the nonnegative
    # quadrant a(i,j) for 0 <= i,j <= radius, row-major float64.
    def save(self, path) -> None:
        quad_vals = self.grid[self.radius :, self.radius :]
        with open(path, "wb") as f:
            f.write(_CACHE_MAGIC)
            f.write(struct.pack("<q", self.radius))
            f.write(np.ascontiguousarray(quad_vals, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "PotentialKernel":
        with open(path, "rb") as f:
            magic = f.read(8)
            if magic != _CACHE_MAGIC:
                raise ValueError("not a kernel cache file")
            (radius,) = struct.unpack("<q", f.read(8))
            n = radius + 1
            quad_vals = np.frombuffer(f.read(n * n * 8), dtype="<f8").reshape(n, n)
        full = np.empty((2 * radius + 1, 2 * radius + 1))
        full[radius:, radius:] = quad_vals
        full[:radius, radius:] = quad_vals[:0:-1, :]
        full[:, :radius] = full[:, :radius:-1]
        return cls(radius=int(radius), grid=full)


_kernel_singleton: PotentialKernel | None = None


def get_kernel(min_radius: int = 64) -> PotentialKernel:
    """Shared process-wide kernel cache, grown on demand (rebuild is cheap)."""
    global _kernel_singleton
    if _kernel_singleton is None or _kernel_singleton.radius < min_radius:
        _kernel_singleton = PotentialKernel.build(min_radius)
    return _kernel_singleton


def _srw_prob_at(k: np.ndarray, x1: int, x2: int) -> np.ndarray:
    """P_0(S_k = x) for an array of times k, via the diagonal factorization
    into two independent 1-D walks: P(S_k = x) = p1d(k, x1+x2) * p1d(k, x1-x2)."""
    u, v = x1 + x2, x1 - x2
    out = np.zeros_like(k, dtype=np.float64)
    ok = (k + u) % 2 == 0
    ok &= k >= max(abs(u), abs(v))
    kk = k[ok].astype(np.float64)
    if kk.size == 0:
        return out
    lp = np.zeros_like(kk)
    for j in (u, v):
        lp += gammaln(kk + 1) - gammaln((kk + j) / 2 + 1) - gammaln((kk - j) / 2 + 1) - kk * np.log(2.0)
    out[ok] = np.exp(lp)
    return out


def a_series_oracle(x1: int, x2: int, kmax: int = 1 << 19) -> float:
    """Partial sums of the defining series with Richardson tail removal.

    Independent oracle for cache values (slow; used by tests and one-off
    confirmations such as a(1,1) = 4/pi).
    """
    if x1 == 0 and x2 == 0:
        return 0.0
    k = np.arange(0, kmax + 1)
    terms = _srw_prob_at(k, 0, 0) - _srw_prob_at(k, x1, x2)
    csum = np.cumsum(terms)
    # partial sums at K, K/2, K/4 (even cutoffs); error ~ A/K + B/K^2
    s1, s2, s4 = csum[kmax], csum[kmax // 2], csum[kmax // 4]
    r1 = 2.0 * s1 - s2  # kills the 1/K term
    r2 = 2.0 * s2 - s4
    return float(r1 + (r1 - r2) / 3.0)  # kills 1/K^2


def a_quadrature(x1: int, x2: int) -> float:
    """Cosine-integral representation of a(x); second independent oracle."""
    x1, x2 = abs(int(x1)), abs(int(x2))

    def integrand(t):
        c = 2.0 - np.cos(t)
        rho = c - np.sqrt(c * c - 1.0)
        num = 1.0 - np.cos(x1 * t) * rho**x2
        den = np.sqrt((1.0 - np.cos(t)) * (3.0 - np.cos(t)))
        if den == 0.0:
            # limit t -> 0: num ~ t*(x2 + ...), den ~ t
            return x2 + 0.0
        return num / den

    val, _ = quad(integrand, 0.0, np.pi, limit=400)
    return float((2.0 / np.pi) * val)


def fit_c0(kernel: PotentialKernel, radii) -> dict:
    """Mean and spread of a(x) - (2/pi) ln||x|| over lattice sites near the
    given radii (all sites whose rounded Euclidean norm equals the radius)."""
    resid = []
    for r in radii:
        r = int(r)
        if r < 2 or r > kernel.radius:
            raise ValueError(f"radius {r} out of range")
        for i in range(0, r + 1):
            jj = round(np.sqrt(max(r * r - i * i, 0)))
            if round(np.hypot(i, jj)) != r:
                continue
            nrm = np.hypot(i, jj)
            if nrm == 0:
                continue
            resid.append(kernel.a(i, jj) - (2.0 / np.pi) * np.log(nrm))
    resid = np.array(resid)
    return {
        "c0": float(resid.mean()),
        "spread": float(resid.max() - resid.min()),
        "count": int(resid.size),
    }


# ---------------------------------------------------------------------------
# half-plane exact identities (walk killed on the full line L0)

def g0_halfplane(kernel: PotentialKernel, u, v) -> float:
    """Green function of the walk killed on L0: G0(u,v) = a(u - v~) - a(u - v),
    where v~ is v reflected through the line."""
    du1 = u[0] - v[0]
    return kernel.a(du1, u[1] + v[1]) - kernel.a(du1, u[1] - v[1])


def g0_halfplane_array(kernel: PotentialKernel, u, v1, v2) -> np.ndarray:
    du1 = np.asarray(v1) - u[0]
    v2 = np.asarray(v2)
    return kernel.a_array(du1, u[1] + v2) - kernel.a_array(du1, u[1] - v2)


def poisson_kernel_L0(kernel: PotentialKernel, z, x1) -> np.ndarray:
    """Exact P_z(S_{tau_L0} = (x1, 0)) for z strictly above the line,
    vectorized over x1.  Equals G0(z, (x1,1)) / 4."""
    if z[1] <= 0:
        raise ValueError("start must be above the line")
    dx = np.asarray(x1) - z[0]
    return (kernel.a_array(dx, z[1] + 1) - kernel.a_array(dx, z[1] - 1)) / 4.0


# ---------------------------------------------------------------------------
# equilibrium measure / harmonic measure from infinity

@dataclass
class EquilibriumResult:
    masses: dict
    robin: float
    condition: float
    raw_min: float  # most negative pre-clamp mass (diagnostic)
    raw_sum: float = 1.0  # mass total before the final renormalization

    def mass(self, s) -> float:
        return self.masses.get(Site(*s), 0.0)


def hm_infinity(S, kernel: PotentialKernel | None = None) -> EquilibriumResult:
    """Harmonic measure from infinity of a finite set, via the logarithmic
    equilibrium system on the accessible skin.

    Solves [[a(s_i - s_j), -1], [1^T, 0]] [nu; r] = [0; 1]; nu is the hitting
    distribution from far away and r the Robin constant.
    """
    skin = sorted(accessible_skin(S))
    k = len(skin)
    if k == 0:
        raise ValueError("empty set")
    if k > 6000:
        raise ValueError(f"accessible skin of {k} sites exceeds dense-solve budget")
    if k == 1:
        return EquilibriumResult({skin[0]: 1.0}, robin=0.0, condition=1.0, raw_min=1.0)
    P = np.array(skin, dtype=np.int64)
    if kernel is None:
        span = int(np.abs(P[:, None, :] - P[None, :, :]).max())
        kernel = get_kernel(max(64, span))
    M = _kernel_gram(kernel, P)
    A = np.zeros((k + 1, k + 1))
    A[:k, :k] = M
    A[:k, k] = -1.0
    A[k, :k] = 1.0
    b = np.zeros(k + 1)
    b[k] = 1.0
    sol = np.linalg.solve(A, b)
    nu, robin = sol[:k], float(sol[k])
    cond = float(np.linalg.cond(M))
    raw_min = float(nu.min())
    if raw_min < -1e-8:
        raise ValueError(f"equilibrium mass {raw_min} below tolerance; system ill-posed")
    if raw_min < 0:
        warnings.warn(f"clamping equilibrium masses as low as {raw_min:.3e} to zero")
        nu = np.clip(nu, 0.0, None)
    raw_sum = float(nu.sum())
    nu = nu / raw_sum
    return EquilibriumResult(
        masses={Site(*p): float(m) for p, m in zip(skin, nu)},
        robin=robin,
        condition=cond,
        raw_min=raw_min,
        raw_sum=raw_sum,
    )


def _kernel_gram(kernel: PotentialKernel, P: np.ndarray) -> np.ndarray:
    d = P[:, None, :] - P[None, :, :]
    return kernel.a_array(d[..., 0], d[..., 1])


class FiniteHitting:
    """Exact full-plane hitting machinery for a finite set B.

    For y outside B (in the unbounded component),
        P_y(S_{tau-bar_B} = s) = nu_s + sum_t W[t, s] a(y - t) + c_s,
    with the column systems [[M, 1], [1^T, 0]] [W; c^T] = [I - 1 nu^T; 0].
    Also provides the killed Green function
        G_B(u, z) = sum_s P_u(hit at s) a(s - z) - a(u - z) + phi(u),
    phi the equilibrium escape potential (see escape_potential).
    """

    def __init__(self, S, kernel: PotentialKernel | None = None):
        self.sites = sorted(accessible_skin(S))
        k = len(self.sites)
        if k < 1:
            raise ValueError("empty set")
        if k > 4000:
            raise ValueError("set too large for dense hitting system")
        self.P = np.array(self.sites, dtype=np.int64)
        if kernel is None:
            span = int(np.abs(self.P[:, None, :] - self.P[None, :, :]).max())
            kernel = get_kernel(max(64, 2 * span))
        self.kernel = kernel
        self.index = {s: i for i, s in enumerate(self.sites)}
        M = _kernel_gram(kernel, self.P)
        A = np.zeros((k + 1, k + 1))
        A[:k, :k] = M
        A[:k, k] = 1.0
        A[k, :k] = 1.0
        eq = np.zeros((k + 1, k + 1))
        eq[:k, :k] = M
        eq[:k, k] = -1.0
        eq[k, :k] = 1.0
        beq = np.zeros(k + 1)
        beq[k] = 1.0
        sol = np.linalg.solve(eq, beq)
        self.nu = sol[:k]
        self.robin = float(sol[k])
        B = np.zeros((k + 1, k))
        B[:k, :] = np.eye(k) - self.nu[None, :]
        WC = np.linalg.solve(A, B)
        self.W = WC[:k, :]
        self.c = WC[k, :]

    def hit_probs(self, y) -> np.ndarray:
        """Hitting distribution over self.sites from y (y in the unbounded
        component of the complement, or on the skin itself)."""
        y = Site(*y)
        if y in self.index:
            out = np.zeros(len(self.sites))
            out[self.index[y]] = 1.0
            return out
        ay = self.kernel.a_array(y[0] - self.P[:, 0], y[1] - self.P[:, 1])
        return self.nu + ay @ self.W + self.c

    def escape_potential(self, u) -> float:
        """phi(u) = sum_s nu_s a(u - s) - robin: zero on the skin, harmonic off
        it, growing like the log potential; P_u(reach radius R before B) is
        asymptotically phi(u) / ((2/pi) ln R + KAPPA - robin)."""
        au = self.kernel.a_array(u[0] - self.P[:, 0], u[1] - self.P[:, 1])
        return float(self.nu @ au) - self.robin

    def green(self, u, z) -> float:
        """Expected visits to z (not in B) before absorption on B, from u.

        The escape-potential term is the ring-truncation limit of the exit
        mass on a distant circle: escape probability ~ phi(u)/ell(R) times
        potential values ~ ell(R) leaves exactly phi(u) behind.  Dropping it
        is only correct for transient walks.
        """
        h = self.hit_probs(u)
        az = self.kernel.a_array(self.P[:, 0] - z[0], self.P[:, 1] - z[1])
        return float(h @ az - self.kernel.a(u[0] - z[0], u[1] - z[1]) + self.escape_potential(u))

    def green_many(self, us, zs) -> np.ndarray:
        """G_B(u, z) as a (len(us), len(zs)) matrix; all zs outside B."""
        U = np.asarray([tuple(u) for u in us], dtype=np.int64)
        Z = np.asarray([tuple(z) for z in zs], dtype=np.int64)
        AU = self.kernel.a_array(U[:, 0, None] - self.P[None, :, 0],
                                 U[:, 1, None] - self.P[None, :, 1])
        H = self.nu[None, :] + AU @ self.W + self.c[None, :]
        phi = AU @ self.nu - self.robin
        for i, u in enumerate(map(Site._make, U)):
            j = self.index.get(u)
            if j is not None:
                H[i] = 0.0
                H[i, j] = 1.0
                phi[i] = 0.0
        AZ = self.kernel.a_array(Z[:, 0, None] - self.P[None, :, 0],
                                 Z[:, 1, None] - self.P[None, :, 1])
        AUZ = self.kernel.a_array(U[:, 0, None] - Z[None, :, 0],
                                  U[:, 1, None] - Z[None, :, 1])
        return H @ AZ.T - AUZ + phi[:, None]


def return_vs_hit(x, pads=(20, 40, 80), kernel=None) -> dict:
    """Bracket for P_0(tau_x < tau_0) from two-absorbing-class window solves
    on a growing schedule; the bracket upper edge adds the window defect."""
    from . import dirichlet  # local import keeps the module DAG acyclic

    x = Site(*x)
    if x == (0, 0):
        raise ValueError("x must differ from the origin")
    span = max(abs(x[0]), abs(x[1]), 1)
    lo = hi = None
    for pad in pads:
        w = span * pad
        prob = dirichlet.AbsorbingProblem(
            window=make_window(-w, w, -w, w),
            classes={"origin": {Site(0, 0)}, "target": {x}},
        )
        dist = dirichlet.kick_start(Site(0, 0), prob)
        p = dist.class_masses["target"]
        lo, hi = p, p + dist.defect
        if dist.defect < 1e-12:
            break
    # leaked mass eventually hits one of the two single-point classes; by
    # symmetry of harmonic measure from far away it splits evenly, so the
    # midpoint is the natural point value inside the certified bracket
    return {"lower": lo, "upper": hi, "value": lo + (hi - lo) / 2.0, "x": x}
