"""Finite conformal iterated function systems from inverse branches.

Systems are built either from inverse branches of polynomial iterates
returning into a disc near the Julia set, or from inverse branches of a
lineariser acting inside one of its far annuli. Dimension estimates come
from the full-shift pressure: the limit-set dimension is the zero of
t -> log sum_i lambda_i^t, and the occupation-class machinery gives the
polynomial-in-p lower bound on partition sums that the appendix argument
needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .dynamics import escape_radius, preimage_tree
from .errors import Infeasible, NoBranches, WordBlowup
from .lineariser import Lineariser, level_set
from .metrics import Annulus, MetricKind
from .polynomial import Polynomial, solve_many

WORD_BUDGET = 10 ** 7


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float

    def contains(self, z):
        out = np.abs(np.asarray(z, dtype=complex) - self.center) <= self.radius
        return out if out.shape else bool(out)


@dataclass
class Branch:
    """Inverse branch of an m-th iterate, contracting on a common disc."""

    m: int
    domain: Disc
    image_center: complex
    image_radius: float
    norm_sup: float
    metric: MetricKind
    sample_points: list            # (y, phi(y), phi'(y)) triples
    continuation: object = field(default=None, repr=False)


@dataclass
class FiniteIFS:
    disc: Disc
    branches: list
    metric: MetricKind

    @property
    def contraction_norms(self) -> np.ndarray:
        return np.array([b.norm_sup for b in self.branches])


@dataclass
class BowenResult:
    dim: float
    p_used: int
    pressure_samples: dict


def ifs_pressure(s: FiniteIFS, t: float, p: int = 1) -> float:
    """(1/p) log of the length-p word sum, which collapses to
    log sum_i lambda_i^t on a full shift (independent of p)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if len(s.branches) ** p > WORD_BUDGET:
        raise WordBlowup(f"{len(s.branches)}^{p} words exceed the budget")
    lam = s.contraction_norms
    return float(np.log(np.sum(lam ** t)))


def pressure_from_norms(norms, t: float) -> float:
    return float(np.log(np.sum(np.asarray(norms, dtype=float) ** t)))


def bowen_dimension(s: FiniteIFS) -> BowenResult:
    """Zero of the full-shift pressure t -> log sum lambda_i^t, bisected to
    1e-6. The pressure is logged just left and right of the root so the
    bracketing can be checked."""
    lam = s.contraction_norms
    if np.any(lam >= 1.0):
        raise ValueError("all contraction norms must be < 1")
    if lam.size == 0:
        raise NoBranches("empty system")

    def g(t: float) -> float:
        return pressure_from_norms(lam, t)

    lo, hi = 0.0, 1.0
    while g(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError("pressure does not become negative")
    if g(0.0) <= 0:
        dim = 0.0
    else:
        while hi - lo > 1e-9:
            mid = 0.5 * (lo + hi)
            if g(mid) > 0:
                lo = mid
            else:
                hi = mid
        dim = 0.5 * (lo + hi)
    samples = {round(dim - 0.01, 6): g(dim - 0.01) if dim > 0.01 else g(0.0),
               round(dim + 0.01, 6): g(dim + 0.01)}
    return BowenResult(dim=dim, p_used=1, pressure_samples=samples)


@dataclass
class SpBound:
    sum_Sp: float
    rhs: float
    holds: bool | None
    nu_p: int
    k: tuple
    ratio: float
    delta: float


def sp_lower_bound(s: FiniteIFS, t: float, p: int, c2: float = 0.3) -> SpBound:
    """Occupation-class lower bound on the length-p word sum.

    With lambda_i = ||phi_i'||^t, Lambda = sum lambda_i and
    eps_i = lambda_i / Lambda, an occupation vector k_i(p) is chosen with
    eps_i p - 1 <= k_i < eps_i p + 1 summing to p (largest-remainder
    rounding). The words with exactly that occupation contribute
    multinomial(p; k) * prod lambda_i^{k_i}, and the Stirling chain bounds
    the normalised contribution below by C2 / p^delta, delta = (3I-1)/2.
    The bound is asserted only for two-branch systems, where C2 = 0.3 is
    calibrated; other sizes report the ratio without asserting.
    """
    branches = s.branches
    big_i = len(branches)
    if big_i < 2:
        raise Infeasible("need at least two branches")
    if big_i ** p > WORD_BUDGET:
        raise WordBlowup(f"{big_i}^{p} words exceed the budget")
    lam = s.contraction_norms ** t
    big_lambda = float(np.sum(lam))
    eps = lam / big_lambda
    k = _occupation_vector(eps, p)
    delta = (3 * big_i - 1) / 2.0
    log_multinomial = (math.lgamma(p + 1)
                       - sum(math.lgamma(ki + 1) for ki in k))
    log_sum_sp = log_multinomial + float(np.dot(k, np.log(lam)))
    ratio = math.exp(log_sum_sp - p * math.log(big_lambda))
    rhs = c2 / p ** delta
    holds = bool(ratio >= rhs) if big_i == 2 else None
    nu_p = int(np.dot(k, [b.m for b in branches]))
    return SpBound(sum_Sp=math.exp(log_sum_sp), rhs=rhs * big_lambda ** p,
                   holds=holds, nu_p=nu_p, k=tuple(int(x) for x in k),
                   ratio=ratio, delta=delta)


def _occupation_vector(eps: np.ndarray, p: int) -> np.ndarray:
    base = np.floor(eps * p).astype(int)
    short = p - int(base.sum())
    if short < 0:
        raise Infeasible("rounding produced an oversized vector")
    frac = eps * p - base
    order = np.argsort(-frac, kind="stable")
    k = base.copy()
    for i in order[:short]:
        k[i] += 1
    if np.any(k < eps * p - 1) or np.any(k >= eps * p + 1):
        raise Infeasible(f"no admissible occupation vector at p = {p}")
    return k


def enumerate_word_sum(norms, t: float, p: int) -> float:
    """Brute-force sum over all length-p words of the product of powered
    norms; test oracle for the closed-form identities."""
    norms = np.asarray(norms, dtype=float) ** t
    if norms.size ** p > WORD_BUDGET:
        raise WordBlowup("enumeration budget exceeded")
    total = np.array([1.0])
    for _ in range(p):
        total = (total[:, None] * norms[None, :]).ravel()
    return float(np.sum(total))


# -- branch continuation ----------------------------------------------------

class _PolyBranch:
    """Inverse branch of P^n selected by a reference backward orbit."""

    def __init__(self, P: Polynomial, orbit: list):
        self.P = P
        self.orbit = orbit              # [z_1, ..., z_n], P(z_j) = z_{j-1}

    def __call__(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Returns (phi(y), (P^n)'(phi(y))) for query points y."""
        y = np.atleast_1d(np.asarray(y, dtype=complex))
        x = y
        deriv = np.ones(y.shape, dtype=complex)
        for z_ref in self.orbit:
            roots = solve_many(self.P, x)
            pick = np.argmin(np.abs(roots - z_ref), axis=1)
            x = roots[np.arange(x.size), pick]
            deriv = deriv * self.P.eval_derivative(x)
        return x, deriv


def _tree_orbit(tree, leaf_index: int) -> list:
    """Backward orbit [z_1, .., z_n] of a leaf through the tree's parents."""
    orbit = []
    n = tree.depth
    i = leaf_index
    for level in range(n, 0, -1):
        orbit.append(complex(tree.points[level][i]))
        i = int(tree.parents[level][i])
    return orbit[::-1]


def _hyperbolic_gap(images: np.ndarray, disc: Disc) -> float:
    """Largest hyperbolic distance (in the disc) between images of
    neighbouring samples: the resolution the distortion margin must cover."""
    w = (images - disc.center) / disc.radius
    w = w[np.abs(w) < 0.999]
    if w.size < 2:
        return 0.0
    a = w
    b = np.roll(w, -1)
    q = np.abs((a - b) / (1.0 - np.conj(a) * b))
    q = np.minimum(q, 0.999999)
    return float(np.max(2.0 * np.arctanh(q)))


def _branch_samples(disc: Disc, count: int = 32) -> np.ndarray:
    theta = np.linspace(0, 2 * np.pi, count, endpoint=False)
    return np.concatenate([[disc.center],
                           disc.center + disc.radius * np.exp(1j * theta)])


def build_ifs_near(P: Polynomial, U, n: int,
                   max_branches: int = 64) -> FiniteIFS:
    """Finite IFS of inverse branches of P^n returning into a disc D inside
    U near the Julia set.

    The disc is centered on the non-escaping sample with the most room; each
    level-n preimage of the center inside D spawns a candidate branch, kept
    when its continued image of D stays inside D and its sampled derivative
    sup (inflated by the hyperbolic-diameter distortion margin) stays below
    one.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    center, radius = _disc_in_julia_neighbourhood(P, U)
    disc = Disc(center, radius)
    tree = preimage_tree(P, center, n)
    leaves = tree.points[n]
    inside = np.flatnonzero(np.abs(leaves - center) < radius)
    if inside.size == 0:
        raise NoBranches("no level-n preimage of the center inside the disc")
    order = inside[np.argsort(np.abs(leaves[inside] - center), kind="stable")]
    samples = _branch_samples(disc)
    branches = []
    for idx in order:
        if len(branches) >= max_branches:
            break
        branch_fn = _PolyBranch(P, _tree_orbit(tree, int(idx)))
        imgs, chain = branch_fn(samples)
        if np.any(chain == 0):
            continue
        if float(np.max(np.abs(imgs - center))) >= 0.98 * radius:
            continue
        norms = 1.0 / np.abs(chain)
        inflation = math.exp(4.0 * _hyperbolic_gap(imgs, disc))
        norm_sup = float(np.max(norms)) * inflation
        if norm_sup >= 1.0:
            continue
        triples = [(complex(samples[j]), complex(imgs[j]),
                    complex(1.0 / chain[j])) for j in (0, 1, len(samples) // 2)]
        branches.append(Branch(m=n, domain=disc,
                               image_center=complex(imgs[0]),
                               image_radius=float(np.max(np.abs(imgs - imgs[0]))),
                               norm_sup=norm_sup,
                               metric=MetricKind.EUCLIDEAN,
                               sample_points=triples,
                               continuation=branch_fn))
    if not branches:
        raise NoBranches(f"no contraction returns into the disc at depth {n}")
    return FiniteIFS(disc=disc, branches=branches, metric=MetricKind.EUCLIDEAN)


def _disc_in_julia_neighbourhood(P: Polynomial, U,
                                 grid: int = 25,
                                 iterations: int = 1000) -> tuple[complex, float]:
    """Center a disc on the sample of U that resists escape longest.

    U must straddle the escape dichotomy: some samples escape quickly, some
    survive much longer (or forever). The slowest-escaping sample sits within
    grid resolution of the Julia set even when the set itself has measure
    zero and no sample lands on it exactly.
    """
    esc_r = escape_radius(P)
    if isinstance(U, Disc):
        c0, half = U.center, U.radius
    elif isinstance(U, Annulus):
        c0, half = U.center, U.r_outer
    else:
        raise TypeError("U must be a Disc or an Annulus")
    side = np.linspace(-half, half, grid)
    gx, gy = np.meshgrid(side, side)
    pts = (c0 + gx + 1j * gy).ravel()
    pts = pts[np.asarray(U.contains(pts))]
    if pts.size == 0:
        raise NoBranches("U contains no sample points")
    z = pts.copy()
    time = np.full(pts.shape, iterations, dtype=np.int64)
    alive = np.ones(pts.shape, dtype=bool)
    for it in range(iterations):
        if not np.any(alive):
            break
        z[alive] = P.eval(z[alive])
        gone = alive & (np.abs(z) > esc_r)
        time[gone] = it + 1
        alive &= ~gone
    if not np.any(time < iterations):
        raise NoBranches("no sample of U escapes; U misses the Julia set")
    spread = int(time.max() - time[time < iterations].min())
    if time.max() < iterations and spread < 15:
        raise NoBranches("escape times nearly uniform; U misses the Julia set")
    if isinstance(U, Disc):
        margin = U.radius - np.abs(pts - U.center)
    else:
        a = np.abs(pts - U.center)
        margin = np.minimum(a - U.r_inner, U.r_outer - a)
    # slowest escape first, then the roomiest position
    best = int(np.lexsort((-margin, -time))[0])
    return complex(pts[best]), float(0.9 * margin[best])


# -- far-annulus system for a lineariser ------------------------------------

class _LinBranch:
    """Inverse branch of L into its level-k annulus, continued through the
    base-map preimage tree and the core inversion."""

    def __init__(self, L: Lineariser, orbit: list, k: int):
        self.L = L
        self.poly_branch = _PolyBranch(L.base.poly, orbit)
        self.k = k

    def __call__(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Returns (phi(y), L'(phi(y)))."""
        zeta, chain = self.poly_branch(y)
        u = self.L.core_inverse(zeta)
        z = self.L.rho ** self.k * u
        deriv_l = (self.L._core_series().eval_derivative(u)
                   / self.L.rho ** self.k * chain)
        return z, deriv_l


def lineariser_far_ifs(L: Lineariser, k: int,
                       max_branches: int = 64) -> BowenResult:
    """Bowen dimension of an IFS of inverse branches of L mapping a sub-disc
    of the annulus r0 |rho|^k <= |z| < r0 |rho|^{k+1} into itself, measured
    in the cylindrical metric. A computable lower-bound proxy for the
    dimension of hyperbolic behaviour of L far from the origin.
    """
    if L.base.variant != "polynomial":
        raise NoBranches("far-annulus systems need a polynomial base")
    rho = abs(L.rho)
    r_in = L.r0 * rho ** k
    r_out = r_in * rho
    r_mid = math.sqrt(r_in * r_out)
    w_ref = r_mid * complex(math.cos(0.3), math.sin(0.3))
    ls = level_set(L, w_ref, k, allow_core_target=False)
    if not ls.points:
        raise NoBranches(f"level set empty in annulus {k}")
    mods = np.array([abs(p.z) for p in ls.points])
    center = ls.points[int(np.argmin(np.abs(mods - r_mid)))].z
    radius = 0.8 * min(abs(center) - r_in, r_out - abs(center))
    if radius <= 0:
        raise NoBranches("no room for a disc inside the annulus")
    disc = Disc(center, radius)

    tree = preimage_tree(L.base.poly, center, k)
    ls_center = _level_from_tree_with_indices(L, tree, k)
    samples = _branch_samples(disc)
    branches = []
    for z_i, leaf_idx in ls_center:
        if len(branches) >= max_branches:
            break
        if abs(z_i - center) >= radius:
            continue
        fn = _LinBranch(L, _tree_orbit(tree, leaf_idx), k)
        imgs, dl = fn(samples)
        good = np.isfinite(imgs.real) & (dl != 0)
        if not np.all(good):
            continue
        if float(np.max(np.abs(imgs - center))) >= 0.98 * radius:
            continue
        # cylindrical contraction of the inverse branch
        norms = np.abs(imgs) / (np.abs(dl) * np.abs(samples))
        inflation = math.exp(4.0 * _hyperbolic_gap(imgs, disc))
        norm_sup = float(np.max(norms)) * inflation
        if norm_sup >= 1.0:
            continue
        triples = [(complex(samples[j]), complex(imgs[j]), complex(1.0 / dl[j]))
                   for j in (0, 1, len(samples) // 2)]
        branches.append(Branch(m=1, domain=disc, image_center=complex(imgs[0]),
                               image_radius=float(np.max(np.abs(imgs - imgs[0]))),
                               norm_sup=norm_sup,
                               metric=MetricKind.CYLINDRICAL,
                               sample_points=triples, continuation=fn))
    if not branches:
        raise NoBranches(f"no self-contraction found in annulus {k}")
    system = FiniteIFS(disc=disc, branches=branches,
                       metric=MetricKind.CYLINDRICAL)
    return bowen_dimension(system)


def _level_from_tree_with_indices(L: Lineariser, tree, n: int) -> list:
    """Level-set points z paired with their leaf indices in the tree."""
    zeta = tree.points[n]
    u = L.core_inverse(zeta)
    finite = np.isfinite(u.real)
    mod = np.abs(u)
    rho = abs(L.rho)
    in_a0 = finite & (mod >= L.r0 * (1 - 1e-9)) & (mod < L.r0 * rho * (1 - 1e-12))
    idx = np.flatnonzero(in_a0)
    z = L.rho ** n * u[in_a0]
    return [(complex(z[j]), int(idx[j])) for j in range(idx.size)]
