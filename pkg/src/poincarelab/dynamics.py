"""Iterated preimage trees, partition functions, topological pressure, and
the hyperbolic-dimension estimate for a polynomial base map.

The pressure of exponent t is estimated as the slope of a least-squares line
through the upper half of the computed levels of ``log Z(t, P^n, w)``; the
slope cancels the O(1) offset that makes the naive ``(1/n) log Z`` converge
slowly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CriticalValueOnOrbit, NoSignChange
from .metrics import Annulus, MetricKind, metric_density
from .polynomial import Polynomial, solve_many

DEFAULT_BASE_POINT = 2.0 + 2.0j
DEFAULT_DEPTH_CAP = 18
DEFAULT_NODE_CAP = 1 << 19
# a node is flagged critical when |P'| falls below this fraction of the
# coefficient-sum bound on |P'|; double roots from the Aberth solver land
# around sqrt(residual tol) ~ 3e-7 off the critical point
CRITICAL_REL_TOL = 1e-5


@dataclass(frozen=True)
class FixedPointInfo:
    point: complex
    multiplier: complex
    kind: str  # attracting | repelling | indifferent

    @staticmethod
    def classify(multiplier: complex, tol: float = 1e-9) -> str:
        m = abs(multiplier)
        if m > 1.0 + tol:
            return "repelling"
        if m < 1.0 - tol:
            return "attracting"
        return "indifferent"


def fixed_points(P: Polynomial) -> list[FixedPointInfo]:
    """Solutions of P(z) = z with their multipliers, d with multiplicity."""
    if P.degree < 2:
        raise ValueError("dynamics requires degree >= 2")
    c = list(P.coeffs)
    c[1] = c[1] - 1.0
    pts = Polynomial(tuple(c)).roots()
    return [FixedPointInfo(complex(z), complex(P.eval_derivative(z)),
                           FixedPointInfo.classify(P.eval_derivative(z)))
            for z in pts]


@dataclass(frozen=True)
class PreimageNode:
    point: complex
    depth: int
    cum_deriv: complex
    parent: Optional["PreimageNode"] = None


@dataclass
class PreimageTree:
    """Breadth-first preimage tree of a target point.

    Level arrays are stored flat for speed: ``points[n]`` are the level-n
    preimages in canonical order, ``cum_derivs[n][i] = (P^n)'(points[n][i])``
    accumulated by the chain rule, ``parents[n]`` indexes into level n-1.
    ``critical[n]`` flags nodes whose branch runs through a critical point
    (the chain product is numerically zero there).
    """

    poly: Polynomial
    target: complex
    depth: int
    points: list = field(default_factory=list)
    cum_derivs: list = field(default_factory=list)
    parents: list = field(default_factory=list)
    critical: list = field(default_factory=list)
    truncated: bool = False

    def level_count(self, n: int) -> int:
        return len(self.points[n])

    def has_critical(self, n: int) -> bool:
        return bool(np.any(self.critical[n]))

    def node(self, n: int, i: int) -> PreimageNode:
        parent = None
        if n > 0:
            j = int(self.parents[n][i])
            parent = self.node(n - 1, j)
        return PreimageNode(complex(self.points[n][i]), n,
                            complex(self.cum_derivs[n][i]), parent)

    def nodes(self, n: int) -> list[PreimageNode]:
        return [self.node(n, i) for i in range(self.level_count(n))]


def _critical_bound(P: Polynomial, z: np.ndarray) -> np.ndarray:
    csum = sum(abs((k + 1) * c) for k, c in enumerate(P.coeffs[1:]))
    return csum * np.maximum(1.0, np.abs(z)) ** (P.degree - 1)


def preimage_tree(P: Polynomial, w: complex, depth: int,
                  cap: int = DEFAULT_NODE_CAP,
                  region: Annulus | None = None) -> PreimageTree:
    """Expand P^{-n}(w) breadth-first up to the requested depth.

    Each node solves P(z) = parent via the batch Aberth solver; cumulative
    derivatives are maintained by the chain rule. A critical branch is
    flagged, not fatal. If ``region`` is given, only final-level nodes inside
    it are retained. The ``truncated`` flag is set when a level was capped.
    """
    if P.degree < 2:
        raise ValueError("dynamics requires degree >= 2")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if cap < P.degree:
        raise ValueError("cap must be at least the degree")

    tree = PreimageTree(P, complex(w), depth)
    tree.points.append(np.array([w], dtype=complex))
    tree.cum_derivs.append(np.array([1.0 + 0.0j]))
    tree.parents.append(np.array([-1], dtype=np.int64))
    tree.critical.append(np.array([False]))

    d = P.degree
    for n in range(1, depth + 1):
        parents_pts = tree.points[n - 1]
        parent_cum = tree.cum_derivs[n - 1]
        parent_crit = tree.critical[n - 1]
        roots = solve_many(P, parents_pts)          # (B, d)
        pts = roots.reshape(-1)
        par_idx = np.repeat(np.arange(parents_pts.size), d)
        if pts.size > cap:
            tree.truncated = True
            pts = pts[:cap]
            par_idx = par_idx[:cap]
        step = P.eval_derivative(pts)
        cum = step * parent_cum[par_idx]
        crit = (np.abs(step) <= CRITICAL_REL_TOL * _critical_bound(P, pts))
        crit |= parent_crit[par_idx]
        if region is not None and n == depth:
            keep = region.contains(pts)
            pts, cum, par_idx, crit = pts[keep], cum[keep], par_idx[keep], crit[keep]
        tree.points.append(pts)
        tree.cum_derivs.append(cum)
        tree.parents.append(par_idx)
        tree.critical.append(crit)
    return tree


def _log_partition(tree: PreimageTree, n: int, t: float,
                   metric: MetricKind) -> float:
    """log of Z(t, P^n, w) summed over level n, via logsumexp."""
    if n == 0:
        return 0.0
    if tree.has_critical(n):
        raise CriticalValueOnOrbit(
            f"critical branch at level {n} for target {tree.target}")
    pts = tree.points[n]
    cum = np.abs(tree.cum_derivs[n])
    norm = cum * metric_density(metric, tree.target) / metric_density(metric, pts)
    logs = -t * np.log(norm)
    m = float(np.max(logs))
    return m + float(np.log(np.sum(np.exp(logs - m))))


def partition_function(P: Polynomial, n: int, w: complex, t: float,
                       metric: MetricKind = MetricKind.EUCLIDEAN,
                       tree: PreimageTree | None = None) -> float:
    """Z(t, P^n, w): sum of derivative-norm^(-t) over the n-th preimages.

    Deterministic: nodes are reduced in canonical level order. Raises
    CriticalValueOnOrbit when a level-n node has a vanishing chain product.
    """
    if tree is None:
        tree = preimage_tree(P, w, n)
    return float(np.exp(_log_partition(tree, n, t, metric)))


@dataclass
class PressureEstimate:
    t: float
    levels: list            # (n, log Z_n) pairs, increasing n
    pressure: float
    method: str
    w_used: complex


def _slope(levels: list[tuple[int, float]], window: int) -> float:
    tail = levels[-window:]
    xs = np.array([n for n, _ in tail], dtype=float)
    ys = np.array([v for _, v in tail], dtype=float)
    xm, ym = xs.mean(), ys.mean()
    return float(np.sum((xs - xm) * (ys - ym)) / np.sum((xs - xm) ** 2))


def pressure_from_tree(tree: PreimageTree, t: float,
                       metric: MetricKind = MetricKind.SPHERICAL) -> PressureEstimate:
    n_max = tree.depth
    levels = [(n, _log_partition(tree, n, t, metric)) for n in range(1, n_max + 1)]
    window = max(2, -(-n_max // 2))
    return PressureEstimate(t=t, levels=levels, pressure=_slope(levels, window),
                            method="tail-max-slope", w_used=tree.target)


def pressure_curve(P: Polynomial, t: float, w: complex = DEFAULT_BASE_POINT,
                   n_max: int = 14) -> PressureEstimate:
    """Spherical log-partition values for n = 1..n_max and the regression
    slope of the last ceil(n_max/2) of them (limsup proxy)."""
    if n_max > DEFAULT_DEPTH_CAP:
        raise ValueError(f"n_max exceeds depth cap {DEFAULT_DEPTH_CAP}")
    tree = preimage_tree(P, w, n_max)
    return pressure_from_tree(tree, t)


def hypdim_estimate(P: Polynomial, w: complex = DEFAULT_BASE_POINT,
                    n_max: int = 14) -> float:
    """Smallest zero of the estimated pressure on t in [0, 2].

    Coarse scan locates the first sign change, then bisection to |dt| <= 1e-3.
    A pressure that is exactly zero at a grid point counts as the root.
    """
    tree = preimage_tree(P, w, n_max)

    def press(t: float) -> float:
        return pressure_from_tree(tree, t).pressure

    grid = np.linspace(0.0, 2.0, 21)
    vals = [press(t) for t in grid]
    lo = hi = None
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            return float(grid[i])
        if vals[i] > 0.0 > vals[i + 1]:
            lo, hi = float(grid[i]), float(grid[i + 1])
            break
    if lo is None:
        if vals[-1] == 0.0:
            return float(grid[-1])
        raise NoSignChange(
            "pressure has no sign change on [0, 2]; deeper levels or a "
            "different base point may be needed")
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        pm = press(mid)
        if pm == 0.0:
            return mid
        if pm > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class TceDiagnostic:
    t_probe: float
    pressure_at_probe: float
    verdict: str  # consistent-with-TCE | inconclusive


def tce_diagnostic(P: Polynomial, w: complex = DEFAULT_BASE_POINT,
                   n_max: int = 14, t_probe: float = 4.0) -> TceDiagnostic:
    """Probe the pressure at a large exponent; markedly negative values are
    consistent with topological Collet-Eckmann behaviour."""
    est = pressure_curve(P, t_probe, w, n_max)
    verdict = "consistent-with-TCE" if est.pressure < -0.05 else "inconclusive"
    return TceDiagnostic(t_probe=t_probe, pressure_at_probe=est.pressure,
                         verdict=verdict)


def escape_radius(P: Polynomial) -> float:
    """R with |z| > R implying |P(z)| > 2|z|.

    Uses R = max(2, (2 + sum of non-leading |coeffs|) / |lead|): for |z| >= R,
    |P(z)| >= |z|^{d-1} (|lead| |z| - sum |c_i|) >= 2|z|.
    """
    if P.degree < 2:
        raise ValueError("dynamics requires degree >= 2")
    s = sum(abs(c) for c in P.coeffs[:-1])
    return max(2.0, (2.0 + s) / abs(P.coeffs[-1]))


def first_partition_cyl(P: Polynomial, w: complex, t: float,
                        prefactor: complex = 1.0) -> float:
    """One-step cylindrical partition function of z -> prefactor * P(z).

    Sum over solutions of prefactor*P(z) = w of (|w| / (|z| |g'(z)|))^t.
    The cylindrical metric makes this invariant under linear rescalings:
    the value for (prefactor, w) equals the value for (1, w/prefactor).
    """
    roots = solve_many(P, np.array([w / prefactor]))[0]
    g_prime = prefactor * P.eval_derivative(roots)
    terms = (np.abs(w) / (np.abs(roots) * np.abs(g_prime))) ** t
    return float(np.sum(terms))
