"""Koenigs linearisers: construction, global evaluation, preimage level
sets, and the vanishing-exponent pipeline.

A lineariser L solves L(rho z) = f(L(z)) with L(0) = xi0 a repelling fixed
point of the base map f and rho = f'(xi0). The power-series coefficients
are solved order by order from the functional equation; global evaluation
descends z by powers of rho into the series' accurate zone and climbs back
with forward iterates of f.

The level-set machinery realises the bijection between
``L^{-1}(w) intersect {r0 |rho|^n <= |z| < r0 |rho|^{n+1}}`` and
``f^{-n}(w) intersect A_f`` with ``A_f = L(A_0)``: membership in A_f is
decided by numerically inverting L on its central univalence disc, and the
derivative of L at a level-set point comes from the chain identity
``L'(z) = rho^{-n} L'(z / rho^n) (f^n)'(zeta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PreimageTree, preimage_tree
from .errors import (NotRepelling, NoUnivalentDisc, PreconditionUnverifiable,
                     ResonanceBlowup, TargetInsideCore)
from .polynomial import Polynomial
from .series import PowerSeries

DEFAULT_ORDER = 512
TAIL_FRACTION = 1e-14
CORE_NEWTON_TOL = 1e-11
CORE_GRID = 64
UNIVALENCE_STEP = 1.1
UNIVALENCE_FLOOR = 1e-6
THETA_PHI0 = 0.3
# classification band for the vanishing-exponent sweep; see theta_estimate
VANISH_CEILING = 2.0


@dataclass(frozen=True)
class BaseMap:
    """Base dynamical system: a polynomial or z -> a * exp(z)."""

    variant: str                       # "polynomial" | "scaled-exponential"
    poly: Polynomial | None = None
    a: complex | None = None

    def __post_init__(self):
        if self.variant == "polynomial":
            if self.poly is None or self.poly.degree < 2:
                raise ValueError("polynomial base needs degree >= 2")
        elif self.variant == "scaled-exponential":
            if not self.a:
                raise ValueError("scaled-exponential base needs a != 0")
        else:
            raise ValueError(f"unknown base map variant {self.variant!r}")

    @staticmethod
    def polynomial(poly: Polynomial) -> "BaseMap":
        return BaseMap("polynomial", poly=poly)

    @staticmethod
    def scaled_exponential(a: complex) -> "BaseMap":
        return BaseMap("scaled-exponential", a=complex(a))

    def eval(self, z):
        if self.variant == "polynomial":
            return self.poly.eval(z)
        return self.a * np.exp(np.asarray(z, dtype=complex))

    def eval_derivative(self, z):
        if self.variant == "polynomial":
            return self.poly.eval_derivative(z)
        return self.a * np.exp(np.asarray(z, dtype=complex))


def _koenigs_coeffs_polynomial(P: Polynomial, xi0: complex, rho: complex,
                               N: int, a1: complex) -> np.ndarray:
    """Order-by-order solution of the functional equation.

    Writing L = xi0 + S, equating z^n coefficients of L(rho z) and f(L(z))
    gives a_n (rho^n - rho) = sum_{k=2..d} f^(k)(xi0)/k! * [z^n] S^k, where
    the right side only involves a_1..a_{n-1}. Powers of S are maintained
    incrementally, one convolution coefficient per order.
    """
    d = P.degree
    taylor = np.zeros(d + 1, dtype=complex)
    fac = 1.0
    work = np.array(P.coeffs, dtype=complex)
    for k in range(d + 1):
        taylor[k] = _poly_eval_coeffs(work, xi0) / fac
        work = np.array([(j + 1) * work[j + 1] for j in range(len(work) - 1)],
                        dtype=complex) if len(work) > 1 else np.zeros(1, dtype=complex)
        fac *= (k + 1)

    a = np.zeros(N + 1, dtype=complex)
    a[1] = a1
    powers = np.zeros((d + 1, N + 1), dtype=complex)   # powers[k] = coeffs of S^k
    powers[1] = a
    log_mod_rho = math.log(abs(rho))
    for n in range(2, N + 1):
        for k in range(2, min(n, d) + 1):
            powers[k, n] = np.dot(powers[k - 1, k - 1:n], a[n - k + 1:0:-1])
        rhs = np.dot(taylor[2:min(n, d) + 1], powers[2:min(n, d) + 1, n])
        if n * log_mod_rho > 700.0:
            a[n] = 0.0
        else:
            denom = rho ** n - rho
            if abs(denom) < 1e-12:
                raise ResonanceBlowup(f"rho^{n} - rho is numerically zero")
            a[n] = rhs / denom
        powers[1, n] = a[n]
    a[0] = xi0
    return a


def _poly_eval_coeffs(coeffs: np.ndarray, z: complex) -> complex:
    acc = 0.0 + 0.0j
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def _koenigs_coeffs_exponential(a_scale: complex, xi0: complex, rho: complex,
                                N: int, a1: complex) -> np.ndarray:
    """Same recursion for f(z) = a e^z, via the exp-of-series recurrence.

    Here f(L) = xi0 * e^S (the fixed-point relation a e^{xi0} = xi0 absorbs
    the prefactor) and n E_n = sum_{m=1..n} m a_m E_{n-m} builds e^S.
    """
    a = np.zeros(N + 1, dtype=complex)
    e = np.zeros(N + 1, dtype=complex)
    a[1] = a1
    e[0] = 1.0
    e[1] = a1
    log_mod_rho = math.log(abs(rho))
    for n in range(2, N + 1):
        partial = np.dot(np.arange(1, n) * a[1:n], e[n - 1:0:-1]) / n
        if n * log_mod_rho > 700.0:
            a[n] = 0.0
        else:
            denom = rho ** n - rho
            if abs(denom) < 1e-12:
                raise ResonanceBlowup(f"rho^{n} - rho is numerically zero")
            a[n] = xi0 * partial / denom
        e[n] = partial + a[n]
    a[0] = xi0
    return a


@dataclass
class Lineariser:
    """Entire linearising function, represented by its truncated series plus
    the descent rule through the functional equation."""

    base: BaseMap
    xi0: complex
    rho: complex
    series: PowerSeries
    a1: complex
    tail_radius: float
    warnings: list = field(default_factory=list)
    _r0: float | None = None
    _core_cache: dict = field(default_factory=dict, repr=False)

    @property
    def r0(self) -> float:
        if self._r0 is None:
            self._r0 = univalence_radius(self)
        return self._r0

    @property
    def safe_eval_radius(self) -> float:
        return min(self.tail_radius, self.r0 * abs(self.rho))

    def with_r0(self, r0: float) -> "Lineariser":
        """Copy with an explicit (smaller) univalence radius, e.g. to match
        an externally chosen fundamental annulus."""
        out = Lineariser(self.base, self.xi0, self.rho, self.series, self.a1,
                         self.tail_radius, list(self.warnings))
        out._r0 = float(r0)
        return out

    # -- evaluation ------------------------------------------------------

    def _descent_depth(self, z: np.ndarray, radius: float) -> np.ndarray:
        a = np.abs(np.asarray(z, dtype=complex))
        with np.errstate(divide="ignore"):
            n = np.ceil(np.log(a / radius) / math.log(abs(self.rho)))
        return np.maximum(0, np.where(np.isfinite(n), n, 0)).astype(np.int64)

    def evaluate(self, z, depth: int | None = None):
        """L(z) anywhere: series-evaluate z / rho^n inside the safe radius,
        then apply the base map n times."""
        z = np.asarray(z, dtype=complex)
        scalar = z.shape == ()
        zz = np.atleast_1d(z)
        n = (np.full(zz.shape, depth, dtype=np.int64) if depth is not None
             else self._descent_depth(zz, self.safe_eval_radius))
        vals = self.series.eval(zz / self.rho ** n)
        vals = np.atleast_1d(vals)
        live = n.copy()
        while np.any(live > 0):
            m = live > 0
            vals[m] = self.base.eval(vals[m])
            live[m] -= 1
        return complex(vals[0]) if scalar else vals

    def derivative(self, z, depth: int | None = None):
        """L'(z) by the chain identity through the descent:
        L'(z) = rho^{-n} L'(z/rho^n) (f^n)'(zeta), zeta = L(z/rho^n)."""
        z = np.asarray(z, dtype=complex)
        scalar = z.shape == ()
        zz = np.atleast_1d(z)
        n = (np.full(zz.shape, depth, dtype=np.int64) if depth is not None
             else self._descent_depth(zz, self.safe_eval_radius))
        u = zz / self.rho ** n
        deriv = np.atleast_1d(self.series.eval_derivative(u)) / self.rho ** n
        zeta = np.atleast_1d(self.series.eval(u))
        live = n.copy()
        while np.any(live > 0):
            m = live > 0
            deriv[m] = deriv[m] * self.base.eval_derivative(zeta[m])
            zeta[m] = self.base.eval(zeta[m])
            live[m] -= 1
        return complex(deriv[0]) if scalar else deriv

    # -- inversion of the core disc ---------------------------------------

    def _core_series(self) -> PowerSeries:
        """Series trimmed to the coefficients that matter on the core disc;
        cuts Horner cost by an order of magnitude during inversion."""
        key = ("core-series", self.r0)
        if key not in self._core_cache:
            R = self.r0 * abs(self.rho)
            logs = self.series.log_abs + np.arange(self.series.coeffs.size) * math.log(max(R, 1e-300))
            m = float(np.max(logs[np.isfinite(logs)]))
            keep = np.flatnonzero(np.isfinite(logs) & (logs > m - 40.0))
            n_eff = max(int(keep.max()) + 1, 2) if keep.size else 2
            self._core_cache[key] = self.series.truncated(min(n_eff, self.series.order))
        return self._core_cache[key]

    def _core_seeds(self) -> tuple[np.ndarray, np.ndarray]:
        key = ("seeds", self.r0)
        if key not in self._core_cache:
            R = self.r0 * abs(self.rho)
            side = np.linspace(-R, R, CORE_GRID)
            gx, gy = np.meshgrid(side, side)
            grid = (gx + 1j * gy).ravel()
            grid = grid[np.abs(grid) <= R]
            self._core_cache[key] = (grid, self._core_series().eval(grid))
        return self._core_cache[key]

    def core_inverse(self, zeta, newton_steps: int = 30) -> np.ndarray:
        """Solve L(u) = zeta for u on the central univalence disc.

        Newton iteration seeded from a 64x64 value grid; entries that fail to
        reach residual 1e-11 (or leave the disc) come back NaN. Retries from
        the next-best seeds before giving up.
        """
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        R = self.r0 * abs(self.rho)
        ser = self._core_series()
        grid, grid_vals = self._core_seeds()
        out = np.full(zeta.shape, np.nan + 1j * np.nan, dtype=complex)
        pending = np.arange(zeta.size)
        rank = 0
        while pending.size and rank < 4:
            target = zeta[pending]
            u = np.empty(target.shape, dtype=complex)
            chunk = max(1, (1 << 22) // max(grid.size, 1))
            for s in range(0, target.size, chunk):
                block = target[s:s + chunk]
                d2 = (np.abs(grid_vals.real[None, :] - block.real[:, None]) ** 2
                      + np.abs(grid_vals.imag[None, :] - block.imag[:, None]) ** 2)
                if rank == 0:
                    u[s:s + chunk] = grid[np.argmin(d2, axis=1)]
                else:
                    part = np.argpartition(d2, rank, axis=1)[:, rank]
                    u[s:s + chunk] = grid[part]
            tol = CORE_NEWTON_TOL * (1.0 + np.abs(target))
            for _ in range(newton_steps):
                f = ser.eval(u) - target
                if np.all(np.abs(f) <= tol):
                    break
                fp = ser.eval_derivative(u)
                fp = np.where(fp == 0, 1e-300, fp)
                u = u - f / fp
                # keep iterates from wandering far outside the disc
                a = np.abs(u)
                u = np.where(a > 1.5 * R, u / a * 1.5 * R, u)
            res = np.abs(ser.eval(u) - target)
            ok = (res <= tol) & (np.abs(u) <= R * (1 + 1e-9))
            out[pending[ok]] = u[ok]
            pending = pending[~ok]
            rank += 1
        return out

    def in_core_image(self, w: complex) -> bool:
        """Whether w lies in L(core disc), decided by inversion success."""
        u = self.core_inverse(np.array([w]))[0]
        return bool(np.isfinite(u.real))

    def schroeder_residual(self, radius: float | None = None,
                           samples: int = 100, seed: int = 7) -> float:
        """Worst relative residual of L(rho z) = f(L(z)) on random samples
        with |z| below the given radius (default: safe_eval_radius / |rho|)."""
        if radius is None:
            radius = self.safe_eval_radius / abs(self.rho)
        rng = np.random.default_rng(seed)
        z = (rng.uniform(0, radius, samples)
             * np.exp(1j * rng.uniform(0, 2 * np.pi, samples)))
        lhs = self.series.eval(self.rho * z)
        rhs = self.base.eval(self.series.eval(z))
        return float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(rhs))))

    def postsingular_radius(self, iterations: int = 200) -> float:
        """Sup-norm estimate of the closure of the singular orbits of the
        base map (which is the singular set of L).

        For a polynomial base the singular values are the critical values;
        escape of a critical orbit makes the estimate unbounded.
        """
        if self.base.variant == "polynomial":
            P = self.base.poly
            crit = P.derivative().roots() if P.degree >= 2 else []
            start = np.array([P.eval(c) for c in np.atleast_1d(crit)])
        else:
            start = np.array([0.0 + 0.0j, self.base.a])  # asymptotic + critical-ish value
        sup = float(np.max(np.abs(start))) if start.size else 0.0
        pts = start.astype(complex)
        bound = 1e6
        for _ in range(iterations):
            pts = self.base.eval(pts)
            m = float(np.max(np.abs(pts))) if pts.size else 0.0
            sup = max(sup, m)
            if sup > bound:
                raise PreconditionUnverifiable(
                    "singular orbit escapes; postsingular set unbounded")
        return sup


def koenigs_series(base: BaseMap, xi0: complex, N: int = DEFAULT_ORDER,
                   a1: complex = 1.0, selftest_samples: int = 100,
                   seed: int = 7) -> Lineariser:
    """Construct the lineariser of ``base`` at the repelling fixed point xi0.

    Coefficients are solved order by order from the functional equation;
    the construction self-tests the equation on random points inside the
    safe radius and records failures as warnings.
    """
    xi0 = complex(xi0)
    fx = complex(base.eval(xi0))
    if abs(fx - xi0) > 1e-9 * (1.0 + abs(xi0)):
        raise ValueError(f"{xi0} is not a fixed point (f(xi0) = {fx})")
    rho = complex(base.eval_derivative(xi0))
    if abs(rho) <= 1.0 + 1e-9:
        raise NotRepelling(f"multiplier {rho} has modulus <= 1")
    if a1 == 0:
        raise ValueError("a1 must be nonzero")

    if base.variant == "polynomial":
        coeffs = _koenigs_coeffs_polynomial(base.poly, xi0, rho, N, complex(a1))
    else:
        coeffs = _koenigs_coeffs_exponential(base.a, xi0, rho, N, complex(a1))
    series = PowerSeries(coeffs)

    tail_radius = _tail_radius(series)
    lin = Lineariser(base=base, xi0=xi0, rho=rho, series=series,
                     a1=complex(a1), tail_radius=tail_radius)

    # construction-time check at a conservative radius: r0 is not known yet,
    # but the univalence disc never exceeds radius |rho|^2 or the tail zone
    r_check = min(0.5 * tail_radius, abs(rho)) / abs(rho)
    worst = lin.schroeder_residual(r_check, selftest_samples, seed)
    if worst > 1e-10:
        lin.warnings.append(
            f"functional-equation residual {worst:.2e} exceeds 1e-10 "
            f"on {selftest_samples} samples inside radius {r_check:.3g}")
    return lin


def _tail_radius(series: PowerSeries) -> float:
    """Largest grid radius where the top coefficients' terms drop below
    1e-14 of the absolute-term envelope and the envelope stays within a
    1e10 condition-number cap of the low-order scale.

    All in log domain: high-order terms overflow r**n long before the
    radius itself stops being representable.
    """
    la = series.log_abs
    n = np.arange(la.size, dtype=float)
    finite = np.isfinite(la)
    idx = np.flatnonzero(finite)
    idx = idx[idx >= 1]
    # keep the largest term below float range
    log_r = float(np.min((600.0 - la[idx]) / n[idx])) if idx.size else 600.0
    log_r = min(log_r, 600.0)
    scale0 = max(1.0, abs(series.coeffs[0]))
    a1 = abs(series.coeffs[1])
    tail_block = max(2, la.size // 64)
    for _ in range(4000):
        term_logs = np.where(finite, la + n * log_r, -np.inf)
        m = float(np.max(term_logs))
        env_log = m + math.log(float(np.sum(np.exp(term_logs - m))))
        tail_log = float(np.max(term_logs[-tail_block:]))
        tail_ok = tail_log <= math.log(TAIL_FRACTION) + max(env_log, 0.0)
        cond_ok = env_log <= math.log(1e10 * (scale0 + a1 * math.exp(min(log_r, 690.0))))
        if tail_ok and cond_ok:
            break
        log_r -= math.log(1.05)
    return math.exp(min(log_r, 690.0))


# -- univalence search ----------------------------------------------------

def univalence_radius(L: Lineariser, deriv_samples: int = 256,
                      boundary_samples: int = 1024) -> float:
    """Largest r on a geometric grid below |rho| such that, on the closed
    disc of radius r |rho|, the series derivative never vanishes and the
    boundary image curve is simple (checked by segment intersection)."""
    step = UNIVALENCE_STEP
    r = min(abs(L.rho), 0.99 * L.tail_radius / abs(L.rho))
    n_rad = max(4, int(round(math.sqrt(deriv_samples))))
    n_ang = deriv_samples // n_rad
    while r > UNIVALENCE_FLOOR:
        R = r * abs(L.rho)
        radii = np.linspace(R / n_rad, R, n_rad)
        angles = np.linspace(0, 2 * np.pi, n_ang, endpoint=False)
        pts = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
        dvals = np.abs(L.series.eval_derivative(pts))
        if float(np.min(dvals)) > 1e-12 * float(np.max(dvals)):
            theta = np.linspace(0, 2 * np.pi, boundary_samples, endpoint=False)
            curve = L.series.eval(R * np.exp(1j * theta))
            if _closed_curve_is_simple(curve):
                return float(r)
        r /= step
    raise NoUnivalentDisc("univalence grid search exhausted below 1e-6")


def _closed_curve_is_simple(pts: np.ndarray) -> bool:
    """No proper crossing between non-adjacent segments of a closed polyline."""
    m = pts.size
    p1 = pts
    p2 = np.roll(pts, -1)
    i, j = np.triu_indices(m, k=2)
    keep = ~((i == 0) & (j == m - 1))
    i, j = i[keep], j[keep]

    def cross(o, a, b):
        return ((a.real - o.real) * (b.imag - o.imag)
                - (a.imag - o.imag) * (b.real - o.real))

    a1, a2 = p1[i], p2[i]
    b1, b2 = p1[j], p2[j]
    d1 = cross(a1, a2, b1)
    d2 = cross(a1, a2, b2)
    d3 = cross(b1, b2, a1)
    d4 = cross(b1, b2, a2)
    crossing = (d1 * d2 < 0) & (d3 * d4 < 0)
    return not bool(np.any(crossing))


# -- level sets ------------------------------------------------------------

@dataclass
class LevelPoint:
    z: complex           # preimage of w in the level-n annulus
    zeta: complex        # L(z / rho^n), an n-th preimage of w under the base
    deriv_L: complex     # L'(z) via the chain identity
    critical: bool = False


@dataclass
class LevelSet:
    n: int
    w: complex
    points: list


def _af_modulus_band(L: Lineariser, samples: int = 512) -> tuple[float, float]:
    r0 = L.r0
    R = r0 * abs(L.rho)
    theta = np.linspace(0, 2 * np.pi, samples, endpoint=False)
    vals = np.concatenate([np.abs(L.series.eval(r0 * np.exp(1j * theta))),
                           np.abs(L.series.eval(R * np.exp(1j * theta)))])
    return 0.5 * float(np.min(vals)), 2.0 * float(np.max(vals))


def level_set(L: Lineariser, w: complex, n: int, cap: int = 1 << 19,
              tree: PreimageTree | None = None,
              allow_core_target: bool = False) -> LevelSet:
    """Points of L^{-1}(w) in the annulus r0 |rho|^n <= |z| < r0 |rho|^{n+1}.

    Built from the base-map preimage tree: an n-th preimage zeta of w lies in
    A_f = L(A_0) exactly when inverting L on the core disc lands in A_0; the
    level point is then z = rho^n * u with u the inverse image.
    """
    if L.base.variant != "polynomial":
        raise ValueError("level sets need a polynomial base map")
    if n < 1:
        raise ValueError("level index must be >= 1")
    if not allow_core_target and L.in_core_image(w):
        raise TargetInsideCore(f"target {w} lies in the image of the core disc")
    if tree is None:
        tree = preimage_tree(L.base.poly, w, n, cap)
    return _level_from_tree(L, tree, n)


def _level_from_tree(L: Lineariser, tree: PreimageTree, n: int) -> LevelSet:
    zeta = tree.points[n]
    cum = tree.cum_derivs[n]
    crit = tree.critical[n]
    lo, hi = _af_modulus_band(L)
    band = (np.abs(zeta) >= lo) & (np.abs(zeta) <= hi)
    points = []
    if np.any(band):
        u = L.core_inverse(zeta[band])
        finite = np.isfinite(u.real)
        mod = np.abs(u)
        in_a0 = finite & (mod >= L.r0 * (1 - 1e-9)) & (mod < L.r0 * abs(L.rho) * (1 - 1e-12))
        idx = np.flatnonzero(band)[in_a0]
        uu = u[in_a0]
        z = L.rho ** n * uu
        deriv = L._core_series().eval_derivative(uu) / L.rho ** n * cum[idx]
        for k in range(idx.size):
            points.append(LevelPoint(z=complex(z[k]), zeta=complex(zeta[idx[k]]),
                                     deriv_L=complex(deriv[k]),
                                     critical=bool(crit[idx[k]])))
    return LevelSet(n=n, w=complex(tree.target), points=points)


def level_sets_range(L: Lineariser, w: complex, n_min: int, n_max: int,
                     cap: int = 1 << 19,
                     allow_core_target: bool = False) -> dict[int, LevelSet]:
    """All level sets for n = n_min..n_max from one shared preimage tree."""
    if not allow_core_target and L.in_core_image(w):
        raise TargetInsideCore(f"target {w} lies in the image of the core disc")
    tree = preimage_tree(L.base.poly, w, n_max, cap)
    return {n: _level_from_tree(L, tree, n) for n in range(n_min, n_max + 1)}


@dataclass
class CylPartition:
    value: float
    per_level: list
    truncation_flag: bool


def cyl_partition_L(L: Lineariser, t: float, w: complex,
                    n_min: int = 1, n_max: int = 16,
                    cap: int = 1 << 19,
                    levels: dict[int, LevelSet] | None = None) -> CylPartition:
    """Cylindrical partition function of L at w, summed over level sets.

    Each point contributes ``(|w| / (|z| |L'(z)|))^t``; critical-branch
    points (where L' vanishes) are excluded from the sum. The truncation
    flag is set when the last level still contributes more than 1e-6 of the
    total.
    """
    if levels is None:
        levels = level_sets_range(L, w, n_min, n_max, cap)
    per_level = []
    for n in range(n_min, n_max + 1):
        ls = levels[n]
        terms = [(abs(ls.w) / (abs(p.z) * abs(p.deriv_L))) ** t
                 for p in ls.points if not p.critical and p.deriv_L != 0]
        per_level.append(float(np.sum(terms)) if terms else 0.0)
    total = float(np.sum(per_level))
    flag = bool(total > 0 and per_level[-1] > 1e-6 * total)
    return CylPartition(value=total, per_level=per_level, truncation_flag=flag)


@dataclass
class ThetaEstimate:
    bracket_lo: float
    bracket_hi: float
    table: np.ndarray          # (len(t_grid), len(w_moduli)) partition values
    t_grid: list
    w_moduli: list
    classifications: dict      # t -> vanishing | non-vanishing | inconclusive


def theta_estimate(L: Lineariser, t_grid, w_moduli, n_max: int = 16,
                   phi0: float = THETA_PHI0, cap: int = 1 << 19) -> ThetaEstimate:
    """Bracket the vanishing exponent by sweeping |w| over decades.

    For each t the cylindrical partition value is computed at targets
    |w| e^{i phi0}; t is classified vanishing when the values decrease
    monotonically across the last three decades and the final value is
    below 2, non-vanishing when they increase or the final value exceeds 2.
    """
    w_moduli = sorted(float(x) for x in w_moduli)
    if len(w_moduli) < 3:
        raise ValueError("need at least 3 decades of |w|")
    t_grid = [float(t) for t in t_grid]
    level_cache = {}
    for wm in w_moduli:
        w = wm * complex(math.cos(phi0), math.sin(phi0))
        level_cache[wm] = level_sets_range(L, w, 1, n_max, cap)

    table = np.zeros((len(t_grid), len(w_moduli)))
    cls = {}
    for i, t in enumerate(t_grid):
        for j, wm in enumerate(w_moduli):
            w = wm * complex(math.cos(phi0), math.sin(phi0))
            table[i, j] = cyl_partition_L(L, t, w, 1, n_max,
                                          levels=level_cache[wm]).value
        last3 = table[i, -3:]
        decreasing = bool(last3[0] > last3[1] > last3[2])
        increasing = bool(last3[0] < last3[1] < last3[2])
        final = float(table[i, -1])
        if increasing or final > VANISH_CEILING:
            cls[t] = "non-vanishing"
        elif decreasing and final < VANISH_CEILING:
            cls[t] = "vanishing"
        else:
            cls[t] = "inconclusive"

    non_vanishing = [t for t, c in cls.items() if c == "non-vanishing"]
    vanishing = [t for t, c in cls.items() if c == "vanishing"]
    lo = max(non_vanishing) if non_vanishing else float("nan")
    hi = min(vanishing) if vanishing else float("nan")
    return ThetaEstimate(bracket_lo=lo, bracket_hi=hi, table=table,
                         t_grid=t_grid, w_moduli=w_moduli, classifications=cls)


# -- structural checks -----------------------------------------------------

@dataclass
class ElCheckResult:
    violations: int
    min_margin: float          # nan when no sample qualified
    samples_used: int


def el_inequality_check(L: Lineariser, R: float, samples: int,
                        seed: int = 11, sweep_decades: int = 8) -> ElCheckResult:
    """Sample the expansion estimate ``|L'(z)| |z| / |L(z)| >= (1/4) log|L(z)/R|``
    over points with |L(z)| > R, drawn by rejection from a sweep of annuli.

    Requires R to dominate the postsingular estimate of the base map and
    |L(0)| < R. Non-finite evaluations (deep in the overflow zone, where the
    estimate holds with enormous slack) are skipped.
    """
    psr = L.postsingular_radius()
    if R <= psr:
        raise ValueError(f"R = {R} must exceed the postsingular radius {psr:.3g}")
    if abs(L.xi0) >= R:
        raise ValueError("|L(0)| must be below R")
    rng = np.random.default_rng(seed)
    kept_lhs = []
    kept_rhs = []
    base_r = max(L.safe_eval_radius * 0.5, 1.0)
    batch = max(512, samples // sweep_decades)
    decade = 0
    while sum(len(x) for x in kept_lhs) < samples and decade < 4 * sweep_decades:
        s = base_r * 2.0 ** (decade % sweep_decades)
        r = np.sqrt(rng.uniform(s * s, 4 * s * s, batch))
        th = rng.uniform(0, 2 * np.pi, batch)
        z = r * np.exp(1j * th)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = L.evaluate(z)
            dvals = L.derivative(z)
        finite = np.isfinite(vals.real) & np.isfinite(vals.imag) & \
            np.isfinite(dvals.real) & np.isfinite(dvals.imag)
        good = finite & (np.abs(vals) > R)
        if np.any(good):
            lhs = np.abs(dvals[good]) * np.abs(z[good]) / np.abs(vals[good])
            rhs = 0.25 * np.log(np.abs(vals[good]) / R)
            kept_lhs.append(lhs)
            kept_rhs.append(rhs)
        decade += 1
    if not kept_lhs:
        return ElCheckResult(violations=0, min_margin=float("nan"), samples_used=0)
    lhs = np.concatenate(kept_lhs)[:samples]
    rhs = np.concatenate(kept_rhs)[:samples]
    margin = lhs - rhs
    return ElCheckResult(violations=int(np.sum(margin < 0)),
                         min_margin=float(np.min(margin)),
                         samples_used=int(lhs.size))


@dataclass
class TrapCheckResult:
    contained: bool
    max_boundary_dist: float
    radius: float


def exp_lineariser_trap_check(lam: complex, N: int = DEFAULT_ORDER,
                              boundary_samples: int = 2048) -> TrapCheckResult:
    """For the lineariser of z -> 2 pi i e^z at 2 pi i with L'(0) = lam,
    test whether the boundary of D(0, pi/(8|lam|)) maps into D(2 pi i, pi/2)."""
    lam = complex(lam)
    if not (0 < abs(lam) < 1):
        raise ValueError("need 0 < |lambda| < 1")
    xi0 = 2j * math.pi
    base = BaseMap.scaled_exponential(2j * math.pi)
    lin = koenigs_series(base, xi0, N=N, a1=lam)
    r = math.pi / (8.0 * abs(lam))
    theta = np.linspace(0, 2 * np.pi, boundary_samples, endpoint=False)
    vals = lin.evaluate(r * np.exp(1j * theta))
    dist = np.abs(vals - xi0)
    return TrapCheckResult(contained=bool(np.max(dist) < math.pi / 2),
                           max_boundary_dist=float(np.max(dist)),
                           radius=r)
