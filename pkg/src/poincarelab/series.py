"""Truncated power series with maximal-term diagnostics.

Evaluation comes in two flavours: plain Horner inside the float-safe zone,
and a scaled term summation that carries the common magnitude in log form.
The log path is what keeps maximal-term chains alive: the radii involved
square at every step and leave double precision almost immediately, so every
quantity downstream of the first step is tracked as a logarithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChainBreak, TruncationTooSmall
from .metrics import Annulus

LOG_FLOAT_MAX = 700.0


@dataclass
class PowerSeries:
    """Coefficients a_0..a_N of a truncated power series.

    ``log_abs``/``args`` may be supplied when the float coefficients
    underflow (1/n! dies at n ~ 171) but their logarithms are known exactly.
    ``complete=True`` marks a series that IS the whole function (a
    polynomial), which exempts it from truncation guards.
    """

    coeffs: np.ndarray
    log_abs: np.ndarray | None = None
    args: np.ndarray | None = None
    complete: bool = False

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != 1 or self.coeffs.size < 2:
            raise ValueError("need at least two coefficients")
        if self.log_abs is None:
            with np.errstate(divide="ignore"):
                self.log_abs = np.log(np.abs(self.coeffs))
            self.args = np.angle(self.coeffs)
        else:
            self.log_abs = np.asarray(self.log_abs, dtype=float)
            self.args = np.asarray(self.args if self.args is not None
                                   else np.angle(self.coeffs), dtype=float)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def truncated(self, n: int) -> "PowerSeries":
        return PowerSeries(self.coeffs[: n + 1].copy(),
                           self.log_abs[: n + 1].copy(),
                           self.args[: n + 1].copy(),
                           complete=self.complete)

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.full(z.shape, self.coeffs[-1], dtype=complex)
        for c in self.coeffs[-2::-1]:
            acc = acc * z + c
        return acc if acc.shape else complex(acc)

    def eval_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        n = self.order
        acc = np.full(z.shape, n * self.coeffs[-1], dtype=complex)
        for k in range(n - 1, 0, -1):
            acc = acc * z + k * self.coeffs[k]
        return acc if acc.shape else complex(acc)

    def eval_log_many(self, log_r: float, thetas: np.ndarray) -> np.ndarray:
        """Complex log of the series value at z = exp(log_r + i theta) for a
        grid of angles.

        Works for radii far beyond float range; the real part of the result
        may itself be large but stays a float as long as the VALUE's log does.
        """
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        mask = np.isfinite(self.log_abs)
        n = np.arange(self.coeffs.size)[mask]
        base = self.log_abs[mask] + n * log_r                      # (N,)
        phases = self.args[mask][None, :] + np.outer(thetas, n)    # (T, N)
        m = float(np.max(base))
        if m == -np.inf:
            return np.full(thetas.shape, complex(-np.inf, 0.0))
        scaled = np.exp(base - m)[None, :] * np.exp(1j * phases)
        s = scaled.sum(axis=1)
        out = np.where(s != 0, m + np.log(np.where(s != 0, s, 1.0)),
                       complex(-np.inf, 0.0))
        return out

    def eval_log(self, log_r: float, theta: float) -> complex:
        return complex(self.eval_log_many(log_r, np.array([theta]))[0])

    def eval_log_derivative(self, log_r: float, theta: float) -> complex:
        """Complex log of the derivative value, same scaling scheme."""
        n = np.arange(1, self.coeffs.size)
        la = self.log_abs[1:] + np.log(n)
        mask = np.isfinite(la)
        if not np.any(mask):
            return complex(-np.inf, 0.0)
        logs = (la[mask] + (n[mask] - 1) * log_r
                + 1j * (self.args[1:][mask] + (n[mask] - 1) * theta))
        m = float(np.max(logs.real))
        s = np.sum(np.exp(logs - m))
        if s == 0:
            return complex(-np.inf, 0.0)
        return m + complex(np.log(s))

    def max_term_log(self, log_r: float) -> float:
        mask = np.isfinite(self.log_abs)
        n = np.arange(self.coeffs.size)[mask]
        return float(np.max(self.log_abs[mask] + n * log_r))

    @property
    def has_exact_logs(self) -> bool:
        """True when log_abs carries information the float coeffs lost."""
        return bool(np.any(np.isfinite(self.log_abs) & (self.coeffs == 0)))


def exp_series(order: int) -> PowerSeries:
    """Truncated exponential series with exact log-coefficients, so the
    maximal-term machinery survives the float underflow of 1/n!."""
    c = np.empty(order + 1, dtype=complex)
    c[0] = 1.0
    for n in range(1, order + 1):
        c[n] = c[n - 1] / n
    log_abs = -np.array([math.lgamma(n + 1) for n in range(order + 1)])
    return PowerSeries(c, log_abs=log_abs, args=np.zeros(order + 1))


def central_index(s: PowerSeries, r: float) -> int:
    """Largest n maximising |a_n| r^n, ties broken upward.

    Raises TruncationTooSmall when the maximal term sits in the upper half of
    the truncation range, where the answer would be an artefact.
    """
    return central_index_log(s, math.log(r))


def _central_index_raw(s: PowerSeries, log_r: float) -> int:
    n_all = np.arange(s.coeffs.size)
    scores = np.where(np.isfinite(s.log_abs), s.log_abs + n_all * log_r, -np.inf)
    m = float(np.max(scores))
    tie = 1e-9 * (1.0 + abs(m))
    return int(np.max(n_all[scores >= m - tie]))


def central_index_log(s: PowerSeries, log_r: float) -> int:
    idx = _central_index_raw(s, log_r)
    if not s.complete and idx >= (s.order + 1) / 2:
        raise TruncationTooSmall(
            f"maximal term index {idx} too close to truncation order {s.order}")
    return idx


@dataclass
class MaxModulusResult:
    M: float                 # max modulus; inf when it overflows floats
    log_M: float             # always meaningful
    xi: complex              # argmax point; inf+0j scaled direction if huge
    theta: float
    log_r: float


def max_modulus(s: PowerSeries, r: float = None, angular_samples: int = 1024,
                log_r: float = None) -> MaxModulusResult:
    """Maximum of |s| on the circle of radius r, with a two-stage angular
    grid (coarse then local refinement around the argmax)."""
    if log_r is None:
        if r is None or r <= 0:
            raise ValueError("need a positive radius")
        log_r = math.log(r)

    plain_ok = (not s.has_exact_logs
                and s.max_term_log(log_r) + math.log(s.coeffs.size) < LOG_FLOAT_MAX)

    def scan(thetas: np.ndarray) -> tuple[float, float]:
        if plain_ok:
            vals = np.abs(s.eval(np.exp(log_r) * np.exp(1j * thetas)))
            with np.errstate(divide="ignore"):
                logs = np.log(vals)
        else:
            logs = s.eval_log_many(log_r, thetas).real
        i = int(np.argmax(logs))
        return float(thetas[i]), float(logs[i])

    coarse = np.linspace(0.0, 2.0 * np.pi, angular_samples, endpoint=False)
    t0, _ = scan(coarse)
    span = 2.0 * np.pi / angular_samples
    fine = t0 + np.linspace(-span, span, angular_samples)
    t1, log_m = scan(fine)
    m = math.exp(log_m) if log_m < LOG_FLOAT_MAX else math.inf
    radius = math.exp(log_r) if log_r < LOG_FLOAT_MAX else math.inf
    xi = radius * complex(math.cos(t1), math.sin(t1)) if math.isfinite(radius) \
        else complex(math.inf, 0.0)
    return MaxModulusResult(M=m, log_M=log_m, xi=xi, theta=t1, log_r=log_r)


@dataclass
class WvRecord:
    r: float
    N: int
    M: float
    log_M: float
    bound_ok: bool
    eps_max: float


def wv_diagnostics(s: PowerSeries, r_list, rho_mod: float = 2.0,
                   m: float = 3.0, angular_samples: int = 1024) -> list[WvRecord]:
    """Maximal-term diagnostics per radius.

    Checks the central-index bound N(r) <= (log M(r))^2 and measures the
    relative error of the maximal-term approximation
    f'(z) ~ (N/z)(z/xi)^N f(xi) at 8 points of the sector around the
    max-modulus point (sector half-width M_s/N with M_s = 4 + 2 m log rho).
    """
    m_sector = 4.0 + 2.0 * m * math.log(rho_mod)
    out = []
    for r in r_list:
        log_r = math.log(r)
        n_r = central_index_log(s, log_r)
        mm = max_modulus(s, log_r=log_r, angular_samples=angular_samples)
        bound_ok = n_r <= mm.log_M ** 2
        half = 0.5 * m_sector / max(n_r, 1)
        log_f_xi = s.eval_log(log_r, mm.theta)
        eps_max = 0.0
        offsets = [(u, v) for u in (-half, half) for v in (-half, half)]
        offsets += [(0.0, -half), (0.0, half), (-half, 0.0), (half, 0.0)]
        for du, dv in offsets:
            lz = log_r + du
            th = mm.theta + dv
            log_fp = s.eval_log_derivative(lz, th)
            log_z = complex(lz, th)
            log_xi = complex(log_r, mm.theta)
            # eps = f'(z) z / (N (z/xi)^N f(xi)) - 1
            log_ratio = (log_fp + log_z - math.log(max(n_r, 1))
                         - n_r * (log_z - log_xi) - log_f_xi)
            eps = abs(np.exp(log_ratio) - 1.0)
            eps_max = max(eps_max, float(eps))
        out.append(WvRecord(r=float(r), N=n_r, M=mm.M, log_M=mm.log_M,
                            bound_ok=bool(bound_ok), eps_max=eps_max))
    return out


@dataclass
class ChainRecord:
    k: int
    log_r: float
    r: float                  # inf once the radius leaves float range
    theta: float
    xi: complex
    N: int
    n: int
    log_M: float
    log_inner: float
    log_outer: float
    annulus: Annulus | None = None
    sandwich_ok: bool = field(default=True)


def wv_annulus_chain(s: PowerSeries, rho_mod: float, R_f: float, m: float,
                     K: int, r0: float = 10.0,
                     angular_samples: int = 512) -> list[ChainRecord]:
    """Iterate the maximal-term annulus construction K steps.

    Step k finds the max-modulus point at radius r_k, derives
    n_k = floor(log|f(xi_k)/R_f| / log rho) - 1 and the annulus
    A(rho^{n_k} R_f, rho^{n_k+m} R_f), then takes r_{k+1} as the midpoint
    radius of that annulus. Radii are carried as logarithms since they leave
    float range after one step for exponential-type series. The sandwich
    rho^{n_k} in [M(r_k)/(rho^2 R_f), M(r_k)/(rho R_f)] is recorded per step.
    """
    if rho_mod <= 1.0:
        raise ValueError("need rho_mod > 1")
    if m <= 2.0:
        raise ValueError("need m > 2")
    log_rho = math.log(rho_mod)
    log_rf = math.log(R_f)
    out: list[ChainRecord] = []
    log_r = math.log(r0)
    prev_n = None
    for k in range(K):
        mm = max_modulus(s, log_r=log_r, angular_samples=angular_samples)
        # beyond float radii a truncated series saturates at its top order
        # and behaves like a polynomial; the raw argmax is the honest N here
        n_r = _central_index_raw(s, log_r)
        if mm.log_M <= log_rf + 2.0 * log_rho:
            raise ChainBreak(k, f"max modulus too small at step {k}")
        n_k = int(math.floor((mm.log_M - log_rf) / log_rho)) - 1
        if prev_n is not None and n_k <= prev_n:
            raise ChainBreak(k, f"annulus indices not increasing at step {k}")
        prev_n = n_k
        log_inner = n_k * log_rho + log_rf
        log_outer = (n_k + m) * log_rho + log_rf
        lo_ok = mm.log_M - 2.0 * log_rho - log_rf <= n_k * log_rho
        hi_ok = n_k * log_rho <= mm.log_M - log_rho - log_rf
        ann = None
        if log_outer < LOG_FLOAT_MAX:
            ann = Annulus(0.0, math.exp(log_inner), math.exp(log_outer))
        rec = ChainRecord(k=k, log_r=log_r,
                          r=math.exp(log_r) if log_r < LOG_FLOAT_MAX else math.inf,
                          theta=mm.theta, xi=mm.xi, N=n_r, n=n_k,
                          log_M=mm.log_M, log_inner=log_inner,
                          log_outer=log_outer, annulus=ann,
                          sandwich_ok=bool(lo_ok and hi_ok))
        out.append(rec)
        # arithmetic midpoint radius of the annulus, in log form
        log_r = log_outer + math.log(0.5 * (1.0 + math.exp(log_inner - log_outer)))
    return out
