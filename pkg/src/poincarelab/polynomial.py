"""Complex polynomials with ascending coefficients and a simultaneous
(Aberth) root finder.

Coefficient order is ascending everywhere: ``coeffs[k]`` multiplies ``z**k``.
The root finder solves ``P(z) = target`` for batches of targets in lockstep,
which is what iterated preimage trees need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence

ROOT_RESIDUAL_TOL = 1e-13
CLUSTER_TOL = 1e-8
MAX_SWEEPS = 200
# extra refinement sweeps after the residual test passes, so downstream
# 15-20 step chain products stay well inside their tolerances
POLISH_SWEEPS = 2


@dataclass(frozen=True)
class Polynomial:
    """Complex-coefficient polynomial, ascending degree, nonzero leading term."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(complex(x) for x in self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        if len(c) < 2:
            raise ValueError("degree must be at least 1")
        if c[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        """Horner evaluation; accepts scalars or arrays."""
        z = np.asarray(z, dtype=complex)
        acc = np.full(z.shape, self.coeffs[-1], dtype=complex)
        for c in self.coeffs[-2::-1]:
            acc = acc * z + c
        return acc if acc.shape else complex(acc)

    def derivative(self):
        dc = tuple((k + 1) * self.coeffs[k + 1] for k in range(self.degree))
        if len(dc) == 1:
            # degree-1 input: formal derivative is a constant
            return _ConstantPoly(dc[0])
        return Polynomial(dc)

    def eval_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        d = self.degree
        acc = np.full(z.shape, d * self.coeffs[d], dtype=complex)
        for k in range(d - 1, 0, -1):
            acc = acc * z + k * self.coeffs[k]
        return acc if acc.shape else complex(acc)

    def iterate(self, z, n: int):
        """Forward orbit value P^n(z)."""
        w = z
        for _ in range(n):
            w = self.eval(w)
        return w

    def shifted(self, w: complex) -> "Polynomial":
        """P(z) - w."""
        c = list(self.coeffs)
        c[0] = c[0] - w
        return Polynomial(tuple(c))

    def roots(self):
        """All roots with multiplicity, canonically sorted.

        Aberth simultaneous iteration on the monic normalisation, residual
        target ``|P_monic(z)| <= 1e-13 * (1+|z|)^d``; near-coincident roots
        (pairwise distance below ``1e-8 * scale``) are merged and reported as
        repeated values.
        """
        return solve_many(self, np.array([0.0 + 0.0j]))[0]


class _ConstantPoly:
    """Formal derivative of a degree-1 polynomial; evaluation only."""

    def __init__(self, value):
        self.value = complex(value)
        self.degree = 0

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.value, dtype=complex)
        return out if out.shape else complex(out)

    __call__ = eval


def _horner_batch(monic: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate batch polynomials (rows of monic coeffs, ascending) at x.

    monic has shape (B, d+1), x has shape (B, d); rows pair up.
    """
    acc = np.broadcast_to(monic[:, -1:], x.shape).copy()
    for k in range(monic.shape[1] - 2, -1, -1):
        acc = acc * x + monic[:, k][:, None]
    return acc


def _horner_deriv_batch(monic: np.ndarray, x: np.ndarray) -> np.ndarray:
    d = monic.shape[1] - 1
    acc = np.broadcast_to(d * monic[:, -1:], x.shape).copy()
    for k in range(d - 1, 0, -1):
        acc = acc * x + (k * monic[:, k])[:, None]
    return acc


def solve_many(poly: Polynomial, targets: np.ndarray,
               tol: float = ROOT_RESIDUAL_TOL,
               max_iter: int = MAX_SWEEPS) -> np.ndarray:
    """Roots of ``P(z) = t`` for every t in targets, shape (len(targets), d).

    All instances iterate in lockstep, entirely in numpy, so the result is
    deterministic and independent of any worker count. Rows are sorted by
    (real, imag).
    """
    targets = np.asarray(targets, dtype=complex).ravel()
    d = poly.degree
    lead = poly.coeffs[-1]
    base = np.array(poly.coeffs, dtype=complex) / lead
    monic = np.tile(base, (targets.size, 1))
    monic[:, 0] -= targets / lead

    radius = 1.0 + np.max(np.abs(monic[:, :-1]), axis=1)
    kk = np.arange(d)
    angles = 2.0 * np.pi * (kk + 0.35) / d
    stagger = 1.0 + 0.05 * np.cos(3.1 * kk)
    x = radius[:, None] * stagger[None, :] * np.exp(1j * angles)[None, :]

    converged_at = -1
    for sweep in range(max_iter + POLISH_SWEEPS):
        pv = _horner_batch(monic, x)
        if converged_at < 0:
            bound = tol * (1.0 + np.abs(x)) ** d
            if np.all(np.abs(pv) <= bound):
                converged_at = sweep
        if converged_at >= 0 and sweep >= converged_at + POLISH_SWEEPS:
            break
        dpv = _horner_deriv_batch(monic, x)
        dpv = np.where(dpv == 0, 1e-300, dpv)
        newton = pv / dpv
        diff = x[:, :, None] - x[:, None, :]
        np.einsum("bii->bi", diff)[:] = 1.0
        small = np.abs(diff) < 1e-290
        diff = np.where(small, 1e-290, diff)
        inv = 1.0 / diff
        np.einsum("bii->bi", inv)[:] = 0.0
        s = inv.sum(axis=2)
        denom = 1.0 - newton * s
        denom = np.where(np.abs(denom) < 1e-290, 1e-290, denom)
        x = x - newton / denom
    else:
        if converged_at < 0:
            raise NonConvergence(
                f"Aberth did not reach residual {tol} in {max_iter} sweeps")

    x = _merge_clusters(x)
    order = np.lexsort((x.imag, x.real), axis=-1)
    return np.take_along_axis(x, order, axis=1)


def _merge_clusters(x: np.ndarray) -> np.ndarray:
    """Replace near-coincident roots in each row by their cluster mean."""
    scale = np.maximum(1.0, np.max(np.abs(x), axis=1))
    tol = CLUSTER_TOL * scale
    out = x.copy()
    d = x.shape[1]
    for i in range(d):
        for j in range(i + 1, d):
            close = np.abs(out[:, i] - out[:, j]) < tol
            if np.any(close):
                mean = 0.5 * (out[close, i] + out[close, j])
                out[close, i] = mean
                out[close, j] = mean
    return out
