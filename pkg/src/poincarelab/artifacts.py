"""CSV and JSON artifact writers.

All writers are deterministic: floats are formatted with repr (shortest
round-trip), JSON keys are sorted, and rows follow the canonical orders the
computing code already guarantees. CSV uses '.' as the decimal mark, ',' as
the separator, and always carries a header row.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dynamics import PreimageTree, PressureEstimate
from .ifs import BowenResult, FiniteIFS
from .lineariser import BaseMap, Lineariser, LevelSet, ThetaEstimate
from .polynomial import Polynomial
from .series import PowerSeries


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def _c(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n",
                          encoding="ascii")


def tree_rows(tree: PreimageTree):
    for n in range(len(tree.points)):
        pts = tree.points[n]
        cum = tree.cum_derivs[n]
        for i in range(pts.size):
            yield (n, pts[i].real, pts[i].imag, cum[i].real, cum[i].imag)


def write_tree_csv(path, tree: PreimageTree) -> None:
    write_csv(path, ["depth", "re", "im", "cum_deriv_re", "cum_deriv_im"],
              tree_rows(tree))


def write_pressure_csv(path, estimates) -> None:
    rows = [(e.t, n, logz) for e in estimates for n, logz in e.levels]
    write_csv(path, ["t", "n", "logZ"], rows)


def pressure_json(e: PressureEstimate) -> dict:
    return {"t": e.t, "pressure": e.pressure, "method": e.method,
            "w_used": _c(e.w_used),
            "levels": [[n, v] for n, v in e.levels]}


def write_level_set_csv(path, levels) -> None:
    if isinstance(levels, LevelSet):
        levels = [levels]
    rows = []
    for ls in levels:
        for p in ls.points:
            rows.append((ls.n, p.z.real, p.z.imag, p.zeta.real, p.zeta.imag,
                         p.deriv_L.real, p.deriv_L.imag))
    write_csv(path, ["n", "z_re", "z_im", "zeta_re", "zeta_im",
                     "deriv_re", "deriv_im"], rows)


def write_theta_csv(path, est: ThetaEstimate) -> None:
    rows = []
    for i, t in enumerate(est.t_grid):
        for j, wm in enumerate(est.w_moduli):
            rows.append((t, wm, est.table[i, j]))
    write_csv(path, ["t", "w_abs", "value"], rows)


def theta_json(est: ThetaEstimate) -> dict:
    return {"bracket_lo": est.bracket_lo, "bracket_hi": est.bracket_hi,
            "t_grid": est.t_grid, "w_moduli": est.w_moduli,
            "classifications": {str(t): c for t, c in est.classifications.items()},
            "table": [[float(v) for v in row] for row in est.table]}


def lineariser_json(L: Lineariser) -> dict:
    base = {"variant": L.base.variant}
    if L.base.variant == "polynomial":
        base["coeffs"] = [_c(c) for c in L.base.poly.coeffs]
    else:
        base["a"] = _c(L.base.a)
    return {"base": base, "xi0": _c(L.xi0), "rho": _c(L.rho),
            "a1": _c(L.a1), "r0": L.r0, "tail_radius": L.tail_radius,
            "coeffs": [_c(c) for c in L.series.coeffs]}


def lineariser_from_json(doc: dict) -> Lineariser:
    b = doc["base"]
    if b["variant"] == "polynomial":
        base = BaseMap.polynomial(Polynomial(tuple(complex(re, im)
                                                   for re, im in b["coeffs"])))
    else:
        base = BaseMap.scaled_exponential(complex(*b["a"]))
    coeffs = np.array([complex(re, im) for re, im in doc["coeffs"]])
    lin = Lineariser(base=base, xi0=complex(*doc["xi0"]),
                     rho=complex(*doc["rho"]), series=PowerSeries(coeffs),
                     a1=complex(*doc["a1"]), tail_radius=float(doc["tail_radius"]))
    lin._r0 = float(doc["r0"])
    return lin


def ifs_json(s: FiniteIFS) -> dict:
    return {"disc": {"center": _c(s.disc.center), "radius": s.disc.radius},
            "metric": s.metric.value,
            "branches": [{"m": b.m, "norm_sup": b.norm_sup,
                          "image_center": _c(b.image_center),
                          "image_radius": b.image_radius,
                          "samples": [[_c(y), _c(fy), _c(dy)]
                                      for y, fy, dy in b.sample_points]}
                         for b in s.branches]}


def bowen_json(res: BowenResult) -> dict:
    return {"dim": res.dim, "p_used": res.p_used,
            "pressure_samples": {str(k): v
                                 for k, v in res.pressure_samples.items()}}


def write_bowen_csv(path, res: BowenResult) -> None:
    rows = [(t, v) for t, v in sorted(res.pressure_samples.items())]
    write_csv(path, ["t", "pressure"], rows)
