"""Figure rendering: Julia masks, lineariser annuli, and marked preimages.

Output is a raw RGB buffer written as a binary portable pixmap (P6), chosen
for dependency-free, bit-exact files. Rendering is deterministic: identical
inputs produce byte-identical images regardless of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import escape_radius
from .lineariser import Lineariser, LevelSet, level_set
from .parallel import ordered_map
from .polynomial import Polynomial

DEFAULT_PALETTE = {
    "background": 255,
    "annulus_light": 210,
    "annulus_core": 140,
    "annulus_marked": 90,
    "julia": 0,
    "fundamental": 170,
    "marker_fill": 255,
    "marker_edge": 0,
}


@dataclass
class ImageBuffer:
    width: int
    height: int
    pixels: np.ndarray              # (height, width, 3) uint8, row 0 on top
    window_center: complex
    window_width: float

    @property
    def window_height(self) -> float:
        return self.window_width * self.height / self.width

    def grid(self) -> np.ndarray:
        """Complex coordinates of pixel centers, y-axis upward."""
        w, h = self.width, self.height
        xs = self.window_center.real + self.window_width * ((np.arange(w) + 0.5) / w - 0.5)
        ys = self.window_center.imag + self.window_height * (0.5 - (np.arange(h) + 0.5) / h)
        return xs[None, :] + 1j * ys[:, None]

    def to_pixel(self, z: complex) -> tuple[float, float]:
        col = (z.real - self.window_center.real) / self.window_width * self.width \
            + self.width / 2 - 0.5
        row = (self.window_center.imag - z.imag) / self.window_height * self.height \
            + self.height / 2 - 0.5
        return row, col


def blank_image(resolution: int, center: complex, width: float,
                shade: int = 255) -> ImageBuffer:
    px = np.full((resolution, resolution, 3), shade, dtype=np.uint8)
    return ImageBuffer(resolution, resolution, px, complex(center), float(width))


@dataclass
class FigureSpec:
    panel: str = "lineariser-domain"     # or "basemap-range"
    overlays: tuple = ("annuli", "markers")
    palette: dict = field(default_factory=lambda: dict(DEFAULT_PALETTE))
    resolution: int = 512
    iter_cap: int = 200
    marker_radius: float = 4.0


def render_julia_mask(P: Polynomial, window_center: complex, window_width: float,
                      resolution: int, iter_cap: int = 200,
                      jobs: int = 1) -> ImageBuffer:
    """Escape-time mask: pixels whose centers survive iter_cap iterations
    inside the escape radius are painted black."""
    if iter_cap < 100:
        raise ValueError("iter_cap must be at least 100")
    img = blank_image(resolution, window_center, window_width)
    mask = _escape_mask(P, img.grid(), iter_cap, jobs)
    img.pixels[mask] = 0
    return img


def _escape_mask(P: Polynomial, grid: np.ndarray, iter_cap: int,
                 jobs: int = 1) -> np.ndarray:
    esc = escape_radius(P)

    def run_rows(rows: np.ndarray) -> np.ndarray:
        z = rows.copy()
        alive = np.ones(z.shape, dtype=bool)
        for _ in range(iter_cap):
            if not np.any(alive):
                break
            z[alive] = P.eval(z[alive])
            alive &= np.abs(z) <= esc
        return alive

    chunks = np.array_split(grid, max(1, min(jobs * 4, grid.shape[0])), axis=0)
    parts = ordered_map(run_rows, chunks, jobs)
    return np.concatenate(parts, axis=0)


def _paint_annuli(img: ImageBuffer, L: Lineariser, n_marked: int,
                  palette: dict) -> None:
    r0 = L.r0
    rho = abs(L.rho)
    a = np.abs(img.grid())
    with np.errstate(divide="ignore"):
        k = np.floor(np.log(np.maximum(a, 1e-300) / r0) / math.log(rho)).astype(int)
    shade = np.full(a.shape, palette["background"], dtype=np.uint8)
    in_range = (a >= r0) & (k <= n_marked)
    shade[in_range & (k % 2 == 1)] = palette["annulus_light"]
    shade[in_range & (k == 0)] = palette["annulus_core"]
    shade[in_range & (k == n_marked)] = palette["annulus_marked"]
    img.pixels[:] = shade[:, :, None]


def _paint_fundamental_annulus(img: ImageBuffer, L: Lineariser,
                               palette: dict) -> None:
    """Grey the pixels whose core inversion lands in the fundamental annulus."""
    grid = img.grid().ravel()
    from .lineariser import _af_modulus_band
    lo, hi = _af_modulus_band(L)
    band = (np.abs(grid) >= lo) & (np.abs(grid) <= hi)
    sel = np.flatnonzero(band)
    if sel.size:
        u = L.core_inverse(grid[sel])
        mod = np.abs(u)
        inside = np.isfinite(u.real) & (mod >= L.r0) & (mod < L.r0 * abs(L.rho))
        flat = img.pixels.reshape(-1, 3)
        flat[sel[inside]] = palette["fundamental"]


def _draw_markers(img: ImageBuffer, points, palette: dict,
                  radius: float = 4.0) -> None:
    h, w = img.height, img.width
    rr, cc = np.mgrid[0:h, 0:w]
    for z in points:
        row, col = img.to_pixel(complex(z))
        if not (-radius <= row < h + radius and -radius <= col < w + radius):
            continue
        d2 = (rr - row) ** 2 + (cc - col) ** 2
        ring = (d2 <= (radius + 1.5) ** 2)
        fill = (d2 <= radius ** 2)
        img.pixels[ring] = palette["marker_edge"]
        img.pixels[fill] = palette["marker_fill"]


def render_preimage_figure(L: Lineariser, w: complex, n_marked: int,
                           spec: FigureSpec | None = None,
                           level: LevelSet | None = None,
                           jobs: int = 1,
                           allow_core_target: bool = False) -> tuple[ImageBuffer, ImageBuffer]:
    """Two panels: the lineariser's annulus decomposition with the level-n
    preimages of w marked, and the base-map plane with the filled-Julia mask,
    the fundamental annulus, and the matching base preimages marked.

    Marker counts agree across panels by construction of the level set.
    """
    if spec is None:
        spec = FigureSpec()
    palette = spec.palette
    if level is None:
        level = level_set(L, w, n_marked, allow_core_target=allow_core_target)
    if not level.points:
        raise ValueError(f"level set is empty at n = {n_marked}")

    r_out = L.r0 * abs(L.rho) ** (n_marked + 1)
    left = blank_image(spec.resolution, 0.0, 2.2 * r_out,
                       palette["background"])
    _paint_annuli(left, L, n_marked, palette)
    _draw_markers(left, [p.z for p in level.points], palette, spec.marker_radius)

    P = L.base.poly
    esc = escape_radius(P)
    right = blank_image(spec.resolution, 0.0, 1.8 * esc, palette["background"])
    julia = _escape_mask(P, right.grid(), spec.iter_cap, jobs)
    _paint_fundamental_annulus(right, L, palette)
    right.pixels[julia] = palette["julia"]
    _draw_markers(right, [p.zeta for p in level.points], palette,
                  spec.marker_radius)
    return left, right


def write_image(img: ImageBuffer, path) -> None:
    """Binary portable pixmap: ``P6\\n<width> <height>\\n255\\n`` + raw RGB."""
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(img.pixels.tobytes())
